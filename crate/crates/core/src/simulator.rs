//! Synthetic measurement records for a true process under SPAM errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{kraus_to_chi, KrausSet, ProcessChi};
use crate::error::{Error, Result};
use crate::linalg::trace_of_product;
use crate::noise::{noisy_gate, rotation_gate, NoiseOrder, NoiseSpec};
use crate::protocol::{
    cube_protocol, fuzzify_ippm, local_channel, product_gates, TomographyProtocol, BASIS_ROTATIONS,
    CUBE_ROTATIONS,
};
use crate::record::{CountRow, MeasurementRecord, SamplingMode};

/// Probabilities may leave `[0, 1]` by this much before being treated as a bug.
pub const PROBABILITY_TOL: f64 = 1e-10;

/// SPAM-error structure of the imperfect-preparation-and-projective-measurement
/// model. Every noise spec is a single-qubit process applied locally to each qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpamScenario {
    /// Acts on `|0⟩` right after initialization.
    pub init_noise: NoiseSpec,
    /// Accompanies each preparation rotation.
    pub prep_noise: NoiseSpec,
    /// Accompanies each basis-change rotation.
    pub basis_noise: NoiseSpec,
    /// Acts just before the ideal projective readout.
    pub meas_noise: NoiseSpec,
    /// Side of the ideal rotation on which gate noise acts.
    pub gate_noise_order: NoiseOrder,
    /// Whether the `θ = 0` slot (no rotation performed) also suffers gate noise.
    pub idle_gates_noisy: bool,
    pub sampling: SamplingMode,
}

impl Default for SpamScenario {
    fn default() -> Self {
        Self::ideal()
    }
}

impl SpamScenario {
    pub fn ideal() -> Self {
        Self {
            init_noise: NoiseSpec::Identity,
            prep_noise: NoiseSpec::Identity,
            basis_noise: NoiseSpec::Identity,
            meas_noise: NoiseSpec::Identity,
            gate_noise_order: NoiseOrder::After,
            idle_gates_noisy: false,
            sampling: SamplingMode::MultinomialPerScheme,
        }
    }

    /// Superconducting-qubit-like errors: depolarized initialization
    /// (γ = 0.01), T1 = 100T / T2 = 50T relaxation during every rotation and
    /// readout amplitude damping with T1 = 20 over unit time.
    pub fn benchmark() -> Self {
        Self {
            init_noise: NoiseSpec::Depolarizing { gamma: 0.01 },
            prep_noise: NoiseSpec::relaxation(100.0, 50.0, 1.0),
            basis_noise: NoiseSpec::relaxation(100.0, 50.0, 1.0),
            meas_noise: NoiseSpec::AmplitudeDamping {
                t1: 20.0,
                duration: 1.0,
            },
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for spec in [&self.init_noise, &self.prep_noise, &self.basis_noise, &self.meas_noise] {
            spec.validate()?;
        }
        Ok(())
    }

    fn rotation_channels(&self, columns: &[usize], noise: &NoiseSpec) -> Result<Vec<KrausSet>> {
        columns
            .iter()
            .map(|&c| {
                let (theta, axis) = CUBE_ROTATIONS[c];
                let ideal = rotation_gate(theta, axis)?;
                if theta == 0.0 && !self.idle_gates_noisy {
                    Ok(ideal)
                } else {
                    noisy_gate(&ideal, noise, self.gate_noise_order)
                }
            })
            .collect()
    }

    /// The physically true fuzzified protocol on `n_qubits`.
    pub fn true_protocol(&self, n_qubits: usize) -> Result<TomographyProtocol> {
        let ideal = cube_protocol(n_qubits)?;
        let init = local_channel(&self.init_noise.channel()?, n_qubits);
        let meas = local_channel(&self.meas_noise.channel()?, n_qubits);
        let all: Vec<usize> = (0..CUBE_ROTATIONS.len()).collect();
        let prep = product_gates(&self.rotation_channels(&all, &self.prep_noise)?, n_qubits);
        let basis = product_gates(&self.rotation_channels(&BASIS_ROTATIONS, &self.basis_noise)?, n_qubits);
        fuzzify_ippm(&ideal, &init, &prep, &basis, &meas)
    }
}

/// `p_j^(i) = Tr(χ Λ_j^(i))` for every row of `p`, preparation-major.
pub fn born_probabilities(chi: &ProcessChi, p: &TomographyProtocol) -> Result<Vec<f64>> {
    if chi.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: chi.dim(),
        });
    }
    p.row_indices()
        .enumerate()
        .map(|(row, (i, j))| {
            let value = trace_of_product(chi.matrix(), &p.chi_operator(i, j)).re;
            if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { row, value });
            }
            Ok(value.clamp(0.0, 1.0))
        })
        .collect()
}

fn true_probabilities(
    true_gate: &KrausSet,
    scenario: &SpamScenario,
    ideal_protocol: &TomographyProtocol,
) -> Result<Vec<f64>> {
    scenario.validate()?;
    let truth = scenario.true_protocol(ideal_protocol.n_qubits)?;
    if truth.m_p() != ideal_protocol.m_p() || truth.m_m() != ideal_protocol.m_m() {
        return Err(Error::Misaligned(
            "scenario protocol does not match the ideal cube layout".into(),
        ));
    }
    born_probabilities(&kraus_to_chi(true_gate), &truth)
}

/// SplitMix64 step; derives independent per-trial seeds from one base seed.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws counts for exact probabilities laid out on `protocol`.
pub fn sample_counts(
    probabilities: &[f64],
    protocol: &TomographyProtocol,
    n: u64,
    mode: SamplingMode,
    seed: u64,
) -> Result<MeasurementRecord> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one repetition per scheme is required".into()));
    }
    if probabilities.len() != protocol.len() {
        return Err(Error::Misaligned(format!(
            "{} probabilities for {} rows",
            probabilities.len(),
            protocol.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_m = protocol.m_m();
    let t = n as f64;
    let mut events = vec![0u64; probabilities.len()];
    match mode {
        SamplingMode::PoissonIndependent => {
            for (k, &p) in events.iter_mut().zip(probabilities) {
                let mean = t * p;
                if mean > 0.0 {
                    let dist = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    *k = dist.sample(&mut rng) as u64;
                }
            }
        }
        SamplingMode::MultinomialPerScheme => {
            let groups = protocol.group_count();
            for i in 0..protocol.m_p() {
                for g in 0..groups {
                    let rows: Vec<usize> = (0..m_m)
                        .filter(|&j| protocol.effects[j].group == g)
                        .map(|j| i * m_m + j)
                        .collect();
                    let total: f64 = rows.iter().map(|&r| probabilities[r]).sum();
                    let complete = (total - 1.0).abs() < 1e-9;
                    let mut remaining = n;
                    let mut mass = if complete { total } else { 1.0 };
                    for (pos, &r) in rows.iter().enumerate() {
                        if remaining == 0 {
                            break;
                        }
                        if complete && pos + 1 == rows.len() {
                            events[r] = remaining;
                            break;
                        }
                        let q = if mass > 0.0 {
                            (probabilities[r] / mass).clamp(0.0, 1.0)
                        } else {
                            0.0
                        };
                        let dist = Binomial::new(remaining, q).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                        let k = dist.sample(&mut rng);
                        events[r] = k;
                        remaining -= k;
                        mass -= probabilities[r];
                    }
                }
            }
        }
    }
    let rows = protocol
        .row_indices()
        .zip(events)
        .map(|((i, j), k)| CountRow::real(i, j, t, k as f64))
        .collect();
    MeasurementRecord::new(rows, mode)
}

/// Monte Carlo record for `true_gate` measured through the scenario's SPAM
/// errors. Deterministic given `seed`.
pub fn simulate_counts(
    true_gate: &KrausSet,
    scenario: &SpamScenario,
    ideal_protocol: &TomographyProtocol,
    n: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    let probs = true_probabilities(true_gate, scenario, ideal_protocol)?;
    sample_counts(&probs, ideal_protocol, n, scenario.sampling, seed)
}

/// Noise-free record with `k = n p` exactly.
pub fn exact_counts(
    true_gate: &KrausSet,
    scenario: &SpamScenario,
    ideal_protocol: &TomographyProtocol,
    n: u64,
) -> Result<MeasurementRecord> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one repetition per scheme is required".into()));
    }
    let probs = true_probabilities(true_gate, scenario, ideal_protocol)?;
    let t = n as f64;
    let rows = ideal_protocol
        .row_indices()
        .zip(probs)
        .map(|((i, j), p)| CountRow::real(i, j, t, t * p))
        .collect();
    MeasurementRecord::new(rows, scenario.sampling)
}
