//! Tomography protocols: preparations, measurement effects and the derived
//! process-matrix measurement operators `Λ_j^(i) = (ρ^(i))* ⊗ Λ_j`.
//!
//! Multi-qubit indices are read with qubit 0 as the most significant digit.
//! Preparations use base 6 over the cube states; effects are ordered by
//! basis (base 3 over x, y, z) and then by outcome (one bit per qubit), so
//! effect `j = basis * s + outcome` and every basis forms one normalization
//! group.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::channel::{tensor_channel, DensityMatrix, KrausSet};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, identity, kron, kron_all, serde_matrix, ComplexMatrix, ComplexVector};
use crate::noise::rotation_gate;
use crate::record::CountRow;

/// Rotation `(θ, n)` preparing each cube state from `|0⟩`, in cube-state order
/// `|+⟩, |−⟩, |+i⟩, |−i⟩, |0⟩, |1⟩`.
pub const CUBE_ROTATIONS: [(f64, [f64; 3]); 6] = [
    (PI, [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2]),
    (PI, [-FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2]),
    (PI, [0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
    (PI, [0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
    (0.0, [0.0, 0.0, 1.0]),
    (PI, [1.0, 0.0, 0.0]),
];

/// Columns of [`CUBE_ROTATIONS`] used as basis changes for x, y and z.
pub const BASIS_ROTATIONS: [usize; 3] = [0, 2, 4];

pub const CUBE_STATES: usize = 6;
pub const PAULI_BASES: usize = 3;

/// The six single-qubit cube states.
pub fn cube_state(index: usize) -> ComplexVector {
    let h = FRAC_1_SQRT_2;
    let (a, b) = match index {
        0 => (c64(h, 0.0), c64(h, 0.0)),
        1 => (c64(h, 0.0), c64(-h, 0.0)),
        2 => (c64(h, 0.0), c64(0.0, h)),
        3 => (c64(h, 0.0), c64(0.0, -h)),
        4 => (c64(1.0, 0.0), c64(0.0, 0.0)),
        5 => (c64(0.0, 0.0), c64(1.0, 0.0)),
        _ => panic!("cube state index {index} out of range"),
    };
    ComplexVector::from_vec(vec![a, b])
}

pub fn cube_projector(index: usize) -> ComplexMatrix {
    linalg::outer(&cube_state(index))
}

fn digits(mut value: usize, base: usize, count: usize) -> Vec<usize> {
    let mut out = vec![0; count];
    for slot in out.iter_mut().rev() {
        *slot = value % base;
        value /= base;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub theta: f64,
    pub axis: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparationSpec {
    pub index: usize,
    pub state: DensityMatrix,
    /// Per-qubit rotations preparing the ideal state from `|0…0⟩`.
    pub rotations: Vec<Rotation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEffect {
    pub index: usize,
    #[serde(with = "serde_matrix")]
    pub operator: ComplexMatrix,
    /// Normalization group (measurement basis) this effect belongs to.
    pub group: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyProtocol {
    pub n_qubits: usize,
    pub preparations: Vec<PreparationSpec>,
    pub effects: Vec<MeasurementEffect>,
}

impl TomographyProtocol {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn m_p(&self) -> usize {
        self.preparations.len()
    }

    pub fn m_m(&self) -> usize {
        self.effects.len()
    }

    /// Number of χ-measurement operators `m = m_p · m_m`.
    pub fn len(&self) -> usize {
        self.m_p() * self.m_m()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group_count(&self) -> usize {
        self.effects.iter().map(|e| e.group + 1).max().unwrap_or(0)
    }

    /// Number of (preparation, basis) schemes.
    pub fn scheme_count(&self) -> usize {
        self.m_p() * self.group_count()
    }

    pub fn scheme_of(&self, prep: usize, effect: usize) -> usize {
        prep * self.group_count() + self.effects[effect].group
    }

    pub fn chi_operator(&self, prep: usize, effect: usize) -> ComplexMatrix {
        chi_measurement_operator_unchecked(&self.preparations[prep], &self.effects[effect])
    }

    /// All `m` operators in row order (preparation-major).
    pub fn chi_operators(&self) -> Vec<ComplexMatrix> {
        self.row_indices()
            .map(|(i, j)| self.chi_operator(i, j))
            .collect()
    }

    pub fn row_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m_m = self.m_m();
        (0..self.m_p()).flat_map(move |i| (0..m_m).map(move |j| (i, j)))
    }

    /// Informationally complete projectors `Π_φ ⊗ I_s` on subsystem A, built
    /// from the cube projectors (each tensor product appearing once).
    pub fn normalization_operators(&self) -> Vec<ComplexMatrix> {
        let n = self.n_qubits;
        let id = identity(self.dim());
        (0..CUBE_STATES.pow(n as u32))
            .map(|phi| {
                let factors: Vec<_> = digits(phi, CUBE_STATES, n).into_iter().map(cube_projector).collect();
                kron(&kron_all(&factors), &id)
            })
            .collect()
    }

    /// Sum of effects in each group.
    pub fn group_sums(&self) -> Vec<ComplexMatrix> {
        let s = self.dim();
        let mut sums = vec![ComplexMatrix::zeros(s, s); self.group_count()];
        for e in &self.effects {
            sums[e.group] += &e.operator;
        }
        sums
    }

    fn check_alignment(&self, noise: &KrausSet) -> Result<()> {
        if noise.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: noise.dim(),
            });
        }
        Ok(())
    }
}

fn chi_measurement_operator_unchecked(prep: &PreparationSpec, effect: &MeasurementEffect) -> ComplexMatrix {
    kron(&prep.state.matrix().map(|z| z.conj()), &effect.operator)
}

/// `(ρ^(i))* ⊗ Λ_j`.
pub fn chi_measurement_operator(prep: &PreparationSpec, effect: &MeasurementEffect) -> Result<ComplexMatrix> {
    if prep.state.dim() != effect.operator.nrows() {
        return Err(Error::DimensionMismatch {
            expected: prep.state.dim(),
            found: effect.operator.nrows(),
        });
    }
    Ok(chi_measurement_operator_unchecked(prep, effect))
}

/// Cube protocol on `n_qubits`: all tensor products of the six Pauli
/// eigenstates as preparations and of the six Pauli projectors as effects.
pub fn cube_protocol(n_qubits: usize) -> Result<TomographyProtocol> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("at least one qubit is required".into()));
    }
    let n = n_qubits;
    let s = 1usize << n;
    let preparations = (0..CUBE_STATES.pow(n as u32))
        .map(|i| {
            let idx = digits(i, CUBE_STATES, n);
            let psi = idx
                .iter()
                .fold(ComplexVector::from_element(1, c64(1.0, 0.0)), |acc, &q| acc.kronecker(&cube_state(q)));
            PreparationSpec {
                index: i,
                state: DensityMatrix::pure(&psi),
                rotations: idx
                    .iter()
                    .map(|&q| Rotation {
                        theta: CUBE_ROTATIONS[q].0,
                        axis: CUBE_ROTATIONS[q].1,
                    })
                    .collect(),
            }
        })
        .collect();
    let effects = (0..PAULI_BASES.pow(n as u32) * s)
        .map(|j| {
            let basis = j / s;
            let outcome = j % s;
            let b = digits(basis, PAULI_BASES, n);
            let o = digits(outcome, 2, n);
            let factors: Vec<_> = b.iter().zip(&o).map(|(&b, &o)| cube_projector(2 * b + o)).collect();
            MeasurementEffect {
                index: j,
                operator: kron_all(&factors),
                group: basis,
            }
        })
        .collect();
    Ok(TomographyProtocol {
        n_qubits,
        preparations,
        effects,
    })
}

/// GN model: effects become `Σ E† Λ E`, preparations untouched.
pub fn fuzzify_gn(p: &TomographyProtocol, noise: &KrausSet) -> Result<TomographyProtocol> {
    p.check_alignment(noise)?;
    let effects = p
        .effects
        .iter()
        .map(|e| {
            Ok(MeasurementEffect {
                operator: linalg::hermitian_part(&noise.adjoint_apply(&e.operator)?),
                ..e.clone()
            })
        })
        .collect::<Result<_>>()?;
    Ok(TomographyProtocol {
        effects,
        ..p.clone()
    })
}

/// NG model: preparations become `Σ E ρ E†`, effects untouched.
pub fn fuzzify_ng(p: &TomographyProtocol, noise: &KrausSet) -> Result<TomographyProtocol> {
    p.check_alignment(noise)?;
    let preparations = p
        .preparations
        .iter()
        .map(|prep| {
            let rho = linalg::hermitian_part(&noise.apply_matrix(prep.state.matrix())?);
            Ok(PreparationSpec {
                state: DensityMatrix::new(rho)?,
                ..prep.clone()
            })
        })
        .collect::<Result<_>>()?;
    Ok(TomographyProtocol {
        preparations,
        ..p.clone()
    })
}

/// IPPM model. Preparations become `E_prep^(i)(E_init(|0…0⟩⟨0…0|))`, effect
/// `l * s + k` becomes the Heisenberg image of the computational projector
/// `Π_k` under measurement noise followed by basis-change gate `l`.
pub fn fuzzify_ippm(
    p: &TomographyProtocol,
    init: &KrausSet,
    prep_gates: &[KrausSet],
    basis_gates: &[KrausSet],
    meas: &KrausSet,
) -> Result<TomographyProtocol> {
    let s = p.dim();
    if prep_gates.len() != p.m_p() {
        return Err(Error::Misaligned(format!(
            "{} preparation gates for {} preparations",
            prep_gates.len(),
            p.m_p()
        )));
    }
    if basis_gates.len() * s != p.m_m() {
        return Err(Error::Misaligned(format!(
            "{} basis gates cannot produce {} effects",
            basis_gates.len(),
            p.m_m()
        )));
    }
    p.check_alignment(init)?;
    p.check_alignment(meas)?;
    for g in prep_gates.iter().chain(basis_gates) {
        p.check_alignment(g)?;
    }

    let initialized = init.apply_matrix(DensityMatrix::basis(s, 0).matrix())?;
    let preparations = p
        .preparations
        .iter()
        .zip(prep_gates)
        .map(|(prep, gate)| {
            Ok(PreparationSpec {
                state: DensityMatrix::new(linalg::hermitian_part(&gate.apply_matrix(&initialized)?))?,
                ..prep.clone()
            })
        })
        .collect::<Result<_>>()?;

    let mut effects = Vec::with_capacity(p.m_m());
    for (l, basis) in basis_gates.iter().enumerate() {
        for k in 0..s {
            let pi = DensityMatrix::basis(s, k).into_matrix();
            let op = basis.adjoint_apply(&meas.adjoint_apply(&pi)?)?;
            let j = l * s + k;
            effects.push(MeasurementEffect {
                index: j,
                operator: linalg::hermitian_part(&op),
                group: l,
            });
        }
    }
    Ok(TomographyProtocol {
        n_qubits: p.n_qubits,
        preparations,
        effects,
    })
}

/// Ideal preparation unitaries for every cube preparation of `n_qubits`.
pub fn ideal_prep_gates(n_qubits: usize) -> Result<Vec<KrausSet>> {
    let singles: Vec<KrausSet> = CUBE_ROTATIONS
        .iter()
        .map(|&(theta, axis)| rotation_gate(theta, axis))
        .collect::<Result<_>>()?;
    Ok(product_gates(&singles, n_qubits))
}

/// Ideal basis-change unitaries for the x, y, z bases of `n_qubits`.
pub fn ideal_basis_gates(n_qubits: usize) -> Result<Vec<KrausSet>> {
    let singles: Vec<KrausSet> = BASIS_ROTATIONS
        .iter()
        .map(|&c| rotation_gate(CUBE_ROTATIONS[c].0, CUBE_ROTATIONS[c].1))
        .collect::<Result<_>>()?;
    Ok(product_gates(&singles, n_qubits))
}

/// All `n`-fold tensor products of single-qubit channels, qubit 0 major.
pub fn product_gates(singles: &[KrausSet], n_qubits: usize) -> Vec<KrausSet> {
    let count = singles.len().pow(n_qubits as u32);
    (0..count)
        .map(|idx| {
            digits(idx, singles.len(), n_qubits)
                .into_iter()
                .map(|d| singles[d].clone())
                .reduce(|acc, g| tensor_channel(&acc, &g))
                .expect("at least one qubit")
        })
        .collect()
}

/// Local channel acting identically on each of `n_qubits`.
pub fn local_channel(single: &KrausSet, n_qubits: usize) -> KrausSet {
    (1..n_qubits).fold(single.clone(), |acc, _| tensor_channel(&acc, single))
}

/// Fictitious rows `(Π_φ ⊗ I, t_φ, k_φ = t_φ)` pinning `Tr_B χ = I_s`.
pub fn normalization_complement(p: &TomographyProtocol, t_phi: f64) -> Vec<CountRow> {
    (0..CUBE_STATES.pow(p.n_qubits as u32))
        .map(|phi| CountRow {
            prep: 0,
            effect: phi,
            trials: t_phi,
            events: t_phi,
            fictitious: true,
        })
        .collect()
}

/// `‖Σ Λ_j^(i) − c I‖ / ‖c I‖` with `c = Tr(Σ) / s²`.
pub fn unity_decomposition_residual(p: &TomographyProtocol) -> f64 {
    let s = p.dim();
    // Σ_{i,j} ρ_i* ⊗ Λ_j factorizes over the two sums.
    let prep_sum = p
        .preparations
        .iter()
        .fold(ComplexMatrix::zeros(s, s), |acc, prep| acc + prep.state.matrix().map(|z| z.conj()));
    let effect_sum = p
        .effects
        .iter()
        .fold(ComplexMatrix::zeros(s, s), |acc, e| acc + &e.operator);
    let total = kron(&prep_sum, &effect_sum);
    let c = linalg::trace_re(&total) / (s * s) as f64;
    let target = identity(s * s).scale(c);
    linalg::frobenius(&(total - &target)) / linalg::frobenius(&target)
}
