//! Maximum-likelihood reconstruction of χ by the root approach.
//!
//! χ is parameterized as `e e†` with `e` of size `s² x r`, which keeps the
//! estimate Hermitian, positive and of rank at most `r`. The Poisson
//! likelihood is stationary where `I e = J(e) e` with
//!
//! ```text
//! I    = Σ t_l Λ_l
//! J(e) = Σ k_l / p_l(e e†) Λ_l
//! ```
//!
//! which is solved by damped fixed-point iteration `e ← (1-μ) e + μ I⁻¹ J(e) e`.
//! Fictitious normalization rows are appended so that the estimate is
//! (approximately) trace preserving.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{process_fidelity, OperatorBasis, ProcessChi};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, spectral_map, ComplexMatrix, ComplexVector};
use crate::protocol::{normalization_complement, TomographyProtocol};
use crate::record::MeasurementRecord;

/// Lower bound on predicted probabilities inside `J(e)`.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Smallest mixing the monotonicity guard backs off to.
const MIN_MIXING: f64 = 1.0 / 1024.0;


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Orthonormal Fourier columns (the maximally mixed root at full rank) plus a small random perturbation.
    #[serde(alias = "perturbed_identity")]
    PerturbedMixed,
    /// Orthonormal columns of a random unitary.
    #[serde(alias = "random")]
    RandomUnitary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Threshold on the relative likelihood-equation residual.
    pub convergence_tol: f64,
    /// Damping `μ ∈ (0, 1]` of the fixed-point step.
    pub mixing: f64,
    /// Number of past iterates used for Anderson extrapolation of the
    /// fixed-point map; `0` gives the plain damped iteration.
    pub acceleration_depth: usize,
    pub init: InitStrategy,
    /// Maximum number of initializations; the likelihood is multimodal at low rank.
    pub starts: usize,
    /// Fictitious rows get `t_φ = t_phi_factor × max t`.
    pub t_phi_factor: f64,
    /// Seed for the initial root.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            convergence_tol: 1e-8,
            mixing: 1.0,
            acceleration_depth: 5,
            init: InitStrategy::PerturbedMixed,
            starts: 8,
            t_phi_factor: 100.0,
            seed: 0x5EED,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter("convergence_tol must be positive".into()));
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mixing {} outside (0, 1]",
                self.mixing
            )));
        }
        if !(self.t_phi_factor > 0.0) {
            return Err(Error::InvalidParameter("t_phi_factor must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Square root `e` of χ (`s² x r`).
#[derive(Clone, Debug, PartialEq)]
pub struct RootFactor {
    pub e: ComplexMatrix,
}

impl RootFactor {
    pub fn rank(&self) -> usize {
        self.e.ncols()
    }

    pub fn chi_matrix(&self) -> ComplexMatrix {
        &self.e * self.e.adjoint()
    }

    fn trace(&self) -> f64 {
        self.e.norm_squared()
    }

    fn normalized(mut self, target: f64) -> Self {
        let tr = self.trace();
        if tr > 0.0 {
            self.e *= Complex64::new((target / tr).sqrt(), 0.0);
        }
        self
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub root: RootFactor,
    pub iterations: usize,
    pub residual: f64,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reconstruction {
    pub chi: ProcessChi,
    pub rank: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Poisson log-likelihood over the real rows, up to a constant.
    pub log_likelihood: f64,
    pub t_phi: f64,
}

/// Record rows resolved to their operators, stored contiguously in
/// column-major order for the two hot loops.
pub(crate) struct Design {
    dim: usize,
    n: usize,
    ops: Vec<Complex64>,
    trials: Vec<f64>,
    events: Vec<f64>,
}

impl Design {
    pub(crate) fn new(rec: &MeasurementRecord, proto: &TomographyProtocol) -> Result<Self> {
        rec.validate()?;
        let dim = proto.dim();
        let n = dim * dim;
        let normalization = if rec.has_fictitious() {
            proto.normalization_operators()
        } else {
            Vec::new()
        };
        let mut ops = Vec::with_capacity(rec.rows.len() * n * n);
        for (idx, row) in rec.rows.iter().enumerate() {
            let op = if row.fictitious {
                normalization.get(row.effect).cloned().ok_or_else(|| {
                    Error::Misaligned(format!("row {idx}: no normalization projector {}", row.effect))
                })?
            } else {
                if row.prep >= proto.m_p() || row.effect >= proto.m_m() {
                    return Err(Error::Misaligned(format!(
                        "row {idx}: ({}, {}) outside a {}x{} protocol",
                        row.prep,
                        row.effect,
                        proto.m_p(),
                        proto.m_m()
                    )));
                }
                proto.chi_operator(row.prep, row.effect)
            };
            ops.extend_from_slice(op.as_slice());
        }
        Ok(Self {
            dim,
            n,
            ops,
            trials: rec.rows.iter().map(|r| r.trials).collect(),
            events: rec.rows.iter().map(|r| r.events).collect(),
        })
    }

    fn rows(&self) -> usize {
        self.trials.len()
    }

    fn op(&self, l: usize) -> &[Complex64] {
        let size = self.n * self.n;
        &self.ops[l * size..(l + 1) * size]
    }

    /// `Re Tr(χ Λ_l)` for every row; Λ is Hermitian so this is `Σ χ_ab conj(Λ_ab)`.
    pub(crate) fn probabilities(&self, chi: &ComplexMatrix) -> Vec<f64> {
        let c = chi.as_slice();
        (0..self.rows())
            .map(|l| {
                self.op(l)
                    .iter()
                    .zip(c)
                    .map(|(o, x)| x.re * o.re + x.im * o.im)
                    .sum()
            })
            .collect()
    }

    fn weighted_sum(&self, weights: &[f64]) -> ComplexMatrix {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for (l, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (a, o) in acc.iter_mut().zip(self.op(l)) {
                *a += o * w;
            }
        }
        DMatrix::from_column_slice(self.n, self.n, &acc)
    }

    fn information(&self) -> ComplexMatrix {
        self.weighted_sum(&self.trials)
    }

    /// Poisson log-likelihood `Σ k ln(t p) − t p`.
    fn log_likelihood(&self, probs: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((&p, &t), &k) in probs.iter().zip(&self.trials).zip(&self.events) {
            let mean = t * p;
            if k > 0.0 {
                if mean <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += k * mean.ln();
            }
            total -= mean;
        }
        total
    }

    /// Log-likelihood maximized over an overall scale of χ, with the optimal
    /// squared scale `Σk / Σtp`.
    fn profiled(&self, probs: &[f64]) -> (f64, f64) {
        let expected: f64 = probs.iter().zip(&self.trials).map(|(p, t)| p * t).sum();
        let observed: f64 = self.events.iter().sum();
        if expected <= 0.0 {
            return (f64::NEG_INFINITY, 1.0);
        }
        let scale = observed / expected;
        let scaled: Vec<f64> = probs.iter().map(|p| p * scale).collect();
        (self.log_likelihood(&scaled), scale)
    }

    fn j_weights(&self, probs: &[f64]) -> Vec<f64> {
        probs
            .iter()
            .zip(&self.events)
            .map(|(&p, &k)| if k == 0.0 { 0.0 } else { k / p.max(PROBABILITY_FLOOR) })
            .collect()
    }
}

fn initial_root(n: usize, rank: usize, opts: &SolverOptions) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (rank as u64).wrapping_mul(0x9E37_79B9));
    let mut gauss = || -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    match opts.init {
        InitStrategy::PerturbedMixed => {
            let norm = 1.0 / (n as f64).sqrt();
            let fourier = ComplexMatrix::from_fn(n, rank, |a, k| {
                Complex64::from_polar(norm, 2.0 * std::f64::consts::PI * (a * k) as f64 / n as f64)
            });
            let noise = ComplexMatrix::from_fn(n, rank, |_, _| gauss() * (0.1 * norm));
            fourier + noise
        }
        InitStrategy::RandomUnitary => {
            let g = ComplexMatrix::from_fn(n, rank, |_, _| gauss());
            g.qr().q()
        }
    }
}

struct Evaluation {
    probs: Vec<f64>,
    log_likelihood: f64,
    scale: f64,
}

fn evaluate(design: &Design, root: &RootFactor) -> Evaluation {
    let probs = design.probabilities(&root.chi_matrix());
    let (log_likelihood, scale) = design.profiled(&probs);
    Evaluation {
        probs,
        log_likelihood,
        scale,
    }
}

/// Relative residual of `I e = J(e) e` at the likelihood-optimal scale of `e`.
fn residual(info: &ComplexMatrix, j_e: &ComplexMatrix, root: &RootFactor, scale: f64) -> f64 {
    let ie = (info * &root.e) * Complex64::new(scale, 0.0);
    let denom = ie.norm();
    if denom == 0.0 {
        return f64::INFINITY;
    }
    (ie - j_e).norm() / denom
}

/// Anderson mixing over the plain map `G(e) = normalize(I⁻¹ J(e) e)`:
/// the next iterate is the combination of recent `G` values whose residuals
/// `G(e) − e` best cancel in the least-squares sense.
struct AndersonHistory {
    depth: usize,
    residuals: VecDeque<ComplexVector>,
    images: VecDeque<ComplexVector>,
}

impl AndersonHistory {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            residuals: VecDeque::new(),
            images: VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.residuals.clear();
        self.images.clear();
    }

    /// Records the pair `(e, G(e))` and returns the extrapolated iterate once
    /// at least two pairs are known.
    fn extrapolate(&mut self, e: &ComplexMatrix, image: &ComplexMatrix) -> Option<ComplexMatrix> {
        if self.depth == 0 {
            return None;
        }
        let g = ComplexVector::from_column_slice(image.as_slice());
        let f = &g - ComplexVector::from_column_slice(e.as_slice());
        self.residuals.push_back(f);
        self.images.push_back(g);
        if self.residuals.len() > self.depth + 1 {
            self.residuals.pop_front();
            self.images.pop_front();
        }
        let cols = self.residuals.len() - 1;
        if cols == 0 {
            return None;
        }
        let len = self.residuals[0].len();
        let diff = |v: &VecDeque<ComplexVector>| {
            ComplexMatrix::from_fn(len, cols, |row, c| v[c + 1][row] - v[c][row])
        };
        let (df, dg) = (diff(&self.residuals), diff(&self.images));
        let f_last = &self.residuals[cols];
        let gamma = df.svd(true, true).solve(f_last, 1e-10 * f_last.norm()).ok()?;
        let next = &self.images[cols] - dg * gamma;
        if next.iter().any(|z| !z.is_finite()) {
            return None;
        }
        Some(ComplexMatrix::from_column_slice(e.nrows(), e.ncols(), next.as_slice()))
    }
}

/// Best of up to `opts.starts` runs. The first run uses `opts.init` and
/// `opts.seed`, later runs alternate strategies with derived seeds. Stops as
/// soon as the best likelihood has been reached twice.
pub(crate) fn solve_design(design: &Design, rank: usize, opts: &SolverOptions) -> Result<FixedPointSolution> {
    let mut best: Option<FixedPointSolution> = None;
    let mut hits = 0;
    let mut failure = None;
    for start in 0..opts.starts.max(1) {
        let run = if start == 0 {
            opts.clone()
        } else {
            SolverOptions {
                init: if start % 2 == 1 {
                    InitStrategy::RandomUnitary
                } else {
                    InitStrategy::PerturbedMixed
                },
                seed: opts.seed.wrapping_add((start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                ..opts.clone()
            }
        };
        let solution = match solve_design_traced(design, rank, &run, None) {
            Ok(s) => s,
            Err(e @ Error::NotConverged { .. }) => {
                failure = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        match &best {
            Some(b) if (solution.log_likelihood - b.log_likelihood).abs() <= 1e-8 * b.log_likelihood.abs().max(1.0) => {
                hits += 1;
            }
            Some(b) if solution.log_likelihood < b.log_likelihood => {}
            _ => {
                best = Some(solution);
                hits = 1;
            }
        }
        if hits >= 2 {
            break;
        }
    }
    best.ok_or_else(|| failure.expect("at least one start"))
}

/// As [`solve_design`], optionally recording the log-likelihood of every accepted iterate.
fn solve_design_traced(
    design: &Design,
    rank: usize,
    opts: &SolverOptions,
    trace: Option<&mut Vec<f64>>,
) -> Result<FixedPointSolution> {
    solve_from(design, initial_root(design.n, rank, opts), opts, trace)
}

fn solve_from(
    design: &Design,
    start: ComplexMatrix,
    opts: &SolverOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<FixedPointSolution> {
    let rank = start.ncols();
    opts.validate()?;
    let n = design.n;
    if rank == 0 || rank > n {
        return Err(Error::InvalidParameter(format!("rank {rank} outside [1, {n}]")));
    }
    let target_trace = design.dim as f64;
    let info = design.information();
    let (values, vectors) = hermitian_eigen(&info);
    let (max, min) = (values[0], values[values.len() - 1]);
    if !(min > 1e-12 * max) {
        return Err(Error::SingularProtocol(min / max));
    }
    let info_inv = spectral_map(&values, &vectors, |v| 1.0 / v);

    if start.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: start.nrows(),
        });
    }
    let mut root = RootFactor { e: start }.normalized(target_trace);
    let mut eval = evaluate(design, &root);
    let mut res = f64::INFINITY;
    let mut history = AndersonHistory::new(opts.acceleration_depth);

    for iteration in 0..opts.max_iterations {
        if let Some(t) = trace.as_deref_mut() {
            t.push(eval.log_likelihood);
        }
        let j = design.weighted_sum(&design.j_weights(&eval.probs));
        let j_e = &j * &root.e;
        res = residual(&info, &j_e, &root, eval.scale);
        if res < opts.convergence_tol {
            return Ok(FixedPointSolution {
                root,
                iterations: iteration,
                residual: res,
                log_likelihood: eval.log_likelihood,
            });
        }
        let full = RootFactor { e: &info_inv * j_e }.normalized(target_trace);
        let tolerance = 1e-12 * eval.log_likelihood.abs().max(1.0);

        if let Some(e) = history.extrapolate(&root.e, &full.e) {
            let candidate = RootFactor { e }.normalized(target_trace);
            let cand_eval = evaluate(design, &candidate);
            if cand_eval.log_likelihood >= eval.log_likelihood - tolerance {
                root = candidate;
                eval = cand_eval;
                continue;
            }
            history.clear();
        }

        let mut mixing = opts.mixing;
        loop {
            let candidate = if mixing == 1.0 {
                full.clone()
            } else {
                RootFactor {
                    e: root.e.scale(1.0 - mixing) + full.e.scale(mixing),
                }
                .normalized(target_trace)
            };
            let cand_eval = evaluate(design, &candidate);
            if cand_eval.log_likelihood >= eval.log_likelihood - tolerance || mixing <= MIN_MIXING {
                root = candidate;
                eval = cand_eval;
                break;
            }
            mixing *= 0.5;
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iterations,
        residual: res,
    })
}

/// Fixed-point solution of the likelihood equation for the record as given
/// (no normalization rows are added).
pub fn solve_fixed_point(
    rec: &MeasurementRecord,
    proto: &TomographyProtocol,
    rank: usize,
    opts: &SolverOptions,
) -> Result<FixedPointSolution> {
    solve_design(&Design::new(rec, proto)?, rank, opts)
}

/// Record extended with the normalization complement, unless it already has one.
pub fn with_normalization(rec: &MeasurementRecord, proto: &TomographyProtocol, t_phi_factor: f64) -> (MeasurementRecord, f64) {
    if rec.has_fictitious() {
        let t_phi = rec.rows.iter().filter(|r| r.fictitious).map(|r| r.trials).fold(0.0, f64::max);
        return (rec.clone(), t_phi);
    }
    let t_phi = t_phi_factor * rec.max_trials();
    (rec.with_rows(normalization_complement(proto, t_phi)), t_phi)
}

/// Poisson log-likelihood `Σ [k ln(t p) − t p]` of the record's rows at χ.
pub fn log_likelihood(rec: &MeasurementRecord, proto: &TomographyProtocol, chi: &ProcessChi) -> Result<f64> {
    if chi.dim() != proto.dim() {
        return Err(Error::DimensionMismatch {
            expected: proto.dim(),
            found: chi.dim(),
        });
    }
    let design = Design::new(rec, proto)?;
    Ok(design.log_likelihood(&design.probabilities(chi.matrix())))
}

/// Rank-`r` maximum-likelihood estimate with trace normalized to `s`.
pub fn reconstruct_at_rank(
    rec: &MeasurementRecord,
    proto: &TomographyProtocol,
    rank: usize,
    opts: &SolverOptions,
) -> Result<Reconstruction> {
    let (full, t_phi) = with_normalization(rec, proto, opts.t_phi_factor);
    let design = Design::new(&full, proto)?;
    let solution = solve_design(&design, rank, opts)?;
    finish(rec, proto, solution, t_phi)
}

fn finish(rec: &MeasurementRecord, proto: &TomographyProtocol, solution: FixedPointSolution, t_phi: f64) -> Result<Reconstruction> {
    let rank = solution.root.rank();
    let root = solution.root.normalized(proto.dim() as f64);
    let chi = ProcessChi::new(proto.dim(), root.chi_matrix(), OperatorBasis::Ketbra)?;
    let real = MeasurementRecord {
        rows: rec.real_rows().copied().collect(),
        sampling: rec.sampling,
    };
    Ok(Reconstruction {
        log_likelihood: log_likelihood(&real, proto, &chi)?,
        chi,
        rank,
        iterations: solution.iterations,
        residual: solution.residual,
        t_phi,
    })
}

pub fn fidelity_report(chi_hat: &ProcessChi, reference: &ProcessChi) -> Result<f64> {
    process_fidelity(chi_hat, reference)
}
