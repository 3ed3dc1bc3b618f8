//! Quantum channel representations and conversions.
//!
//! A channel on an `s`-dimensional system is held either as a set of Kraus
//! operators or as its process matrix χ over the operator basis
//! `A_{m1 * s + m2} = |m2⟩⟨m1|` (zero-based). With that ordering the
//! coefficient vector of an operator is its column-stacking vectorization,
//! so `χ = e e†` where column `k` of `e` is `vec(E_k)`.
//!
//! The Born rule in χ form reads `Tr(E(ρ) Λ) = Tr(χ (ρ* ⊗ Λ))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, clamp_eigenvalues, hermitian_eigen, hermiticity_error, identity, kron, serde_matrix,
    spectral_map, trace_re, unvec_columns, vec_columns, ComplexMatrix, ComplexVector, EIGEN_TOL,
};

/// Residual below which `Σ E†E = I` is considered satisfied.
pub const TP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    #[serde(with = "serde_matrix")]
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        linalg::ensure_square(&matrix)?;
        let herm = hermiticity_error(&matrix);
        if herm > EIGEN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = trace_re(&matrix);
        if (tr - 1.0).abs() > EIGEN_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -EIGEN_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix })
    }

    pub fn pure(psi: &ComplexVector) -> Self {
        let norm = psi.norm();
        let v = psi.unscale(norm);
        Self {
            matrix: linalg::outer(&v),
        }
    }

    /// Maximally mixed state `I / s`.
    pub fn mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim).unscale(dim as f64),
        }
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(index, index)] = linalg::c64(1.0, 0.0);
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Operator-sum representation of a channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausSet {
    dim: usize,
    #[serde(with = "serde_matrix::vec")]
    operators: Vec<ComplexMatrix>,
    trace_preserving: bool,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidParameter("Kraus set must not be empty".into()))?;
        let dim = linalg::ensure_square(first)?;
        for op in &operators {
            let d = linalg::ensure_square(op)?;
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: d,
                });
            }
        }
        let mut set = Self {
            dim,
            operators,
            trace_preserving: false,
        };
        set.trace_preserving = set.tp_residual() < TP_TOL;
        Ok(set)
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            operators: vec![identity(dim)],
            trace_preserving: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of operators.
    pub fn rank(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn completeness(&self) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, e| {
                acc + e.adjoint() * e
            })
    }

    /// Frobenius norm of `Σ E†E - I`.
    pub fn tp_residual(&self) -> f64 {
        linalg::frobenius(&(self.completeness() - identity(self.dim)))
    }

    /// Rescales the set so that `Σ E†E = I` exactly, via `E_k ← E_k S^{-1/2}`.
    pub fn project_trace_preserving(&self) -> Result<Self> {
        let inv = linalg::pd_inv_sqrt(&self.completeness())?;
        Ok(Self {
            dim: self.dim,
            operators: self.operators.iter().map(|e| e * &inv).collect(),
            trace_preserving: true,
        })
    }

    /// Heisenberg-picture action `Σ E† Λ E` on an observable.
    pub fn adjoint_apply(&self, observable: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(self.dim, observable.nrows())?;
        Ok(self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, e| {
                acc + e.adjoint() * observable * e
            }))
    }

    /// Schrödinger-picture action on a bare matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(self.dim, m.nrows())?;
        Ok(self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, e| {
                acc + e * m * e.adjoint()
            }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorBasis {
    Ketbra,
    Pauli,
}

/// Process matrix of a channel, `s² x s²`, Hermitian and positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessChi {
    dim: usize,
    #[serde(with = "serde_matrix")]
    matrix: ComplexMatrix,
    basis: OperatorBasis,
}

impl ProcessChi {
    /// Validates shape, Hermiticity and positivity. The trace is not forced
    /// to `s` so that scaled or non-trace-preserving processes can be held.
    pub fn new(dim: usize, matrix: ComplexMatrix, basis: OperatorBasis) -> Result<Self> {
        let n = linalg::ensure_square(&matrix)?;
        check_dim(dim * dim, n)?;
        let scale = linalg::frobenius(&matrix).max(1.0);
        let herm = hermiticity_error(&matrix);
        if herm > EIGEN_TOL * scale {
            return Err(Error::NotHermitian(herm));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -EIGEN_TOL * scale {
            return Err(Error::NotPositive(min));
        }
        Ok(Self {
            dim,
            matrix: linalg::hermitian_part(&matrix),
            basis,
        })
    }

    pub(crate) fn from_parts_unchecked(dim: usize, matrix: ComplexMatrix, basis: OperatorBasis) -> Self {
        Self { dim, matrix, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> OperatorBasis {
        self.basis
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.matrix)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.scale(factor),
            basis: self.basis,
        }
    }

    /// Whether `Tr_B(χ) = I_s` within `tol` (Frobenius).
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.basis == OperatorBasis::Ketbra
            && linalg::frobenius(&(partial_trace_b(self) - identity(self.dim))) <= tol
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn require_ketbra(chi: &ProcessChi) -> Result<()> {
    if chi.basis != OperatorBasis::Ketbra {
        return Err(Error::InvalidParameter(
            "operation requires a ketbra-basis process matrix".into(),
        ));
    }
    Ok(())
}

pub fn apply_channel(k: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix {
        matrix: k.apply_matrix(rho.matrix())?,
    })
}

pub fn kraus_to_chi(k: &KrausSet) -> ProcessChi {
    let s = k.dim;
    let mut e = ComplexMatrix::zeros(s * s, k.rank());
    for (col, op) in k.operators.iter().enumerate() {
        e.set_column(col, &vec_columns(op));
    }
    let matrix = &e * e.adjoint();
    ProcessChi::from_parts_unchecked(s, matrix, OperatorBasis::Ketbra)
}

/// Kraus operators from the `rank` largest eigenpairs of χ.
pub fn chi_to_kraus(chi: &ProcessChi, rank: usize) -> Result<KrausSet> {
    require_ketbra(chi)?;
    let s = chi.dim;
    if rank == 0 || rank > s * s {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} outside [1, {}]",
            s * s
        )));
    }
    let (values, vectors) = hermitian_eigen(&chi.matrix);
    let values = clamp_eigenvalues(&values, chi.trace().abs())?;
    let operators = (0..rank)
        .map(|k| {
            let col: Vec<_> = vectors.column(k).iter().copied().collect();
            unvec_columns(&col, s).scale(values[k].sqrt())
        })
        .collect();
    KrausSet::new(operators)
}

/// Choi state `χ / s` on the `s²`-dimensional space.
pub fn choi_state(chi: &ProcessChi) -> Result<DensityMatrix> {
    DensityMatrix::new(chi.matrix.unscale(chi.dim as f64))
}

/// `Σ_m (I ⊗ ⟨m|) χ (I ⊗ |m⟩)`.
pub fn partial_trace_b(chi: &ProcessChi) -> ComplexMatrix {
    let s = chi.dim;
    ComplexMatrix::from_fn(s, s, |a, b| {
        (0..s).map(|m| chi.matrix[(a * s + m, b * s + m)]).sum()
    })
}

/// Uhlmann fidelity between the Choi states `χ_a / s` and `χ_b / s`.
pub fn process_fidelity(a: &ProcessChi, b: &ProcessChi) -> Result<f64> {
    check_dim(a.dim, b.dim)?;
    if a.basis != b.basis {
        return Err(Error::InvalidParameter(
            "fidelity requires both process matrices in the same basis".into(),
        ));
    }
    let s = a.dim as f64;
    let rho_a = a.matrix.unscale(s);
    let rho_b = b.matrix.unscale(s);
    // Tr sqrt(√a b √a) is the trace norm of √a √b
    let product = linalg::psd_sqrt(&rho_a)? * linalg::psd_sqrt(&rho_b)?;
    let root_trace: f64 = product.singular_values().iter().sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// `{A_i ⊗ B_j}`, acting on the product space with `a` as the major factor.
pub fn tensor_channel(a: &KrausSet, b: &KrausSet) -> KrausSet {
    let operators = a
        .operators
        .iter()
        .flat_map(|ea| b.operators.iter().map(move |eb| kron(ea, eb)))
        .collect();
    KrausSet {
        dim: a.dim * b.dim,
        operators,
        trace_preserving: a.trace_preserving && b.trace_preserving,
    }
}

/// The channel `second ∘ first`.
pub fn compose_channels(first: &KrausSet, second: &KrausSet) -> Result<KrausSet> {
    check_dim(first.dim, second.dim)?;
    let operators = second
        .operators
        .iter()
        .flat_map(|s| first.operators.iter().map(move |f| s * f))
        .collect();
    KrausSet::new(operators)
}

/// Normalized single-qubit Pauli basis `{I, X, Y, Z} / √2`.
pub fn normalized_paulis() -> [ComplexMatrix; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        identity(2).scale(h),
        linalg::sigma_x().scale(h),
        linalg::sigma_y().scale(h),
        linalg::sigma_z().scale(h),
    ]
}

/// Unitary whose column `a` is `vec(P_a)` for the N-qubit normalized Pauli
/// basis, index `a` read in base 4 with qubit 0 most significant.
fn pauli_change_of_basis(dim: usize) -> Result<ComplexMatrix> {
    let n_qubits = qubit_count(dim)?;
    let singles = normalized_paulis();
    let count = dim * dim;
    let mut v = ComplexMatrix::zeros(count, count);
    for a in 0..count {
        let mut p = identity(1);
        for q in 0..n_qubits {
            let digit = (a / 4usize.pow((n_qubits - 1 - q) as u32)) % 4;
            p = kron(&p, &singles[digit]);
        }
        v.set_column(a, &vec_columns(&p));
    }
    Ok(v)
}

pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Re-expresses a ketbra-basis χ over the normalized Pauli basis.
pub fn pauli_representation(chi: &ProcessChi) -> Result<ProcessChi> {
    require_ketbra(chi)?;
    let v = pauli_change_of_basis(chi.dim)?;
    let matrix = v.adjoint() * &chi.matrix * v;
    Ok(ProcessChi::from_parts_unchecked(
        chi.dim,
        linalg::hermitian_part(&matrix),
        OperatorBasis::Pauli,
    ))
}

/// Rebuilds a ketbra-basis χ from a positive spectrum and eigenvectors.
pub fn chi_from_spectrum(dim: usize, values: &[f64], vectors: &ComplexMatrix) -> ProcessChi {
    ProcessChi::from_parts_unchecked(dim, spectral_map(values, vectors, |v| v), OperatorBasis::Ketbra)
}

/// Named ideal gates.
pub mod gates {
    use super::*;
    use crate::linalg::c64;

    pub fn hadamard() -> ComplexMatrix {
        (linalg::sigma_x() + linalg::sigma_z()).scale(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Control on qubit 0 (most significant), target on qubit 1.
    pub fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        let one = c64(1.0, 0.0);
        m[(0, 0)] = one;
        m[(1, 1)] = one;
        m[(2, 3)] = one;
        m[(3, 2)] = one;
        m
    }
}
