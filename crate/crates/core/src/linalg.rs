//! Dense complex matrix helpers.
//!
//! Every operator in this crate is small (at most 16x16 for two-qubit
//! processes), so everything is dense and eigen-based.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Eigenvalues in `[-EIGEN_TOL, 0)` are treated as round-off and clamped to zero.
pub const EIGEN_TOL: f64 = 1e-8;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn from_rows(rows: &[&[Complex64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn sigma_x() -> ComplexMatrix {
    let (o, l) = (c64(0.0, 0.0), c64(1.0, 0.0));
    from_rows(&[&[o, l], &[l, o]])
}

pub fn sigma_y() -> ComplexMatrix {
    let o = c64(0.0, 0.0);
    from_rows(&[&[o, c64(0.0, -1.0)], &[c64(0.0, 1.0), o]])
}

pub fn sigma_z() -> ComplexMatrix {
    let o = c64(0.0, 0.0);
    from_rows(&[&[c64(1.0, 0.0), o], &[o, c64(-1.0, 0.0)]])
}

/// `a ⊗ b` with the first factor as the most significant index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Largest entrywise deviation `|m - m†|`.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
/// Column `k` of the returned matrix is the eigenvector of eigenvalue `k`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

/// Clamps round-off negatives to zero, rejects anything below `-EIGEN_TOL * scale`.
pub fn clamp_eigenvalues(values: &[f64], scale: f64) -> Result<Vec<f64>> {
    let floor = -EIGEN_TOL * scale.max(1.0);
    values
        .iter()
        .map(|&v| {
            if v < floor {
                Err(Error::NotPositive(v))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// Rebuilds `V diag(f(λ)) V†`.
pub fn spectral_map(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = vectors.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        let col = vectors.column(k);
        out += (col * col.adjoint()).scale(f(v));
    }
    out
}

/// Square root of a positive semidefinite Hermitian matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    let scale = values.first().copied().unwrap_or(1.0).abs();
    let values = clamp_eigenvalues(&values, scale)?;
    // eigenvalues at roundoff level would contribute O(sqrt(eps)) garbage
    let cutoff = 64.0 * f64::EPSILON * scale;
    Ok(spectral_map(&values, &vectors, |v| if v > cutoff { v.sqrt() } else { 0.0 }))
}

/// Inverse square root of a positive definite Hermitian matrix.
pub fn pd_inv_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&min) = values.last() {
        if min <= 0.0 {
            return Err(Error::NotPositive(min));
        }
    }
    Ok(spectral_map(&values, &vectors, |v| 1.0 / v.sqrt()))
}

pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.trace().re
}

/// `Re Tr(a b)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.norm()
}

/// Column-stacking vectorization, `vec(E)[c * rows + r] = E[r, c]`.
pub fn vec_columns(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_columns`] for a square `dim x dim` matrix.
pub fn unvec_columns(v: &[Complex64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v)
}

/// Serializes matrices as nested row arrays of `[re, im]` pairs.
pub mod serde_matrix {
    use super::ComplexMatrix;
    use num_complex::Complex64;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix, String> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err("empty matrix".into());
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err("ragged matrix rows".into());
        }
        Ok(ComplexMatrix::from_fn(n, m, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        }))
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> Result<S::Ok, S::Error> {
            ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ComplexMatrix>, D::Error> {
            let all = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
            all.iter()
                .map(|rows| from_rows(rows).map_err(D::Error::custom))
                .collect()
        }
    }
}
