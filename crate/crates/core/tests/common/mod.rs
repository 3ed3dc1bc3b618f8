#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qpt_core::channel::{DensityMatrix, KrausSet};
use qpt_core::linalg::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Trace-preserving channel with `rank` Kraus operators cut from a random isometry.
pub fn random_channel(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> KrausSet {
    let q = gaussian(rng, dim * rank, dim).qr().q();
    let ops = (0..rank).map(|k| q.rows(k * dim, dim).into_owned()).collect();
    KrausSet::new(ops).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let g = gaussian(rng, dim, dim);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr)).unwrap()
}

/// Positive operator bounded by the identity.
pub fn random_effect(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let g = gaussian(rng, dim, dim);
    let m = &g * g.adjoint();
    let largest = m.clone().symmetric_eigenvalues().max();
    m.unscale(largest)
}
