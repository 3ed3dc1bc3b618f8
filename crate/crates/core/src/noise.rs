//! Parametric single-qubit channels used as SPAM-error building blocks.
//!
//! Times are expressed in units of the gate duration `T`.

use serde::{Deserialize, Serialize};

use crate::channel::{compose_channels, KrausSet};
use crate::error::{Error, Result};
use crate::linalg::{c64, identity, sigma_x, sigma_y, sigma_z, ComplexMatrix};

/// Description of a single-qubit noise process, serializable in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Identity,
    Depolarizing {
        gamma: f64,
    },
    AmplitudeDamping {
        t1: f64,
        duration: f64,
    },
    /// Pure dephasing complementing amplitude damping with the same `t1`, so
    /// that both together decay coherences as `exp(-duration / t2)`.
    Dephasing {
        t1: f64,
        t2: f64,
        duration: f64,
    },
    UnitaryRotation {
        theta: f64,
        axis: [f64; 3],
    },
    /// Children applied in listed order.
    Composite {
        children: Vec<NoiseSpec>,
    },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Identity
    }
}

impl NoiseSpec {
    /// Amplitude damping followed by the matching pure dephasing.
    pub fn relaxation(t1: f64, t2: f64, duration: f64) -> Self {
        NoiseSpec::Composite {
            children: vec![
                NoiseSpec::AmplitudeDamping { t1, duration },
                NoiseSpec::Dephasing { t1, t2, duration },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel().map(|_| ())
    }

    pub fn is_identity(&self) -> bool {
        match self {
            NoiseSpec::Identity => true,
            NoiseSpec::Depolarizing { gamma } => *gamma == 0.0,
            NoiseSpec::AmplitudeDamping { duration, .. } | NoiseSpec::Dephasing { duration, .. } => {
                *duration == 0.0
            }
            NoiseSpec::UnitaryRotation { theta, .. } => *theta == 0.0,
            NoiseSpec::Composite { children } => children.iter().all(NoiseSpec::is_identity),
        }
    }

    pub fn channel(&self) -> Result<KrausSet> {
        match self {
            NoiseSpec::Identity => Ok(KrausSet::identity(2)),
            NoiseSpec::Depolarizing { gamma } => depolarizing_channel(*gamma),
            NoiseSpec::AmplitudeDamping { t1, duration } => amplitude_damping_channel(*t1, *duration),
            NoiseSpec::Dephasing { t1, t2, duration } => dephasing_channel(*t2, *t1, *duration),
            NoiseSpec::UnitaryRotation { theta, axis } => rotation_gate(*theta, *axis),
            NoiseSpec::Composite { children } => children
                .iter()
                .try_fold(KrausSet::identity(2), |acc, child| {
                    compose_channels(&acc, &child.channel()?)
                }),
        }
    }
}

/// Whether noise acts after the ideal gate or before it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOrder {
    #[default]
    After,
    Before,
}

/// `ρ → (1-γ)ρ + γ I/2`, realized with `{√(1-3γ/4) I, √(γ/4) σ_x, √(γ/4) σ_y, √(γ/4) σ_z}`.
pub fn depolarizing_channel(gamma: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing probability {gamma} outside [0, 1]"
        )));
    }
    let a = (1.0 - 0.75 * gamma).sqrt();
    let b = (0.25 * gamma).sqrt();
    KrausSet::new(vec![
        identity(2).scale(a),
        sigma_x().scale(b),
        sigma_y().scale(b),
        sigma_z().scale(b),
    ])
}

/// Decay probability `1 - exp(-duration / t1)`.
pub fn damping_probability(t1: f64, duration: f64) -> f64 {
    -(-duration / t1).exp_m1()
}

pub fn amplitude_damping_channel(t1: f64, duration: f64) -> Result<KrausSet> {
    if !(t1 > 0.0) {
        return Err(Error::InvalidParameter(format!("t1 must be positive, got {t1}")));
    }
    if !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be non-negative, got {duration}"
        )));
    }
    let gamma = damping_probability(t1, duration);
    let zero = c64(0.0, 0.0);
    let mut e0 = ComplexMatrix::zeros(2, 2);
    e0[(0, 0)] = c64(1.0, 0.0);
    e0[(1, 1)] = c64((1.0 - gamma).sqrt(), 0.0);
    let mut e1 = ComplexMatrix::from_element(2, 2, zero);
    e1[(0, 1)] = c64(gamma.sqrt(), 0.0);
    KrausSet::new(vec![e0, e1])
}

/// Coherence factor `exp(-duration (1/t2 - 1/(2 t1)))` of the pure dephasing part.
pub fn dephasing_factor(t2: f64, t1: f64, duration: f64) -> f64 {
    (-duration * (1.0 / t2 - 0.5 / t1)).exp()
}

pub fn dephasing_channel(t2: f64, t1: f64, duration: f64) -> Result<KrausSet> {
    if !(t1 > 0.0) || !(t2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation times must be positive, got t1={t1}, t2={t2}"
        )));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::InvalidParameter(format!(
            "t2={t2} exceeds 2*t1={}",
            2.0 * t1
        )));
    }
    if !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be non-negative, got {duration}"
        )));
    }
    let lambda = dephasing_factor(t2, t1, duration);
    KrausSet::new(vec![
        identity(2).scale(((1.0 + lambda) / 2.0).sqrt()),
        sigma_z().scale(((1.0 - lambda) / 2.0).max(0.0).sqrt()),
    ])
}

/// `exp(-i θ/2 (n·σ))`.
pub fn rotation_gate(theta: f64, axis: [f64; 3]) -> Result<KrausSet> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "rotation axis must be a unit vector, |n| = {norm}"
        )));
    }
    let generator = sigma_x().scale(axis[0]) + sigma_y().scale(axis[1]) + sigma_z().scale(axis[2]);
    let (s, c) = (theta / 2.0).sin_cos();
    let u = identity(2).scale(c) - generator * c64(0.0, s);
    KrausSet::unitary(u)
}

/// Ideal gate with noise attached on the side given by `order`.
pub fn noisy_gate(ideal: &KrausSet, spec: &NoiseSpec, order: NoiseOrder) -> Result<KrausSet> {
    if spec.is_identity() {
        return Ok(ideal.clone());
    }
    let noise = spec.channel()?;
    match order {
        NoiseOrder::After => compose_channels(ideal, &noise),
        NoiseOrder::Before => compose_channels(&noise, ideal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, gates, kraus_to_chi, process_fidelity, DensityMatrix};
    use crate::linalg::{frobenius, ComplexVector};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn chi_distance(a: &KrausSet, b: &KrausSet) -> f64 {
        frobenius(&(kraus_to_chi(a).matrix() - kraus_to_chi(b).matrix()))
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)]))
    }

    #[test]
    fn depolarizing_examples() {
        assert!(chi_distance(&depolarizing_channel(0.0).unwrap(), &KrausSet::identity(2)) < 1e-15);
        let out = apply_channel(&depolarizing_channel(0.01).unwrap(), &DensityMatrix::basis(2, 0)).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.995).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - 0.005).abs() < 1e-15);
        assert!(depolarizing_channel(1.2).is_err());
        assert!(depolarizing_channel(-0.1).is_err());
    }

    #[test]
    fn amplitude_damping_examples() {
        assert!(chi_distance(&amplitude_damping_channel(20.0, 0.0).unwrap(), &KrausSet::identity(2)) < 1e-15);
        let damp = amplitude_damping_channel(20.0, 1.0).unwrap();
        let out = apply_channel(&damp, &DensityMatrix::basis(2, 1)).unwrap();
        let expected = (-1.0f64 / 20.0).exp();
        assert!((out.matrix()[(1, 1)].re - expected).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - 0.951229).abs() < 1e-6);
        assert!(amplitude_damping_channel(0.0, 1.0).is_err());
    }

    #[test]
    fn dephasing_examples() {
        assert!(chi_distance(&dephasing_channel(50.0, 100.0, 0.0).unwrap(), &KrausSet::identity(2)) < 1e-15);
        let deph = dephasing_channel(50.0, 100.0, 1.0).unwrap();
        let out = apply_channel(&deph, &plus()).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * (-0.015f64).exp()).abs() < 1e-15);
        let both = NoiseSpec::relaxation(100.0, 50.0, 1.0).channel().unwrap();
        let out = apply_channel(&both, &plus()).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * (-1.0f64 / 50.0).exp()).abs() < 1e-14);
        let diag = DensityMatrix::new(ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            c64(0.3, 0.0),
            c64(0.7, 0.0),
        ])))
        .unwrap();
        let out = apply_channel(&deph, &diag).unwrap();
        assert!(frobenius(&(out.matrix() - diag.matrix())) < 1e-15);
        assert!(dephasing_channel(250.0, 100.0, 1.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        assert!(chi_distance(&rotation_gate(0.0, [0.0, 0.0, 1.0]).unwrap(), &KrausSet::identity(2)) < 1e-15);
        let h = rotation_gate(PI, [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2]).unwrap();
        assert!(chi_distance(&h, &KrausSet::unitary(gates::hadamard()).unwrap()) < 1e-14);
        let x = rotation_gate(PI, [1.0, 0.0, 0.0]).unwrap();
        let out = apply_channel(&x, &DensityMatrix::basis(2, 0)).unwrap();
        assert!(frobenius(&(out.matrix() - DensityMatrix::basis(2, 1).matrix())) < 1e-15);
        assert!(rotation_gate(1.0, [1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn rotation_inverse_is_identity() {
        let axis = [0.48, -0.6, 0.64];
        let fwd = rotation_gate(1.234, axis).unwrap();
        let back = rotation_gate(-1.234, axis).unwrap();
        let c = compose_channels(&fwd, &back).unwrap();
        assert!(chi_distance(&c, &KrausSet::identity(2)) < 1e-10);
    }

    #[test]
    fn noisy_gate_examples() {
        let h = KrausSet::unitary(gates::hadamard()).unwrap();
        let none = NoiseSpec::relaxation(100.0, 50.0, 0.0);
        assert!(chi_distance(&noisy_gate(&h, &none, NoiseOrder::After).unwrap(), &h) < 1e-15);

        let noisy = noisy_gate(&h, &NoiseSpec::relaxation(100.0, 50.0, 1.0), NoiseOrder::After).unwrap();
        assert!(noisy.rank() > 1);
        let f = process_fidelity(&kraus_to_chi(&noisy), &kraus_to_chi(&h)).unwrap();
        // Choi overlap of the relaxation channel: (1 + (1 - γ_ad) + 2 e^{-T/T2}) / 4
        let gamma = damping_probability(100.0, 1.0);
        let expected = (2.0 - gamma + 2.0 * (-1.0f64 / 50.0).exp()) / 4.0;
        assert!((f - expected).abs() < 1e-9, "fidelity {f} vs {expected}");
        assert!(f < 1.0);

        let dep = NoiseSpec::Depolarizing { gamma: 0.2 };
        let g = noisy_gate(&KrausSet::identity(2), &dep, NoiseOrder::After).unwrap();
        assert!(chi_distance(&g, &depolarizing_channel(0.2).unwrap()) < 1e-15);
    }

    #[test]
    fn noise_spec_round_trips_through_json_shape() {
        let spec = NoiseSpec::relaxation(100.0, 50.0, 1.0);
        match &spec {
            NoiseSpec::Composite { children } => assert_eq!(children.len(), 2),
            _ => unreachable!(),
        }
        assert!(NoiseSpec::Composite { children: vec![] }.is_identity());
        assert!(NoiseSpec::Composite {
            children: vec![NoiseSpec::Depolarizing { gamma: 2.0 }]
        }
        .validate()
        .is_err());
    }
}
