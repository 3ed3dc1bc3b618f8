//! Empty-gate SPAM calibration and assembly of the protocol used for reconstruction.

use serde::{Deserialize, Serialize};

use crate::channel::{chi_to_kraus, kraus_to_chi, process_fidelity, KrausSet, ProcessChi};
use crate::error::{Error, Result};
use crate::mle::SolverOptions;
use crate::protocol::{cube_protocol, fuzzify_gn, fuzzify_ng, TomographyProtocol};
use crate::record::MeasurementRecord;
use crate::selection::{select_rank, AdequacyReport};
use crate::simulator::SpamScenario;

/// SPAM channel estimated from an empty gate measured with the standard protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub n_qubits: usize,
    pub chi_noise: ProcessChi,
    /// Trace-preserving Kraus operators at the selected rank.
    pub kraus: KrausSet,
    pub rank: usize,
    pub estimable: bool,
    /// Fidelity of the estimated SPAM channel with the identity.
    pub identity_fidelity: f64,
    pub reports: Vec<AdequacyReport>,
}

pub fn calibrate_empty_gate(
    rec: &MeasurementRecord,
    n_qubits: usize,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<Calibration> {
    let proto = cube_protocol(n_qubits)?;
    let selection = select_rank(rec, &proto, alpha, opts)?;
    if !selection.estimable {
        log::warn!(
            "empty-gate rank not estimable; using full rank {}",
            selection.chosen_rank
        );
    }
    let chi_noise = selection.reconstruction.chi.clone();
    let kraus = chi_to_kraus(&chi_noise, selection.chosen_rank)?.project_trace_preserving()?;
    let identity = kraus_to_chi(&KrausSet::identity(proto.dim()));
    Ok(Calibration {
        n_qubits,
        identity_fidelity: process_fidelity(&chi_noise, &identity)?,
        chi_noise,
        kraus,
        rank: selection.chosen_rank,
        estimable: selection.estimable,
        reports: selection.reports,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolModel {
    /// Ideal cube protocol.
    Standard,
    /// Calibrated noise applied to the effects.
    Gn,
    /// Calibrated noise applied to the preparations.
    Ng,
    /// Exact SPAM model of a simulation scenario.
    IppmTrue,
}

impl ProtocolModel {
    pub const ALL: [ProtocolModel; 4] = [Self::Standard, Self::Gn, Self::Ng, Self::IppmTrue];

    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Gn => "gn",
            Self::Ng => "ng",
            Self::IppmTrue => "ippm_true",
        }
    }
}

impl std::str::FromStr for ProtocolModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "standard" => Ok(Self::Standard),
            "gn" => Ok(Self::Gn),
            "ng" => Ok(Self::Ng),
            "ippm_true" | "ippm" => Ok(Self::IppmTrue),
            other => Err(Error::InvalidParameter(format!("unknown protocol model `{other}`"))),
        }
    }
}

/// Protocol for reconstruction under `model`. GN and NG need a calibration,
/// the true IPPM model needs the simulation scenario.
pub fn build_protocol(
    model: ProtocolModel,
    n_qubits: usize,
    calibration: Option<&Calibration>,
    scenario: Option<&SpamScenario>,
) -> Result<TomographyProtocol> {
    let standard = cube_protocol(n_qubits)?;
    let calibrated = || {
        let cal = calibration.ok_or_else(|| {
            Error::InvalidParameter(format!("protocol model `{}` requires a calibration", model.name()))
        })?;
        if cal.n_qubits != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: cal.n_qubits,
            });
        }
        Ok(&cal.kraus)
    };
    match model {
        ProtocolModel::Standard => Ok(standard),
        ProtocolModel::Gn => fuzzify_gn(&standard, calibrated()?),
        ProtocolModel::Ng => fuzzify_ng(&standard, calibrated()?),
        ProtocolModel::IppmTrue => scenario
            .ok_or_else(|| Error::InvalidParameter("the ippm_true model requires a simulation scenario".into()))?
            .true_protocol(n_qubits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_parse() {
        for m in ProtocolModel::ALL {
            assert_eq!(m.name().parse::<ProtocolModel>().unwrap(), m);
        }
        assert_eq!("ippm-true".parse::<ProtocolModel>().unwrap(), ProtocolModel::IppmTrue);
        assert!("linear".parse::<ProtocolModel>().is_err());
    }

    #[test]
    fn calibrated_models_need_calibration() {
        assert!(build_protocol(ProtocolModel::Gn, 1, None, None).is_err());
        assert!(build_protocol(ProtocolModel::IppmTrue, 1, None, None).is_err());
        assert_eq!(build_protocol(ProtocolModel::Standard, 1, None, None).unwrap(), cube_protocol(1).unwrap());
    }
}
