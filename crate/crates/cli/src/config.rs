//! Experiment configuration files.

use std::path::Path;

use qpt_core::calibration::ProtocolModel;
use qpt_core::channel::{gates, KrausSet};
use qpt_core::mle::SolverOptions;
use qpt_core::noise::rotation_gate;
use qpt_core::simulator::SpamScenario;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Gate under test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GateSpec {
    Identity,
    Hadamard,
    Cnot,
    Rotation { theta: f64, axis: [f64; 3] },
    Custom { kraus: KrausSet },
}

impl GateSpec {
    pub fn kraus(&self, n_qubits: usize) -> Result<KrausSet> {
        let dim = 1usize << n_qubits;
        let single = |name: &str| {
            if n_qubits == 1 {
                Ok(())
            } else {
                Err(CliError::Config(format!("gate.name `{name}` acts on one qubit, n_qubits is {n_qubits}")))
            }
        };
        let kraus = match self {
            Self::Identity => KrausSet::identity(dim),
            Self::Hadamard => {
                single("hadamard")?;
                KrausSet::unitary(gates::hadamard())?
            }
            Self::Cnot => {
                if n_qubits != 2 {
                    return Err(CliError::Config(format!("gate.name `cnot` needs n_qubits = 2, got {n_qubits}")));
                }
                KrausSet::unitary(gates::cnot())?
            }
            Self::Rotation { theta, axis } => {
                single("rotation")?;
                rotation_gate(*theta, *axis).map_err(|e| CliError::Config(format!("gate: {e}")))?
            }
            Self::Custom { kraus } => {
                if kraus.dim() != dim {
                    return Err(CliError::Config(format!(
                        "gate.kraus has dimension {}, n_qubits {n_qubits} needs {dim}",
                        kraus.dim()
                    )));
                }
                kraus.clone()
            }
        };
        Ok(kraus)
    }
}

fn default_n_per_scheme() -> u64 {
    1000
}

fn default_trials() -> usize {
    1
}

fn default_alpha() -> f64 {
    qpt_core::selection::DEFAULT_ALPHA
}

fn default_model() -> ProtocolModel {
    ProtocolModel::Standard
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub gate: GateSpec,
    pub n_qubits: usize,
    #[serde(default)]
    pub scenario: SpamScenario,
    #[serde(default = "default_model")]
    pub protocol_model: ProtocolModel,
    /// Repetitions per (preparation, basis) scheme.
    #[serde(default = "default_n_per_scheme")]
    pub n_per_scheme: u64,
    /// Monte Carlo repetitions.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub seed: u64,
    /// Write `k = n p` instead of sampling.
    #[serde(default)]
    pub exact: bool,
}

impl ExperimentConfig {
    pub fn new(gate: GateSpec, n_qubits: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            gate,
            n_qubits,
            scenario: SpamScenario::ideal(),
            protocol_model: default_model(),
            n_per_scheme: default_n_per_scheme(),
            trials: default_trials(),
            alpha: default_alpha(),
            solver: SolverOptions::default(),
            seed: 0,
            exact: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if !(1..=3).contains(&self.n_qubits) {
            return bad("n_qubits", format!("{} outside 1..=3", self.n_qubits));
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.n_per_scheme == 0 {
            return bad("n_per_scheme", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", format!("{} outside (0, 1)", self.alpha));
        }
        if let Err(e) = self.scenario.validate() {
            return bad("scenario", e.to_string());
        }
        if let Err(e) = self.solver.validate() {
            return bad("solver", e.to_string());
        }
        self.gate.kraus(self.n_qubits)?;
        Ok(())
    }
}
