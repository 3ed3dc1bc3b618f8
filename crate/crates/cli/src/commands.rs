use std::path::{Path, PathBuf};
use std::str::FromStr;

use qpt_core::calibration::{build_protocol, calibrate_empty_gate, Calibration, ProtocolModel};
use qpt_core::channel::{kraus_to_chi, partial_trace_b, pauli_representation, process_fidelity};
use qpt_core::protocol::cube_protocol;
use qpt_core::selection::{assess_rank, select_rank};
use qpt_core::simulator::{exact_counts, simulate_counts, trial_seed};
use qpt_core::{ComplexMatrix, KrausSet, MeasurementRecord, SolverOptions, SpamScenario, TomographyProtocol};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, GateSpec, SCHEMA_VERSION};
use crate::error::{CliError, Result};
use crate::files::{
    create_dir, read_counts, write_counts, write_json, CalibrationFile, CountsFile, CountsHeader, ProtocolFile,
    ReconstructionResult,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for RankChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(r) if r >= 1 => Ok(Self::Fixed(r)),
            _ => Err(format!("expected `auto` or a positive rank, got `{s}`")),
        }
    }
}

pub fn gate_label(gate: &GateSpec) -> String {
    match gate {
        GateSpec::Identity => "identity".into(),
        GateSpec::Hadamard => "hadamard".into(),
        GateSpec::Cnot => "cnot".into(),
        GateSpec::Rotation { .. } => "rotation".into(),
        GateSpec::Custom { .. } => "custom".into(),
    }
}

/// Writes `experiment.json`, `protocol.json` and `counts/trial_NNNN.csv` under `out`.
pub fn simulate(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let gate = config.gate.kraus(config.n_qubits)?;
    let protocol = cube_protocol(config.n_qubits)?;
    let counts_dir = out.join("counts");
    create_dir(&counts_dir)?;
    write_json(&out.join("experiment.json"), config)?;
    write_json(
        &out.join("protocol.json"),
        &ProtocolFile {
            schema_version: SCHEMA_VERSION,
            model: ProtocolModel::Standard,
            protocol: protocol.clone(),
        },
    )?;
    let trials = if config.exact { 1 } else { config.trials };
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(config.seed, trial as u64);
            let record = if config.exact {
                exact_counts(&gate, &config.scenario, &protocol, config.n_per_scheme)?
            } else {
                simulate_counts(&gate, &config.scenario, &protocol, config.n_per_scheme, seed)?
            };
            let path = counts_dir.join(format!("trial_{trial:04}.csv"));
            let file = CountsFile {
                header: CountsHeader {
                    n_qubits: config.n_qubits,
                    sampling: config.scenario.sampling,
                    protocol: ProtocolModel::Standard.name().into(),
                    gate: gate_label(&config.gate),
                    n_per_scheme: config.n_per_scheme,
                    seed: if config.exact { config.seed } else { seed },
                    trial,
                },
                record,
            };
            write_counts(&path, &file)?;
            Ok(path)
        })
        .collect()
}

pub fn calibrate(counts: &Path, alpha: f64, opts: &SolverOptions, out: &Path) -> Result<Calibration> {
    let file = read_counts(counts)?;
    if file.header.gate != "identity" {
        log::warn!(
            "{}: calibration expects empty-gate counts, header says gate `{}`",
            counts.display(),
            file.header.gate
        );
    }
    let calibration = calibrate_empty_gate(&file.record, file.header.n_qubits, alpha, opts)?;
    log::info!(
        "calibration rank {} (estimable: {}), identity fidelity {:.5}",
        calibration.rank,
        calibration.estimable,
        calibration.identity_fidelity
    );
    write_json(
        out,
        &CalibrationFile {
            schema_version: SCHEMA_VERSION,
            source: file_name(counts),
            calibration: calibration.clone(),
        },
    )?;
    Ok(calibration)
}

/// Everything a batch of reconstructions shares.
pub struct ReconstructSettings {
    pub model: ProtocolModel,
    pub calibration: Option<Calibration>,
    /// Supplies the reference gate and, for `ippm_true`, the scenario.
    pub config: Option<ExperimentConfig>,
    pub rank: RankChoice,
    pub alpha: f64,
    pub solver: SolverOptions,
}

impl ReconstructSettings {
    fn scenario(&self) -> Option<&SpamScenario> {
        self.config.as_ref().map(|c| &c.scenario)
    }

    fn reference(&self, header_gate: &str, n_qubits: usize) -> Result<Option<KrausSet>> {
        let spec = match &self.config {
            Some(c) => Some(c.gate.clone()),
            None => serde_json::from_value::<GateSpec>(serde_json::json!({ "name": header_gate })).ok(),
        };
        spec.map(|g| g.kraus(n_qubits)).transpose()
    }
}

/// Reconstructs one record under `protocol`.
pub fn reconstruct_record(
    record: &MeasurementRecord,
    protocol: &TomographyProtocol,
    reference: Option<&KrausSet>,
    settings: &ReconstructSettings,
) -> Result<ReconstructionResult> {
    let (rank, estimable, recon, reports) = match settings.rank {
        RankChoice::Auto => {
            let sel = select_rank(record, protocol, settings.alpha, &settings.solver)?;
            (sel.chosen_rank, sel.estimable, sel.reconstruction, sel.reports)
        }
        RankChoice::Fixed(r) => {
            let (report, recon) = assess_rank(record, protocol, r, settings.alpha, &settings.solver)?;
            (r, report.significant, recon, vec![report])
        }
    };
    let fidelity = reference
        .map(|g| process_fidelity(&recon.chi, &kraus_to_chi(g)))
        .transpose()?;
    let s = protocol.dim();
    let trace_residual = (partial_trace_b(&recon.chi) - ComplexMatrix::identity(s, s)).norm();
    Ok(ReconstructionResult {
        schema_version: SCHEMA_VERSION,
        counts: String::new(),
        gate: String::new(),
        model: settings.model,
        n_qubits: protocol.n_qubits,
        n_per_scheme: 0,
        trial: 0,
        rank,
        estimable,
        fidelity,
        trace_residual,
        iterations: recon.iterations,
        log_likelihood: recon.log_likelihood,
        reports,
        chi_pauli: pauli_representation(&recon.chi)?,
        chi: recon.chi,
    })
}

/// Reconstructs every counts file in parallel and writes `<stem>.<model>.json` into `out`.
pub fn reconstruct(counts: &[PathBuf], settings: &ReconstructSettings, out: &Path) -> Result<Vec<ReconstructionResult>> {
    if counts.is_empty() {
        return Err(CliError::Config("no counts files given".into()));
    }
    if matches!(settings.model, ProtocolModel::Gn | ProtocolModel::Ng) && settings.calibration.is_none() {
        return Err(CliError::Config(format!(
            "--model {} requires --calibration",
            settings.model.name()
        )));
    }
    if settings.model == ProtocolModel::IppmTrue && settings.config.is_none() {
        return Err(CliError::Config("--model ippm-true requires --config with the simulated scenario".into()));
    }
    create_dir(out)?;
    counts
        .par_iter()
        .map(|path| {
            let file = read_counts(path)?;
            let n = file.header.n_qubits;
            if let Some(c) = &settings.config {
                if c.n_qubits != n {
                    return Err(CliError::Config(format!(
                        "{}: n_qubits {n} differs from config n_qubits {}",
                        path.display(),
                        c.n_qubits
                    )));
                }
            }
            let protocol = build_protocol(settings.model, n, settings.calibration.as_ref(), settings.scenario())?;
            let reference = settings.reference(&file.header.gate, n)?;
            let mut result = reconstruct_record(&file.record, &protocol, reference.as_ref(), settings)?;
            result.counts = file_name(path);
            result.gate = file.header.gate.clone();
            result.n_per_scheme = file.header.n_per_scheme;
            result.trial = file.header.trial;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            write_json(&out.join(format!("{stem}.{}.json", settings.model.name())), &result)?;
            Ok(result)
        })
        .collect()
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
