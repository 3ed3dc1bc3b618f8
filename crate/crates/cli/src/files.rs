//! On-disk formats: counts as CSV with `#` header lines, everything else JSON.

use std::fs;
use std::path::{Path, PathBuf};

use qpt_core::calibration::{Calibration, ProtocolModel};
use qpt_core::selection::AdequacyReport;
use qpt_core::{CountRow, MeasurementRecord, ProcessChi, SamplingMode, TomographyProtocol};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, Result};

/// Metadata carried in the header of a counts file.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsHeader {
    pub n_qubits: usize,
    pub sampling: SamplingMode,
    pub protocol: String,
    pub gate: String,
    pub n_per_scheme: u64,
    pub seed: u64,
    pub trial: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountsFile {
    pub header: CountsHeader,
    pub record: MeasurementRecord,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    prep_index: usize,
    effect_index: usize,
    t: f64,
    k: f64,
    fictitious: bool,
}

fn sampling_name(mode: SamplingMode) -> &'static str {
    match mode {
        SamplingMode::PoissonIndependent => "poisson_independent",
        SamplingMode::MultinomialPerScheme => "multinomial_per_scheme",
    }
}

pub fn write_counts(path: &Path, file: &CountsFile) -> Result<()> {
    let h = &file.header;
    let mut out = format!(
        "# schema_version={SCHEMA_VERSION}\n# protocol={}\n# gate={}\n# n_qubits={}\n# sampling={}\n# n_per_scheme={}\n# seed={}\n# trial={}\n",
        h.protocol,
        h.gate,
        h.n_qubits,
        sampling_name(h.sampling),
        h.n_per_scheme,
        h.seed,
        h.trial
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &file.record.rows {
        w.serialize(CsvRow {
            prep_index: r.prep,
            effect_index: r.effect,
            t: r.trials,
            k: r.events,
            fictitious: r.fictitious,
        })
        .map_err(|e| CliError::io(path, e))?;
    }
    let body = w.into_inner().map_err(|e| CliError::io(path, e))?;
    out.push_str(&String::from_utf8_lossy(&body));
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn read_counts(path: &Path) -> Result<CountsFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut header = CountsHeader {
        n_qubits: 0,
        sampling: SamplingMode::default(),
        protocol: String::new(),
        gate: String::new(),
        n_per_scheme: 0,
        seed: 0,
        trial: 0,
    };
    let mut version = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let Some((key, value)) = line.trim_start_matches('#').trim().split_once('=') else {
            continue;
        };
        let value = value.trim();
        let num = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("header `{key}` is not an integer")));
        match key.trim() {
            "schema_version" => version = Some(num(value)?),
            "protocol" => header.protocol = value.to_string(),
            "gate" => header.gate = value.to_string(),
            "n_qubits" => header.n_qubits = num(value)? as usize,
            "n_per_scheme" => header.n_per_scheme = num(value)?,
            "seed" => header.seed = num(value)?,
            "trial" => header.trial = num(value)? as usize,
            "sampling" => {
                header.sampling = match value {
                    "poisson_independent" => SamplingMode::PoissonIndependent,
                    "multinomial_per_scheme" => SamplingMode::MultinomialPerScheme,
                    other => return Err(bad(format!("unknown sampling `{other}`"))),
                }
            }
            _ => {}
        }
    }
    match version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(bad(format!("unsupported schema_version {v}"))),
        None => return Err(bad("missing `# schema_version` header".into())),
    }
    if header.n_qubits == 0 {
        return Err(bad("missing `# n_qubits` header".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let r = row.map_err(|e| bad(e.to_string()))?;
        rows.push(CountRow {
            prep: r.prep_index,
            effect: r.effect_index,
            trials: r.t,
            events: r.k,
            fictitious: r.fictitious,
        });
    }
    let record = MeasurementRecord::new(rows, header.sampling)?;
    Ok(CountsFile { header, record })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub schema_version: u32,
    pub model: ProtocolModel,
    pub protocol: TomographyProtocol,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub schema_version: u32,
    pub source: String,
    pub calibration: Calibration,
}

/// Output of one reconstruction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub schema_version: u32,
    pub counts: String,
    pub gate: String,
    pub model: ProtocolModel,
    pub n_qubits: usize,
    pub n_per_scheme: u64,
    pub trial: usize,
    pub rank: usize,
    /// False when no rank passed the adequacy test.
    pub estimable: bool,
    /// Fidelity with the ideal gate, when a reference was supplied.
    pub fidelity: Option<f64>,
    pub trace_residual: f64,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub reports: Vec<AdequacyReport>,
    pub chi: ProcessChi,
    pub chi_pauli: ProcessChi,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn read_calibration(path: &Path) -> Result<Calibration> {
    let file: CalibrationFile = read_json(path)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{}: unsupported schema_version {}",
            path.display(),
            file.schema_version
        )));
    }
    Ok(file.calibration)
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Expands directories to the files inside them with the given extension, sorted.
pub fn expand_inputs(inputs: &[PathBuf], extension: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == extension))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.exists() {
            files.push(input.clone());
        } else {
            return Err(CliError::io(input, "no such file or directory"));
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_survive_a_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let file = CountsFile {
            header: CountsHeader {
                n_qubits: 1,
                sampling: SamplingMode::PoissonIndependent,
                protocol: "standard".into(),
                gate: "hadamard".into(),
                n_per_scheme: 10,
                seed: 7,
                trial: 3,
            },
            record: MeasurementRecord::new(
                vec![CountRow::real(0, 1, 10.0, 4.0), CountRow::real(2, 5, 10.0, 0.5)],
                SamplingMode::PoissonIndependent,
            )
            .unwrap(),
        };
        write_counts(&path, &file).unwrap();
        assert_eq!(read_counts(&path).unwrap(), file);
    }

    #[test]
    fn counts_without_header_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "prep_index,effect_index,t,k,fictitious\n0,0,1,1,false\n").unwrap();
        assert!(matches!(read_counts(&path), Err(CliError::Config(_))));
    }
}
