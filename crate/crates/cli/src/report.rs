//! Aggregation of reconstruction results into plot-ready tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qpt_core::calibration::ProtocolModel;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{CliError, Result};
use crate::files::{create_dir, expand_inputs, read_json, write_json, ReconstructionResult};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "structured" | "json" => Ok(Self::Structured),
            other => Err(format!("unknown format `{other}`, expected csv or structured")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub model: String,
    pub n_per_scheme: u64,
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub model: String,
    pub n_per_scheme: u64,
    pub results: usize,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean_infidelity: f64,
    pub not_estimable: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub model: String,
    pub n_per_scheme: u64,
    pub rank: usize,
    /// Results whose selected rank is this one.
    pub chosen: usize,
    /// Results whose ladder reached this rank.
    pub tested: usize,
    pub mean_chi2: f64,
    pub mean_p_value: f64,
    pub dof: i64,
}

/// Mean Pauli-basis χ over a group of results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSummary {
    pub model: String,
    pub n_per_scheme: u64,
    pub results: usize,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub histogram: Vec<HistogramRow>,
    pub fidelity_vs_n: Vec<FidelityRow>,
    pub rank_ladder: Vec<LadderRow>,
    pub chi_pauli: Vec<ChiSummary>,
}

fn model_order(m: ProtocolModel) -> usize {
    ProtocolModel::ALL.iter().position(|&x| x == m).unwrap_or(usize::MAX)
}

pub fn build_report(results: &[ReconstructionResult]) -> Result<Report> {
    if results.is_empty() {
        return Err(CliError::Config("no reconstruction results to report".into()));
    }
    let mut groups: BTreeMap<(usize, u64), Vec<&ReconstructionResult>> = BTreeMap::new();
    for r in results {
        groups.entry((model_order(r.model), r.n_per_scheme)).or_default().push(r);
    }
    let mut report = Report::default();
    for ((_, n), group) in groups {
        let model = group[0].model.name().to_string();
        let fidelities: Vec<f64> = group.iter().filter_map(|r| r.fidelity).collect();
        if !fidelities.is_empty() {
            let infidelities: Vec<f64> = fidelities.iter().map(|f| 1.0 - f).collect();
            report.histogram.extend(histogram(&infidelities).into_iter().map(|(lo, hi, count)| HistogramRow {
                model: model.clone(),
                n_per_scheme: n,
                bin_low: lo,
                bin_high: hi,
                count,
            }));
            let mean = fidelities.iter().sum::<f64>() / fidelities.len() as f64;
            let mut data = Data::new(fidelities.clone());
            report.fidelity_vs_n.push(FidelityRow {
                model: model.clone(),
                n_per_scheme: n,
                results: fidelities.len(),
                mean,
                q1: data.lower_quartile(),
                q3: data.upper_quartile(),
                mean_infidelity: 1.0 - mean,
                not_estimable: group.iter().filter(|r| !r.estimable).count(),
            });
        }
        report.rank_ladder.extend(ladder(&model, n, &group));
        report.chi_pauli.push(mean_chi(&model, n, &group));
    }
    Ok(report)
}

/// `HISTOGRAM_BINS` equal bins over `[min, max]`; the last bin is closed.
fn histogram(values: &[f64]) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &v in values {
        let bin = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
        .collect()
}

fn ladder(model: &str, n: u64, group: &[&ReconstructionResult]) -> Vec<LadderRow> {
    let max_rank = group
        .iter()
        .flat_map(|r| r.reports.iter().map(|rep| rep.rank))
        .max()
        .unwrap_or(0);
    (1..=max_rank)
        .map(|rank| {
            let reports: Vec<_> = group
                .iter()
                .flat_map(|r| r.reports.iter().filter(move |rep| rep.rank == rank))
                .collect();
            let tested = reports.len();
            let mean = |f: &dyn Fn(&qpt_core::selection::AdequacyReport) -> f64| {
                if tested == 0 {
                    f64::NAN
                } else {
                    reports.iter().map(|r| f(r)).sum::<f64>() / tested as f64
                }
            };
            LadderRow {
                model: model.to_string(),
                n_per_scheme: n,
                rank,
                chosen: group.iter().filter(|r| r.estimable && r.rank == rank).count(),
                tested,
                mean_chi2: mean(&|r| r.chi2_stat),
                mean_p_value: mean(&|r| r.p_value),
                dof: reports.first().map_or(0, |r| r.dof),
            }
        })
        .collect()
}

fn mean_chi(model: &str, n: u64, group: &[&ReconstructionResult]) -> ChiSummary {
    let d = group[0].chi_pauli.matrix().nrows();
    let mut real = vec![vec![0.0; d]; d];
    let mut imag = vec![vec![0.0; d]; d];
    let scale = 1.0 / group.len() as f64;
    for r in group {
        let m = r.chi_pauli.matrix();
        for i in 0..d {
            for j in 0..d {
                real[i][j] += m[(i, j)].re * scale;
                imag[i][j] += m[(i, j)].im * scale;
            }
        }
    }
    ChiSummary {
        model: model.to_string(),
        n_per_scheme: n,
        results: group.len(),
        real,
        imag,
    }
}

pub fn load_results(inputs: &[PathBuf]) -> Result<Vec<ReconstructionResult>> {
    let files = expand_inputs(inputs, "json")?;
    files.iter().map(|p| read_json(p)).collect()
}

/// Writes the report into directory `out`; returns the files written.
pub fn write_report(report: &Report, format: ReportFormat, out: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out)?;
    match format {
        ReportFormat::Structured => {
            let path = out.join("report.json");
            write_json(&path, report)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let mut written = vec![
                write_rows(&out.join("infidelity_histogram.csv"), &report.histogram)?,
                write_rows(&out.join("fidelity_vs_n.csv"), &report.fidelity_vs_n)?,
                write_rows(&out.join("rank_ladder.csv"), &report.rank_ladder)?,
            ];
            for chi in &report.chi_pauli {
                let stem = format!("chi_pauli_{}_n{}", chi.model, chi.n_per_scheme);
                written.push(write_grid(&out.join(format!("{stem}_real.csv")), &chi.real)?);
                written.push(write_grid(&out.join(format!("{stem}_imag.csv")), &chi.imag)?);
            }
            Ok(written)
        }
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_grid(path: &Path, grid: &[Vec<f64>]) -> Result<PathBuf> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    for row in grid {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}
