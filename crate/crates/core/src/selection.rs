//! Pearson χ² adequacy test and the rank ladder.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::channel::ProcessChi;
use crate::error::{Error, Result};
use crate::mle::{reconstruct_at_rank, Design, Reconstruction, SolverOptions};
use crate::protocol::TomographyProtocol;
use crate::record::{MeasurementRecord, SamplingMode};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Bins with expected count below this are merged into a sibling of the same scheme.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdequacyReport {
    pub rank: usize,
    pub chi2_stat: f64,
    /// `ν = m − ν_P − ν_K`; non-positive means untestable.
    pub dof: i64,
    pub p_value: f64,
    pub significant: bool,
    /// Bins entering the test after merging.
    pub m: usize,
    pub nu_p: i64,
    pub nu_k: i64,
    /// `ν_K` under the alternative reading that counts measurement bases only.
    pub nu_k_bases: i64,
    pub merged_rows: usize,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankSelection {
    pub reports: Vec<AdequacyReport>,
    pub chosen_rank: usize,
    /// False when no rank passed and the full-rank estimate was returned.
    pub estimable: bool,
    pub reconstruction: Reconstruction,
}

impl RankSelection {
    pub fn chi(&self) -> &ProcessChi {
        &self.reconstruction.chi
    }
}

/// Number of real parameters of a rank-`r` trace-normalized χ.
pub fn parameter_count(s: usize, r: usize) -> i64 {
    let (s, r) = (s as i64, r as i64);
    2 * s * s * r - r * r - s * s
}

pub fn constraint_count(rec: &MeasurementRecord, proto: &TomographyProtocol) -> i64 {
    match rec.sampling {
        SamplingMode::PoissonIndependent => 1,
        SamplingMode::MultinomialPerScheme => schemes_present(rec, proto) as i64,
    }
}

fn schemes_present(rec: &MeasurementRecord, proto: &TomographyProtocol) -> usize {
    let mut seen: Vec<usize> = rec.real_rows().map(|r| proto.scheme_of(r.prep, r.effect)).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

pub fn degrees_of_freedom(m: usize, s: usize, r: usize, nu_k: usize) -> Result<i64> {
    let nu = m as i64 - parameter_count(s, r) - nu_k as i64;
    if nu <= 0 {
        return Err(Error::Untestable(nu));
    }
    Ok(nu)
}

/// `P(X > stat)` for `X ~ χ²(ν)`.
pub fn chi2_survival(stat: f64, nu: u64) -> f64 {
    if nu == 0 {
        return f64::NAN;
    }
    if stat <= 0.0 {
        return 1.0;
    }
    if stat.is_infinite() {
        return 0.0;
    }
    gamma_ur(nu as f64 / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// Observed and expected counts of the real rows.
fn observed_expected(
    rec: &MeasurementRecord,
    proto: &TomographyProtocol,
    chi_hat: &ProcessChi,
) -> Result<Vec<(usize, f64, f64)>> {
    if chi_hat.dim() != proto.dim() {
        return Err(Error::DimensionMismatch {
            expected: proto.dim(),
            found: chi_hat.dim(),
        });
    }
    let real = MeasurementRecord {
        rows: rec.real_rows().copied().collect(),
        sampling: rec.sampling,
    };
    let probs = Design::new(&real, proto)?.probabilities(chi_hat.matrix());
    Ok(real
        .rows
        .iter()
        .zip(probs)
        .map(|(r, p)| (proto.scheme_of(r.prep, r.effect), r.events, r.trials * p))
        .collect())
}

/// `Σ (O − E)² / E` over the real rows, without merging.
pub fn chi2_statistic(rec: &MeasurementRecord, proto: &TomographyProtocol, chi_hat: &ProcessChi) -> Result<f64> {
    let rows = observed_expected(rec, proto, chi_hat)?;
    let mut total = 0.0;
    for (idx, &(_, o, e)) in rows.iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::ZeroExpected(idx));
        }
        total += (o - e) * (o - e) / e;
    }
    Ok(total)
}

/// Merges low-expectation bins within each scheme, smallest first.
/// Returns `(O, E)` bins and the number of rows absorbed.
pub fn merged_bins(rows: &[(usize, f64, f64)]) -> (Vec<(f64, f64)>, usize) {
    let mut schemes: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for &(scheme, o, e) in rows {
        schemes.entry(scheme).or_default().push((o, e));
    }
    let mut bins = Vec::with_capacity(rows.len());
    let mut merged = 0;
    for (_, mut group) in schemes {
        loop {
            group.sort_by(|a, b| a.1.total_cmp(&b.1));
            if group.len() < 2 || group[0].1 >= MIN_EXPECTED {
                break;
            }
            let (o, e) = group.remove(0);
            group[0].0 += o;
            group[0].1 += e;
            merged += 1;
        }
        bins.extend(group);
    }
    (bins, merged)
}

/// χ² adequacy of `chi_hat` at rank `rank` after merging sparse bins.
pub fn adequacy(
    rec: &MeasurementRecord,
    proto: &TomographyProtocol,
    chi_hat: &ProcessChi,
    rank: usize,
    alpha: f64,
) -> Result<AdequacyReport> {
    check_alpha(alpha)?;
    let rows = observed_expected(rec, proto, chi_hat)?;
    let (bins, merged_rows) = merged_bins(&rows);
    let mut stat = 0.0;
    for (idx, &(o, e)) in bins.iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::ZeroExpected(idx));
        }
        stat += (o - e) * (o - e) / e;
    }
    let nu_p = parameter_count(proto.dim(), rank);
    let nu_k = constraint_count(rec, proto);
    let nu_k_bases = match rec.sampling {
        SamplingMode::PoissonIndependent => 1,
        SamplingMode::MultinomialPerScheme => proto.group_count() as i64,
    };
    let dof = bins.len() as i64 - nu_p - nu_k;
    let p_value = if dof > 0 { chi2_survival(stat, dof as u64) } else { 0.0 };
    Ok(AdequacyReport {
        rank,
        chi2_stat: stat,
        dof,
        p_value,
        significant: dof > 0 && p_value >= alpha,
        m: bins.len(),
        nu_p,
        nu_k,
        nu_k_bases,
        merged_rows,
        log_likelihood: f64::NAN,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Reconstruction at a fixed rank together with its adequacy report.
pub fn assess_rank(
    rec: &MeasurementRecord,
    proto: &TomographyProtocol,
    rank: usize,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<(AdequacyReport, Reconstruction)> {
    let recon = reconstruct_at_rank(rec, proto, rank, opts)?;
    let mut report = adequacy(rec, proto, &recon.chi, rank, alpha)?;
    report.log_likelihood = recon.log_likelihood;
    Ok((report, recon))
}

/// Walks `r = 1, 2, …, s²` and stops at the first rank whose fit is adequate.
pub fn select_rank(
    rec: &MeasurementRecord,
    proto: &TomographyProtocol,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<RankSelection> {
    check_alpha(alpha)?;
    let max_rank = proto.dim() * proto.dim();
    let mut reports = Vec::new();
    let mut last = None;
    for rank in 1..=max_rank {
        let (report, recon) = assess_rank(rec, proto, rank, alpha, opts)?;
        let hit = report.significant;
        reports.push(report);
        if hit {
            return Ok(RankSelection {
                reports,
                chosen_rank: rank,
                estimable: true,
                reconstruction: recon,
            });
        }
        last = Some(recon);
    }
    let reconstruction = last.expect("at least one rank");
    Ok(RankSelection {
        reports,
        chosen_rank: max_rank,
        estimable: false,
        reconstruction,
    })
}
