use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How event counts were drawn; determines the number of constraints between counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Every row is an independent Poisson draw.
    PoissonIndependent,
    /// Each (preparation, basis) scheme is a multinomial draw over its outcomes.
    #[default]
    MultinomialPerScheme,
}

/// One row of a measurement record.
///
/// For real rows `prep` and `effect` index the protocol's preparations and
/// effects. For fictitious rows `effect` indexes the protocol's normalization
/// projectors and `prep` is unused.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub prep: usize,
    pub effect: usize,
    /// Repetitions `t`.
    pub trials: f64,
    /// Registered events `k`; real-valued counts are accepted.
    pub events: f64,
    pub fictitious: bool,
}

impl CountRow {
    pub fn real(prep: usize, effect: usize, trials: f64, events: f64) -> Self {
        Self {
            prep,
            effect,
            trials,
            events,
            fictitious: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub rows: Vec<CountRow>,
    pub sampling: SamplingMode,
}

impl MeasurementRecord {
    pub fn new(rows: Vec<CountRow>, sampling: SamplingMode) -> Result<Self> {
        let rec = Self { rows, sampling };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        for (n, row) in self.rows.iter().enumerate() {
            if !(row.trials > 0.0) {
                return Err(Error::Misaligned(format!("row {n}: repetitions must be positive")));
            }
            if !(row.events >= 0.0) {
                return Err(Error::Misaligned(format!("row {n}: negative event count")));
            }
            if row.fictitious && row.events != row.trials {
                return Err(Error::Misaligned(format!(
                    "row {n}: fictitious rows must have k = t"
                )));
            }
        }
        Ok(())
    }

    pub fn real_rows(&self) -> impl Iterator<Item = &CountRow> {
        self.rows.iter().filter(|r| !r.fictitious)
    }

    pub fn has_fictitious(&self) -> bool {
        self.rows.iter().any(|r| r.fictitious)
    }

    pub fn max_trials(&self) -> f64 {
        self.real_rows().map(|r| r.trials).fold(0.0, f64::max)
    }

    /// Copy with `extra` rows appended.
    pub fn with_rows(&self, extra: impl IntoIterator<Item = CountRow>) -> Self {
        let mut rows = self.rows.clone();
        rows.extend(extra);
        Self {
            rows,
            sampling: self.sampling,
        }
    }

    /// Copy with every count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| CountRow {
                    trials: r.trials * factor,
                    events: r.events * factor,
                    ..*r
                })
                .collect(),
            sampling: self.sampling,
        }
    }
}
