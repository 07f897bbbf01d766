//! Linkage quality against ground truth, threshold sweeps and step timings.

use std::fmt;
use std::time::Duration;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::ingest::GroundTruth;
use crate::matcher::{MatchParams, MatchSet, Matcher};
use crate::signatures::SignatureDatabase;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Precision and recall of `matches` by record-id pair. With no matches,
/// precision is 1 when the truth is empty too and 0 otherwise.
pub fn precision_recall(matches: &MatchSet, truth: &GroundTruth) -> Metrics {
    let tp = matches
        .pairs()
        .iter()
        .filter(|p| truth.contains(&p.id_a, &p.id_b))
        .count();
    let precision = if matches.is_empty() {
        if truth.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / matches.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        tp as f64 / truth.len() as f64
    };
    Metrics {
        precision,
        recall,
        true_positives: tp,
        false_positives: matches.len() - tp,
        false_negatives: truth.len() - tp,
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "precision = {:.6}", self.precision)?;
        writeln!(f, "recall = {:.6}", self.recall)?;
        writeln!(f, "true_positives = {}", self.true_positives)?;
        writeln!(f, "false_positives = {}", self.false_positives)?;
        writeln!(f, "false_negatives = {}", self.false_negatives)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Attribute and relational stages.
    Full,
    /// Attribute stage only.
    AttributeOnly,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::AttributeOnly => "attribute_only",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s_t: f64,
    pub mode: Mode,
    pub matches: usize,
    pub metrics: Metrics,
}

/// Default thresholds: 0.5 to 1.0 in steps of 0.1.
pub fn default_thresholds() -> Vec<f64> {
    (5..=10).map(|i| i as f64 / 10.0).collect()
}

/// Matches at every threshold in both modes, reusing one candidate set.
pub fn threshold_sweep(
    s_a: &SignatureDatabase,
    s_b: &SignatureDatabase,
    cfg: &Config,
    truth: &GroundTruth,
    thresholds: &[f64],
) -> Result<Vec<SweepRow>> {
    if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidParameter(format!(
            "threshold {t} outside [0, 1]"
        )));
    }
    if thresholds.is_empty() {
        return Ok(Vec::new());
    }
    let matcher = Matcher::new(s_a, s_b)?;
    let mut rows = Vec::with_capacity(thresholds.len() * 2);
    for &s_t in thresholds {
        for mode in [Mode::Full, Mode::AttributeOnly] {
            let params = MatchParams {
                beta: cfg.beta,
                s_t,
                attribute_only: mode == Mode::AttributeOnly,
            };
            let mut m = matcher.classify(params);
            if cfg.one_to_one {
                m = m.one_to_one();
            }
            rows.push(SweepRow {
                s_t,
                mode,
                matches: m.len(),
                metrics: precision_recall(&m, truth),
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep<W: std::io::Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    let io = |source| Error::Io {
        path: "sweep".into(),
        source,
    };
    writeln!(w, "s_t,mode,matches,precision,recall,true_positives").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{:.2},{},{},{:.6},{:.6},{}",
            r.s_t,
            r.mode,
            r.matches,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.true_positives
        )
        .map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTiming {
    pub label: String,
    pub duration: Duration,
    /// The step's result was reused instead of recomputed.
    pub cached: bool,
}

/// Wall-clock duration per pipeline step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuntimeReport {
    pub steps: Vec<StepTiming>,
}

impl RuntimeReport {
    pub fn record(&mut self, label: impl Into<String>, duration: Duration) {
        self.steps.push(StepTiming {
            label: label.into(),
            duration,
            cached: false,
        });
    }

    pub fn record_cached(&mut self, label: impl Into<String>) {
        self.steps.push(StepTiming {
            label: label.into(),
            duration: Duration::ZERO,
            cached: true,
        });
    }

    /// Runs `f` and records how long it took.
    pub fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.record(label, start.elapsed());
        out
    }

    pub fn total(&self) -> Duration {
        self.steps.iter().map(|s| s.duration).sum()
    }
}

impl fmt::Display for RuntimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            write!(f, "{}_seconds = {:.3}", s.label, s.duration.as_secs_f64())?;
            if s.cached {
                write!(f, "  # cached")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "total_seconds = {:.3}", self.total().as_secs_f64())
    }
}
