//! Machine-readable reports for the randomized suites. Reports are plain
//! data: a deterministic function of (monotone, dims, trials, seed), safe to
//! diff byte for byte across runs.

use serde::{Deserialize, Serialize};

use crate::qstate::{DensityOperator, LocalChannel, LocalMeasurement};
use crate::schmidt::SchmidtVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// The operation of a stored witness trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrialOperation {
    Channel {
        channel: LocalChannel,
    },
    Measurement {
        measurement: LocalMeasurement,
    },
    /// Site-1 efficient measurement with an outcome-conditioned site-2
    /// channel per outcome.
    OneWay {
        measurement: LocalMeasurement,
        conditioned: Vec<LocalChannel>,
    },
}

/// The worst-margin trial of a suite, stored in full so it replays exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub trial_seed: u64,
    pub margin: f64,
    pub state: DensityOperator,
    pub operation: TrialOperation,
}

/// Result record of one monotonicity suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: String,
    /// "deterministic", "average", "certainty", or "oneway".
    pub condition: String,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub violation_threshold: f64,
    /// Margins of see-saw-backed evaluators are advisory: the evaluator is a
    /// lower bound, so spurious positive margins reflect optimizer slack on
    /// the pre-operation state rather than a violated inequality. Advisory
    /// suites never hard-fail.
    pub advisory: bool,
    /// Set when an advisory suite saw a margin above its allowance.
    pub advisory_margin_exceeded: bool,
    pub evaluated: usize,
    pub skipped: usize,
    pub worst_margin: Option<f64>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

impl MonotoneReport {
    pub fn csv_header() -> &'static str {
        "monotone,condition,dims,trials,seed,evaluated,skipped,worst_margin,verdict"
    }

    pub fn csv_row(&self) -> String {
        let dims = self
            .dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x");
        let worst = self
            .worst_margin
            .map(|m| format!("{m:e}"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:?}",
            self.monotone,
            self.condition,
            dims,
            self.trials,
            self.seed,
            self.evaluated,
            self.skipped,
            worst,
            self.verdict
        )
    }
}

/// Sampling policy of a maximality scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePolicy {
    /// Ranks drawn uniformly from `1..=d`.
    MixedUniformRank,
    /// Rank-one states only.
    PureOnly,
}

/// A sampled state beating the candidate in a maximality scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanWitness {
    pub trial: usize,
    pub trial_seed: u64,
    pub value: f64,
    pub state: DensityOperator,
}

/// Result record of a maximality scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub monotone: String,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub policy: SamplePolicy,
    pub threshold: f64,
    pub candidate_value: f64,
    pub max_sampled: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
    /// True when some sampled state exceeded the candidate by more than the
    /// threshold; the witness then holds the highest-value offender.
    pub exceeded: bool,
    pub witness: Option<ScanWitness>,
}

/// Result record of a filtering demonstration: the monotone on the
/// maximally entangled state versus on every post-measurement outcome of the
/// cyclic filter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilteringReport {
    pub monotone: String,
    pub d1: usize,
    pub lambda: SchmidtVector,
    pub base_value: f64,
    pub outcome_probabilities: Vec<f64>,
    /// One value per outcome; null for outcomes the monotone cannot evaluate.
    pub outcome_values: Vec<Option<f64>>,
    /// `min_q C(ρ_q) - C(ρ)` over evaluated outcomes. A positive value is a
    /// certainty-increase demonstration.
    pub min_margin: Option<f64>,
    /// Max minus min outcome value, reported for Schmidt-functional
    /// monotones whose outcome values must agree.
    pub value_spread: Option<f64>,
}
