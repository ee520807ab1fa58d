//! Randomized property suites: monotonicity checks under sampled channels,
//! measurements, and one-way protocols, maximality scans against candidate
//! states, and the cyclic-filtering demonstration.
//!
//! Every trial derives its own seed from (master seed, trial index), so
//! trials are independent, may run concurrently, and the report is a
//! deterministic, schedule-independent function of its inputs. The stored
//! witness replays: re-evaluating its state and operation reproduces the
//! stored margin exactly.

mod report;

pub use report::{
    FilteringReport, MonotoneReport, SamplePolicy, ScanReport, ScanWitness, TrialOperation,
    Verdict, Witness,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constructions::{cyclic_filter, maximally_entangled_pure};
use crate::error::{Error, Result};
use crate::monotones::MonotoneHandle;
use crate::qstate::sample::{
    rng_from_seed, sample_local_channel_with_rng, sample_local_measurement_with_rng,
    sample_state_with_rng,
};
use crate::qstate::{
    derive_seed, DensityOperator, LocalChannel, LocalMeasurement, MeasurementOutcome, OutcomeShape,
};
use crate::schmidt::SchmidtVector;
use crate::tol;

// ---------------------------------------------------------------------------
// Trial sampling
// ---------------------------------------------------------------------------

fn sample_trial_state(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<DensityOperator> {
    let d: usize = dims.iter().product();
    let rank = rng.random_range(1..=d);
    sample_state_with_rng(dims, rank, rng)
}

/// Kraus counts uniform in `[1, d_n²]`, output dims uniform in `[1, d_n+2]`,
/// resampled until a complete family exists.
fn sample_trial_channel(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<LocalChannel> {
    let site = rng.random_range(1..=dims.len());
    let d_site = dims[site - 1];
    let (out_dim, n_kraus) = loop {
        let od = rng.random_range(1..=d_site + 2);
        let nk = rng.random_range(1..=d_site * d_site);
        if od * nk >= d_site {
            break (od, nk);
        }
    };
    sample_local_channel_with_rng(dims, site, out_dim, n_kraus, rng)
}

/// Total Kraus count uniform in `[1, d_n²]` partitioned into a uniform
/// number of outcomes, per-outcome output dims uniform in `[1, d_n+2]`,
/// resampled until a complete family exists.
fn sample_trial_measurement(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<LocalMeasurement> {
    let site = rng.random_range(1..=dims.len());
    let d_site = dims[site - 1];
    let shapes = loop {
        let total_terms = rng.random_range(1..=d_site * d_site);
        let n_outcomes = rng.random_range(1..=total_terms);
        // split total_terms into n_outcomes parts, each at least one
        let mut terms = vec![1usize; n_outcomes];
        for _ in 0..total_terms - n_outcomes {
            let k = rng.random_range(0..n_outcomes);
            terms[k] += 1;
        }
        let shapes: Vec<OutcomeShape> = terms
            .into_iter()
            .map(|t| OutcomeShape {
                out_dim: rng.random_range(1..=d_site + 2),
                terms: t,
            })
            .collect();
        let rows: usize = shapes.iter().map(|s| s.out_dim * s.terms).sum();
        if rows >= d_site {
            break shapes;
        }
    };
    sample_local_measurement_with_rng(dims, site, &shapes, rng)
}

/// Efficient site-1 measurement with a common output dimension, plus one
/// site-2 channel per outcome sharing a common output dimension, forming a
/// deterministic one-way protocol.
fn sample_trial_oneway(
    dims: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<(LocalMeasurement, Vec<LocalChannel>)> {
    if dims.len() < 2 {
        return Err(Error::InvalidArgument(
            "one-way protocols need at least 2 sites".into(),
        ));
    }
    let d1 = dims[0];
    let (out_dim, n_outcomes) = loop {
        let od = rng.random_range(1..=d1 + 2);
        let k = rng.random_range(1..=d1 * d1);
        if od * k >= d1 {
            break (od, k);
        }
    };
    let m = sample_local_measurement_with_rng(
        dims,
        1,
        &OutcomeShape::uniform(out_dim, 1, n_outcomes),
        rng,
    )?;
    let d2 = dims[1];
    let (out2, kraus2) = loop {
        let od = rng.random_range(1..=d2 + 2);
        let nk = rng.random_range(1..=d2 * d2);
        if od * nk >= d2 {
            break (od, nk);
        }
    };
    let conditioned = (0..n_outcomes)
        .map(|_| sample_local_channel_with_rng(dims, 2, out2, kraus2, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((m, conditioned))
}

/// Apply a one-way protocol deterministically:
/// `Λ'(ρ) = Σ_q Λ^{(q)}(K̃_q ρ K̃_q†)`.
fn apply_oneway(
    rho: &DensityOperator,
    m: &LocalMeasurement,
    conditioned: &[LocalChannel],
) -> Result<DensityOperator> {
    if conditioned.len() != m.n_outcomes() {
        return Err(Error::InvalidArgument(
            "one channel per measurement outcome required".into(),
        ));
    }
    let site0 = rho.factorization().site_index(m.site())?;
    let (left, right) = rho.factorization().dim_split(site0);
    let mut total: Option<(
        crate::qstate::HilbertFactorization,
        nalgebra::DMatrix<num_complex::Complex64>,
    )> = None;
    for (outcome, channel) in m.outcomes().iter().zip(conditioned) {
        // unnormalized branch: K̃ ρ K̃†, then the conditioned channel, which
        // is linear and can act on the unnormalized matrix
        let k = &outcome.kraus()[0];
        let embedded = crate::qstate::embed_site_operator(k, left, right);
        let branch = &embedded * rho.matrix() * embedded.adjoint();
        let fact = rho.factorization().replace_dim(site0, outcome.output_dim())?;
        let ch_site0 = fact.site_index(channel.site())?;
        let (ch_left, ch_right) = fact.dim_split(ch_site0);
        let out_fact = fact.replace_dim(ch_site0, channel.output_dim())?;
        let mut mapped = nalgebra::DMatrix::zeros(out_fact.total_dim(), out_fact.total_dim());
        for ck in channel.kraus() {
            let e = crate::qstate::embed_site_operator(ck, ch_left, ch_right);
            mapped += &e * &branch * e.adjoint();
        }
        total = Some(match total {
            None => (out_fact, mapped),
            Some((acc_fact, acc)) => {
                if acc_fact != out_fact {
                    return Err(Error::DimensionMismatch(
                        "one-way branches must share output dimensions".into(),
                    ));
                }
                (acc_fact, acc + mapped)
            }
        });
    }
    let (fact, acc) = total.expect("measurement has outcomes");
    DensityOperator::new(fact, acc)
}

// ---------------------------------------------------------------------------
// Condition suites
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum ConditionKind {
    Deterministic,
    OnAverage,
    WithCertainty,
    OneWay,
}

impl ConditionKind {
    fn label(self) -> &'static str {
        match self {
            ConditionKind::Deterministic => "deterministic",
            ConditionKind::OnAverage => "average",
            ConditionKind::WithCertainty => "certainty",
            ConditionKind::OneWay => "oneway",
        }
    }
}

enum TrialResult {
    Skipped,
    Margin {
        margin: f64,
        state: DensityOperator,
        operation: TrialOperation,
    },
}

fn evaluate_or_skip(handle: &MonotoneHandle, rho: &DensityOperator) -> Result<Option<f64>> {
    match handle.evaluate(rho) {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_unsupported() => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_trial(
    handle: &MonotoneHandle,
    dims: &[usize],
    kind: ConditionKind,
    trial_seed: u64,
) -> Result<TrialResult> {
    let mut rng = rng_from_seed(trial_seed);
    let rho = sample_trial_state(dims, &mut rng)?;
    let Some(before) = evaluate_or_skip(handle, &rho)? else {
        return Ok(TrialResult::Skipped);
    };
    match kind {
        ConditionKind::Deterministic => {
            let ch = sample_trial_channel(dims, &mut rng)?;
            let after_state = rho.apply_channel(&ch)?;
            let Some(after) = evaluate_or_skip(handle, &after_state)? else {
                return Ok(TrialResult::Skipped);
            };
            Ok(TrialResult::Margin {
                margin: after - before,
                state: rho,
                operation: TrialOperation::Channel { channel: ch },
            })
        }
        ConditionKind::OnAverage | ConditionKind::WithCertainty => {
            let m = sample_trial_measurement(dims, &mut rng)?;
            let outcomes = rho.measure(&m)?;
            let Some(margin) = outcome_margin(handle, &outcomes, before, kind)? else {
                return Ok(TrialResult::Skipped);
            };
            Ok(TrialResult::Margin {
                margin,
                state: rho,
                operation: TrialOperation::Measurement { measurement: m },
            })
        }
        ConditionKind::OneWay => {
            let (m, conditioned) = sample_trial_oneway(dims, &mut rng)?;
            let after_state = apply_oneway(&rho, &m, &conditioned)?;
            let Some(after) = evaluate_or_skip(handle, &after_state)? else {
                return Ok(TrialResult::Skipped);
            };
            Ok(TrialResult::Margin {
                margin: after - before,
                state: rho,
                operation: TrialOperation::OneWay {
                    measurement: m,
                    conditioned,
                },
            })
        }
    }
}

/// Margin of a measured trial: average or minimum of the outcome values
/// against the pre-measurement value, with sub-floor outcomes excluded.
/// `None` when any needed outcome value is unsupported (the trial is
/// skipped) or when every outcome fell below the floor.
fn outcome_margin(
    handle: &MonotoneHandle,
    outcomes: &[MeasurementOutcome],
    before: f64,
    kind: ConditionKind,
) -> Result<Option<f64>> {
    let mut average = 0.0;
    let mut minimum = f64::INFINITY;
    let mut any = false;
    for o in outcomes {
        let Some(state) = &o.state else { continue };
        let Some(v) = evaluate_or_skip(handle, state)? else {
            return Ok(None);
        };
        average += o.probability * v;
        minimum = minimum.min(v);
        any = true;
    }
    if !any {
        return Ok(None);
    }
    Ok(Some(match kind {
        ConditionKind::OnAverage => average - before,
        ConditionKind::WithCertainty => minimum - before,
        _ => unreachable!("outcome margins are for measurement suites"),
    }))
}

fn run_condition_suite(
    handle: &MonotoneHandle,
    dims: &[usize],
    trials: usize,
    seed: u64,
    kind: ConditionKind,
) -> Result<MonotoneReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial required".into()));
    }
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(handle, dims, kind, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut skipped = 0usize;
    let mut worst: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        match r {
            TrialResult::Skipped => skipped += 1,
            TrialResult::Margin { margin, .. } => {
                if worst.is_none_or(|(_, w)| *margin > w) {
                    worst = Some((i, *margin));
                }
            }
        }
    }
    let evaluated = trials - skipped;
    let advisory = handle.is_seesaw_backed();
    let threshold = if advisory {
        tol::SEESAW_ALLOWANCE
    } else {
        tol::VIOLATION_THRESHOLD
    };

    let verdict = if skipped * 2 > trials {
        Verdict::Inconclusive
    } else {
        match worst {
            Some((_, w)) if w > threshold && !advisory => Verdict::Fail,
            _ => Verdict::Pass,
        }
    };
    let advisory_margin_exceeded = advisory && worst.is_some_and(|(_, w)| w > threshold);

    let witness = worst.map(|(i, margin)| {
        let TrialResult::Margin {
            state, operation, ..
        } = &results[i]
        else {
            unreachable!("worst index points at a margin trial");
        };
        Witness {
            trial: i,
            trial_seed: derive_seed(seed, i as u64),
            margin,
            state: state.clone(),
            operation: operation.clone(),
        }
    });

    Ok(MonotoneReport {
        monotone: handle.name().to_string(),
        condition: kind.label().to_string(),
        dims: dims.to_vec(),
        trials,
        seed,
        violation_threshold: threshold,
        advisory,
        advisory_margin_exceeded,
        evaluated,
        skipped,
        worst_margin: worst.map(|(_, w)| w),
        verdict,
        witness,
    })
}

/// Nonincrease under sampled deterministic local channels:
/// `C(Λ(ρ)) ≤ C(ρ)`.
pub fn check_deterministic(
    handle: &MonotoneHandle,
    dims: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    run_condition_suite(handle, dims, trials, seed, ConditionKind::Deterministic)
}

/// Nonincrease on average under sampled local measurements:
/// `Σ_q p_q C(ρ_q) ≤ C(ρ)`.
pub fn check_on_average(
    handle: &MonotoneHandle,
    dims: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    run_condition_suite(handle, dims, trials, seed, ConditionKind::OnAverage)
}

/// No increase with probability one under sampled local measurements:
/// `min_q C(ρ_q) ≤ C(ρ)`.
pub fn check_with_certainty(
    handle: &MonotoneHandle,
    dims: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    run_condition_suite(handle, dims, trials, seed, ConditionKind::WithCertainty)
}

/// Nonincrease under sampled one-way protocols: a site-1 efficient
/// measurement followed by an outcome-conditioned site-2 channel, applied
/// deterministically.
pub fn check_oneway_locc(
    handle: &MonotoneHandle,
    dims: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    run_condition_suite(handle, dims, trials, seed, ConditionKind::OneWay)
}

/// Re-evaluate a stored witness against a handle, reproducing its margin.
pub fn replay_witness(report: &MonotoneReport, handle: &MonotoneHandle) -> Result<f64> {
    let witness = report
        .witness
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("report has no witness".into()))?;
    let before = handle.evaluate(&witness.state)?;
    match &witness.operation {
        TrialOperation::Channel { channel } => {
            let after = handle.evaluate(&witness.state.apply_channel(channel)?)?;
            Ok(after - before)
        }
        TrialOperation::Measurement { measurement } => {
            let outcomes = witness.state.measure(measurement)?;
            let kind = match report.condition.as_str() {
                "average" => ConditionKind::OnAverage,
                "certainty" => ConditionKind::WithCertainty,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "measurement witness on condition {other:?}"
                    )))
                }
            };
            outcome_margin(handle, &outcomes, before, kind)?
                .ok_or_else(|| Error::InvalidArgument("witness trial skips on replay".into()))
        }
        TrialOperation::OneWay {
            measurement,
            conditioned,
        } => {
            let after_state = apply_oneway(&witness.state, measurement, conditioned)?;
            let after = handle.evaluate(&after_state)?;
            Ok(after - before)
        }
    }
}

// ---------------------------------------------------------------------------
// Maximality scans
// ---------------------------------------------------------------------------

/// Search sampled states on the candidate's factorization for a monotone
/// value exceeding the candidate's by more than the violation threshold.
pub fn maximality_scan(
    handle: &MonotoneHandle,
    candidate: &DensityOperator,
    trials: usize,
    seed: u64,
    policy: SamplePolicy,
) -> Result<ScanReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial required".into()));
    }
    let candidate_value = handle.evaluate(candidate)?;
    let dims = candidate.dims().to_vec();

    let values: Vec<Option<(f64, DensityOperator)>> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Option<(f64, DensityOperator)>> {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let rho = match policy {
                SamplePolicy::MixedUniformRank => sample_trial_state(&dims, &mut rng)?,
                SamplePolicy::PureOnly => sample_state_with_rng(&dims, 1, &mut rng)?,
            };
            Ok(evaluate_or_skip(handle, &rho)?.map(|v| (v, rho)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut skipped = 0usize;
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        match v {
            None => skipped += 1,
            Some((value, _)) => {
                if best.is_none_or(|(_, b)| *value > b) {
                    best = Some((i, *value));
                }
            }
        }
    }
    let threshold = tol::VIOLATION_THRESHOLD;
    let exceeded = best.is_some_and(|(_, v)| v > candidate_value + threshold);
    let witness = if exceeded {
        best.map(|(i, value)| {
            let state = values[i].as_ref().expect("best index is evaluated").1.clone();
            ScanWitness {
                trial: i,
                trial_seed: derive_seed(seed, i as u64),
                value,
                state,
            }
        })
    } else {
        None
    };

    Ok(ScanReport {
        monotone: handle.name().to_string(),
        dims,
        trials,
        seed,
        policy,
        threshold,
        candidate_value,
        max_sampled: best.map(|(_, v)| v),
        evaluated: trials - skipped,
        skipped,
        exceeded,
        witness,
    })
}

// ---------------------------------------------------------------------------
// Filtering demonstration
// ---------------------------------------------------------------------------

/// Apply the cyclic filter to the maximally entangled state of dimension
/// `d1` and evaluate the handle on the input and on every outcome. For
/// Schmidt-functional handles all outcome values must agree, since every
/// outcome has Schmidt vector `lambda`.
pub fn filtering_demo(
    handle: &MonotoneHandle,
    d1: usize,
    lambda: &SchmidtVector,
) -> Result<FilteringReport> {
    let rho = maximally_entangled_pure(d1)?.to_density();
    let base_value = handle.evaluate(&rho)?;
    let m = cyclic_filter(d1, lambda)?;
    let outcomes = rho.measure(&m)?;

    let mut probabilities = Vec::with_capacity(outcomes.len());
    let mut values = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        probabilities.push(o.probability);
        match &o.state {
            None => values.push(None),
            Some(state) => values.push(evaluate_or_skip(handle, state)?),
        }
    }
    let evaluated: Vec<f64> = values.iter().flatten().copied().collect();
    let min_margin = evaluated
        .iter()
        .copied()
        .reduce(f64::min)
        .map(|m| m - base_value);
    let value_spread = if handle.is_schmidt_functional() && !evaluated.is_empty() {
        let max = evaluated.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = evaluated.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = max - min;
        if spread > tol::COEFF_EQUALITY {
            return Err(Error::InvalidState(format!(
                "outcome values of Schmidt functional {} spread by {spread:.3e}",
                handle.name()
            )));
        }
        Some(spread)
    } else {
        None
    };

    Ok(FilteringReport {
        monotone: handle.name().to_string(),
        d1,
        lambda: lambda.clone(),
        base_value,
        outcome_probabilities: probabilities,
        outcome_values: values,
        min_margin,
        value_spread,
    })
}
