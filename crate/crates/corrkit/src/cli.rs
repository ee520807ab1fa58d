//! Command-line surface: constructors, monotone evaluation, randomized
//! suites, scans, see-saw runs, and reduction checks as reproducible,
//! scriptable commands.
//!
//! Exit codes: 0 success / suite passed; 1 violation or failing check;
//! 2 invalid input file or parameters; 3 unsupported monotone regime;
//! 4 inconclusive (skip-dominated) suite. Stochastic commands require a
//! seed, either `--seed` or the `CORRKIT_SEED` environment variable, and
//! identical configurations produce byte-identical reports.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::constructions::{
    build_mps, build_npartite_max, check_reductions, ghz_state, maximally_entangled_pure,
    pure_from_schmidt, MpsSpec,
};
use crate::error::{Error, Result};
use crate::harness::{
    check_deterministic, check_on_average, check_oneway_locc, check_with_certainty,
    filtering_demo, maximality_scan, SamplePolicy, Verdict,
};
use crate::monotones::{bell_value, find_monotone, BellFunctional, SeesawOptions};
use crate::qstate::{load_state, save_state};
use crate::schmidt::SchmidtVector;

#[derive(Parser)]
#[command(
    name = "corrkit",
    version,
    about = "Correlation-monotone toolkit: states, local operations, measures, and randomized monotonicity suites"
)]
struct Cli {
    /// Cap the number of worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate monotones on a state file, one row per monotone.
    Eval {
        /// State JSON file.
        state: PathBuf,
        /// Monotone names, e.g. I, ef, pairwise:1,2, entropy:q=1, bell:CHSH.
        #[arg(required = true)]
        monotones: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a named state and write it as state JSON.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Run a randomized monotonicity suite (or the filtering demonstration).
    Check(CheckArgs),
    /// Scan sampled states for values exceeding a candidate's.
    Scan {
        /// Monotone name.
        monotone: String,
        /// Candidate state JSON file.
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Sample rank-one states only.
        #[arg(long)]
        pure: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// See-saw lower bound on a Bell functional (CHSH unless --functional).
    Bell {
        /// State JSON file.
        state: PathBuf,
        /// Functional JSON file; the built-in CHSH when omitted.
        #[arg(long)]
        functional: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check which small-subset reductions of a state are maximally mixed.
    Reductions {
        /// State JSON file.
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConstructKind {
    /// Member of the block-structured maximally entangled family.
    Mps {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long = "Q")]
        blocks: usize,
        /// Comma-separated block probabilities summing to one.
        #[arg(long)]
        p: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// N-partite maximally correlated state (last dim >= product of rest).
    #[command(name = "npartite_max")]
    NpartiteMax {
        /// Comma-separated local dimensions.
        #[arg(long)]
        dims: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pure maximally entangled state on [d, d].
    Bell {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// (|0..0> + |1..1>)/sqrt(2) on the given number of qubits.
    Ghz {
        #[arg(long, default_value_t = 3)]
        sites: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pure bipartite state with the given Schmidt coefficients.
    #[command(name = "pure_schmidt")]
    PureSchmidt {
        /// Comma-separated coefficients summing to one.
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Monotonicity property: 1 (deterministic local channels),
    /// 2 (on average under local measurements), 3 (with probability one),
    /// or "oneway" (measurement plus outcome-conditioned channel).
    condition: String,
    /// Monotone name.
    monotone: String,
    /// Comma-separated local dimensions.
    #[arg(long, required_unless_present = "demo_filter")]
    dims: Option<String>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Run the cyclic-filter demonstration instead of random trials
    /// (condition 3 only).
    #[arg(long)]
    demo_filter: bool,
    /// Filter dimension for --demo-filter.
    #[arg(long)]
    d1: Option<usize>,
    /// Comma-separated filter coefficients for --demo-filter.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // ignore failure: the pool can only be sized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    }
}

fn classify_error(e: &Error) -> i32 {
    match e {
        Error::UnsupportedRegime(_) => 3,
        _ => 2,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Eval {
            state,
            monotones,
            out,
        } => cmd_eval(&state, &monotones, out.as_deref()),
        Command::Construct { kind } => cmd_construct(kind),
        Command::Check(args) => cmd_check(args),
        Command::Scan {
            monotone,
            candidate,
            trials,
            seed,
            pure,
            out,
        } => cmd_scan(&monotone, &candidate, trials, seed, pure, out.as_deref()),
        Command::Bell {
            state,
            functional,
            restarts,
            iters,
            tol,
            seed,
            out,
        } => cmd_bell(
            &state,
            functional.as_deref(),
            restarts,
            iters,
            tol,
            seed,
            out.as_deref(),
        ),
        Command::Reductions { state, out } => cmd_reductions(&state, out.as_deref()),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("CORRKIT_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad CORRKIT_SEED {v:?}"))),
        Err(_) => Err(Error::InvalidArgument(
            "stochastic commands need --seed or CORRKIT_SEED".into(),
        )),
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad integer {p:?}")))
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {p:?}")))
        })
        .collect()
}

/// Probability vectors accepted from the command line: entries must sum to
/// one within 1e-9 and are renormalized exactly before use.
fn parse_prob_list(s: &str) -> Result<Vec<f64>> {
    let mut v = parse_f64_list(s)?;
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidArgument(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    v.iter_mut().for_each(|x| *x /= total);
    Ok(v)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}

fn echo_config(config: &serde_json::Value) {
    println!("config {config}");
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(state_path: &Path, monotones: &[String], out: Option<&Path>) -> Result<i32> {
    let rho = load_state(state_path)?;
    let config = json!({
        "command": "eval",
        "state": state_path.display().to_string(),
        "monotones": monotones,
    });
    echo_config(&config);
    let mut rows = Vec::new();
    println!("{:<28} {:>14}", "monotone", "value");
    for name in monotones {
        let handle = find_monotone(name)?;
        let value = handle.evaluate(&rho)?;
        println!("{:<28} {:>14.7}", handle.name(), value);
        rows.push(json!({"monotone": handle.name(), "value": value}));
    }
    if let Some(path) = out {
        write_json(path, &json!({"config": config, "rows": rows}))?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

fn cmd_construct(kind: ConstructKind) -> Result<i32> {
    let (state, config, out) = match kind {
        ConstructKind::Mps {
            d1,
            d2,
            blocks,
            p,
            out,
        } => {
            let probabilities = parse_prob_list(&p)?;
            let spec = MpsSpec::new(d1, d2, blocks, probabilities.clone())?;
            let config = json!({
                "command": "construct", "kind": "mps",
                "d1": d1, "d2": d2, "Q": blocks, "p": probabilities,
            });
            (build_mps(&spec)?, config, out)
        }
        ConstructKind::NpartiteMax { dims, out } => {
            let dims = parse_usize_list(&dims)?;
            let config = json!({"command": "construct", "kind": "npartite_max", "dims": dims});
            (build_npartite_max(&dims)?.to_density(), config, out)
        }
        ConstructKind::Bell { d, out } => {
            let config = json!({"command": "construct", "kind": "bell", "d": d});
            (maximally_entangled_pure(d)?.to_density(), config, out)
        }
        ConstructKind::Ghz { sites, out } => {
            let config = json!({"command": "construct", "kind": "ghz", "sites": sites});
            (ghz_state(sites)?.to_density(), config, out)
        }
        ConstructKind::PureSchmidt { lambda, out } => {
            let coeffs = parse_prob_list(&lambda)?;
            let config = json!({"command": "construct", "kind": "pure_schmidt", "lambda": coeffs});
            let v = SchmidtVector::new(coeffs)?;
            (pure_from_schmidt(&v)?.to_density(), config, out)
        }
    };
    echo_config(&config);
    save_state(&state, &out)?;
    println!("wrote {} (dims {:?})", out.display(), state.dims());
    Ok(0)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<i32> {
    if args.demo_filter {
        return cmd_check_filter(&args);
    }
    let dims = parse_usize_list(args.dims.as_deref().ok_or_else(|| {
        Error::InvalidArgument("--dims is required without --demo-filter".into())
    })?)?;
    let seed = resolve_seed(args.seed)?;
    let handle = find_monotone(&args.monotone)?;
    let config = json!({
        "command": "check",
        "condition": args.condition,
        "monotone": handle.name(),
        "dims": dims,
        "trials": args.trials,
        "seed": seed,
        "violation_threshold": if handle.is_seesaw_backed() { crate::tol::SEESAW_ALLOWANCE } else { crate::tol::VIOLATION_THRESHOLD },
    });
    echo_config(&config);

    let report = match args.condition.as_str() {
        "1" => check_deterministic(&handle, &dims, args.trials, seed)?,
        "2" => check_on_average(&handle, &dims, args.trials, seed)?,
        "3" => check_with_certainty(&handle, &dims, args.trials, seed)?,
        "oneway" => check_oneway_locc(&handle, &dims, args.trials, seed)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "condition must be 1, 2, 3, or oneway, got {other:?}"
            )))
        }
    };

    println!(
        "{:<28} {:<13} verdict {:?}  evaluated {}  skipped {}  worst margin {}",
        report.monotone,
        report.condition,
        report.verdict,
        report.evaluated,
        report.skipped,
        report
            .worst_margin
            .map(|m| format!("{m:.3e}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    if report.advisory_margin_exceeded {
        println!("note: advisory margin above the see-saw allowance (lower-bound slack)");
    }
    if report.verdict == Verdict::Fail {
        if let Some(w) = &report.witness {
            println!("witness: trial {} margin {:.3e}", w.trial, w.margin);
        }
    }
    if let Some(path) = args.out {
        write_json(&path, &json!({"config": config, "report": report}))?;
    }
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 4,
    })
}

fn cmd_check_filter(args: &CheckArgs) -> Result<i32> {
    if args.condition != "3" {
        return Err(Error::InvalidArgument(
            "--demo-filter applies to condition 3".into(),
        ));
    }
    let d1 = args
        .d1
        .ok_or_else(|| Error::InvalidArgument("--demo-filter needs --d1".into()))?;
    let lambda = SchmidtVector::new(parse_prob_list(args.lambda.as_deref().ok_or_else(
        || Error::InvalidArgument("--demo-filter needs --lambda".into()),
    )?)?)?;
    let handle = find_monotone(&args.monotone)?;
    let config = json!({
        "command": "check",
        "condition": "3",
        "demo_filter": true,
        "monotone": handle.name(),
        "d1": d1,
        "lambda": lambda,
    });
    echo_config(&config);
    let report = filtering_demo(&handle, d1, &lambda)?;
    println!(
        "{} on the maximally entangled state of dimension {}: {:.7}",
        report.monotone, d1, report.base_value
    );
    println!("{:<9} {:>12} {:>14} {:>14}", "outcome", "probability", "value", "margin");
    for (q, (p, v)) in report
        .outcome_probabilities
        .iter()
        .zip(&report.outcome_values)
        .enumerate()
    {
        match v {
            Some(v) => println!(
                "{:<9} {:>12.7} {:>14.7} {:>+14.3e}",
                q + 1,
                p,
                v,
                v - report.base_value
            ),
            None => println!("{:<9} {:>12.7} {:>14} {:>14}", q + 1, p, "n/a", "n/a"),
        }
    }
    if let Some(m) = report.min_margin {
        println!("min margin {m:+.3e}");
    }
    if let Some(path) = &args.out {
        write_json(path, &json!({"config": config, "report": report}))?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

fn cmd_scan(
    monotone: &str,
    candidate_path: &Path,
    trials: usize,
    seed: Option<u64>,
    pure: bool,
    out: Option<&Path>,
) -> Result<i32> {
    let candidate = load_state(candidate_path)?;
    let seed = resolve_seed(seed)?;
    let handle = find_monotone(monotone)?;
    let policy = if pure {
        SamplePolicy::PureOnly
    } else {
        SamplePolicy::MixedUniformRank
    };
    let config = json!({
        "command": "scan",
        "monotone": handle.name(),
        "candidate": candidate_path.display().to_string(),
        "dims": candidate.dims(),
        "trials": trials,
        "seed": seed,
        "policy": policy,
        "threshold": crate::tol::VIOLATION_THRESHOLD,
    });
    echo_config(&config);
    let report = maximality_scan(&handle, &candidate, trials, seed, policy)?;
    println!(
        "candidate {:.7}  max sampled {}  evaluated {}  skipped {}",
        report.candidate_value,
        report
            .max_sampled
            .map(|v| format!("{v:.7}"))
            .unwrap_or_else(|| "n/a".into()),
        report.evaluated,
        report.skipped,
    );
    if let Some(w) = &report.witness {
        println!("witness: trial {} value {:.7}", w.trial, w.value);
    }
    if let Some(path) = out {
        write_json(path, &json!({"config": config, "report": report}))?;
    }
    Ok(if report.exceeded { 1 } else { 0 })
}

// ---------------------------------------------------------------------------
// bell
// ---------------------------------------------------------------------------

fn cmd_bell(
    state_path: &Path,
    functional_path: Option<&Path>,
    restarts: usize,
    iters: usize,
    tol: f64,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<i32> {
    let rho = load_state(state_path)?;
    let functional = match functional_path {
        Some(p) => serde_json::from_str::<BellFunctional>(&std::fs::read_to_string(p)?)?,
        None => BellFunctional::chsh(),
    };
    let seed = resolve_seed(seed)?;
    let opts = SeesawOptions {
        restarts,
        max_iters: iters,
        tol,
        seed,
    };
    let config = json!({
        "command": "bell",
        "state": state_path.display().to_string(),
        "functional": functional_path.map(|p| p.display().to_string()).unwrap_or_else(|| "CHSH".into()),
        "restarts": restarts,
        "iters": iters,
        "tol": tol,
        "seed": seed,
    });
    echo_config(&config);
    let result = bell_value(&rho, &functional, &opts)?;
    println!(
        "value {:.9}  best restart {}  iterations {}{}",
        result.value,
        result.best_restart,
        result.iterations,
        if result.possibly_not_converged {
            "  (possibly not converged)"
        } else {
            ""
        }
    );
    if let Some(bound) = functional.local_bound {
        println!(
            "local bound {bound}: {}",
            if result.value > bound + 1e-9 {
                "violated"
            } else {
                "not violated"
            }
        );
    }
    if let Some(path) = out {
        write_json(
            path,
            &json!({
                "config": config,
                "report": {
                    "value": result.value,
                    "best_restart": result.best_restart,
                    "iterations": result.iterations,
                    "possibly_not_converged": result.possibly_not_converged,
                    "value_trace": result.value_trace,
                    "local_bound": functional.local_bound,
                }
            }),
        )?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

fn cmd_reductions(state_path: &Path, out: Option<&Path>) -> Result<i32> {
    let rho = load_state(state_path)?;
    let config = json!({
        "command": "reductions",
        "state": state_path.display().to_string(),
        "dims": rho.dims(),
        "tolerance": crate::tol::BLOCK_RECOGNIZER,
    });
    echo_config(&config);
    let report = check_reductions(&rho)?;
    println!("{:<14} {:>10} {:>14} {:>8}", "subset", "dim", "deviation", "pass");
    for s in &report.subsets {
        let sites = s
            .sites
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",");
        println!(
            "{{{sites}}}{:<pad$} {:>10} {:>14.3e} {:>8}",
            "",
            s.dim_product,
            s.deviation,
            s.pass,
            pad = 12usize.saturating_sub(sites.len()),
        );
    }
    println!(
        "verdict: {}  purity forced: {}",
        if report.all_pass {
            "satisfies the reduction conditions".to_string()
        } else {
            format!("fails at subset {:?}", report.failing.as_ref().unwrap())
        },
        report.purity_forced,
    );
    if let Some(path) = out {
        write_json(path, &json!({"config": config, "report": report}))?;
    }
    Ok(if report.all_pass { 0 } else { 1 })
}
