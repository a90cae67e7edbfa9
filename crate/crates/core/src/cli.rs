//! Command-line front end. The `heq` binary is a thin wrapper around
//! [`main_with`]; the `cmd_*` functions are usable directly from Rust.
//!
//! Every command takes a problem file path or the name of a bundled preset.
//! Reports go to stdout, diagnostics to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::oracle::{self, OracleResult};
use crate::problem::{self, Assembled, ProblemError, ProblemFile};
use crate::report;
use crate::schedule::{self, ConditionReport, Outcome, ScheduleSet, SequenceFamily, Theorem};
use crate::solver::{self, CertificateSpec, SolverError, Trajectory, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_HINTS: i32 = 65;
pub const EXIT_VARIANT_MISMATCH: i32 = 66;
pub const EXIT_RUNTIME: i32 = 70;

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
    /// Trajectory CSV up to a failed step, when there is one.
    pub partial_csv: Option<String>,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            partial_csv: None,
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::VariantMismatch { .. } => CliError::new(EXIT_VARIANT_MISMATCH, e.to_string()),
            SolverError::StepFailed { k, source, partial } => CliError {
                code: EXIT_RUNTIME,
                message: format!("iteration {k} failed: {source}"),
                partial_csv: Some(report::trajectory_csv(&partial)),
            },
            other => CliError::new(EXIT_RUNTIME, other.to_string()),
        }
    }
}

/// A loaded problem and where it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub origin: String,
    pub file: ProblemFile,
    pub built: Assembled,
}

/// Reads `arg` as a path if it exists, otherwise as a preset name.
pub fn load(arg: &str) -> Result<Loaded, CliError> {
    let path = Path::new(arg);
    let (origin, src) = if path.exists() {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{arg}: {e}")))?;
        (arg.to_string(), src)
    } else if let Some(src) = problem::preset_source(arg) {
        (format!("preset:{arg}"), src.to_string())
    } else {
        return Err(CliError::usage(format!(
            "{arg}: no such file or preset (presets: {})",
            problem::PRESET_NAMES.join(", ")
        )));
    };
    let (file, built) = problem::load_str(&src).map_err(|e| CliError::usage(format!("{origin}: {e}")))?;
    Ok(Loaded { origin, file, built })
}

fn theorem_of(l: &Loaded, theorem: Option<Theorem>) -> Option<Theorem> {
    theorem.or(l.built.theorem)
}

fn validation(l: &Loaded, theorem: Theorem) -> Result<ConditionReport, CliError> {
    let b = &l.built;
    schedule::validate(&b.schedules, theorem, &b.gap, b.multiplier.norm()).map_err(|e| CliError::usage(e.to_string()))
}

/// Verdicts for each hypothesis of `theorem` (default: the file's).
pub fn cmd_validate(arg: &str, theorem: Option<Theorem>) -> Result<ConditionReport, CliError> {
    let l = load(arg)?;
    let th = theorem_of(&l, theorem)
        .ok_or_else(|| CliError::usage(format!("{}: no theorem in the file; pass --theorem", l.origin)))?;
    validation(&l, th)
}

pub fn outcome_exit_code(o: Outcome) -> i32 {
    match o {
        Outcome::Pass => EXIT_OK,
        Outcome::Fail => EXIT_FAIL,
        Outcome::Inconsistent => EXIT_INCONSISTENT,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub max_iters: Option<usize>,
    pub inner_tol: Option<f64>,
    pub certify: bool,
    pub force: bool,
    pub theorem: Option<Theorem>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub trajectory: Trajectory,
    pub csv: String,
    pub summary: Value,
    pub validation: Option<ConditionReport>,
    /// `Some(false)` when a certificate value fell below `-cert_tol`.
    pub certificate_ok: Option<bool>,
}

fn apply_overrides(b: &mut Assembled, opts: &RunOptions) -> Result<(), CliError> {
    if let Some(n) = opts.max_iters {
        if n == 0 {
            return Err(CliError::usage("--max-iters must be at least 1"));
        }
        b.stop.max_iters = n;
    }
    if let Some(t) = opts.inner_tol {
        b.run.resolvent.inner_tol = t;
        b.run.resolvent.validate().map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}

fn reference(b: &Assembled) -> Result<OracleResult, oracle::OracleError> {
    oracle::reference_solution(&b.problem)
}

/// Runs the iteration on one problem. The CSV is a pure function of the
/// problem file, the options and the seed.
pub fn cmd_run(arg: &str, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let l = load(arg)?;
    let mut b = l.built.clone();
    apply_overrides(&mut b, opts)?;

    let report = theorem_of(&l, opts.theorem).map(|th| validation(&l, th)).transpose()?;
    if let Some(r) = &report {
        if r.outcome() == Outcome::Fail && !opts.force {
            return Err(CliError::new(
                EXIT_FAIL,
                format!("schedule validation failed (use --force to run anyway)\n{}", report::condition_report_text(r)),
            ));
        }
    }

    let oracle = reference(&b);
    if opts.certify {
        let x_bar = match (b.problem.known_solution(), &oracle) {
            (Some(x), _) => x.clone(),
            (None, Ok(o)) => o.solution.clone(),
            (None, Err(e)) => {
                return Err(CliError::new(
                    EXIT_NO_HINTS,
                    format!("{}: certification needs oracle_hints.known_solution or a solvable oracle ({e})", l.origin),
                ))
            }
        };
        b.run.certificate = Some(CertificateSpec {
            x_bar,
            multiplier: b.multiplier.clone(),
            rho: solver::lemma_rho(b.problem.upper()),
        });
    }

    let t = solver::run(&b.problem, &b.schedules, &b.x1, b.x0.as_ref(), &b.run, &b.stop)?;
    let csv = report::trajectory_csv(&t);
    let cert_min = t.certificate_min();
    let certificate_ok = opts.certify.then(|| cert_min.is_none_or(|m| m >= -b.cert_tol));
    let oracle_json = match &oracle {
        Ok(o) => json!({
            "solution": o.solution.as_slice(),
            "method": o.method.as_str(),
            "final_distance": t.final_point.distance(&o.solution),
            "ergodic_distance": t.ergodic_average.as_ref().map(|e| e.distance(&o.solution)),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let summary = json!({
        "problem": b.name,
        "source": l.origin,
        "seed": b.seed,
        "iterations": t.iterations(),
        "stop_reason": t.stop_reason.map(|r| r.as_str()),
        "final_point": t.final_point.as_slice(),
        "ergodic_average": t.ergodic_average.as_ref().map(|e| e.to_vec()),
        "final_step_norm": t.records.last().map(|r| r.step_norm),
        "final_dist_to_solution": t.records.last().and_then(|r| r.dist_to_solution),
        "certificate_min": cert_min,
        "certificate_tolerance": b.cert_tol,
        "certificate_ok": certificate_ok,
        "oracle": oracle_json,
        "validation": report.as_ref().map(report::condition_report_json),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    Ok(RunOutcome {
        name: b.name.clone(),
        trajectory: t,
        csv,
        summary,
        validation: report,
        certificate_ok,
    })
}

/// A variant name with an optional inertia override, e.g.
/// `ripsa:gamma=0.2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSpec {
    pub variant: Variant,
    pub gamma: Option<f64>,
    pub label: String,
}

impl FromStr for VariantSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').map_or((s, None), |(n, r)| (n, Some(r)));
        let variant = Variant::parse(name).ok_or_else(|| {
            let known: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
            CliError::usage(format!("unknown variant {name:?} (known: {})", known.join(", ")))
        })?;
        let gamma = match rest {
            None => None,
            Some(r) => {
                let v = r
                    .strip_prefix("gamma=")
                    .ok_or_else(|| CliError::usage(format!("{s}: only gamma=<value> overrides are supported")))?;
                let g: f64 = v.parse().map_err(|_| CliError::usage(format!("{s}: bad gamma value")))?;
                if !(0.0..1.0).contains(&g) {
                    return Err(CliError::usage(format!("{s}: gamma must lie in [0, 1)")));
                }
                Some(g)
            }
        };
        Ok(Self {
            variant,
            gamma,
            label: s.to_string(),
        })
    }
}

/// Comma-separated variant list; empty lists are a usage error.
pub fn parse_variants(list: &str) -> Result<Vec<VariantSpec>, CliError> {
    let specs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>, _>>()?;
    if specs.is_empty() {
        return Err(CliError::usage("the variant list is empty"));
    }
    Ok(specs)
}

fn with_gamma(s: &ScheduleSet, gamma: Option<f64>) -> ScheduleSet {
    let mut s = s.clone();
    if let Some(g) = gamma {
        s.gamma = SequenceFamily::constant(g);
    }
    s
}

/// Distance to the oracle solution per iteration, one column per
/// (problem, variant). Runs are independent and execute on scoped threads.
pub fn cmd_compare(args: &[String], variants: &[VariantSpec], opts: &RunOptions) -> Result<String, CliError> {
    if args.is_empty() {
        return Err(CliError::usage("no problem given"));
    }
    if variants.is_empty() {
        return Err(CliError::usage("the variant list is empty"));
    }
    let mut jobs = Vec::new();
    for arg in args {
        let l = load(arg)?;
        let mut b = l.built;
        apply_overrides(&mut b, opts)?;
        let target = match (reference(&b), b.problem.known_solution()) {
            (Ok(o), _) => o.solution,
            (Err(_), Some(x)) => x.clone(),
            (Err(e), None) => return Err(CliError::new(EXIT_RUNTIME, format!("{}: oracle failed: {e}", l.origin))),
        };
        for v in variants {
            let label = if args.len() == 1 {
                v.label.clone()
            } else {
                format!("{}/{}", b.name, v.label)
            };
            jobs.push((label, b.clone(), target.clone(), v.clone()));
        }
    }
    let results: Vec<Result<(String, Vec<f64>), CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(label, b, target, v)| {
                scope.spawn(move || {
                    let sched = with_gamma(&b.schedules, v.gamma);
                    let t = solver::reduction_trajectory(v.variant, &b.problem, &sched, &b.x1, b.x0.as_ref(), &b.run, &b.stop)
                        .map_err(CliError::from)
                        .map_err(|mut e| {
                            e.message = format!("{label}: {}", e.message);
                            e.partial_csv = None;
                            e
                        })?;
                    let d = t.records.iter().map(|r| r.x_next.distance(target)).collect();
                    Ok((label.clone(), d))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::new(EXIT_RUNTIME, "a comparison run panicked"))))
            .collect()
    });
    let columns = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(report::comparison_csv(&columns))
}

/// The oracle's reference solution as JSON.
pub fn cmd_oracle(arg: &str) -> Result<Value, CliError> {
    let l = load(arg)?;
    let p = &l.built.problem;
    let r = reference(&l.built).map_err(|e| CliError::new(EXIT_RUNTIME, format!("{}: {e}", l.origin)))?;
    let lower = p
        .lower_solution_set()
        .map(|s| s.kind_name())
        .or_else(|| oracle::solve_lower(p).ok().map(|s| s.kind_name()));
    Ok(report::oracle_json(&l.built.name, &r, lower))
}

#[derive(Debug, Parser)]
#[command(name = "heq", version, about = "Relaxed inertial proximal splitting for hierarchical equilibrium problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Problem file, or the name of a bundled preset
    pub file: String,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Write the per-iteration CSV here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the summary JSON here as well as to stdout
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    /// Run even if the schedule validation fails
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub theorem: Option<Theorem>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the schedules against a convergence theorem
    Validate {
        file: String,
        #[arg(long)]
        theorem: Option<Theorem>,
        #[arg(long)]
        json: bool,
    },
    /// Iterate and report
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Evaluate the Lyapunov certificate at every step
        #[arg(long)]
        certify: bool,
    },
    /// Same as `run --certify`
    Certify {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Distance-to-solution table for several variants
    Compare {
        #[arg(required = true)]
        files: Vec<String>,
        /// e.g. `ripsa,proximal_point,ripsa:gamma=0.2`
        #[arg(long, default_value = "ripsa")]
        variants: String,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reference solution
    Oracle { file: String },
}

/// A closed stdout pipe ends the command quietly.
fn io_error(e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        CliError::new(EXIT_OK, "")
    } else {
        CliError::new(EXIT_RUNTIME, e.to_string())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::new(EXIT_RUNTIME, format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let io = io_error;
    match cli.command {
        Command::Validate { file, theorem, json } => {
            let r = cmd_validate(&file, theorem)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report::condition_report_json(&r)).unwrap_or_default())
                    .map_err(io)?;
            } else {
                write!(out, "{}", report::condition_report_text(&r)).map_err(io)?;
            }
            Ok(outcome_exit_code(r.outcome()))
        }
        Command::Run { args, certify } => run_command(args, certify, out, err),
        Command::Certify { args } => run_command(args, true, out, err),
        Command::Compare {
            files,
            variants,
            max_iters,
            out: path,
        } => {
            let specs = parse_variants(&variants)?;
            let opts = RunOptions {
                max_iters,
                ..RunOptions::default()
            };
            let csv = cmd_compare(&files, &specs, &opts)?;
            match path {
                Some(p) => write_file(&p, &csv)?,
                None => write!(out, "{csv}").map_err(io)?,
            }
            Ok(EXIT_OK)
        }
        Command::Oracle { file } => {
            let v = cmd_oracle(&file)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap_or_default()).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

fn run_command(args: RunArgs, certify: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let io = io_error;
    let opts = RunOptions {
        max_iters: args.max_iters,
        inner_tol: args.inner_tol,
        certify,
        force: args.force,
        theorem: args.theorem,
    };
    let res = match cmd_run(&args.file, &opts) {
        Ok(r) => r,
        Err(e) => {
            if let (Some(csv), Some(p)) = (&e.partial_csv, &args.out) {
                write_file(p, csv)?;
                let _ = writeln!(err, "partial trajectory written to {}", p.display());
            }
            return Err(e);
        }
    };
    if let Some(r) = &res.validation {
        if r.outcome() != Outcome::Pass {
            let _ = writeln!(err, "schedule validation: {}", report::outcome_str(r.outcome()));
        }
    }
    if let Some(p) = &args.out {
        write_file(p, &res.csv)?;
    }
    let text = serde_json::to_string_pretty(&res.summary).unwrap_or_default();
    if let Some(p) = &args.summary {
        write_file(p, &text)?;
    }
    writeln!(out, "{text}").map_err(io)?;
    if res.certificate_ok == Some(false) {
        let _ = writeln!(err, "certificate violated: minimum {:e}", res.trajectory.certificate_min().unwrap_or(f64::NAN));
        return Ok(EXIT_FAIL);
    }
    Ok(EXIT_OK)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            if !e.message.is_empty() {
                let _ = writeln!(err, "heq: {}", e.message);
            }
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_specs_parse() {
        let v: VariantSpec = "ripsa:gamma=0.2".parse().unwrap();
        assert_eq!(v.variant, Variant::Ripsa);
        assert_eq!(v.gamma, Some(0.2));
        assert!("ripsa:beta=1".parse::<VariantSpec>().is_err());
        assert!("newton".parse::<VariantSpec>().is_err());
        assert_eq!(parse_variants(" , ").unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn unknown_source_is_usage_error() {
        assert_eq!(load("definitely/not/here.toml").unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with(["heq", "--help"], &mut o, &mut e), EXIT_OK);
        assert!(!o.is_empty());
        assert_eq!(main_with(["heq", "bogus"], &mut o, &mut e), EXIT_USAGE);
    }
}
