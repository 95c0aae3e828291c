//! The `unfold` command-line surface.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when an internal
//! invariant is violated.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

use crate::cone::{
    cone_summary, cylinder_envelope, cylinder_measure, default_norm_threshold, empirical_current, pushed_family,
    ue_criterion, ConeError, CylinderEstimate, UeVerdict,
};
use crate::induction::{unfold, InductionError, Policy, StopReason, Trace, UnfoldOptions};
use crate::io::dot::export_dot;
use crate::io::format::{parse_system, replay, FormatError, TraceFile};
use crate::system::SystemOfIsometries;

#[derive(Debug, Parser)]
#[command(name = "unfold", version, about = "Unfolding induction on systems of isometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    RipsFirst,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a system file and report its structure and reducedness.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 12)]
        max_period: usize,
    },
    /// Run the induction and write a trace file.
    Induce {
        file: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "rips-first")]
        policy: PolicyArg,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Skip the reducedness check.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Look for windows whose matrix product is positive.
    CheckUe {
        trace: PathBuf,
        #[arg(long)]
        window: usize,
    },
    /// Bounds on the measure of the cylinder of a word at a step.
    Currents {
        trace: PathBuf,
        /// Letters of the initial system; uppercase for inverses.
        #[arg(long)]
        word: String,
        #[arg(long)]
        at: usize,
        /// Also evaluate with the empirical frequencies of a walk of this length.
        #[arg(long)]
        empirical: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the graph of a step in DOT.
    ExportDot {
        trace: PathBuf,
        #[arg(long)]
        step: usize,
    },
    /// Rebuild a trace file and compare its recorded diagnostics.
    Replay {
        trace: PathBuf,
        /// Also rerun the induction from the initial system.
        #[arg(long)]
        rerun: bool,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Induction(inner) => inner.into(),
            other => Failure::input(other.to_string()),
        }
    }
}

impl From<InductionError> for Failure {
    fn from(e: InductionError) -> Self {
        match e {
            InductionError::System(_) | InductionError::NotReduced(_) | InductionError::Precondition(_) => {
                Failure::input(e.to_string())
            }
            _ => Failure::internal(e.to_string()),
        }
    }
}

impl From<ConeError> for Failure {
    fn from(e: ConeError) -> Self {
        match e {
            ConeError::Factorization(_) => Failure::internal(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = catch_unwind(AssertUnwindSafe(|| dispatch(cli.command, out)))
        .unwrap_or_else(|p| {
            let what = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(Failure::internal(format!("internal error: {what}")))
        });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    writeln!(out, "{text}").map_err(|e| Failure::input(e.to_string()))
}

fn load_trace(path: &Path) -> Result<Trace, Failure> {
    Ok(TraceFile::read(path)?.to_trace()?)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Validate { file, depth, max_period } => validate(&file, depth, max_period, out),
        Command::Induce { file, steps, policy: PolicyArg::RipsFirst, trace, force, depth } => {
            induce(&file, steps, trace.as_deref(), force, depth, out)
        }
        Command::CheckUe { trace, window } => check_ue(&trace, window, out),
        Command::Currents { trace, word, at, empirical, seed } => currents(&trace, &word, at, empirical, seed, out),
        Command::ExportDot { trace, step } => {
            let t = load_trace(&trace)?;
            write!(out, "{}", export_dot(&t, step)?).map_err(|e| Failure::input(e.to_string()))?;
            Ok(0)
        }
        Command::Replay { trace, rerun } => replay_cmd(&trace, rerun, out),
    }
}

fn validate(file: &Path, depth: usize, max_period: usize, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = parse_system(file)?;
    let g = s.graph();
    let reduced = s.check_reduced(depth).map_err(|e| Failure::input(e.to_string()))?;
    let surface = s.is_surface_type();
    let periodic = s.detect_periodic_leaf(max_period).map_err(|e| Failure::input(e.to_string()))?;
    emit(
        out,
        &json!({
            "valid": true,
            "field": s.field().to_string(),
            "components": g.vertex_count,
            "letters": s.letter_count(),
            "rank": g.rank(),
            "surface_type": surface.surface_type,
            "reduced": {
                "passes": reduced.passes(),
                "depth": reduced.depth,
                "graph_connected": reduced.graph_connected,
                "independent_generators_up_to_depth": reduced.independent_generators_up_to_depth,
                "every_point_has_infinite_path_up_to_depth": reduced.every_point_has_infinite_path_up_to_depth,
                "extremal_points_doubly_covered": reduced.extremal_points_doubly_covered,
                "max_diameter_at_depth": reduced.max_diameter_at_depth.to_string(),
            },
            "periodic_leaf": periodic.map(|w| s.format_word(&w)),
        }),
    )?;
    Ok(0)
}

fn induce(file: &Path, steps: usize, trace_out: Option<&Path>, force: bool, depth: usize, out: &mut dyn Write) -> Result<i32, Failure> {
    let s: SystemOfIsometries = parse_system(file)?;
    let mut opts = UnfoldOptions::new(steps);
    opts.policy = Policy::RipsFirst;
    opts.reduced_depth = if force { None } else { Some(depth) };
    let t = unfold(&s, &opts)?;
    let file = TraceFile::from_trace(&t, steps);
    if let Some(p) = trace_out {
        file.write(p)?;
    }
    let splits = file.steps.iter().filter(|r| r.kind == "split").count();
    let (stop, code) = match t.stop {
        StopReason::Budget => (json!({"reason": "budget"}), 0),
        StopReason::NoSplittingPartition { surface_type } => {
            (json!({"reason": "no-splitting-partition", "surface_type": surface_type}), 1)
        }
    };
    emit(
        out,
        &json!({
            "steps": t.len(),
            "splits": splits,
            "rips": t.len() - splits,
            "stop": stop,
            "generalized_edges": t.ge_counts,
            "trace": trace_out.map(|p| p.display().to_string()),
        }),
    )?;
    Ok(code)
}

fn check_ue(path: &Path, window: usize, out: &mut dyn Write) -> Result<i32, Failure> {
    let t = load_trace(path)?;
    let r = ue_criterion(&t, window)?;
    let cone = if t.is_empty() { None } else { Some(cone_summary(&t, 0, t.len(), &default_norm_threshold())?) };
    emit(
        out,
        &json!({
            "window": r.window,
            "d": r.d,
            "verdict": match r.verdict {
                UeVerdict::HoldsOnWindow => "holds-on-window",
                UeVerdict::NotObserved => "not-observed",
            },
            "witnesses": r.witnesses,
            "candidates": r.candidates,
            "cone": cone.map(|c| json!({
                "steps": [c.n0, c.n1],
                "norm": c.norm.to_string(),
                "projective_diameter": c.diameter,
                "dimension_bound": c.dimension_bound,
                "conditional_bound": c.conditional_bound,
                "ergodic_bound_3n_minus_6": c.theorem_bound,
            })),
        }),
    )?;
    Ok(0)
}

fn estimate_json(e: &CylinderEstimate) -> Value {
    let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    json!({
        "lower": e.lower.to_string(),
        "upper": e.upper.to_string(),
        "lower_f64": f(&e.lower),
        "upper_f64": f(&e.upper),
        "gap_f64": f(&e.gap()),
    })
}

fn currents(path: &Path, word: &str, at: usize, empirical: Option<usize>, seed: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    let t = load_trace(path)?;
    let w = t.system(0).parse_word(word).map_err(|e| Failure::input(e.to_string()))?;
    if at >= t.len() {
        return Err(Failure::input(format!("--at {at} must be below the trace length {}", t.len())));
    }
    let family = pushed_family(&t, t.len(), vec![BigRational::one(); t.ge_counts[t.len()]])?;
    let env = cylinder_envelope(&t, &family[..=at], &w)?;
    let e = env.last().expect("nonempty family");
    let raw = cylinder_measure(&t, &family[at], &w)?;
    let mut report = json!({
        "word": t.system(0).format_word(&w),
        "step": at,
        "top": t.len(),
        "envelope": estimate_json(e),
        "at_step": estimate_json(&raw),
        "error_term": raw.error.to_string(),
    });
    if let Some(len) = empirical {
        let mut mv = empirical_current(t.system(at), len, seed)?;
        mv.step = at;
        report["empirical"] = json!({ "length": len, "seed": seed, "estimate": estimate_json(&cylinder_measure(&t, &mv, &w)?) });
    }
    emit(out, &report)?;
    Ok(0)
}

fn replay_cmd(path: &Path, rerun: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let file = TraceFile::read(path)?;
    let (trace, report) = replay(&file)?;
    let mut identical = report.identical();
    let mut rerun_identical = None;
    if rerun {
        let opts = UnfoldOptions { budget: file.budget, policy: Policy::RipsFirst, reduced_depth: None };
        let again = unfold(trace.system(0), &opts)?;
        let same = TraceFile::from_trace(&again, file.budget) == file;
        identical &= same;
        rerun_identical = Some(same);
    }
    emit(
        out,
        &json!({
            "steps": report.steps,
            "diagnostics_identical": report.identical(),
            "rerun_identical": rerun_identical,
        }),
    )?;
    if identical {
        Ok(0)
    } else {
        Err(Failure::internal("replay does not reproduce the recorded trace"))
    }
}

