//! Config-driven runs: dispatch, report files and reproducibility manifests.

pub mod canonical;
pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::pressure::{
    default_epsilon_ladder, feedback_cover_candidates, fmt_float, linear_pressure_formula,
    pressure_feedback, pressure_inner, pressure_outer, Budgets, PerNRow, PressureEstimate,
};
use crate::properties::{run_property_suite, standard_fixtures};
use crate::system::WeightFunction;
use crate::trajectory::VerificationMode;

pub use canonical::{canonical_hash, canonical_json, format_g17, sha256_hex};
pub use config::{ExperimentConfig, ModeSpec, SweepParameter};

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "per_n.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Per-n CSV columns for estimate-like commands.
pub const PER_N_COLUMNS: &str = "n,a_lower,a_upper,exact,log_a_over_n";
pub const SWEEP_COLUMNS: &str = "value,n,a_lower,a_upper,exact,log_a_over_n";
pub const PROPERTY_COLUMNS: &str = "property,fixture,status,checks";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Entropy,
    Outer,
    Feedback,
    Properties,
    LinearFormula,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Estimate,
        Command::Entropy,
        Command::Outer,
        Command::Feedback,
        Command::Properties,
        Command::LinearFormula,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Entropy => "entropy",
            Command::Outer => "outer",
            Command::Feedback => "feedback",
            Command::Properties => "properties",
            Command::LinearFormula => "linear-formula",
            Command::Sweep => "sweep",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub node_budget: Option<u64>,
}

/// Everything a command produces, before it touches the filesystem.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: Command,
    pub config_hash: String,
    pub report: Value,
    pub csv: String,
    /// One line for standard output.
    pub summary: String,
    /// Per-stage enumeration work, for the manifest.
    pub consumed: Vec<Value>,
    pub exhaustive: bool,
    pub all_exact: bool,
    pub budgets: Value,
}

impl RunOutput {
    pub fn report_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Process exit code for a failed run: 2 when no spanning family exists, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } => 2,
        _ => 1,
    }
}

fn inner_verification(mode: &ModeSpec) -> VerificationMode {
    match mode {
        ModeSpec::Inner { verification } | ModeSpec::Feedback { verification, .. } => *verification,
        ModeSpec::Outer { .. } => VerificationMode::Center { delta: 1e-3 },
    }
}

fn estimate_csv(est: &PressureEstimate) -> String {
    est.to_csv()
}

fn stage_records(stage: &str, rows: &[PerNRow]) -> Vec<Value> {
    rows.iter()
        .map(|r| {
            json!({
                "stage": stage,
                "n": r.n,
                "candidates": r.candidates,
                "nodes": r.stats.nodes,
                "pruned": r.stats.pruned,
                "dominated": r.stats.dominated,
                "truncated": r.stats.truncated,
                "approximate": r.stats.approximate,
            })
        })
        .collect()
}

fn estimate_records(est: &PressureEstimate) -> Vec<Value> {
    match &est.outer_levels {
        Some(levels) => levels
            .iter()
            .flat_map(|l| stage_records(&format!("epsilon={}", fmt_float(l.epsilon)), &l.per_n))
            .collect(),
        None => stage_records("main", &est.per_n),
    }
}

fn summary_of(cmd: Command, est: &PressureEstimate) -> String {
    format!(
        "{}: value={} tail_slope={} interval=[{}, {}] all_exact={}",
        cmd.name(),
        fmt_float(est.value),
        fmt_float(est.tail_slope),
        fmt_float(est.interval[0]),
        fmt_float(est.interval[1]),
        est.all_exact
    )
}

fn estimate_for(
    cfg: &ExperimentConfig,
    cmd: Command,
    budgets: &Budgets,
) -> Result<PressureEstimate> {
    let sys = cfg.build_system()?;
    let f = match cmd {
        Command::Entropy => WeightFunction::zero(sys.alphabet_len()),
        _ => cfg.weight.build(&sys)?,
    };
    let mode = match cmd {
        Command::Outer => match &cfg.mode {
            ModeSpec::Outer { .. } => cfg.mode.clone(),
            _ => ModeSpec::Outer { epsilons: None },
        },
        Command::Feedback => match &cfg.mode {
            ModeSpec::Feedback { .. } => cfg.mode.clone(),
            other => ModeSpec::Feedback {
                tau_max: 2,
                verification: inner_verification(other),
            },
        },
        _ => cfg.mode.clone(),
    };
    match mode {
        ModeSpec::Inner { verification } => {
            pressure_inner(&sys, &f, cfg.n_min, cfg.n_max, &verification, budgets)
        }
        ModeSpec::Outer { epsilons } => {
            let ladder = epsilons.unwrap_or_else(|| default_epsilon_ladder(&sys));
            pressure_outer(&sys, &f, cfg.n_min, cfg.n_max, &ladder, budgets)
        }
        ModeSpec::Feedback {
            tau_max,
            verification,
        } => {
            if tau_max == 0 {
                return Err(Error::Config("tau_max must be at least 1".into()));
            }
            let covers = feedback_cover_candidates(&sys, &f, tau_max, &verification, budgets)?;
            pressure_feedback(&sys, &f, &covers, cfg.n_max, &verification, budgets)
        }
    }
}

/// Runs `cmd` on a parsed config; no files are written.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let mut solver = cfg.solver.clone();
    if let Some(n) = opts.node_budget {
        solver.node_budget = n;
    }
    let budgets = solver.budgets()?;
    let config_hash = canonical_hash(&serde_json::to_value(cfg)?);
    let budgets_json = json!({
        "method": solver.method,
        "node_budget": solver.node_budget,
        "word_budget": solver.word_budget,
        "prune": solver.prune,
        "dominance": solver.dominance,
        "merge_tolerance": solver.merge_tolerance,
    });
    let (result, csv, summary, consumed, exhaustive, all_exact) = match cmd {
        Command::Estimate | Command::Entropy | Command::Outer | Command::Feedback => {
            let est = estimate_for(cfg, cmd, &budgets)?;
            let consumed = estimate_records(&est);
            let exhaustive = consumed.iter().all(|r| r["truncated"] == false);
            (
                serde_json::to_value(&est)?,
                estimate_csv(&est),
                summary_of(cmd, &est),
                consumed,
                exhaustive,
                est.all_exact,
            )
        }
        Command::Sweep => {
            let sweep = cfg
                .sweep
                .as_ref()
                .ok_or_else(|| Error::Config("sweep needs a `sweep` section".into()))?;
            let inner_cmd = if sweep.entropy {
                Command::Entropy
            } else {
                Command::Estimate
            };
            let mut csv = format!("{SWEEP_COLUMNS}\n");
            let mut points = Vec::new();
            let mut consumed = Vec::new();
            let mut all_exact = true;
            let mut values_line = Vec::new();
            for &v in &sweep.values {
                let point_cfg = cfg.with_parameter(sweep.parameter, v)?;
                let est = estimate_for(&point_cfg, inner_cmd, &budgets)?;
                for line in est.to_csv().lines().skip(1) {
                    let _ = writeln!(csv, "{v},{line}");
                }
                consumed.extend(estimate_records(&est).into_iter().map(|mut r| {
                    r["sweep_value"] = json!(v);
                    r
                }));
                all_exact &= est.all_exact;
                values_line.push(format!("{v}:{}", fmt_float(est.value)));
                points.push(json!({
                    "value": v,
                    "fekete_inf": est.value,
                    "tail_slope": est.tail_slope,
                    "all_exact": est.all_exact,
                    "estimate": est,
                }));
            }
            let exhaustive = consumed.iter().all(|r| r["truncated"] == false);
            (
                json!({ "parameter": sweep.parameter, "entropy": sweep.entropy, "points": points }),
                csv,
                format!("sweep: {}", values_line.join(" ")),
                consumed,
                exhaustive,
                all_exact,
            )
        }
        Command::Properties => {
            let spec = cfg.properties.clone().unwrap_or_default();
            let fixtures = standard_fixtures(spec.random_fixtures, spec.seed);
            let report = run_property_suite(&fixtures, spec.n_max, spec.seed)?;
            let mut csv = format!("{PROPERTY_COLUMNS}\n");
            for e in &report.entries {
                let status = serde_json::to_value(e.status)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    e.property,
                    e.fixture,
                    status.as_str().unwrap_or(""),
                    e.checks
                );
            }
            let summary = format!(
                "properties: passed={} failed={} diagnostics={}",
                report.passed, report.failed, report.diagnostics
            );
            let ok = report.failed == 0;
            (
                serde_json::to_value(&report)?,
                csv,
                summary,
                Vec::new(),
                true,
                ok,
            )
        }
        Command::LinearFormula => {
            let spec = cfg.linear_formula.as_ref().ok_or_else(|| {
                Error::Config("linear-formula needs a `linear_formula` section".into())
            })?;
            let a = config::matrix(&spec.a, "linear_formula.a")?;
            let kind = spec
                .weight
                .kind()
                .ok_or_else(|| Error::Config("linear_formula.weight cannot be a table".into()))?;
            let value = linear_pressure_formula(&a, kind, &spec.u0)?;
            (
                json!({ "value": value }),
                format!("quantity,value\nlinear_formula,{}\n", fmt_float(value)),
                format!("{value:?}"),
                Vec::new(),
                true,
                true,
            )
        }
    };
    let report = json!({
        "command": cmd.name(),
        "config_hash": config_hash,
        "result": result,
    });
    Ok(RunOutput {
        command: cmd,
        config_hash,
        report,
        csv,
        summary,
        consumed,
        exhaustive,
        all_exact,
        budgets: budgets_json,
    })
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name))
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads the config, runs `cmd` and writes report, CSV and manifest into `out_dir`.
/// Nothing is written unless the run succeeds.
pub fn run(
    cmd: Command,
    config_path: &Path,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let started = chrono::Utc::now();
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let output = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| execute(cmd, &cfg, opts))?,
        None => execute(cmd, &cfg, opts)?,
    };
    let finished = chrono::Utc::now();
    std::fs::create_dir_all(out_dir)?;
    let report_text = output.report_text();
    let manifest = json!({
        "tool": "invpress",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "config_path": config_path.display().to_string(),
        "config_hash": output.config_hash,
        "report_sha256": sha256_hex(report_text.as_bytes()),
        "csv_sha256": sha256_hex(output.csv.as_bytes()),
        "started_at": started.to_rfc3339(),
        "finished_at": finished.to_rfc3339(),
        "elapsed_seconds": (finished - started).num_milliseconds() as f64 / 1000.0,
        "threads": opts.threads.unwrap_or_else(rayon::current_num_threads),
        "budgets": output.budgets,
        "consumed": output.consumed,
        "exhaustive": output.exhaustive,
        "all_exact": output.all_exact,
    });
    write_atomic(out_dir, REPORT_FILE, &report_text)?;
    write_atomic(out_dir, CSV_FILE, &output.csv)?;
    write_atomic(
        out_dir,
        MANIFEST_FILE,
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    Ok(output)
}
