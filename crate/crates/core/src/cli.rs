//! The `hyperspec` command line.
//!
//! Exit codes: 0 satisfied, 1 violated, 2 unknown, 3 error, 4 when the
//! `--oracle` cross-check disagrees with the verifier. `falsify` exits 1
//! when it finds a witness and 0 otherwise.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::compose::{self_compose, ComposedProblem};
use crate::graph::{validate, Graph};
use crate::io::{export_problem, graph_to_json, load_network, IoError};
use crate::specs::SpecDescription;
use crate::verify::{
    falsify, oracle_verify, verify, BoundMethod, ConfigOverrides, Verdict, VerifyConfig, VerifyOutcome,
};

pub const EXIT_SATISFIED: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_ORACLE_MISMATCH: i32 = 4;

/// Environment variable holding the log filter, e.g. `info`.
pub const LOG_ENV: &str = "HYPERSPEC_LOG";

#[derive(Debug, Parser)]
#[command(name = "hyperspec", version, about = "Verify global specifications of neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide a spec for a network; prints the verdict
    Verify(VerifyArgs),
    /// Search for a counterexample without proving anything
    Falsify(FalsifyArgs),
    /// Write the composed problem as model.onnx, property.vnnlib and composed.json
    Export(ExportArgs),
    /// Validate a graph file and print statistics
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct Problem {
    /// Network: native JSON graph (.json) or ONNX model
    pub model: PathBuf,
    /// Spec description (JSON)
    pub spec: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundMethodArg {
    Interval,
    BackwardLinear,
}

impl From<BoundMethodArg> for BoundMethod {
    fn from(arg: BoundMethodArg) -> Self {
        match arg {
            BoundMethodArg::Interval => BoundMethod::Interval,
            BoundMethodArg::BackwardLinear => BoundMethod::BackwardLinear,
        }
    }
}

/// Settings shared by `verify` and `falsify`; they override the spec file.
#[derive(Debug, Args)]
pub struct Flags {
    /// Regions with lower bound >= -tolerance count as certified [default: 1e-9]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Branch-and-bound region budget [default: 200000]
    #[arg(long)]
    pub max_regions: Option<usize>,
    /// Wall-clock budget in seconds
    #[arg(long)]
    pub max_time: Option<f64>,
    /// Threads bounding regions in parallel [default: 1]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed of the falsification search [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub bound_method: Option<BoundMethodArg>,
    /// Print machine-readable JSON on stdout
    #[arg(long)]
    pub json: bool,
}

impl Flags {
    fn overrides(&self) -> Result<ConfigOverrides, String> {
        let max_time_ms = match self.max_time {
            Some(s) if !(s.is_finite() && s >= 0.0) => return Err(format!("--max-time must be a non-negative number, got {s}")),
            Some(s) => Some((s * 1000.0).ceil() as u64),
            None => None,
        };
        Ok(ConfigOverrides {
            tolerance: self.tolerance,
            max_regions: self.max_regions,
            max_time_ms,
            workers: self.workers,
            seed: self.seed,
            bound_method: self.bound_method.map(Into::into),
            ..Default::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: Problem,
    #[command(flatten)]
    pub flags: Flags,
    /// Cross-check the verdict with the exact (exponential) oracle
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct FalsifyArgs {
    #[command(flatten)]
    pub problem: Problem,
    #[command(flatten)]
    pub flags: Flags,
    /// Number of network evaluations
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub problem: Problem,
    /// Output directory
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Native JSON graph or ONNX model
    pub graph: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// A failure, with the exit code to report.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: EXIT_ERROR, message: e.to_string() }
    }
}

struct Loaded {
    description: SpecDescription,
    problem: ComposedProblem,
}

fn load(p: &Problem) -> Result<Loaded, Failure> {
    let network = load_network(&p.model)?;
    let description = SpecDescription::load(&p.spec)?;
    let spec = description.build(network.output_dim()?)?;
    let problem = self_compose(&network, &spec)?;
    Ok(Loaded { description, problem })
}

/// Defaults, then the spec file's `verify` block, then flags.
fn config(description: &SpecDescription, flags: &Flags) -> Result<VerifyConfig, Failure> {
    let mut config = VerifyConfig::default();
    if let Some(file) = &description.verify {
        file.apply(&mut config);
    }
    flags.overrides().map_err(Failure::from)?.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn config_json(config: &VerifyConfig) -> serde_json::Value {
    json!({
        "tolerance": config.tolerance,
        "max_regions": config.max_regions,
        "max_time_ms": config.max_time.as_millis() as u64,
        "split_strategy": config.split_strategy,
        "falsify_samples": config.falsify_samples,
        "bound_method": config.bound_method,
        "workers": config.workers,
        "seed": config.seed,
        "lp_max_unstable": config.lp_max_unstable,
    })
}

struct Manifest {
    command: &'static str,
    model: Option<PathBuf>,
    spec: Option<SpecDescription>,
    config: Option<serde_json::Value>,
    summary: serde_json::Value,
}

impl Manifest {
    fn to_json(&self, elapsed: Duration) -> serde_json::Value {
        json!({
            "manifest": {
                "command": self.command,
                "model": self.model.as_ref().map(|p| p.display().to_string()),
                "spec": self.spec,
                "config": self.config,
                "verdict": self.summary,
                "wall_time_ms": elapsed.as_millis() as u64,
                "version": env!("CARGO_PKG_VERSION"),
            }
        })
    }
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics plus the run manifest to `err`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_SATISFIED };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let start = Instant::now();
    let mut manifest = Manifest { command: "", model: None, spec: None, config: None, summary: json!(null) };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a, out, &mut manifest),
        Command::Falsify(a) => cmd_falsify(a, out, &mut manifest),
        Command::Export(a) => cmd_export(a, out, &mut manifest),
        Command::Inspect(a) => cmd_inspect(a, out, &mut manifest),
    };
    let code = match result {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            manifest.summary = json!({"error": failure.message});
            failure.code
        }
    };
    let _ = writeln!(err, "{}", manifest.to_json(start.elapsed()));
    code
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn exit_code(verdict: &Verdict) -> i32 {
    match verdict {
        Verdict::Satisfied { .. } => EXIT_SATISFIED,
        Verdict::Violated(_) => EXIT_VIOLATED,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn describe(out: &mut dyn Write, outcome: &VerifyOutcome) -> Result<(), Failure> {
    match &outcome.verdict {
        Verdict::Satisfied { certified_lower_bound } => {
            writeln!(out, "satisfied: certified lower bound {certified_lower_bound:e}")?;
        }
        Verdict::Violated(cex) => {
            writeln!(out, "violated: composed value {:e} at w = {:?}", cex.sat_value, cex.witness)?;
            for (k, (x, y)) in cex.inputs.iter().zip(&cex.outputs).enumerate() {
                writeln!(out, "  copy {k}: x = {x:?} -> y = {y:?}")?;
            }
        }
        Verdict::Unknown { best_lower_bound, regions_remaining } => {
            writeln!(out, "unknown: best lower bound {best_lower_bound:e}, {regions_remaining} regions open")?;
        }
    }
    writeln!(out, "{} regions in {} ms", outcome.regions, outcome.time.as_millis())?;
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, manifest: &mut Manifest) -> Result<i32, Failure> {
    manifest.command = "verify";
    manifest.model = Some(a.problem.model.clone());
    let loaded = load(&a.problem)?;
    manifest.spec = Some(loaded.description.clone());
    let config = config(&loaded.description, &a.flags)?;
    manifest.config = Some(config_json(&config));
    log::info!(
        "composed graph: {} nodes, {} piecewise units, W of dimension {}",
        loaded.problem.graph.len(),
        loaded.problem.graph.piecewise_units()?,
        loaded.problem.property.input_box.dim()
    );
    let outcome = verify(&loaded.problem, &config)?;
    let mut report = outcome.to_json();
    let mut code = exit_code(&outcome.verdict);
    if a.oracle {
        let exact = oracle_verify(&loaded.problem)?;
        let agrees = exact.tag() == outcome.verdict.tag();
        report["oracle"] = json!({"verdict": exact.tag(), "agrees": agrees});
        if !agrees {
            code = EXIT_ORACLE_MISMATCH;
        }
    }
    manifest.summary = json!({"verdict": outcome.verdict.tag(), "regions": outcome.regions});
    if a.flags.json {
        emit(out, &report)?;
    } else {
        describe(out, &outcome)?;
        if let Some(o) = report.get("oracle") {
            writeln!(out, "oracle: {} ({})", o["verdict"].as_str().unwrap_or("?"), if o["agrees"] == true { "agrees" } else { "DISAGREES" })?;
        }
    }
    Ok(code)
}

fn cmd_falsify(a: &FalsifyArgs, out: &mut dyn Write, manifest: &mut Manifest) -> Result<i32, Failure> {
    manifest.command = "falsify";
    manifest.model = Some(a.problem.model.clone());
    let loaded = load(&a.problem)?;
    manifest.spec = Some(loaded.description.clone());
    let mut config = config(&loaded.description, &a.flags)?;
    if let Some(b) = a.budget {
        config.falsify_samples = b;
    }
    manifest.config = Some(config_json(&config));
    let start = Instant::now();
    let found = falsify(&loaded.problem, config.falsify_samples, config.seed, config.tolerance)?;
    let outcome = VerifyOutcome {
        verdict: match found {
            Some(cex) => Verdict::Violated(cex),
            None => Verdict::Unknown { best_lower_bound: f64::NEG_INFINITY, regions_remaining: 0 },
        },
        regions: 0,
        time: start.elapsed(),
    };
    manifest.summary = json!({"verdict": outcome.verdict.tag(), "budget": config.falsify_samples});
    if a.flags.json {
        emit(out, &outcome.to_json())?;
    } else if let Verdict::Violated(_) = outcome.verdict {
        describe(out, &outcome)?;
    } else {
        writeln!(out, "no counterexample in {} evaluations", config.falsify_samples)?;
    }
    Ok(if outcome.verdict.is_violated() { EXIT_VIOLATED } else { EXIT_SATISFIED })
}

fn cmd_export(a: &ExportArgs, out: &mut dyn Write, manifest: &mut Manifest) -> Result<i32, Failure> {
    manifest.command = "export";
    manifest.model = Some(a.problem.model.clone());
    let loaded = load(&a.problem)?;
    manifest.spec = Some(loaded.description.clone());
    std::fs::create_dir_all(&a.out).map_err(|e| IoError::file(&a.out, e))?;
    let model = a.out.join("model.onnx");
    let property = a.out.join("property.vnnlib");
    let native = a.out.join("composed.json");
    export_problem(&loaded.problem, &model, &property)?;
    std::fs::write(&native, graph_to_json(&loaded.problem.graph)?).map_err(|e| IoError::file(&native, e))?;
    let files: Vec<String> = [&model, &property, &native].iter().map(|p| p.display().to_string()).collect();
    manifest.summary = json!({"files": files});
    if a.json {
        emit(out, &json!({"files": files}))?;
    } else {
        for f in &files {
            writeln!(out, "wrote {f}")?;
        }
    }
    Ok(EXIT_SATISFIED)
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write, manifest: &mut Manifest) -> Result<i32, Failure> {
    manifest.command = "inspect";
    manifest.model = Some(a.graph.clone());
    let graph = load_network(&a.graph)?;
    let stats = statistics(&graph)?;
    manifest.summary = json!({"nodes": graph.len(), "valid": true});
    if a.json {
        emit(out, &stats)?;
    } else {
        writeln!(out, "{}: valid", display(&a.graph))?;
        writeln!(out, "nodes: {}", stats["nodes"])?;
        writeln!(out, "input dimension: {}", stats["input_dim"])?;
        writeln!(out, "output dimension: {}", stats["output_dim"])?;
        writeln!(out, "piecewise units: {}", stats["piecewise_units"])?;
        writeln!(out, "depth: {}", stats["depth"])?;
        if let Some(kinds) = stats["kinds"].as_object() {
            for (k, n) in kinds {
                writeln!(out, "  {k}: {n}")?;
            }
        }
    }
    Ok(EXIT_SATISFIED)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn statistics(graph: &Graph) -> Result<serde_json::Value, Failure> {
    let report = validate(graph);
    if !report.is_ok() {
        return Err(Failure::from(report));
    }
    let mut kinds = std::collections::BTreeMap::new();
    for node in graph.nodes() {
        *kinds.entry(node.kind.name()).or_insert(0usize) += 1;
    }
    let mut depth = vec![0usize; graph.len()];
    for &id in graph.topological_order()? {
        let node = &graph.nodes()[id.index()];
        depth[id.index()] = node.preds.iter().map(|p| depth[p.index()] + 1).max().unwrap_or(0);
    }
    Ok(json!({
        "nodes": graph.len(),
        "input_dim": graph.input_dim()?,
        "output_dim": graph.output_dim()?,
        "piecewise_units": graph.piecewise_units()?,
        "depth": depth[graph.sink().index()],
        "kinds": kinds,
    }))
}
