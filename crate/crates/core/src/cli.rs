//! `interfero` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 IO error,
//! 4 statistical acceptance failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    fringe_report_with, parse_record, write_counts_csv, write_report_csv, AnalysisError,
    CountsSummary,
};
use crate::dsl::{builtin, elaborate, parse_circuit, CircuitDescription, ElaborationConfig};
use crate::experiment::{
    run_sweep, spacelike_check, CircuitModel, ConfigPolicy, ExperimentError, SweepPlan,
    TimelineParams,
};
use crate::mode_algebra::{apply, detection_probs, OpticalState, CONSTRUCTION_TOLERANCE};

pub const SEED_ENV: &str = "INTERFERO_SEED";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const COUNTS_FILE: &str = "counts.csv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_CSV_FILE: &str = "report.csv";

const MANIFEST_MARKER: &str = "manifest";
const TIMESTAMP_FIELD: &str = "created_at";

#[derive(Debug, Parser)]
#[command(name = "interfero", version, about = "Delayed-choice interferometer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a circuit and dry-run its elaboration.
    Check(CheckArgs),
    /// Run a seeded phase sweep and write the event log and counts.
    Sweep(SweepArgs),
    /// Sort an event log and test the fringes against the analytic model.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct CheckArgs {
    circuit: PathBuf,
    /// Parameter binding, NAME=VALUE.
    #[arg(long = "set", value_parser = parse_binding)]
    set: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    circuit: PathBuf,
    #[arg(long, default_value = "random")]
    policy: ConfigPolicy,
    /// start:stop:steps, inclusive of both ends.
    #[arg(long, default_value = "0:6.283185307179586:17", value_parser = parse_phases)]
    phases: (f64, f64, u32),
    /// Trials per phase point.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Master seed; falls back to INTERFERO_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// length_m,tof_ns,delay_ns,switch_ns
    #[arg(long, default_value = "48,160,80,40", value_parser = parse_timeline)]
    timeline: TimelineParams,
    /// Circuit parameter swept over the phase grid.
    #[arg(long, default_value = "phi_e")]
    param: String,
    /// Fixed parameter binding, NAME=VALUE.
    #[arg(long = "set", value_parser = parse_binding)]
    set: Vec<(String, f64)>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    log: PathBuf,
    /// Report directory (default: next to the log).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_owned(), v))
}

fn parse_phases(s: &str) -> Result<(f64, f64, u32), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:steps, got `{s}`"));
    }
    let start: f64 = parts[0].parse().map_err(|e| format!("start: {e}"))?;
    let stop: f64 = parts[1].parse().map_err(|e| format!("stop: {e}"))?;
    let steps: u32 = parts[2].parse().map_err(|e| format!("steps: {e}"))?;
    Ok((start, stop, steps))
}

fn parse_timeline(s: &str) -> Result<TimelineParams, String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != 4 {
        return Err("expected length_m,tof_ns,delay_ns,switch_ns".into());
    }
    TimelineParams::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Statistics,
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Statistics => 4,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reproducibility envelope, written as line 1 of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub record: String,
    pub tool: String,
    pub tool_version: String,
    /// Excluded from the determinism hash.
    pub created_at: String,
    pub circuit: CircuitSource,
    pub bindings: BTreeMap<String, f64>,
    pub sweep_param: String,
    pub plan: SweepPlan,
    pub timeline: TimelineParams,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSource {
    pub path: String,
    pub sha256: String,
    pub source: String,
}

/// Read a circuit file; a missing file may name a shipped circuit.
fn load_circuit(path: &Path) -> Result<String, CliError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == io::ErrorKind::NotFound => path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(builtin::lookup)
            .map(str::to_owned)
            .ok_or_else(|| CliError::Io(format!("{}: {e}", path.display()))),
        Err(e) => Err(CliError::Io(format!("{}: {e}", path.display()))),
    }
}

fn parse_source(path: &Path, source: &str) -> Result<CircuitDescription, CliError> {
    parse_circuit(source).map_err(|e| CliError::Config(format!("{}:{e}", path.display())))
}

/// SHA-256 of an event log with the manifest timestamp removed.
pub fn determinism_hash(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    let split = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
    let (first, rest) = bytes.split_at(split);
    let mut manifest: serde_json::Value = serde_json::from_slice(first)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    if let Some(obj) = manifest.as_object_mut() {
        obj.remove(TIMESTAMP_FIELD);
    }
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&manifest).map_err(io::Error::other)?);
    hasher.update(rest);
    Ok(hex::encode(hasher.finalize()))
}

/// Run the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    let result = match cli.command {
        Command::Check(a) => check(&a, out),
        Command::Sweep(a) => sweep(&a, out),
        Command::Analyze(a) => analyze(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Config(m) | CliError::Io(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
                CliError::Statistics => {
                    let _ = writeln!(err, "error: statistical acceptance failed");
                }
            }
            e.code()
        }
    }
}

fn check(args: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let source = load_circuit(&args.circuit)?;
    let desc = parse_source(&args.circuit, &source)?;
    let w = |e: io::Error| CliError::Io(e.to_string());

    let mut bindings = ElaborationConfig::new();
    for (k, v) in &args.set {
        bindings = bindings.with_param(k, *v);
    }
    for p in desc.params() {
        if p.default.is_none() && !bindings.params.contains_key(&p.name) {
            writeln!(out, "note: parameter {} unbound, using 0", p.name).map_err(w)?;
            bindings = bindings.with_param(&p.name, 0.0);
        }
    }

    let names: Vec<String> = desc.modes().iter().map(|m| m.to_string()).collect();
    writeln!(out, "circuit {}", args.circuit.display()).map_err(w)?;
    writeln!(out, "modes {} (photon enters {})", names.join(" "), desc.source_mode()).map_err(w)?;
    for el in desc.elements() {
        writeln!(out, "  {}", el.kind).map_err(w)?;
    }
    for d in desc.detectors() {
        writeln!(out, "  {} <- {}", d.name, d.mode).map_err(w)?;
    }

    let removable = desc.removable_elements();
    let settings: Vec<(&str, bool)> = if removable.is_empty() {
        vec![("fixed", true)]
    } else {
        vec![("removable on", true), ("removable off", false)]
    };
    for (label, on) in settings {
        let mut cfg = bindings.clone();
        for name in &removable {
            cfg = cfg.with_removable(name, on);
        }
        let m = elaborate(&desc, &cfg).map_err(|e| CliError::Config(e.to_string()))?;
        let residual = m.unitarity_residual();
        if residual > CONSTRUCTION_TOLERANCE {
            return Err(CliError::Config(format!(
                "{label}: not unitary, residual {residual:.3e}"
            )));
        }
        writeln!(
            out,
            "{label}: unitary OK, residual ≤ 1e-12 ({residual:.1e}), {} modes",
            m.dim()
        )
        .map_err(w)?;
        let src = m
            .input_index(desc.source_mode())
            .expect("source is an input mode");
        let psi = OpticalState::single_photon(m.input_modes().to_vec(), src)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let probs = apply(&m, &psi)
            .and_then(|s| detection_probs(&s))
            .map_err(|e| CliError::Config(e.to_string()))?;
        for d in desc.detectors() {
            let i = m.output_index(&d.mode).expect("detector on an output");
            writeln!(out, "  P({}) = {:.6}", d.name, probs[i]).map_err(w)?;
        }
    }
    Ok(())
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{SEED_ENV}=`{v}`: {e}"))),
        Err(_) => Ok(0),
    }
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let source = load_circuit(&args.circuit)?;
    let desc = parse_source(&args.circuit, &source)?;
    let model = CircuitModel::new(desc, &args.set, &args.param)?;
    let (phase_start, phase_stop, steps) = args.phases;
    let plan = SweepPlan {
        phase_start,
        phase_stop,
        steps,
        trials_per_point: args.trials,
        policy: args.policy,
        master_seed: resolve_seed(args.seed)?,
    };
    plan.validate()?;

    let manifest = RunManifest {
        record: MANIFEST_MARKER.into(),
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        circuit: CircuitSource {
            path: args.circuit.display().to_string(),
            sha256: sha256_hex(source.as_bytes()),
            source,
        },
        bindings: args.set.iter().cloned().collect(),
        sweep_param: args.param.clone(),
        plan,
        timeline: args.timeline,
        master_seed: plan.master_seed,
    };

    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let log_path = args.out.join(EVENTS_FILE);
    let summary = {
        let run = || write_log(&log_path, &manifest, &model);
        match args.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?
                .install(run)?,
            None => run()?,
        }
    };

    let counts_path = args.out.join(COUNTS_FILE);
    let mut csv = BufWriter::new(File::create(&counts_path).map_err(io_err(&counts_path))?);
    write_counts_csv(&mut csv, &summary, &model).map_err(io_err(&counts_path))?;
    csv.flush().map_err(io_err(&counts_path))?;

    let hash = determinism_hash(&log_path).map_err(io_err(&log_path))?;
    let timing = spacelike_check(&args.timeline);
    let w = |e: io::Error| CliError::Io(e.to_string());
    writeln!(
        out,
        "{} trials over {} phase points written to {}",
        summary.total_trials(),
        plan.steps,
        log_path.display()
    )
    .map_err(w)?;
    writeln!(
        out,
        "choice complete at {} ns, space-like: {} (margin {:.3} m)",
        timing.choice_complete_time_ns(),
        timing.spacelike,
        timing.margin_m
    )
    .map_err(w)?;
    writeln!(out, "counts: {}", counts_path.display()).map_err(w)?;
    writeln!(out, "determinism hash: {hash}").map_err(w)?;
    Ok(())
}

fn write_log(
    path: &Path,
    manifest: &RunManifest,
    model: &CircuitModel,
) -> Result<CountsSummary, CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let to_io = |e: serde_json::Error| CliError::Io(format!("{}: {e}", path.display()));
    serde_json::to_writer(&mut w, manifest).map_err(to_io)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    let mut summary = CountsSummary::new();
    for record in run_sweep(&manifest.plan, model, &manifest.timeline)? {
        serde_json::to_writer(&mut w, &record).map_err(to_io)?;
        w.write_all(b"\n").map_err(io_err(path))?;
        summary.add(&record)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(summary)
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = File::open(&args.log).map_err(io_err(&args.log))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(io_err(&args.log))?,
        None => return Err(CliError::Config(format!("{}: empty log", args.log.display()))),
    };
    let manifest: RunManifest = serde_json::from_str(&first).map_err(|e| {
        CliError::Config(format!("{}: line 1 is not a run manifest: {e}", args.log.display()))
    })?;
    if manifest.record != MANIFEST_MARKER {
        return Err(CliError::Config(format!(
            "{}: line 1 is not a run manifest",
            args.log.display()
        )));
    }
    if sha256_hex(manifest.circuit.source.as_bytes()) != manifest.circuit.sha256 {
        return Err(CliError::Config("embedded circuit does not match its hash".into()));
    }
    let desc = parse_source(Path::new(&manifest.circuit.path), &manifest.circuit.source)?;
    let bindings: Vec<(String, f64)> = manifest.bindings.clone().into_iter().collect();
    let model = CircuitModel::new(desc, &bindings, &manifest.sweep_param)?;

    let mut summary = CountsSummary::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(&args.log))?;
        if line.trim().is_empty() {
            continue;
        }
        summary.add(&parse_record(i + 2, &line)?)?;
    }
    let report = fringe_report_with(&summary, &model)?;

    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .log
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let text_path = dir.join(REPORT_TEXT_FILE);
    fs::write(&text_path, report.to_string()).map_err(io_err(&text_path))?;
    let csv_path = dir.join(REPORT_CSV_FILE);
    let mut csv = Vec::new();
    write_report_csv(&mut csv, &report).expect("writing to memory");
    fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;

    write!(out, "{report}").map_err(|e| CliError::Io(e.to_string()))?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Statistics)
    }
}
