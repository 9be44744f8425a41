//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`], runs, and emits an [`Artifact`]
//! as text, JSON or (for sweeps) CSV. Exit codes: 0 success, 1 a verification
//! threshold was missed, 2 configuration or usage error, 3 numerical abort.

mod config;

pub use config::{apply_overrides, parse_config, AtomConfig, NoiseConfig, RunConfig, SweepConfig};

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    convergence_check, fidelity, gate_input_state, ideal_output_state, sweep_2d, sweep_c, sweep_dt, truth_table, SweepResult, TruthTable,
};
use crate::error::Error;
use crate::hilbert::DensityMatrix;
use crate::ideal::{apply_schedule_ideal, ideal_trajectory};
use crate::lindblad::{write_snapshots_csv, Integrator, NoiseModel};
use crate::schedule::{atom_timing_budget, compile_atom_single_cavity, compile_nqubit, compile_toffoli, timing_budget, SegmentClass};

pub const EXIT_OK: i32 = 0;
pub const EXIT_THRESHOLD: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Phase and leakage tolerance for the ideal truth-table checks.
pub const IDEAL_TOLERANCE: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "cavgate", version, about = "Compile and simulate a multi-qubit controlled-phase gate in coupled cavities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file; missing fields take default values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config field, e.g. `--set noise.enabled=false`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1, global = true)]
    pub jobs: usize,
    /// Omit the timestamp and runtimes so identical configs give identical bytes.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check the ideal schedule's truth table against the controlled-phase gate.
    IdealVerify {
        /// Number of qubits; defaults to the config's `n`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Print the ideal truth table.
    TruthTable {
        /// Number of qubits; defaults to the config's `n`.
        #[arg(long)]
        n: Option<usize>,
        /// Use the Toffoli schedule instead.
        #[arg(long)]
        toffoli: bool,
    },
    /// Gate duration and operation count.
    Timing {
        /// Number of qubits; defaults to the config's `n`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// One noisy run.
    Simulate {
        /// Timing error added to every interaction, in ns.
        #[arg(long, allow_hyphen_values = true)]
        dt_ns: Option<f64>,
        /// Coupling ratio μ/g.
        #[arg(long)]
        c: Option<f64>,
        /// Per-segment diagnostics CSV.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        /// Also report the smallest eigenvalue of the final state.
        #[arg(long)]
        eigen: bool,
    },
    /// Fidelity over the timing-error grid at c = 1.
    SweepDt,
    /// Fidelity over the coupling-ratio grid at δt = 0.
    SweepC,
    /// Fidelity over the cross product of both grids.
    Sweep2d,
    /// Single-cavity atom schedule: ideal check and duration.
    AtomVariant,
    /// Fidelity at two photon cutoffs.
    ConvergenceCheck {
        /// Photon cutoff compared against the configured one; defaults to
        /// one above it.
        #[arg(long)]
        high: Option<usize>,
        /// Largest accepted fidelity difference.
        #[arg(long, default_value_t = 0.002)]
        threshold: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::IdealVerify { .. } => "ideal-verify",
            Command::TruthTable { .. } => "truth-table",
            Command::Timing { .. } => "timing",
            Command::Simulate { .. } => "simulate",
            Command::SweepDt => "sweep-dt",
            Command::SweepC => "sweep-c",
            Command::Sweep2d => "sweep-2d",
            Command::AtomVariant => "atom-variant",
            Command::ConvergenceCheck { .. } => "convergence-check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// A CLI failure and the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StepUnderflow { .. }
            | Error::TraceDrift { .. }
            | Error::NonFinite(_)
            | Error::NotHermitian(_)
            | Error::SectorViolation(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        };
        CliError { code, message: e.to_string() }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError { code: EXIT_CONFIG, message: message.into() }
}

/// The result of a command before formatting.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub command: &'static str,
    pub summary: Vec<String>,
    pub result: Value,
    pub sweep: Option<SweepResult>,
    pub passed: bool,
}

impl Artifact {
    fn new(command: &'static str, summary: Vec<String>, result: impl Serialize, passed: bool) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(Error::from)?;
        Ok(Self { command, summary, result, sweep: None, passed })
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_THRESHOLD
        }
    }

    /// Renders the artifact; `timestamp` is omitted when `None`.
    pub fn render(&self, format: Format, config: &RunConfig, timestamp: Option<u64>) -> Result<Vec<u8>, CliError> {
        let hash = config.hash();
        match format {
            Format::Text => {
                let mut s = String::new();
                for line in &self.summary {
                    s.push_str(line);
                    s.push('\n');
                }
                s.push_str(&format!("config sha256: {hash}\n"));
                Ok(s.into_bytes())
            }
            Format::Json => {
                let mut doc = json!({
                    "command": self.command,
                    "config_sha256": hash,
                    "config": config,
                    "passed": self.passed,
                    "result": self.result,
                });
                if let Some(t) = timestamp {
                    doc["generated_unix_s"] = json!(t);
                }
                let mut out = serde_json::to_vec_pretty(&doc).map_err(Error::from)?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| config_error(format!("{} has no CSV form; use --format text or json", self.command)))?;
                let mut preamble =
                    vec![format!("cavgate {}", self.command), format!("config_sha256: {hash}"), format!("config: {}", config.to_json())];
                if let Some(t) = timestamp {
                    preamble.push(format!("generated_unix_s: {t}"));
                }
                let mut out = Vec::new();
                sweep.write_csv(&mut out, &preamble)?;
                Ok(out)
            }
        }
    }
}

/// Truth-table check of the n-qubit schedule.
pub fn ideal_verify(config: &RunConfig, n: usize) -> Result<Artifact, CliError> {
    let schedule = compile_nqubit(n, &config.physical_params(n))?.with_photon_cutoff(config.photon_cutoff)?;
    let table = truth_table(&schedule.layout, |psi| apply_schedule_ideal(&schedule, psi))?;
    let phase = table.controlled_phase_error();
    let leak = table.max_leakage();
    let exact = table.is_diagonal() && phase < IDEAL_TOLERANCE && leak < IDEAL_TOLERANCE;
    let verdict = if exact { "truth table exact" } else { "truth table NOT exact" };
    let summary = vec![format!(
        "n={n}: {} operations, {verdict}, max phase error {phase:.2e}, max leakage {leak:.2e} (tolerance {IDEAL_TOLERANCE:e})",
        schedule.operation_count()
    )];
    let result = json!({
        "n": n,
        "operations": schedule.operation_count(),
        "max_phase_error": phase,
        "max_leakage": leak,
        "diagonal": table.is_diagonal(),
        "exact": exact,
        "table": table,
    });
    Artifact::new("ideal-verify", summary, result, exact)
}

fn table_lines(table: &TruthTable) -> Vec<String> {
    let bits = |b: &[u8]| b.iter().map(|x| char::from(b'0' + x)).collect::<String>();
    table
        .rows
        .iter()
        .map(|r| {
            let out = r.output.as_deref().map_or("leaked".to_string(), bits);
            format!("|{}⟩ → {:+.6}{:+.6}i |{}⟩  leakage {:.2e}", bits(&r.input), r.coefficient.re, r.coefficient.im, out, r.leakage)
        })
        .collect()
}

pub fn truth_table_command(config: &RunConfig, n: usize, toffoli: bool) -> Result<Artifact, CliError> {
    let params = config.physical_params(n);
    let schedule = if toffoli { compile_toffoli(n, &params)? } else { compile_nqubit(n, &params)? };
    let schedule = schedule.with_photon_cutoff(config.photon_cutoff)?;
    let table = truth_table(&schedule.layout, |psi| apply_schedule_ideal(&schedule, psi))?;
    let mut summary = vec![format!("{} ({} operations)", schedule.name, schedule.operation_count())];
    summary.extend(table_lines(&table));
    Artifact::new("truth-table", summary, &table, true)
}

pub fn timing(config: &RunConfig, n: usize) -> Result<Artifact, CliError> {
    let params = config.physical_params(n);
    let schedule = compile_nqubit(n, &params)?;
    let total = schedule.total_duration();
    let closed = timing_budget(n, &params)?;
    let summary = vec![format!(
        "n={n}: τ = {:.3} μs (closed form {:.3} μs), {} operations, {} retuning gaps",
        total * 1e6,
        closed * 1e6,
        schedule.operation_count(),
        schedule.count_class(SegmentClass::Adjust)
    )];
    let result = json!({
        "n": n,
        "duration_s": total,
        "closed_form_s": closed,
        "operations": schedule.operation_count(),
        "adjust_gaps": schedule.count_class(SegmentClass::Adjust),
        "segments": schedule.segments.iter().map(|s| json!({"label": s.label, "duration_s": s.duration})).collect::<Vec<_>>(),
    });
    Artifact::new("timing", summary, result, true)
}

#[derive(Serialize)]
struct SimulateResult {
    dt_ns: f64,
    c: f64,
    fidelity: f64,
    trace: f64,
    purity: f64,
    min_eigenvalue: Option<f64>,
    steps: usize,
    duration_s: f64,
    runtime_s: f64,
}

pub fn simulate(
    config: &RunConfig,
    dt_ns: f64,
    c: f64,
    snapshots: Option<&PathBuf>,
    eigen: bool,
    reproducible: bool,
) -> Result<Artifact, CliError> {
    let start = std::time::Instant::now();
    let setup = config.setup();
    let schedule = setup.schedule(dt_ns * 1e-9, c)?;
    let reference = setup.schedule(0.0, 1.0)?.with_model(false);
    let layout = &schedule.layout;
    let input = gate_input_state(layout)?;
    let target = ideal_output_state(&input, layout)?;
    let refs = ideal_trajectory(&reference, &input)?;
    let out = Integrator::new(&schedule)
        .noise(NoiseModel::from_params(&schedule.params))
        .options(setup.options.clone())
        .references(&refs)
        .run(&DensityMatrix::from_pure(&input))?;
    if let Some(path) = snapshots {
        let file = fs::File::create(path).map_err(Error::from)?;
        write_snapshots_csv(&out.snapshots, file)?;
    }
    let rho = &out.final_state;
    let r = SimulateResult {
        dt_ns,
        c,
        fidelity: fidelity(rho, &target)?,
        trace: rho.trace().re,
        purity: rho.purity(),
        min_eigenvalue: if eigen { Some(rho.min_eigenvalue()?) } else { None },
        steps: out.steps,
        duration_s: schedule.total_duration(),
        runtime_s: if reproducible { 0.0 } else { start.elapsed().as_secs_f64() },
    };
    let mut summary = vec![
        format!("n={} n_max={} δt={dt_ns} ns c={c}: F = {:.6}", setup.qubits, setup.photon_cutoff, r.fidelity),
        format!("trace {:.12}, purity {:.6}, {} steps", r.trace, r.purity, r.steps),
    ];
    if let Some(e) = r.min_eigenvalue {
        summary.push(format!("min eigenvalue {e:.3e}"));
    }
    Artifact::new("simulate", summary, &r, true)
}

fn sweep_artifact(command: &'static str, sweep: SweepResult, reproducible: bool) -> Result<Artifact, CliError> {
    let sweep = if reproducible { sweep.without_timing() } else { sweep };
    let failed = sweep.points.iter().filter(|p| p.fidelity.is_none()).count();
    let min = sweep.min_fidelity(|p| p.fidelity.is_some());
    let mut summary =
        vec![format!("{command}: {} points, min fidelity {}", sweep.points.len(), min.map_or("n/a".to_string(), |f| format!("{f:.6}")))];
    summary.extend(sweep.points.iter().map(|p| {
        let f = p.fidelity.map_or_else(|| format!("failed: {}", p.error.as_deref().unwrap_or("")), |f| format!("{f:.6}"));
        format!("δt = {:+} ns, c = {}: {f}", p.dt_ns, p.c)
    }));
    if failed > 0 {
        summary.push(format!("{failed} points failed"));
    }
    let mut a = Artifact::new(command, summary, &sweep, true)?;
    a.sweep = Some(sweep);
    Ok(a)
}

pub fn atom_variant(config: &RunConfig) -> Result<Artifact, CliError> {
    let params = config.atom_params();
    let schedule = compile_atom_single_cavity(&params)?;
    let table = truth_table(&schedule.layout, |psi| apply_schedule_ideal(&schedule, psi))?;
    let phase = table.controlled_phase_error();
    let leak = table.max_leakage();
    let total = schedule.total_duration();
    let closed = atom_timing_budget(&params)?;
    let exact = table.is_diagonal() && phase < IDEAL_TOLERANCE && leak < IDEAL_TOLERANCE;
    let consistent = ((total - closed) / closed).abs() < 1e-12;
    let summary = vec![
        format!(
            "{}: {} operations, truth table {}, max phase error {phase:.2e}, max leakage {leak:.2e}",
            schedule.name,
            schedule.operation_count(),
            if exact { "exact" } else { "NOT exact" }
        ),
        format!(
            "τ = {:.2} μs (closed form {:.2} μs), {} transport gaps",
            total * 1e6,
            closed * 1e6,
            schedule.count_class(SegmentClass::Transport)
        ),
    ];
    let result = json!({
        "operations": schedule.operation_count(),
        "max_phase_error": phase,
        "max_leakage": leak,
        "exact": exact,
        "duration_s": total,
        "closed_form_s": closed,
        "table": table,
    });
    Artifact::new("atom-variant", summary, result, exact && consistent)
}

pub fn convergence(config: &RunConfig, high: Option<usize>, threshold: f64) -> Result<Artifact, CliError> {
    let high = high.unwrap_or(config.photon_cutoff + 1);
    if high <= config.photon_cutoff {
        return Err(config_error(format!("--high ({high}) must exceed photon_cutoff ({})", config.photon_cutoff)));
    }
    let setup = config.setup();
    let c = setup.params.coupling_ratio();
    let r = convergence_check(&setup, config.photon_cutoff, high, config.time_error_ns * 1e-9, c)?;
    let passed = r.delta < threshold;
    let summary = vec![format!(
        "F(n_max={}) = {:.6}, F(n_max={}) = {:.6}, |ΔF| = {:.2e} ({} {threshold})",
        r.photon_cutoff_low,
        r.fidelity_low,
        r.photon_cutoff_high,
        r.fidelity_high,
        r.delta,
        if passed { "<" } else { "≥" }
    )];
    Artifact::new("convergence-check", summary, json!({"report": r, "threshold": threshold, "passed": passed}), passed)
}

/// Runs `command` against a resolved config.
pub fn run_command(command: &Command, config: &RunConfig, jobs: usize, reproducible: bool) -> Result<Artifact, CliError> {
    let n = |flag: &Option<usize>| flag.unwrap_or(config.n);
    let setup = || config.setup();
    match command {
        Command::IdealVerify { n: flag } => ideal_verify(config, n(flag)),
        Command::TruthTable { n: flag, toffoli } => truth_table_command(config, n(flag), *toffoli),
        Command::Timing { n: flag } => timing(config, n(flag)),
        Command::Simulate { dt_ns, c, snapshots, eigen } => {
            let c = c.unwrap_or_else(|| setup().params.coupling_ratio());
            simulate(config, dt_ns.unwrap_or(config.time_error_ns), c, snapshots.as_ref(), *eigen, reproducible)
        }
        Command::SweepDt => sweep_artifact("sweep-dt", sweep_dt(&setup(), &config.sweep.dt_ns, jobs)?, reproducible),
        Command::SweepC => sweep_artifact("sweep-c", sweep_c(&setup(), &config.sweep.c, jobs)?, reproducible),
        Command::Sweep2d => sweep_artifact("sweep-2d", sweep_2d(&setup(), &config.sweep.dt_ns, &config.sweep.c, jobs)?, reproducible),
        Command::AtomVariant => atom_variant(config),
        Command::ConvergenceCheck { high, threshold } => convergence(config, *high, *threshold),
    }
}

fn default_format(command: &Command) -> Format {
    match command {
        Command::SweepDt | Command::SweepC | Command::Sweep2d => Format::Csv,
        _ => Format::Text,
    }
}

/// Parses the config, runs the command and writes the artifact. Returns the
/// process exit code.
pub fn execute<W: Write, E: Write>(cli: &Cli, stdout: &mut W, stderr: &mut E) -> i32 {
    match execute_inner(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn execute_inner<W: Write>(cli: &Cli, stdout: &mut W) -> Result<i32, CliError> {
    if cli.jobs == 0 {
        return Err(config_error("--jobs must be at least 1"));
    }
    let text = match &cli.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?),
        None => None,
    };
    let config = parse_config(text.as_deref(), &cli.overrides)?;
    let format = cli.format.unwrap_or_else(|| default_format(&cli.command));
    let artifact = run_command(&cli.command, &config, cli.jobs, cli.reproducible)?;
    let timestamp = if cli.reproducible { None } else { Some(SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())) };
    let bytes = artifact.render(format, &config, timestamp)?;
    match &cli.out {
        Some(path) => {
            fs::write(path, &bytes).map_err(|e| config_error(format!("cannot write {}: {e}", path.display())))?;
            for line in &artifact.summary[..artifact.summary.len().min(1)] {
                writeln!(stdout, "{line}").map_err(Error::from)?;
            }
        }
        None => stdout.write_all(&bytes).map_err(Error::from)?,
    }
    Ok(artifact.exit_code())
}
