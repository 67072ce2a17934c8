//! Command-line front end: catalog verification and export, error sweeps,
//! and sequence search.

use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use cpforge::catalog::{catalog_entry, load_catalog, regime_defaults, CatalogTarget};
use cpforge::metrics::{
    gate_fidelity, populations_from_ground, single_pulse_reference, standard_gate, transfer_cost,
};
use cpforge::model::SystemParams;
use cpforge::optimize::{optimize, Budget, OptimizationProblem};
use cpforge::scan::{robustness_summary, scan_fidelity, scan_populations, EpsilonGrid};
use cpforge::CompositeSequence;

#[derive(Parser)]
#[command(
    name = "cpforge",
    version,
    about = "Composite-pulse sequences for a driven three-level ladder: verify, sweep, optimize"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the built-in sequences and check them against their
    /// published areas.
    VerifyTable(VerifyArgs),
    /// Sweep populations or gate fidelity over the relative amplitude error
    /// and emit CSV.
    Scan(ScanArgs),
    /// Search pulse amplitudes and phases for a problem given as JSON.
    Optimize(OptimizeArgs),
    /// Built-in sequence data.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Args)]
struct VerifyArgs {
    /// Emit the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["catalog", "seq_file", "single_pulse"]))]
struct ScanArgs {
    /// Built-in sequence name (P1, half, X, H, T).
    #[arg(long)]
    catalog: Option<String>,
    /// Sequence JSON file.
    #[arg(long, value_name = "PATH")]
    seq_file: Option<PathBuf>,
    /// One-pulse reference for a gate (X or H).
    #[arg(long, value_name = "GATE")]
    single_pulse: Option<String>,
    /// Anharmonicity times pulse duration; defaults to the sequence's own
    /// value (20 for one-pulse references).
    #[arg(long = "deltaT", value_name = "REAL")]
    delta_t: Option<f64>,
    /// populations, or fidelity:<gate> with gate one of X, H, T.
    #[arg(long, default_value = "populations")]
    mode: String,
    /// Error grid as lo:hi:n.
    #[arg(long, default_value = "-0.5:0.5:201", allow_hyphen_values = true)]
    eps: String,
    /// Merit threshold used for the robustness width.
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
    /// Output CSV path (stdout when absent).
    #[arg(short, long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Problem description JSON.
    #[arg(long, value_name = "PATH")]
    problem: PathBuf,
    /// Random starts.
    #[arg(long, default_value_t = 64)]
    starts: usize,
    /// Objective evaluations allowed per start.
    #[arg(long, default_value_t = 6000)]
    max_evals: usize,
    /// Seed for all randomness.
    #[arg(long, env = "CPFORGE_SEED", default_value_t = 42)]
    seed: u64,
    /// Where to write the best sequence as JSON.
    #[arg(long, value_name = "PATH")]
    out_seq: Option<PathBuf>,
    /// Where to write the run report as JSON.
    #[arg(long, value_name = "PATH")]
    out_report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Write the five built-in sequences as JSON files.
    Export {
        /// Target directory (created if missing).
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
}

/// Post-parse errors split by exit code: bad flag values exit 2 like other
/// usage problems, anything that goes wrong while doing the work exits 1.
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        }
    }
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::VerifyTable(args) => cmd_verify_table(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Catalog(CatalogCommand::Export { dir }) => cmd_catalog_export(dir),
    }
}

fn merit_at_zero(entry: &cpforge::CatalogEntry) -> Result<(&'static str, f64), CliError> {
    let u = entry.sequence().compose(0.0).map_err(failure)?;
    Ok(match entry.target() {
        CatalogTarget::FullTransfer => ("p1", populations_from_ground(&u).p1),
        CatalogTarget::HalfTransfer => (
            "cost",
            transfer_cost(
                &populations_from_ground(&u),
                &entry.target().transfer().expect("transfer target"),
            ),
        ),
        _ => (
            "fidelity",
            gate_fidelity(&u, &entry.target().gate().expect("gate target")),
        ),
    })
}

fn cmd_verify_table(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let mut all_ok = true;
    let mut rows = Vec::new();
    for entry in load_catalog() {
        let (merit_kind, merit) = merit_at_zero(&entry)?;
        let flagged = merit_kind == "fidelity" && merit < 0.99;
        all_ok &= entry.area_ok();
        rows.push((entry, merit_kind, merit, flagged));
    }

    if args.json {
        let entries: Vec<serde_json::Value> = rows
            .iter()
            .map(|(entry, merit_kind, merit, flagged)| {
                serde_json::json!({
                    "target": entry.target().to_string(),
                    "pulses": entry.sequence().pulses().len(),
                    "published_area_over_pi": entry.published_area_over_pi(),
                    "computed_area_over_pi": entry.sequence().total_area_over_pi(),
                    "area_ok": entry.area_ok(),
                    "merit_kind": merit_kind,
                    "merit_at_zero": merit,
                    "flagged": flagged,
                })
            })
            .collect();
        let report = serde_json::json!({
            "entries": entries,
            "all_areas_ok": all_ok,
        });
        println!("{}", serde_json::to_string_pretty(&report).map_err(failure)?);
    } else {
        println!(
            "{:<8} {:>6} {:>10} {:>10} {:>9}  {:<6} merit@0",
            "target", "pulses", "A/pi(pub)", "A/pi(cmp)", "dev", "area"
        );
        for (entry, merit_kind, merit, flagged) in &rows {
            println!(
                "{:<8} {:>6} {:>10.2} {:>10.4} {:>9.4}  {:<6} {merit_kind}={merit:.6}{}",
                entry.target().to_string(),
                entry.sequence().pulses().len(),
                entry.published_area_over_pi(),
                entry.sequence().total_area_over_pi(),
                entry.area_deviation_over_pi(),
                if entry.area_ok() { "ok" } else { "FAIL" },
                if *flagged { "  [below 0.99]" } else { "" },
            );
        }
        let ok_count = rows.iter().filter(|(e, ..)| e.area_ok()).count();
        println!("area checks: {ok_count}/{} ok", rows.len());
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

enum ScanMode {
    Populations,
    Fidelity(String),
}

fn parse_mode(mode: &str) -> Result<ScanMode, CliError> {
    if mode == "populations" {
        return Ok(ScanMode::Populations);
    }
    if let Some(gate) = mode.strip_prefix("fidelity:") {
        standard_gate(gate).map_err(usage)?;
        return Ok(ScanMode::Fidelity(gate.to_string()));
    }
    Err(usage(format!(
        "mode must be 'populations' or 'fidelity:<gate>', got {mode:?}"
    )))
}

fn with_delta(seq: &CompositeSequence, delta_t: f64) -> Result<CompositeSequence, CliError> {
    let params = SystemParams::new(delta_t).map_err(usage)?;
    let renamed = CompositeSequence::new(seq.pulses().to_vec(), params).map_err(failure)?;
    Ok(match seq.name() {
        Some(name) => renamed.with_name(name),
        None => renamed,
    })
}

fn resolve_sequence(args: &ScanArgs) -> Result<CompositeSequence, CliError> {
    if let Some(name) = &args.catalog {
        let entry = catalog_entry(name).map_err(usage)?;
        return match args.delta_t {
            Some(d) => with_delta(entry.sequence(), d),
            None => Ok(entry.sequence().clone()),
        };
    }
    if let Some(path) = &args.seq_file {
        let seq = CompositeSequence::load_json(path).map_err(failure)?;
        return match args.delta_t {
            Some(d) => with_delta(&seq, d),
            None => Ok(seq),
        };
    }
    let gate = args.single_pulse.as_deref().expect("clap enforces one source");
    let delta_t = args.delta_t.unwrap_or(regime_defaults().delta_t_single);
    single_pulse_reference(gate, delta_t).map_err(usage)
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode, CliError> {
    let mode = parse_mode(&args.mode)?;
    let grid: EpsilonGrid = args.eps.parse().map_err(usage)?;
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(usage(format!(
            "threshold must lie strictly between 0 and 1, got {}",
            args.threshold
        )));
    }
    let seq = resolve_sequence(&args)?;

    let profile = match &mode {
        ScanMode::Populations => scan_populations(&seq, &grid).map_err(failure)?,
        ScanMode::Fidelity(gate_name) => {
            let gate = standard_gate(gate_name).map_err(usage)?;
            scan_fidelity(&seq, &gate, &grid).map_err(failure)?.with_target(gate_name.clone())
        }
    };

    match &args.out {
        Some(path) => profile.save_csv(path).map_err(failure)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            profile.write_csv(&mut lock).map_err(failure)?;
            lock.flush().map_err(failure)?;
        }
    }

    if grid.brackets_zero() {
        let s = robustness_summary(&profile, args.threshold).map_err(failure)?;
        eprintln!(
            "center={:.6} worst={:.6} width@{}={:.6}",
            s.center, s.worst, args.threshold, s.width
        );
    } else {
        eprintln!("grid does not bracket eps=0; no robustness summary");
    }
    if let Some(path) = &args.out {
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<ExitCode, CliError> {
    let budget = Budget::new(args.starts, args.max_evals).map_err(usage)?;
    let problem = OptimizationProblem::load_json(&args.problem).map_err(failure)?;
    let result = optimize(&problem, budget, args.seed).map_err(failure)?;

    if let Some(path) = &args.out_seq {
        result.sequence.save_json(path).map_err(failure)?;
    }
    if let Some(path) = &args.out_report {
        let text =
            serde_json::to_string_pretty(&result.report(args.starts)).map_err(failure)?;
        std::fs::write(path, text + "\n").map_err(failure)?;
    }
    println!(
        "objective={:.11e} worst_merit={:.11e} area_over_pi={:.11e} evals={} converged={}",
        result.objective,
        result.worst_merit,
        result.area / std::f64::consts::PI,
        result.evals,
        result.converged
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog_export(dir: PathBuf) -> Result<ExitCode, CliError> {
    std::fs::create_dir_all(&dir).map_err(failure)?;
    for entry in load_catalog() {
        let path = dir.join(format!("{}.json", entry.target().cli_name()));
        entry.sequence().save_json(&path).map_err(failure)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
