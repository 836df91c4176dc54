//! `ponsim`: batch simulation sweeps and closed-form idle analysis.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ponsim_core::experiment::{self, ExperimentError};
use ponsim_core::idle::{delta_idle, idle_time, IdleInputs};
use ponsim_core::time::SimTime;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ponsim",
    about = "EPON/GPON upstream DBA simulator: report-position impact on idle time and delay",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment sweep described by a config file and write
    /// per-(standard, Z) results CSVs.
    Simulate(SimulateArgs),
    /// Evaluate the closed-form idle-time reduction for one burst.
    Analyze(AnalyzeArgs),
    /// Split an existing results CSV into per-curve plot data files.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment description (line-oriented `key = value`).
    #[arg(long)]
    config: PathBuf,
    /// Base seed for derived replication seeds.
    #[arg(long, default_value_t = 1)]
    seed_base: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (overrides `out` from the config; default `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit per-curve plot data next to each results CSV.
    #[arg(long)]
    plotdata: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scheduling instant with the report at the beginning (e.g. `4ms`).
    #[arg(long = "gamma-a")]
    gamma_a: String,
    /// Scheduling instant with the report at the end.
    #[arg(long = "gamma-b")]
    gamma_b: String,
    /// Gate signaling delay T.
    #[arg(long = "T")]
    gate_delay: String,
    /// End of the preceding upstream arrival at the OLT.
    #[arg(long)]
    omega: String,
    /// Guard time.
    #[arg(long)]
    tg: String,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Results CSV produced by `simulate`.
    csv: PathBuf,
    /// Output directory (default: alongside the CSV).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PONSIM_LOG")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Plotdata(args) => plotdata(args),
    }
}

fn experiment_exit(err: &ExperimentError) -> ExitCode {
    match err {
        ExperimentError::Io { .. } => ExitCode::from(EXIT_IO),
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn simulate(args: SimulateArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    let spec = match experiment::parse_config(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out_dir = args
        .out
        .or_else(|| spec.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let files = match experiment::run_experiment(&spec, args.seed_base, args.jobs, &out_dir) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return experiment_exit(&e);
        }
    };
    for f in &files {
        println!("{}", f.display());
        if args.plotdata {
            match experiment::emit_plotdata(f, &out_dir) {
                Ok(dats) => {
                    for d in dats {
                        println!("{}", d.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return experiment_exit(&e);
                }
            }
        }
    }
    ExitCode::SUCCESS
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let parse = |name: &str, v: &str| -> Result<SimTime, String> {
        SimTime::parse(v).map_err(|e| format!("--{name}: {e}"))
    };
    let inputs = (|| -> Result<IdleInputs, String> {
        Ok(IdleInputs {
            gamma_begin: parse("gamma-a", &args.gamma_a)?,
            gamma_end: parse("gamma-b", &args.gamma_b)?,
            gate_delay: parse("T", &args.gate_delay)?,
            omega: parse("omega", &args.omega)?,
            guard: parse("tg", &args.tg)?,
        })
    })();
    let inputs = match inputs {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (case, delta) = match delta_idle(&inputs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let idle_end = idle_time(inputs.gamma_end, inputs.gate_delay, inputs.omega, inputs.guard);
    let idle_begin = idle_time(inputs.gamma_begin, inputs.gate_delay, inputs.omega, inputs.guard);
    println!("idle_end       = {idle_end}");
    println!("idle_beginning = {idle_begin}");
    println!("case           = {}", case.name());
    println!("delta_idle     = {delta}");
    ExitCode::SUCCESS
}

fn plotdata(args: PlotdataArgs) -> ExitCode {
    let out = args.out.unwrap_or_else(|| {
        args.csv
            .parent()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    match experiment::emit_plotdata(&args.csv, &out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            experiment_exit(&e)
        }
    }
}
