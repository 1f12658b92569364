//! `gridgcn` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridgcn::pipeline::{
    cmd_datagen, cmd_eval, cmd_place, cmd_train, cmd_transfer, cmd_verify_bounds, MetricsReport,
    RunConfig,
};
use gridgcn::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(
    name = "gridgcn",
    version,
    about = "Graph learning on power-grid admittance matrices"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate readings and write the windowed dataset.
    Datagen,
    /// Choose metered buses.
    Place,
    /// Train on the generated dataset and write a checkpoint.
    Train,
    /// Score the checkpoint on the held-out split.
    Eval,
    /// Check the stability bounds against random perturbations.
    VerifyBounds,
    /// Evaluate the checkpoint after tripping one line.
    Transfer {
        /// Branch index to trip (overrides the config).
        #[arg(long)]
        line: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Run(Error),
    /// Some bound rows were falsified; the report is still written.
    Violated(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Violated(_) => EXIT_NUMERICAL,
            Failure::Run(e) if e.is_numerical() => EXIT_NUMERICAL,
            Failure::Run(
                Error::InvalidArgument(_)
                | Error::Disconnected { .. }
                | Error::IndexOutOfRange { .. }
                | Error::InvalidBranch { .. }
                | Error::BoundDomain(_),
            ) => EXIT_CONFIG,
            Failure::Run(_) => EXIT_OTHER,
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.6e}"))
}

fn summary(label: &str, m: &MetricsReport) {
    match (m.mse, m.accuracy) {
        (Some(mse), _) => println!(
            "{label}: samples {} mse {mse:.6e} rls_mse {}",
            m.samples,
            fmt(m.baseline_mse)
        ),
        (_, Some(acc)) => println!(
            "{label}: samples {} accuracy {acc:.4} precision {} recall {} f1 {} all-zeros {}",
            m.samples,
            fmt(m.precision),
            fmt(m.recall),
            fmt(m.f1),
            fmt(m.zeros_accuracy)
        ),
        _ => println!("{label}: samples {}", m.samples),
    }
    for flag in &m.flags {
        println!("  note: {flag}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Datagen => {
            let m = cmd_datagen(&cfg).map_err(Failure::Run)?;
            println!(
                "wrote {} samples ({} attacked) to {}",
                m.samples,
                m.attacked_samples,
                cfg.out.display()
            );
        }
        Command::Place => {
            let plan = cmd_place(&cfg).map_err(Failure::Run)?;
            println!(
                "buses {:?} sigma_min {:.6e}",
                plan.sorted_buses(),
                plan.sigma_min
            );
        }
        Command::Train => {
            let r = cmd_train(&cfg).map_err(Failure::Run)?;
            println!("best epoch {}", r.best_epoch);
            summary("val", &r.validation);
            summary("test", &r.test);
        }
        Command::Eval => summary("test", &cmd_eval(&cfg).map_err(Failure::Run)?),
        Command::VerifyBounds => {
            let rows = cmd_verify_bounds(&cfg).map_err(Failure::Run)?;
            let violated = rows.iter().filter(|r| !r.satisfied).count();
            println!("{} rows, {violated} with violations", rows.len());
            if violated > 0 {
                return Err(Failure::Violated(violated));
            }
        }
        Command::Transfer { line } => {
            if let Some(line) = line {
                cfg.trip_line = line;
            }
            let r = cmd_transfer(&cfg).map_err(Failure::Run)?;
            println!("tripped branch {} ({}-{})", r.tripped_line, r.from, r.to);
            summary("original", &r.original);
            summary("tripped", &r.tripped);
            summary("stale gso", &r.stale_gso);
            println!("mse inflation {}", fmt(r.mse_inflation));
            println!(
                "restore reproduces original: {}",
                r.restored_matches_original
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("config error: {msg}"),
                Failure::Run(e) => eprintln!("error: {e}"),
                Failure::Violated(n) => eprintln!("error: {n} bound rows violated"),
            }
            ExitCode::from(f.code())
        }
    }
}
