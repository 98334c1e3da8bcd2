use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rcsg::cli::{self, io, RunConfig};
use rcsg::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "rcsg", version, about = "Ground states of rotating condensates by Riemannian conjugate gradients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the `output` key, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute (or reuse) the reference solution of a preset.
    Reference {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several methods on a preset against its reference energy.
    Compare {
        #[arg(long)]
        preset: String,
        /// Comma-separated `METRIC:MOMENTUM` pairs, e.g. `AU:PR,H10:PR,ZERO`.
        #[arg(long)]
        methods: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a stored state via the spectrum of the projected Hessian.
    Certify {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    NotConverged(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::TrappingViolation(_) => Failure::Config(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = io::read_file(path)?;
    cli::parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn preset(name: &str) -> Result<RunConfig, Failure> {
    RunConfig::preset(name).ok_or_else(|| Failure::Config(format!("unknown preset '{name}'")))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let report = cli::run(&cfg, &out)?;
            let o = &report.outcome;
            println!(
                "{} after {} iterations: E = {:.12}, lambda = {:.12}",
                if o.converged() { "converged" } else { "stopped" },
                o.iterations(),
                o.energy,
                o.lambda
            );
            if let Some(c) = &report.certificate {
                print!("{}", io::certificate_text(c));
            }
            if !o.converged() {
                return Err(Failure::NotConverged(format!("no convergence within {} iterations", cfg.max_iter)));
            }
        }
        Command::Reference { preset: name, out } => {
            let cfg = preset(&name)?;
            let (_, e) = cli::reference(&cfg, &out)?;
            println!("reference energy {e:.16e}");
        }
        Command::Compare { preset: name, methods, out } => {
            let cfg = preset(&name)?;
            let methods = cli::parse_methods(&methods).map_err(Failure::Config)?;
            let rows = cli::compare(&cfg, &methods, &out)?;
            print!("{}", cli::runner::comparison_csv(&rows));
        }
        Command::Certify { state, config } => {
            let cfg = load_config(&config)?;
            let c = cli::certify_state(&cfg, &state)?;
            print!("{}", io::certificate_text(&c));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    if let Some(threads) = std::env::var("GP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match execute(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
