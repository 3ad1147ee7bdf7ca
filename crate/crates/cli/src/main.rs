use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hbf_core::harness::{emit_csv, run_experiment, write_csv, ExperimentKind, ExperimentSpec, Overrides};

#[derive(Parser)]
#[command(
    name = "hbf",
    about = "Monte-Carlo experiments for low-resolution hybrid beamforming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral efficiency versus SNR.
    SuSnrSweep(RunArgs),
    /// Spectral efficiency versus array size (N_t = N_r).
    SuAntennaSweep(RunArgs),
    /// Spectral efficiency versus the number of outer iterations.
    SuIterationTrace(RunArgs),
    /// Spectral efficiency versus phase-shifter resolution.
    SuBitSweep(RunArgs),
    /// Heuristics against the exhaustive search on small arrays.
    SuOracleCompare(RunArgs),
    /// Multiuser sum rate versus SNR.
    MuSnrSweep(RunArgs),
    /// Multiuser sum rate versus the number of users.
    MuUserSweep(RunArgs),
    /// Parse and check an experiment file without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_list: Option<Vec<f64>>,
    /// Comma-separated values of the swept quantity.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sweep_values: Option<Vec<f64>>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, alias = "nt")]
    n_tx: Option<usize>,
    #[arg(long, alias = "nr")]
    n_rx: Option<usize>,
    #[arg(long, alias = "ns")]
    n_streams: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write zero wall times so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Measure design wall time (the default unless the file turns it off).
    #[arg(long, conflicts_with = "no_timing")]
    record_timing: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            trials: self.trials,
            seed: self.seed,
            snr_list: self.snr_list.clone(),
            sweep_values: self.sweep_values.clone(),
            bits: self.bits,
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_streams: self.n_streams,
            users: self.users,
            algorithms: self.algorithms.clone(),
            workers: self.workers,
            record_timing: if self.no_timing {
                Some(false)
            } else {
                self.record_timing.then_some(true)
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), String> {
    let (kind, args) = match command {
        Command::SuSnrSweep(a) => (ExperimentKind::SuSnrSweep, a),
        Command::SuAntennaSweep(a) => (ExperimentKind::SuAntennaSweep, a),
        Command::SuIterationTrace(a) => (ExperimentKind::SuIterationTrace, a),
        Command::SuBitSweep(a) => (ExperimentKind::SuBitSweep, a),
        Command::SuOracleCompare(a) => (ExperimentKind::SuOracleCompare, a),
        Command::MuSnrSweep(a) => (ExperimentKind::MuSnrSweep, a),
        Command::MuUserSweep(a) => (ExperimentKind::MuUserSweep, a),
        Command::ValidateConfig { config } => {
            let spec = ExperimentSpec::from_toml_file(&config).map_err(|e| e.to_string())?;
            let rows = spec.values.len() * spec.trials * spec.methods.len();
            println!("{}: ok ({}, {rows} rows)", config.display(), spec.kind);
            return Ok(());
        }
        Command::Version => {
            println!("hbf {}", env!("CARGO_PKG_VERSION"));
            return Ok(());
        }
    };
    run(kind, &args)
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<(), String> {
    let mut spec = match &args.config {
        Some(path) => {
            let spec = ExperimentSpec::from_toml_file(path).map_err(|e| e.to_string())?;
            if spec.kind != kind {
                return Err(format!("{} describes {}, not {kind}", path.display(), spec.kind));
            }
            spec
        }
        None => ExperimentSpec::defaults(kind),
    };
    spec.apply(&args.overrides()).map_err(|e| e.to_string())?;
    let results = run_experiment(&spec).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => emit_csv(&results, path).map_err(|e| e.to_string()),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&results, &mut lock).map_err(|e| e.to_string())?;
            lock.flush().map_err(|e| e.to_string())
        }
    }
}
