use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fas_edof_cli::grid::{parse_count_grid, parse_grid};
use fas_edof_cli::{emit, run_experiment, CliError, Experiment, Format, Params};

/// Reproduces the outage, capacity and FAMA experiments for fluid antenna
/// systems as CSV or JSON tables.
#[derive(Debug, Parser)]
#[command(name = "fas-edof", version)]
struct Args {
    /// One of: outage-vs-snr, outage-vs-aperture, accuracy-ratio,
    /// outage-vs-ports, diversity-order, eigen-table, capacity, compare-bcm,
    /// outage-vs-threshold, fama, planar
    experiment: String,

    /// Port count(s)
    #[arg(long = "N")]
    ports: Option<String>,

    /// Normalized aperture(s) in wavelengths
    #[arg(long = "W")]
    aperture: Option<String>,

    /// Planar aperture along x (planar only)
    #[arg(long = "Wx")]
    wx: Option<f64>,

    /// Planar aperture along y (planar only)
    #[arg(long = "Wy")]
    wy: Option<f64>,

    /// Average SNR in dB: a value, a list a,b,c or start:step:stop
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,

    /// Outage threshold in dB, same syntax as --snr-db
    #[arg(long = "threshold-db", allow_hyphen_values = true)]
    threshold_db: Option<String>,

    /// Monte Carlo trials
    #[arg(long)]
    trials: Option<u64>,

    /// Master seed for the Monte Carlo streams
    #[arg(long)]
    seed: Option<u64>,

    /// FAMA user count(s)
    #[arg(long)]
    users: Option<String>,

    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,

    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn params(args: &Args) -> Result<Params, CliError> {
    let workers = match std::env::var("FAS_EDOF_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("FAS_EDOF_THREADS='{v}' is not a positive integer")))?,
        ),
        Err(_) => None,
    };
    Ok(Params {
        ports: args.ports.as_deref().map(parse_count_grid).transpose()?,
        apertures: args.aperture.as_deref().map(parse_grid).transpose()?,
        wx: args.wx,
        wy: args.wy,
        snr_db: args.snr_db.as_deref().map(parse_grid).transpose()?,
        threshold_db: args.threshold_db.as_deref().map(parse_grid).transpose()?,
        users: args.users.as_deref().map(parse_count_grid).transpose()?,
        trials: args.trials,
        seed: args.seed,
        workers,
    })
}

fn run(args: &Args) -> Result<(), CliError> {
    let exp: Experiment = args.experiment.parse()?;
    let format: Format = args.format.parse()?;
    let table = run_experiment(exp, &params(args)?)?;
    emit(&table, format, args.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fas-edof: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
