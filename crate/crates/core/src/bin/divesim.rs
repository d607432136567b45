use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use divesim::exec::Execution;
use divesim::harness::{run_scenario, HarnessError, Scenario, ScenarioConfig};

/// Runs a named scenario of the dot/continuum model and writes CSV, JSON and
/// gnuplot files.
#[derive(Parser, Debug)]
#[command(name = "divesim", version)]
struct Cli {
    /// spectral, dispersion, threshold_adiabatic, breakdown, gap_case,
    /// microscopic or dyson
    #[arg(value_parser = parse_scenario)]
    scenario: Scenario,

    /// TOML scenario configuration
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `output.dir` of the config
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for independent runs; overrides `workers` of the config
    #[arg(long)]
    workers: Option<usize>,

    /// Exit with status 2 if any acceptance check fails
    #[arg(long)]
    check: bool,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let config = ScenarioConfig::from_path(&cli.config)?;
    let scenario = config.resolve_scenario(Some(cli.scenario))?;
    let workers = cli.workers.or(config.workers).unwrap_or(1);
    if workers == 0 {
        return Err(HarnessError::Config("--workers must be at least 1".into()));
    }
    let record = run_scenario(&config, scenario, Execution::with_workers(workers))?;

    let dir = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let stem = config.output.stem.clone().unwrap_or_else(|| scenario.name().to_string());
    let paths = record.write(&dir, &stem)?;

    for (k, row) in record.rows.iter().enumerate() {
        if let Some(reason) = &row.failure {
            eprintln!("row {k} failed: {reason}");
        }
    }
    for check in &record.checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {:?} ({})", check.name, check.value, check.detail);
    }
    for (name, fit) in &record.fits {
        println!("fit {name}: slope {:?} ± {:?}", fit.slope, fit.stderr);
    }
    println!("wrote {}", paths.csv.display());
    println!("wrote {}", paths.json.display());
    println!("wrote {}", paths.plot.display());
    Ok(record.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.check => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
