use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pmhe_cli::{
    certify_scenario, compare_estimators, run_scenario, CliError, OutputFormat, RunOptions, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "pmhe", version, about = "Anytime proximity moving horizon estimation runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV, SVG and certificate files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one scenario (a TOML file or `builtin:reactor`).
    Run { config: String },
    /// Runs several scenarios on the same measurements and prints a summary.
    Compare {
        #[arg(required = true)]
        configs: Vec<String>,
    },
    /// Designs the observer gain and Bregman weights and prints the certificate.
    Certify { config: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out_dir: cli.out_dir,
        seed: cli.seed,
        format: cli.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::CsvSvg => OutputFormat::CsvSvg,
        }),
    };
    match dispatch(cli.command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Command, opts: &RunOptions) -> Result<(), CliError> {
    match cmd {
        Command::Run { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let out = run_scenario(&cfg, opts)?;
            let errors = out.outcome.trace.error_norms().ok();
            println!(
                "{} ({}): {} steps",
                out.outcome.name,
                out.outcome.estimator.label(),
                out.outcome.trace.len()
            );
            if let Some(e) = errors.as_ref().and_then(|e| e.last()) {
                println!("final error  {e:.6e}");
            }
            if let Some(r) = out.outcome.report.as_ref().and_then(|r| r.final_regret()) {
                println!("regret R(T)  {r:.6e}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Compare { configs } => {
            let cfgs = configs
                .iter()
                .map(|c| ScenarioConfig::load(c))
                .collect::<Result<Vec<_>, _>>()?;
            let summary = compare_estimators(&cfgs, opts)?;
            print!("{}", summary.table());
            println!("wrote {}", opts.out_dir.join("summary.csv").display());
        }
        Command::Certify { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let (cert, path) = certify_scenario(&cfg, opts)?;
            print!("{}", cert.report());
            println!("wrote {}", path.display());
            if !cert.valid {
                return Err(CliError::Design {
                    margin: cert.lmi_margin,
                    radius: cert.spectral_radius,
                });
            }
        }
    }
    Ok(())
}
