//! `rbfcast`: experiment driver for the online RBF forecasting library.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 runtime error.

use clap::{Args, Parser, Subcommand};
use rbfcast::pipeline::{read_forecast_log, run_to_dir};
use rbfcast::{Error, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rbfcast", version, about = "Online RBF network forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; omitted means built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set ewrls.tau=0.97 or --set horizons=1..10.
    /// Repeatable; applied in order after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (0 = library default).
    #[arg(long)]
    threads: Option<usize>,

    /// Random-walk baseline mode: last_value or zero.
    #[arg(long)]
    rw_mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment and write all artifacts to a directory.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for forecasts, report CSVs and the manifest.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate the configured synthetic price panel as CSV.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a price panel CSV for format and consistency problems.
    Validate {
        /// Price panel CSV to check.
        input: PathBuf,
    },
    /// Rebuild report CSVs from an existing forecast log.
    Report {
        /// Forecast log produced by `run`.
        input: PathBuf,
        /// Output directory for the report CSVs.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Summarize a model checkpoint file.
    Checkpoint {
        /// Checkpoint JSON file.
        input: PathBuf,
    },
}

fn build_config(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    let mut overrides = Vec::with_capacity(args.set.len());
    for entry in &args.set {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set {:?} is not KEY=VALUE", entry)))?;
        overrides.push((key.trim().to_string(), value.trim().to_string()));
    }
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path, &overrides)?,
        None => ExperimentConfig::from_toml_str("", &overrides)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    if let Some(mode) = &args.rw_mode {
        cfg.rw_mode = mode.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, out } => {
            let cfg = build_config(&config)?;
            let output = run_to_dir(&cfg, &out)?;
            for summary in &output.report.summaries {
                let mean_nmse = summary
                    .nmse
                    .as_ref()
                    .map(|s| format!("{:.4}", s.mean))
                    .unwrap_or_else(|| "n/a".into());
                let mean_acc = summary
                    .accuracy
                    .as_ref()
                    .map(|s| format!("{:.4}", s.mean))
                    .unwrap_or_else(|| "n/a".into());
                println!(
                    "{:8} mean nmse {:8} mean accuracy {:8} ({} targets)",
                    summary.model_id, mean_nmse, mean_acc, summary.targets
                );
            }
            if !output.failed_cells.is_empty() {
                return Err(Error::Data(format!(
                    "{} cells failed; see {}",
                    output.failed_cells.len(),
                    out.join("manifest.txt").display()
                )));
            }
            Ok(())
        }
        Command::Synth { config, out } => {
            let cfg = build_config(&config)?;
            let panel = rbfcast::pipeline::build_panel(&cfg)?;
            panel.write_csv(&out)?;
            println!(
                "wrote {} rows x {} instruments to {}",
                panel.n_rows(),
                panel.n_instruments(),
                out.display()
            );
            Ok(())
        }
        Command::Validate { input } => {
            let panel = rbfcast::data::load_csv(&input)?;
            let violations = panel.violations();
            if violations.is_empty() {
                println!(
                    "ok: {} rows x {} instruments",
                    panel.n_rows(),
                    panel.n_instruments()
                );
                Ok(())
            } else {
                for v in &violations {
                    eprintln!("violation: {}", v);
                }
                Err(Error::Validation(format!("{} violations", violations.len())))
            }
        }
        Command::Report { input, out } => {
            let records = read_forecast_log(&input)?;
            if records.is_empty() {
                return Err(Error::Data(format!("{}: no records", input.display())));
            }
            std::fs::create_dir_all(&out)?;
            let report = rbfcast::evaluation::build_report(&records, "rw");
            let files = rbfcast::evaluation::emit_report(&report, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Checkpoint { input } => {
            let info = rbfcast::checkpoint::inspect(&input)?;
            let text = serde_json::to_string_pretty(&info)
                .map_err(|e| Error::Data(format!("cannot render summary: {}", e)))?;
            println!("{}", text);
            Ok(())
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        Error::InputFormat(_) | Error::Validation(_) | Error::Data(_) | Error::Csv(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a usage error (exit code 1).
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(exit_code_for(&e))
        }
    }
}
