use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsma_mbdl::harness::{
    complexity_table, emit_report, fmt_g6, parse_config, run_overhead_experiment, run_ser_experiment, to_csv, Format,
    Scenario,
};
use rsma_mbdl::receivers::ReceiverKind;
use rsma_mbdl::training::Pattern;
use rsma_mbdl::Error;

/// Link-level simulator for RSMA downlink receivers.
#[derive(Parser)]
#[command(name = "rsma-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo symbol error rates per receiver and stream.
    Ser(ScenarioArgs),
    /// Training length and overhead of a pilot pattern.
    Overhead(ScenarioArgs),
    /// Parameter and multiplication counts of every detector network.
    Complexity {
        #[arg(long, default_value = "csv")]
        format: Format,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    receivers: Option<Vec<ReceiverKind>>,
    #[arg(long)]
    pattern: Option<Pattern>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    data_symbols: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario, Error> {
        let mut sc = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                parse_config(&text)?
            }
            None => Scenario::new(4, 2, vec![12.0, 15.0, 18.0]),
        };
        if let Some(v) = self.seed {
            sc.seed = v;
        }
        if let Some(v) = &self.snr_db {
            sc.snr_db = v.clone();
        }
        if let Some(v) = &self.receivers {
            sc.receivers = v.clone();
        }
        if let Some(v) = self.pattern {
            sc.training.pattern = v;
        }
        if let Some(v) = self.blocks {
            sc.training.blocks = v;
        }
        if let Some(v) = self.trials {
            sc.trials = v;
        }
        if let Some(v) = self.data_symbols {
            sc.data_symbols = v;
        }
        if let Some(v) = self.workers {
            sc.workers = v;
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ser(args) => {
            let sc = args.scenario()?;
            let report = run_ser_experiment(&sc)?;
            match (&args.out, args.format) {
                (Some(out), format) => {
                    for path in emit_report(&report, &sc, out, format)? {
                        eprintln!("wrote {}", path.display());
                    }
                }
                (None, Format::Csv) => print!("{}", to_csv(&report)),
                (None, Format::Json) => print!("{}", json(&report.rows)?),
            }
        }
        Command::Overhead(args) => {
            let sc = args.scenario()?;
            let rows = run_overhead_experiment(&sc)?;
            let text = match args.format {
                Format::Json => json(&rows)?,
                Format::Csv => {
                    let mut s = String::from("pattern,snr_db,training_symbols,data_symbols,overhead_pct\n");
                    for r in &rows {
                        s += &format!(
                            "{},{},{},{},{}\n",
                            r.pattern,
                            fmt_g6(r.snr_db),
                            fmt_g6(r.mean_training_symbols),
                            r.data_symbols,
                            fmt_g6(r.overhead_pct)
                        );
                    }
                    s
                }
            };
            write_out(&args.out, &text)?;
        }
        Command::Complexity { format } => {
            let rows = complexity_table();
            let text = match format {
                Format::Json => json(&rows)?,
                Format::Csv => {
                    let mut s = String::from("purpose,modulation,hidden,params,rmps\n");
                    for r in &rows {
                        let hidden: Vec<String> = r.hidden.iter().map(|h| h.to_string()).collect();
                        let affine = |base: usize, slope: usize| {
                            if slope == 0 {
                                base.to_string()
                            } else {
                                format!("{base}+{slope}Mc")
                            }
                        };
                        s += &format!(
                            "{},{},{},{},{}\n",
                            serde_json::to_value(r.purpose).map_err(|e| Error::Format(e.to_string()))?
                                .as_str()
                                .unwrap_or_default(),
                            r.modulation,
                            hidden.join("-"),
                            affine(r.params_base, r.params_slope),
                            affine(r.rmps_base, r.rmps_slope)
                        );
                    }
                    s
                }
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rsma-sim: {e}");
            ExitCode::FAILURE
        }
    }
}
