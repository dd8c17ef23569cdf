use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use dopa_core::circuit::{build_nigrostriatal, topology_csv, MOTOR_CORTEX, THALAMUS};
use dopa_core::cube::{classify_affect, MonoamineCoordinate};
use dopa_core::harness::{run_experiment, write_outputs, ExperimentConfig, Report};

#[derive(Parser)]
#[command(name = "dopa", version, about = "Nigrostriatal dopamine pathway experiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the dopamine-burst experiment and write raster, rates, report and topology.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run without any dopamine burst.
        #[arg(long)]
        no_burst: bool,
        /// Output directory (default: config `output_dir`, else `out`).
        #[arg(long, value_name = "PATH")]
        out_dir: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        duration_ms: Option<f64>,
        /// Exit non-zero if a burst run fails the elevation check.
        #[arg(long)]
        check: bool,
        /// Sweep N consecutive seeds starting at the configured seed, in parallel.
        #[arg(long, value_name = "N", default_value_t = 1)]
        runs: u64,
    },
    /// Print the circuit's edge list as CSV.
    DumpTopology {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Classify a (serotonin, dopamine, noradrenaline) coordinate.
    Classify {
        serotonin: f64,
        dopamine: f64,
        noradrenaline: f64,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
}

fn summary_line(report: &Report) -> String {
    let ratio = |name| report.ratio(name).unwrap_or(f64::NAN);
    let rate = |name| report.population(name).map_or(f64::NAN, |p| p.baseline_rate_hz);
    format!(
        "seed {:>4}  thalamus {:6.2} Hz x{:.3}  motor {:6.2} Hz x{:.3}  affect {} -> {}  {}",
        report.seed,
        rate(THALAMUS),
        ratio(THALAMUS),
        rate(MOTOR_CORTEX),
        ratio(MOTOR_CORTEX),
        report.baseline.affect,
        report.effect.affect,
        if report.elevation_pass { "ELEVATED" } else { "flat" },
    )
}

fn run(cfg: ExperimentConfig, out_dir: PathBuf, runs: u64, check: bool) -> Result<ExitCode> {
    let sweep = runs > 1;
    let seeds: Vec<u64> = (0..runs.max(1)).map(|i| cfg.seed + i).collect();
    let reports = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = cfg.clone().with_seed(seed);
            let exp = run_experiment(&cfg)?;
            let dir = if sweep { out_dir.join(format!("seed-{seed}")) } else { out_dir.clone() };
            write_outputs(&exp.report, &exp.record, &exp.network, &dir)?;
            Ok(exp.report)
        })
        .collect::<Result<Vec<Report>>>()?;

    let mut failed = false;
    for report in &reports {
        println!("{}", summary_line(report));
        failed |= report.burst.is_some() && !report.elevation_pass;
    }
    println!("outputs in {}", out_dir.display());
    Ok(if check && failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            no_burst,
            out_dir,
            duration_ms,
            check,
            runs,
        } => {
            let mut cfg = config.load()?;
            if no_burst {
                cfg = cfg.without_burst();
            }
            if let Some(d) = duration_ms {
                cfg.duration_ms = d;
            }
            cfg.validate()?;
            let out = out_dir
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            run(cfg, out, runs, check)
        }
        Command::DumpTopology { config } => {
            let cfg = config.load()?;
            let net = build_nigrostriatal(&cfg.circuit, cfg.seed)?;
            print!("{}", topology_csv(&net));
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify {
            serotonin,
            dopamine,
            noradrenaline,
            config,
        } => {
            let table = match config {
                Some(path) => ExperimentConfig::load(&path)?.affect_table,
                None => ExperimentConfig::default().affect_table,
            };
            let coord = MonoamineCoordinate::new(serotonin, dopamine, noradrenaline)
                .context("coordinate components must lie in [0, 1]")?;
            println!("{}", classify_affect(&coord, &table));
            Ok(ExitCode::SUCCESS)
        }
    }
}
