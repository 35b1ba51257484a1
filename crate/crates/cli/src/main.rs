//! `thz-sim`: batch Monte Carlo sweeps writing CSV result tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thz_core::harness::{self, ExperimentConfig, Preset, ResultTable};
use thz_core::Error;

#[derive(Parser)]
#[command(
    name = "thz-sim",
    version,
    about = "Terahertz MIMO channel estimation and transceiver sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Channel estimation NMSE / beamspace MSE versus SNR, with BCRLB rows.
    Nmse(RunArgs),
    /// Spectral efficiency of digital and hybrid designs versus SNR.
    Ase(RunArgs),
    /// QPSK bit error rate versus SNR.
    Ber(RunArgs),
    /// NMSE versus SNR for each configured ADC resolution.
    Adc(RunArgs),
    /// Tabulate the absorption coefficient over a frequency range.
    AbsorptionSweep(AbsorptionArgs),
    /// Parse and check a configuration, then print it resolved.
    ValidateConfig(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config, TOML or JSON (by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// system1 or system2; overrides the config's preset.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    base: ConfigArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AbsorptionArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Lowest frequency, Hz.
    #[arg(long, default_value_t = 0.1e12)]
    f_min: f64,
    /// Highest frequency, Hz.
    #[arg(long, default_value_t = 10e12)]
    f_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &ConfigArgs) -> thz_core::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &args.preset {
        cfg.preset = Some(p.parse::<Preset>()?);
        cfg.dims = None;
    }
    Ok(cfg)
}

fn load_run(args: &RunArgs) -> thz_core::Result<ExperimentConfig> {
    let mut cfg = load(&args.base)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &ResultTable, out: Option<&PathBuf>) -> thz_core::Result<()> {
    match out {
        Some(path) => table.write(path),
        None => {
            print!("{}", table.to_csv()?);
            for (k, v) in &table.metadata {
                eprintln!("# {k} = {v}");
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> thz_core::Result<()> {
    match cli.command {
        Command::Nmse(args) => emit(&harness::run_nmse_sweep(&load_run(&args)?)?, args.out.as_ref()),
        Command::Ase(args) => emit(&harness::run_ase_sweep(&load_run(&args)?)?, args.out.as_ref()),
        Command::Ber(args) => emit(&harness::run_ber_sweep(&load_run(&args)?)?, args.out.as_ref()),
        Command::Adc(args) => emit(&harness::run_adc_ablation(&load_run(&args)?)?, args.out.as_ref()),
        Command::AbsorptionSweep(args) => {
            let cfg = load(&args.base)?;
            let model = cfg.channel.absorption_model()?;
            let rows = harness::absorption_sweep(&model, args.f_min, args.f_max, args.points)?;
            let mut text = String::from("f_hz,k_abs_per_m\n");
            for (f, k) in rows {
                text.push_str(&format!("{f},{k}\n"));
            }
            match &args.out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::ValidateConfig(args) => {
            let cfg = load(&args)?;
            cfg.validate()?;
            print!("{}", cfg.to_toml_string()?);
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Validation(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("thz-sim: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
