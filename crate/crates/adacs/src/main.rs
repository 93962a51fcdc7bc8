use std::path::PathBuf;
use std::process::ExitCode;

use adacs::config::{parse_rate_mode, ExperimentConfig, Mode, Overrides};
use adacs::pgm::load_pgm;
use adacs::run_experiment;
use adacs_core::metrics::{psnr, ssim};
use adacs_core::RateMode;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adacs",
    version,
    about = "Adaptive multi-stage compressive sensing of grayscale images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive pipeline
    Run(ExperimentArgs),
    /// Uniform sampling at the base rate every stage
    Baseline(ExperimentArgs),
    /// Adaptive and uniform arms side by side
    Ablate(ExperimentArgs),
    /// PSNR and SSIM of TEST against REF
    Eval { reference: PathBuf, test: PathBuf },
    /// Stage-1 comparison of measurement error and reconstruction error
    StudyErrorProxy(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input PGM (repeatable); replaces the config's image list
    #[arg(long = "image")]
    images: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Patch side length in pixels
    #[arg(long)]
    patch: Option<usize>,
    /// Standard deviation of additive measurement noise
    #[arg(long)]
    sigma: Option<f64>,
    /// Weight of the l1 penalty
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_parser = parse_rate_mode, value_name = "budget|constant")]
    rate_mode: Option<RateMode>,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    no_adaptive: bool,
}

impl ExperimentArgs {
    fn into_config(self, mode: Mode) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        cfg.apply(&Overrides {
            images: self.images,
            out: self.out,
            seed: self.seed,
            stages: self.stages,
            rate: self.rate,
            alpha: self.alpha,
            patch: self.patch,
            sigma: self.sigma,
            lambda: self.lambda,
            rate_mode: self.rate_mode,
            no_warm_start: self.no_warm_start,
            no_adaptive: self.no_adaptive,
        });
        Ok(cfg)
    }
}

fn experiment(args: ExperimentArgs, mode: Mode) -> anyhow::Result<()> {
    let cfg = args.into_config(mode)?;
    let outcomes = run_experiment(&cfg)?;
    for o in &outcomes {
        for run in &o.runs {
            let last = run.final_record();
            println!(
                "{} {} stage {}: rate {:.4} psnr {:.2} dB ssim {:.4}",
                o.stem,
                run.arm.name(),
                last.stage,
                last.cumulative_nominal_rate,
                last.psnr,
                last.ssim
            );
        }
        if let (Mode::Study, Some(s)) = (mode, &o.study) {
            match s.correlation {
                Some(c) => println!(
                    "{} pearson {:.4} spearman {:.4}",
                    o.stem, c.pearson, c.spearman
                ),
                None => println!("{} correlation undefined (constant error map)", o.stem),
            }
            println!(
                "{} mask agreement {:.4} rip coverage {:.4}",
                o.stem, s.mask_agreement, s.rip_coverage
            );
        }
    }
    println!("outputs written to {}", cfg.out.display());
    Ok(())
}

fn eval(reference: PathBuf, test: PathBuf) -> anyhow::Result<()> {
    let a = load_pgm(&reference)?;
    let b = load_pgm(&test)?;
    let p = psnr(&a, &b).context("comparing images")?;
    let s = ssim(&a, &b).context("comparing images")?;
    println!("psnr {p:.4}");
    println!("ssim {s:.6}");
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(a) => experiment(a, Mode::Run),
        Command::Baseline(a) => experiment(a, Mode::Baseline),
        Command::Ablate(a) => experiment(a, Mode::Ablate),
        Command::StudyErrorProxy(a) => experiment(a, Mode::Study),
        Command::Eval { reference, test } => eval(reference, test),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
