//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! mode = ablate
//! images = camera.pgm, moon.pgm
//! out = results
//! stages = 4
//! rate = 0.05
//! rate_mode = budget
//! ```
//!
//! Relative image and output paths are resolved against the directory that
//! holds the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adacs_core::{PipelineConfig, RateMode};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Adaptive pipeline (or uniform when adaptivity is switched off).
    #[default]
    Run,
    /// Uniform sampling at the base rate.
    Baseline,
    /// Both arms side by side.
    Ablate,
    /// Stage-1 comparison of measurement error and true error.
    Study,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Baseline => "baseline",
            Mode::Ablate => "ablate",
            Mode::Study => "study-error-proxy",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "run" => Ok(Mode::Run),
            "baseline" => Ok(Mode::Baseline),
            "ablate" => Ok(Mode::Ablate),
            "study" | "study-error-proxy" => Ok(Mode::Study),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

pub fn parse_rate_mode(s: &str) -> std::result::Result<RateMode, String> {
    match s {
        "budget" | "budget_preserving" => Ok(RateMode::BudgetPreserving),
        "constant" | "constant_m" => Ok(RateMode::ConstantM),
        _ => Err(format!(
            "unknown rate mode `{s}` (expected budget or constant)"
        )),
    }
}

pub fn rate_mode_name(mode: RateMode) -> &'static str {
    match mode {
        RateMode::BudgetPreserving => "budget",
        RateMode::ConstantM => "constant",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub images: Vec<PathBuf>,
    pub out: PathBuf,
    pub pipeline: PipelineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Run,
            images: Vec::new(),
            out: PathBuf::from("out"),
            pipeline: PipelineConfig::default(),
        }
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub images: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub stages: Option<usize>,
    pub rate: Option<f64>,
    pub alpha: Option<f64>,
    pub patch: Option<usize>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub rate_mode: Option<RateMode>,
    pub no_warm_start: bool,
    pub no_adaptive: bool,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, path, base)
    }

    /// Parses config text; `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut images_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config {
                path: origin.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "images" || key == "image" {
                if !images_seen {
                    cfg.images.clear();
                    images_seen = true;
                }
                cfg.images.extend(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| base.join(s)),
                );
                continue;
            }
            cfg.set(key, value, base).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        let p = &mut self.pipeline;
        match key {
            "mode" => self.mode = value.parse()?,
            "out" => self.out = base.join(value),
            "stages" => p.stages = num(key, value)?,
            "rate" => p.rate = num(key, value)?,
            "alpha" => p.alpha = num(key, value)?,
            "patch" | "patch_size" => p.patch_size = num(key, value)?,
            "seed" => p.seed = num(key, value)?,
            "sigma" | "noise_sigma" => p.noise_sigma = num(key, value)?,
            "delta" => p.delta = num(key, value)?,
            "lambda" => p.solver.lambda = num(key, value)?,
            "max_iters" => p.solver.max_iters = num(key, value)?,
            "rel_tol" => p.solver.rel_tol = num(key, value)?,
            "power_iters" => p.solver.power_iters = num(key, value)?,
            "monotone" => p.solver.monotone = flag(key, value)?,
            "adaptive" | "adaptive_enabled" => p.adaptive_enabled = flag(key, value)?,
            "warm_start" => p.warm_start = flag(key, value)?,
            "rate_mode" => p.rate_mode = parse_rate_mode(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if !o.images.is_empty() {
            self.images = o.images.clone();
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        let p = &mut self.pipeline;
        if let Some(v) = o.seed {
            p.seed = v;
        }
        if let Some(v) = o.stages {
            p.stages = v;
        }
        if let Some(v) = o.rate {
            p.rate = v;
        }
        if let Some(v) = o.alpha {
            p.alpha = v;
        }
        if let Some(v) = o.patch {
            p.patch_size = v;
        }
        if let Some(v) = o.sigma {
            p.noise_sigma = v;
        }
        if let Some(v) = o.lambda {
            p.solver.lambda = v;
        }
        if let Some(v) = o.rate_mode {
            p.rate_mode = v;
        }
        if o.no_warm_start {
            p.warm_start = false;
        }
        if o.no_adaptive {
            p.adaptive_enabled = false;
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid value for `{key}`"))
}

fn flag(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{value}` is not a boolean for `{key}`")),
    }
}
