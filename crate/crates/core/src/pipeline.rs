//! The staged sample / reconstruct / select loop.

use alloc::vec::Vec;

use crate::adaptive::{
    error_map, measurement_error, reconstruction_error_map, rip_bounds, select_patches,
    AdaptiveMask, ErrorMap,
};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{correlations, mask_agreement, psnr, ssim, Correlation};
use crate::patching::PatchGrid;
use crate::sensing::{gen_matrix, measure_stage, MeasurementSet, NoiseSpec, SensingMatrix};
use crate::solver::{reconstruct, SolverConfig};

/// How a stage's per-patch measurement count is derived from the base rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMode {
    /// Stage `i` spends `r` of the image budget on the `alpha^(i-1)` fraction
    /// of patches it selects, i.e. `r / alpha^(i-1)` per selected patch.
    #[default]
    BudgetPreserving,
    /// Every stage samples `round(r p^2)` per selected patch.
    ConstantM,
}

/// Which sampling policy a run follows after stage 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Adaptive,
    /// Every stage re-samples all patches at the base rate.
    Uniform,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Adaptive => "adaptive",
            Arm::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub stages: usize,
    /// Base sampling rate `r` spent per stage.
    pub rate: f64,
    /// Sampling scale factor: stage `i` keeps `alpha^(i-1)` of the patches.
    pub alpha: f64,
    pub patch_size: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub solver: SolverConfig,
    pub adaptive_enabled: bool,
    pub rate_mode: RateMode,
    pub warm_start: bool,
    /// RIP constant used only for the reported error bounds.
    pub delta: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            stages: 4,
            rate: 0.05,
            alpha: 0.7,
            patch_size: 8,
            seed: 0,
            noise_sigma: 0.0,
            solver: SolverConfig::default(),
            adaptive_enabled: true,
            rate_mode: RateMode::BudgetPreserving,
            warm_start: true,
            delta: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::Config("stages must be at least 1"));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::Config("rate must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1]"));
        }
        if self.patch_size == 0 {
            return Err(Error::Config("patch size must be at least 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise sigma must be non-negative"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)"));
        }
        self.solver.validate()?;
        let mode = self.effective_rate_mode();
        for stage in 1..=self.stages {
            per_patch_m(self.rate, self.alpha, stage, self.patch_size, mode)?;
        }
        Ok(())
    }

    fn effective_rate_mode(&self) -> RateMode {
        if self.adaptive_enabled {
            self.rate_mode
        } else {
            RateMode::ConstantM
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            sigma: self.noise_sigma,
            seed: self.seed,
        }
    }
}

/// Per-patch nominal rate at stage `i` (before rounding to whole measurements).
pub fn nominal_patch_rate(rate: f64, alpha: f64, stage: usize, mode: RateMode) -> f64 {
    match mode {
        RateMode::BudgetPreserving => rate / libm::pow(alpha, stage.saturating_sub(1) as f64),
        RateMode::ConstantM => rate,
    }
}

/// Measurements per sampled patch at stage `i`: `round(rate_i * p^2)`.
pub fn per_patch_m(
    rate: f64,
    alpha: f64,
    stage: usize,
    patch_size: usize,
    mode: RateMode,
) -> Result<usize> {
    if stage == 0 {
        return Err(Error::Config("stages are numbered from 1"));
    }
    let nominal = nominal_patch_rate(rate, alpha, stage, mode);
    if !(nominal > 0.0) {
        return Err(Error::Config("sampling rate must be positive"));
    }
    if nominal > 1.0 {
        return Err(Error::Config(
            "per-patch sampling rate exceeds 1; use fewer stages or a larger alpha",
        ));
    }
    let n = patch_size * patch_size;
    let m = crate::round_half_away(nominal * n as f64) as usize;
    if m == 0 {
        return Err(Error::Config(
            "sampling rate rounds to zero measurements per patch",
        ));
    }
    Ok(m.min(n))
}

/// Cumulative continuous per-patch rate of a patch selected at every stage
/// `1..=stages` under budget-preserving allocation.
pub fn cumulative_region_rates(rate: f64, alpha: f64, stages: usize) -> Vec<f64> {
    let mut total = 0.0;
    (1..=stages)
        .map(|i| {
            total += nominal_patch_rate(rate, alpha, i, RateMode::BudgetPreserving);
            total
        })
        .collect()
}

/// Nominal image-level budget after `stage` stages, as a fraction of `H W`.
fn cumulative_nominal_rate(cfg: &PipelineConfig, arm: Arm, stage: usize) -> f64 {
    match (arm, cfg.rate_mode) {
        (Arm::Uniform, _) | (Arm::Adaptive, RateMode::BudgetPreserving) => stage as f64 * cfg.rate,
        (Arm::Adaptive, RateMode::ConstantM) => (1..=stage)
            .map(|i| cfg.rate * libm::pow(cfg.alpha, (i - 1) as f64))
            .sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    /// Measurements per sampled patch.
    pub m: usize,
    pub sampled_patch_count: usize,
    /// Measurements taken at this stage.
    pub measurements: usize,
    pub cumulative_measurements: usize,
    pub cumulative_nominal_rate: f64,
    pub cumulative_actual_rate: f64,
    pub psnr: f64,
    pub ssim: f64,
    /// `||y1 - Phi1 x_hat_i||^2` per patch for this stage's reconstruction.
    pub error_map: ErrorMap,
    /// `||x - x_hat_i||^2` per patch; available because runs are simulations.
    pub true_error_map: ErrorMap,
    /// Selection that decided which patches this stage sampled.
    pub mask: Option<AdaptiveMask>,
    pub solver_iterations: usize,
    pub final_objective: f64,
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub arm: Arm,
    pub grid: PatchGrid,
    pub records: Vec<StageRecord>,
    /// Unclamped solver output per stage.
    pub reconstructions: Vec<Image>,
    pub measurements: Vec<MeasurementSet>,
    pub matrices: Vec<SensingMatrix>,
}

impl PipelineRun {
    pub fn final_record(&self) -> &StageRecord {
        self.records.last().expect("a run has at least one stage")
    }
}

/// Runs the configured arm: adaptive when `cfg.adaptive_enabled`, else uniform.
pub fn run_adaptive(img: &Image, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let arm = if cfg.adaptive_enabled {
        Arm::Adaptive
    } else {
        Arm::Uniform
    };
    run_arm(img, cfg, arm)
}

pub fn run_uniform(img: &Image, cfg: &PipelineConfig) -> Result<PipelineRun> {
    run_arm(img, cfg, Arm::Uniform)
}

pub fn run_arm(img: &Image, cfg: &PipelineConfig, arm: Arm) -> Result<PipelineRun> {
    let cfg = PipelineConfig {
        adaptive_enabled: arm == Arm::Adaptive,
        ..*cfg
    };
    cfg.validate()?;
    let grid = PatchGrid::for_image(img, cfg.patch_size)?;
    let mode = cfg.effective_rate_mode();
    let noise = cfg.noise();
    let n = grid.patch_len();
    let every: Vec<usize> = (0..grid.patch_count()).collect();
    let truth = img.clamp_to_display();

    let mut records = Vec::with_capacity(cfg.stages);
    let mut reconstructions: Vec<Image> = Vec::with_capacity(cfg.stages);
    let mut measurements: Vec<MeasurementSet> = Vec::with_capacity(cfg.stages);
    let mut matrices: Vec<SensingMatrix> = Vec::with_capacity(cfg.stages);
    let mut cumulative = 0usize;

    for stage in 1..=cfg.stages {
        let m = per_patch_m(cfg.rate, cfg.alpha, stage, cfg.patch_size, mode)?;
        let mask = match (arm, reconstructions.last()) {
            (Arm::Adaptive, Some(previous)) => {
                let deltas = measurement_error(&measurements[0], &matrices[0], previous, &grid)?;
                Some(select_patches(
                    &error_map(&deltas)?,
                    cfg.alpha,
                    stage,
                    &grid,
                )?)
            }
            _ => None,
        };
        let selected = match &mask {
            Some(mask) => mask.selected(),
            None => every.clone(),
        };

        let phi = gen_matrix(cfg.seed, stage, m, n, grid.patch_count())?;
        let set = measure_stage(&phi, img, &grid, &selected, &noise)?;
        cumulative += set.total_measurements();
        measurements.push(set);
        matrices.push(phi);

        let warm = if cfg.warm_start {
            reconstructions.last()
        } else {
            None
        };
        let result = reconstruct(&measurements, &matrices, &grid, &cfg.solver, warm)?;

        let deltas = measurement_error(&measurements[0], &matrices[0], &result.image, &grid)?;
        let display = result.image.clamp_to_display();
        records.push(StageRecord {
            stage,
            m,
            sampled_patch_count: selected.len(),
            measurements: m * selected.len(),
            cumulative_measurements: cumulative,
            cumulative_nominal_rate: cumulative_nominal_rate(&cfg, arm, stage),
            cumulative_actual_rate: cumulative as f64 / grid.pixel_count() as f64,
            psnr: psnr(&truth, &display)?,
            ssim: ssim(&truth, &display)?,
            error_map: error_map(&deltas)?,
            true_error_map: reconstruction_error_map(img, &result.image, &grid)?,
            mask,
            solver_iterations: result.iterations_used,
            final_objective: result.final_objective,
            objective_trace: result.objective_trace,
        });
        reconstructions.push(result.image);
    }

    Ok(PipelineRun {
        arm,
        grid,
        records,
        reconstructions,
        measurements,
        matrices,
    })
}

/// How well the measurement error tracks the true reconstruction error after
/// one stage of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProxyStudy {
    pub stage: usize,
    pub v_dy: ErrorMap,
    pub v_dx: ErrorMap,
    /// `None` when either map is constant.
    pub correlation: Option<Correlation>,
    /// Next-stage selection from `v_dy`.
    pub estimated_mask: AdaptiveMask,
    /// Next-stage selection from `v_dx`.
    pub oracle_mask: AdaptiveMask,
    pub mask_agreement: f64,
    /// Fraction of patches whose `||dx||^2` lies inside the RIP interval
    /// derived from `||dy||^2`.
    pub rip_coverage: f64,
}

/// Compares the two error maps of `run.records[stage - 1]`.
pub fn error_proxy_study(
    run: &PipelineRun,
    stage: usize,
    alpha: f64,
    delta: f64,
) -> Result<ErrorProxyStudy> {
    let record = stage
        .checked_sub(1)
        .and_then(|i| run.records.get(i))
        .ok_or(Error::Contract("study stage is outside the run"))?;
    let v_dy = record.error_map.clone();
    let v_dx = record.true_error_map.clone();
    let estimated_mask = select_patches(&v_dy, alpha, stage + 1, &run.grid)?;
    let oracle_mask = select_patches(&v_dx, alpha, stage + 1, &run.grid)?;
    let mut inside = 0usize;
    for (&dy, &dx) in v_dy.values().iter().zip(v_dx.values()) {
        let b = rip_bounds(dy, delta)?;
        if b.lower <= dx && dx <= b.upper {
            inside += 1;
        }
    }
    Ok(ErrorProxyStudy {
        stage,
        correlation: correlations(&v_dy, &v_dx)?,
        mask_agreement: mask_agreement(&estimated_mask, &oracle_mask)?,
        rip_coverage: inside as f64 / v_dy.len() as f64,
        v_dy,
        v_dx,
        estimated_mask,
        oracle_mask,
    })
}
