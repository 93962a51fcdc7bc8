//! JSON reports and the CSV summary.
//!
//! Field order follows struct declaration order, so equal inputs always
//! produce equal bytes. Non-finite numbers are written as `null`.

use std::fmt::Write as _;

use adacs_core::pipeline::{ErrorProxyStudy, PipelineRun};
use adacs_core::{AdaptiveMask, MeasurementSet, PipelineConfig, StageRecord};
use serde::Serialize;

use crate::config::{rate_mode_name, Mode};

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Serialize)]
pub struct ConfigJson {
    pub mode: &'static str,
    pub stages: usize,
    pub rate: f64,
    pub alpha: f64,
    pub patch_size: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub lambda: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub power_iters: usize,
    pub monotone: bool,
    pub adaptive_enabled: bool,
    pub rate_mode: &'static str,
    pub warm_start: bool,
    pub delta: f64,
}

impl ConfigJson {
    pub fn new(mode: Mode, p: &PipelineConfig) -> Self {
        Self {
            mode: mode.name(),
            stages: p.stages,
            rate: p.rate,
            alpha: p.alpha,
            patch_size: p.patch_size,
            seed: p.seed,
            noise_sigma: p.noise_sigma,
            lambda: p.solver.lambda,
            max_iters: p.solver.max_iters,
            rel_tol: p.solver.rel_tol,
            power_iters: p.solver.power_iters,
            monotone: p.solver.monotone,
            adaptive_enabled: p.adaptive_enabled,
            rate_mode: rate_mode_name(p.rate_mode),
            warm_start: p.warm_start,
            delta: p.delta,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MaskJson {
    pub stage: usize,
    pub threshold: Option<f64>,
    pub n_unsampled: usize,
    pub selected: Vec<usize>,
}

impl MaskJson {
    pub fn new(mask: &AdaptiveMask) -> Self {
        Self {
            stage: mask.stage,
            threshold: finite(mask.threshold),
            n_unsampled: mask.n_unsampled,
            selected: mask.selected(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PatchMeasurements<'a> {
    pub index: usize,
    pub values: &'a [f64],
}

#[derive(Debug, Serialize)]
pub struct MeasurementSetJson<'a> {
    pub stage: usize,
    pub m: usize,
    pub seed: u64,
    pub patches: Vec<PatchMeasurements<'a>>,
}

impl<'a> MeasurementSetJson<'a> {
    pub fn new(set: &'a MeasurementSet) -> Self {
        Self {
            stage: set.stage,
            m: set.m,
            seed: set.seed,
            patches: set
                .vectors
                .iter()
                .map(|(&index, values)| PatchMeasurements { index, values })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StageJson<'a> {
    pub stage: usize,
    pub m: usize,
    pub sampled_patch_count: usize,
    pub measurements: usize,
    pub cumulative_measurements: usize,
    pub cumulative_nominal_rate: f64,
    pub cumulative_actual_rate: f64,
    pub psnr: Option<f64>,
    pub ssim: f64,
    pub solver_iterations: usize,
    pub final_objective: f64,
    pub mask: Option<MaskJson>,
    pub error_map: &'a [f64],
    pub true_error_map: &'a [f64],
    pub objective_trace: &'a [f64],
}

impl<'a> StageJson<'a> {
    pub fn new(r: &'a StageRecord) -> Self {
        Self {
            stage: r.stage,
            m: r.m,
            sampled_patch_count: r.sampled_patch_count,
            measurements: r.measurements,
            cumulative_measurements: r.cumulative_measurements,
            cumulative_nominal_rate: r.cumulative_nominal_rate,
            cumulative_actual_rate: r.cumulative_actual_rate,
            psnr: finite(r.psnr),
            ssim: r.ssim,
            solver_iterations: r.solver_iterations,
            final_objective: r.final_objective,
            mask: r.mask.as_ref().map(MaskJson::new),
            error_map: r.error_map.values(),
            true_error_map: r.true_error_map.values(),
            objective_trace: &r.objective_trace,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ArmJson<'a> {
    pub arm: &'static str,
    pub stages: Vec<StageJson<'a>>,
    pub measurement_sets: Vec<MeasurementSetJson<'a>>,
}

impl<'a> ArmJson<'a> {
    pub fn new(run: &'a PipelineRun) -> Self {
        Self {
            arm: run.arm.name(),
            stages: run.records.iter().map(StageJson::new).collect(),
            measurement_sets: run
                .measurements
                .iter()
                .map(MeasurementSetJson::new)
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StudyJson<'a> {
    pub stage: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub mask_agreement: f64,
    pub rip_coverage: f64,
    pub dy_sq: &'a [f64],
    pub dx_sq: &'a [f64],
    pub estimated_mask: MaskJson,
    pub oracle_mask: MaskJson,
}

impl<'a> StudyJson<'a> {
    pub fn new(s: &'a ErrorProxyStudy) -> Self {
        Self {
            stage: s.stage,
            pearson: s.correlation.map(|c| c.pearson),
            spearman: s.correlation.map(|c| c.spearman),
            mask_agreement: s.mask_agreement,
            rip_coverage: s.rip_coverage,
            dy_sq: s.v_dy.values(),
            dx_sq: s.v_dx.values(),
            estimated_mask: MaskJson::new(&s.estimated_mask),
            oracle_mask: MaskJson::new(&s.oracle_mask),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ImageReport<'a> {
    pub image: String,
    pub height: usize,
    pub width: usize,
    pub patch_count: usize,
    pub config: ConfigJson,
    pub arms: Vec<ArmJson<'a>>,
    /// Present whenever the first arm has a stage to study.
    pub error_proxy: Option<StudyJson<'a>>,
}

impl ImageReport<'_> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}

pub const SUMMARY_HEADER: &str =
    "image,arm,stage,m,sampled_patches,cumulative_measurements,cumulative_rate,actual_rate,psnr,ssim";

pub fn summary_rows(out: &mut String, image: &str, run: &PipelineRun) {
    for r in &run.records {
        let _ = writeln!(
            out,
            "{image},{},{},{},{},{},{:.6},{:.6},{:.4},{:.6}",
            run.arm.name(),
            r.stage,
            r.m,
            r.sampled_patch_count,
            r.cumulative_measurements,
            r.cumulative_nominal_rate,
            r.cumulative_actual_rate,
            r.psnr,
            r.ssim
        );
    }
}

/// One row per patch, for scatter plots of the two error maps.
pub fn study_csv(s: &ErrorProxyStudy, delta: f64) -> String {
    let mut out = String::from("patch,dy_sq,dx_sq,rip_lower,rip_upper,estimated,oracle\n");
    let bits = s.estimated_mask.bits.iter().zip(&s.oracle_mask.bits);
    for (j, ((&dy, &dx), (&e, &o))) in s
        .v_dy
        .values()
        .iter()
        .zip(s.v_dx.values())
        .zip(bits)
        .enumerate()
    {
        let _ = writeln!(
            out,
            "{j},{dy:e},{dx:e},{:e},{:e},{},{}",
            dy / (1.0 + delta),
            dy / (1.0 - delta),
            e as u8,
            o as u8
        );
    }
    out
}
