//! Sparse recovery over all accumulated measurements.
//!
//! Minimises `lambda * ||dct2(x)||_1 + 0.5 * sum_s sum_j ||Phi_s x^j - y_s^j||^2`
//! where `s` runs over stages and `j` over the patches sampled at that stage.
//! Because the DCT is orthonormal, the proximal map of the l1 term is soft
//! thresholding in the coefficient domain.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::patching::PatchGrid;
use crate::rng;
use crate::sensing::{MeasurementSet, SensingMatrix};
use crate::transform::{shrink, Dct2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Weight of the l1 penalty, on the 0..255 pixel scale.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once the relative objective decrease falls below this.
    pub rel_tol: f64,
    /// Power-iteration steps used to estimate the step size.
    pub power_iters: usize,
    /// Monotone FISTA: never accept an iterate that raises the objective.
    pub monotone: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 150.0,
            max_iters: 400,
            rel_tol: 1e-6,
            power_iters: 50,
            monotone: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config("lambda must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive"));
        }
        if self.power_iters == 0 {
            return Err(Error::Config("power_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub image: Image,
    pub iterations_used: usize,
    pub final_objective: f64,
    /// Objective at the starting point followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub lipschitz: f64,
}

/// The stacked measurement operator `A` of all stages seen so far.
#[derive(Debug, Clone, Copy)]
pub struct StackedOperator<'a> {
    grid: PatchGrid,
    measurements: &'a [MeasurementSet],
    matrices: &'a [SensingMatrix],
}

impl<'a> StackedOperator<'a> {
    pub fn new(
        grid: PatchGrid,
        measurements: &'a [MeasurementSet],
        matrices: &'a [SensingMatrix],
    ) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::Contract(
                "at least one measurement stage is required",
            ));
        }
        if measurements.len() != matrices.len() {
            return Err(Error::Contract(
                "measurement sets and matrices are not aligned",
            ));
        }
        for (set, phi) in measurements.iter().zip(matrices) {
            if set.stage != phi.stage() || set.m != phi.rows() {
                return Err(Error::Contract(
                    "measurement set does not belong to its matrix",
                ));
            }
            phi.check_grid(&grid)?;
            for (&j, y) in &set.vectors {
                if j >= grid.patch_count() {
                    return Err(Error::Contract("measured patch index out of range"));
                }
                check_len("measurement vector", set.m, y.len())?;
            }
        }
        Ok(Self {
            grid,
            measurements,
            matrices,
        })
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    /// `0.5 * ||A x - y||^2`, and `A^T (A x - y)` written into `grad` when given.
    ///
    /// With `subtract_data = false` the data vector is treated as zero, which
    /// turns the gradient into `A^T A x`.
    fn data_term(&self, x: &[f64], mut grad: Option<&mut [f64]>, subtract_data: bool) -> f64 {
        let n = self.grid.patch_len();
        let mut patch = vec![0.0; n];
        let mut back = vec![0.0; n];
        let mut value = 0.0;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        for (set, phi) in self.measurements.iter().zip(self.matrices) {
            let mut resid = vec![0.0; phi.rows()];
            for (&j, y) in &set.vectors {
                self.grid.gather(x, j, &mut patch);
                phi.apply_into(j, &patch, &mut resid);
                if subtract_data {
                    for (r, yi) in resid.iter_mut().zip(y) {
                        *r -= yi;
                    }
                }
                value += resid.iter().map(|r| r * r).sum::<f64>();
                if let Some(g) = grad.as_deref_mut() {
                    back.fill(0.0);
                    phi.adjoint_add_into(j, &resid, &mut back);
                    self.grid.scatter_add(g, j, &back);
                }
            }
        }
        0.5 * value
    }

    /// `0.5 * ||A x - y||^2`.
    pub fn data_residual(&self, x: &Image) -> Result<f64> {
        self.grid.check_image(x)?;
        Ok(self.data_term(x.data(), None, true))
    }

    /// `A^T (A x - y)`.
    pub fn data_gradient(&self, x: &Image) -> Result<Image> {
        self.grid.check_image(x)?;
        let mut g = vec![0.0; x.len()];
        self.data_term(x.data(), Some(&mut g), true);
        Image::new(x.height(), x.width(), g)
    }

    /// `A^T y`, assembled patch by patch.
    pub fn back_project(&self) -> Image {
        let mut out = vec![0.0; self.grid.pixel_count()];
        let mut back = vec![0.0; self.grid.patch_len()];
        for (set, phi) in self.measurements.iter().zip(self.matrices) {
            for (&j, y) in &set.vectors {
                back.fill(0.0);
                phi.adjoint_add_into(j, y, &mut back);
                self.grid.scatter_add(&mut out, j, &back);
            }
        }
        Image::new(self.grid.height(), self.grid.width(), out).expect("grid-shaped")
    }

    /// Power iteration on `A^T A` from a fixed pseudo-random start.
    ///
    /// Returns `||A^T A v||` for the final unit iterate `v`, which never
    /// exceeds `sigma_max(A)^2`.
    pub fn lipschitz(&self, power_iters: usize) -> Result<f64> {
        if power_iters == 0 {
            return Err(Error::Contract("power iteration needs at least one step"));
        }
        let len = self.grid.pixel_count();
        let mut v: Vec<f64> = (0..len as u64)
            .map(|i| rng::uniform(&[rng::domain::POWER, i], 0) - 0.25)
            .collect();
        normalize(&mut v);
        let mut w = vec![0.0; len];
        let mut estimate = 0.0;
        for _ in 0..power_iters {
            self.data_term(&v, Some(&mut w), false);
            estimate = norm(&w);
            if estimate == 0.0 {
                return Ok(0.0);
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / estimate;
            }
        }
        if !estimate.is_finite() {
            return Err(Error::NonFinite("lipschitz estimate"));
        }
        Ok(estimate)
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Step-size constant `L ~ sigma_max(A)^2` for the stacked operator.
pub fn estimate_lipschitz(
    measurements: &[MeasurementSet],
    matrices: &[SensingMatrix],
    grid: &PatchGrid,
    power_iters: usize,
) -> Result<f64> {
    StackedOperator::new(*grid, measurements, matrices)?.lipschitz(power_iters)
}

/// Reconstructs the image from every stage measured so far.
///
/// Starts from `warm_start` when given, otherwise from `A^T y`.
pub fn reconstruct(
    measurements: &[MeasurementSet],
    matrices: &[SensingMatrix],
    grid: &PatchGrid,
    cfg: &SolverConfig,
    warm_start: Option<&Image>,
) -> Result<ReconResult> {
    cfg.validate()?;
    let op = StackedOperator::new(*grid, measurements, matrices)?;
    if let Some(first) = measurements.first() {
        if first.len() != grid.patch_count() {
            return Err(Error::Contract("the first stage must cover every patch"));
        }
    }
    let x0 = match warm_start {
        Some(img) => {
            grid.check_image(img)?;
            img.clone()
        }
        None => op.back_project(),
    };
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial point"));
    }
    let lipschitz = op.lipschitz(cfg.power_iters)?;
    if !(lipschitz > 0.0) {
        return Err(Error::NonFinite("step size (operator is zero)"));
    }
    fista(&op, cfg, x0, lipschitz)
}

fn fista(
    op: &StackedOperator<'_>,
    cfg: &SolverConfig,
    x0: Image,
    lipschitz: f64,
) -> Result<ReconResult> {
    let (h, w) = (x0.height(), x0.width());
    let len = h * w;
    let dct = Dct2::new(h, w);
    let step = 1.0 / lipschitz;
    let thresh = cfg.lambda * step;

    let mut coeffs = vec![0.0; len];
    dct.forward(x0.data(), &mut coeffs);
    let l1 = |c: &[f64]| c.iter().map(|v| v.abs()).sum::<f64>();
    let mut objective = cfg.lambda * l1(&coeffs) + op.data_term(x0.data(), None, true);
    if !objective.is_finite() {
        return Err(Error::NonFinite("objective"));
    }

    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push(objective);

    let mut x = x0.into_data();
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut z = vec![0.0; len];
    let mut grad = vec![0.0; len];
    let mut t = 1.0f64;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        op.data_term(&y, Some(&mut grad), true);
        for (gi, yi) in grad.iter_mut().zip(&y) {
            *gi = yi - step * *gi;
        }
        dct.forward(&grad, &mut coeffs);
        coeffs.iter_mut().for_each(|c| *c = shrink(*c, thresh));
        dct.inverse(&coeffs, &mut z);
        let candidate = cfg.lambda * l1(&coeffs) + op.data_term(&z, None, true);
        if !candidate.is_finite() {
            return Err(Error::NonFinite("objective"));
        }

        let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        let previous = objective;
        core::mem::swap(&mut x_prev, &mut x);
        let accepted = !cfg.monotone || candidate <= previous;
        if accepted {
            x.copy_from_slice(&z);
            objective = candidate;
        } else {
            x.copy_from_slice(&x_prev);
        }
        // y = x + (t / t_next) (z - x) + ((t - 1) / t_next) (x - x_prev)
        let a = t / t_next;
        let b = (t - 1.0) / t_next;
        for i in 0..len {
            y[i] = x[i] + a * (z[i] - x[i]) + b * (x[i] - x_prev[i]);
        }
        t = t_next;
        trace.push(objective);

        if accepted {
            let scale = if previous.abs() > f64::MIN_POSITIVE {
                previous.abs()
            } else {
                1.0
            };
            if (previous - objective).abs() / scale < cfg.rel_tol {
                break;
            }
        }
    }

    Ok(ReconResult {
        image: Image::new(h, w, x)?,
        iterations_used: iterations,
        final_objective: objective,
        objective_trace: trace,
        lipschitz,
    })
}
