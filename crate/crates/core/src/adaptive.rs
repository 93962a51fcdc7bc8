//! Error-driven patch selection.
//!
//! The true reconstruction error `dx = x - x_hat` is unknown, but re-measuring
//! the reconstruction with the stage-1 operator gives `dy = y1 - Phi1 x_hat`,
//! which equals `Phi1 dx` on noiseless data. When `Phi1` satisfies RIP with
//! constant `delta`, `||dy||^2 / (1 + delta) <= ||dx||^2 <= ||dy||^2 / (1 - delta)`,
//! so patches with large `||dy||^2` are the ones worth sampling again.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::patching::PatchGrid;
use crate::sensing::{MeasurementSet, SensingMatrix};

/// Per-patch squared error energies, indexed by patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap(Vec<f64>);

impl ErrorMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("error map"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::Contract("error map entries must be non-negative"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// Per-patch selection for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveMask {
    pub stage: usize,
    pub bits: Vec<bool>,
    /// Binarisation threshold; `-inf` when nothing is left unsampled.
    pub threshold: f64,
    pub n_unsampled: usize,
}

impl AdaptiveMask {
    /// Mask from explicit bits, e.g. to compare against hand-built selections.
    pub fn from_bits(stage: usize, bits: Vec<bool>) -> Self {
        let n_unsampled = bits.iter().filter(|&&b| !b).count();
        Self {
            stage,
            bits,
            threshold: f64::NAN,
            n_unsampled,
        }
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn patch_count(&self) -> usize {
        self.bits.len()
    }

    /// Selected patch indices in ascending order.
    pub fn selected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipBounds {
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
}

/// `dy_j = y1_j - Phi1 x_hat_j` for every patch.
pub fn measurement_error(
    y1: &MeasurementSet,
    phi1: &SensingMatrix,
    recon: &Image,
    grid: &PatchGrid,
) -> Result<Vec<Vec<f64>>> {
    if y1.stage != 1 || phi1.stage() != 1 {
        return Err(Error::Contract(
            "measurement error is defined against stage 1",
        ));
    }
    if y1.m != phi1.rows() {
        return Err(Error::Contract(
            "stage-1 measurements do not match the matrix",
        ));
    }
    phi1.check_grid(grid)?;
    grid.check_image(recon)?;
    check_len("stage-1 patches", grid.patch_count(), y1.len())?;
    let mut patch = vec![0.0; grid.patch_len()];
    let mut out = Vec::with_capacity(grid.patch_count());
    for j in 0..grid.patch_count() {
        let y = y1
            .vectors
            .get(&j)
            .ok_or(Error::Contract("stage 1 must cover every patch"))?;
        grid.gather(recon.data(), j, &mut patch);
        let mut dy = vec![0.0; y1.m];
        phi1.apply_into(j, &patch, &mut dy);
        for (d, yi) in dy.iter_mut().zip(y) {
            *d = yi - *d;
        }
        out.push(dy);
    }
    Ok(out)
}

/// `V_j = ||dy_j||^2`.
pub fn error_map(deltas: &[Vec<f64>]) -> Result<ErrorMap> {
    ErrorMap::new(
        deltas
            .iter()
            .map(|d| d.iter().map(|v| v * v).sum())
            .collect(),
    )
}

/// Per-patch `||x - x_hat||^2`. Needs the ground truth, so only evaluation
/// code can call it.
pub fn reconstruction_error_map(
    truth: &Image,
    recon: &Image,
    grid: &PatchGrid,
) -> Result<ErrorMap> {
    grid.check_image(truth)?;
    grid.check_image(recon)?;
    let mut a = vec![0.0; grid.patch_len()];
    let mut b = vec![0.0; grid.patch_len()];
    let values = (0..grid.patch_count())
        .map(|j| {
            grid.gather(truth.data(), j, &mut a);
            grid.gather(recon.data(), j, &mut b);
            a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum()
        })
        .collect();
    ErrorMap::new(values)
}

/// Two-sided clamp on `||dx||^2` implied by `||dy||^2` and RIP constant `delta`.
pub fn rip_bounds(dy_sq: f64, delta: f64) -> Result<RipBounds> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Contract("RIP constant must lie in (0, 1)"));
    }
    if !(dy_sq >= 0.0 && dy_sq.is_finite()) {
        return Err(Error::Contract(
            "squared measurement error must be finite and non-negative",
        ));
    }
    Ok(RipBounds {
        lower: dy_sq / (1.0 + delta),
        upper: dy_sq / (1.0 - delta),
        delta,
    })
}

/// Patches left out at stage `i`: `round((1 - alpha^(i-1)) * patch_count)`.
pub fn unsampled_count(alpha: f64, stage: usize, patch_count: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config("alpha must lie in (0, 1]"));
    }
    if stage < 2 {
        return Err(Error::Contract("adaptive selection starts at stage 2"));
    }
    let keep = libm::pow(alpha, (stage - 1) as f64);
    let n_unsampled = crate::round_half_away((1.0 - keep) * patch_count as f64) as usize;
    if n_unsampled >= patch_count {
        return Err(Error::DegenerateSelection {
            unsampled: n_unsampled,
            patch_count,
        });
    }
    Ok(n_unsampled)
}

/// Binarises `v` at its `N_a`-th smallest value.
///
/// Patches strictly above the threshold are selected. If ties at the
/// threshold leave the selection short of `patch_count - N_a`, tied patches
/// are added in ascending index order until the count is exact.
pub fn select_patches(
    v: &ErrorMap,
    alpha: f64,
    stage: usize,
    grid: &PatchGrid,
) -> Result<AdaptiveMask> {
    check_len("error map", grid.patch_count(), v.len())?;
    let n_unsampled = unsampled_count(alpha, stage, v.len())?;
    let target = v.len() - n_unsampled;

    let threshold = if n_unsampled == 0 {
        f64::NEG_INFINITY
    } else {
        let mut sorted = v.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted[n_unsampled - 1]
    };

    let mut bits: Vec<bool> = v.values().iter().map(|&e| e > threshold).collect();
    let mut count = bits.iter().filter(|&&b| b).count();
    for (bit, &e) in bits.iter_mut().zip(v.values()) {
        if count == target {
            break;
        }
        if e == threshold {
            *bit = true;
            count += 1;
        }
    }
    debug_assert_eq!(count, target);

    Ok(AdaptiveMask {
        stage,
        bits,
        threshold,
        n_unsampled,
    })
}

/// The selection [`select_patches`] would make if the true per-patch error
/// `||dx||^2` were known.
pub fn oracle_mask(
    truth: &Image,
    recon: &Image,
    alpha: f64,
    stage: usize,
    grid: &PatchGrid,
) -> Result<AdaptiveMask> {
    select_patches(
        &reconstruction_error_map(truth, recon, grid)?,
        alpha,
        stage,
        grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{gen_matrix, measure_stage, NoiseSpec};

    fn grid400() -> PatchGrid {
        PatchGrid::new(160, 160, 8).unwrap()
    }

    #[test]
    fn unsampled_counts_follow_alpha_powers() {
        assert_eq!(unsampled_count(0.7, 2, 400).unwrap(), 120);
        assert_eq!(unsampled_count(0.7, 3, 400).unwrap(), 204);
        assert_eq!(unsampled_count(1.0, 4, 400).unwrap(), 0);
        assert!(unsampled_count(0.0, 2, 400).is_err());
        assert!(unsampled_count(0.7, 1, 400).is_err());
        assert!(matches!(
            unsampled_count(0.1, 5, 16),
            Err(Error::DegenerateSelection { .. })
        ));
    }

    #[test]
    fn selection_cardinality() {
        let grid = grid400();
        let v = ErrorMap::new((0..400).map(|j| ((j * 37) % 400) as f64).collect()).unwrap();
        let m2 = select_patches(&v, 0.7, 2, &grid).unwrap();
        assert_eq!((m2.n_unsampled, m2.popcount()), (120, 280));
        let m3 = select_patches(&v, 0.7, 3, &grid).unwrap();
        assert_eq!((m3.n_unsampled, m3.popcount()), (204, 196));
    }

    #[test]
    fn all_ties_pick_lowest_indices() {
        let grid = grid400();
        let v = ErrorMap::new(vec![1.0; 400]).unwrap();
        let mask = select_patches(&v, 0.7, 2, &grid).unwrap();
        assert_eq!(mask.popcount(), 280);
        assert!(mask.bits[..280].iter().all(|&b| b));
        assert!(mask.bits[280..].iter().all(|&b| !b));
    }

    #[test]
    fn strict_order_selects_top_errors() {
        let grid = PatchGrid::new(32, 32, 8).unwrap();
        let v = ErrorMap::new((0..16).map(|j| (16 - j) as f64).collect()).unwrap();
        let mask = select_patches(&v, 0.5, 2, &grid).unwrap();
        assert_eq!(mask.selected(), (0..8).collect::<Vec<_>>());
        assert_eq!(mask.threshold, 8.0);
    }

    #[test]
    fn alpha_one_selects_everything() {
        let grid = PatchGrid::new(16, 16, 8).unwrap();
        let v = ErrorMap::new(vec![0.0, 3.0, 1.0, 2.0]).unwrap();
        let mask = select_patches(&v, 1.0, 3, &grid).unwrap();
        assert_eq!(mask.popcount(), 4);
        assert_eq!(mask.threshold, f64::NEG_INFINITY);
    }

    #[test]
    fn error_map_values() {
        let v = error_map(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(v.values(), &[25.0, 0.0]);
        assert!(ErrorMap::new(vec![-1.0]).is_err());
        assert!(ErrorMap::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn rip_bound_values() {
        let b = rip_bounds(1.0, 0.5).unwrap();
        assert_eq!(b.lower, 2.0 / 3.0);
        assert_eq!(b.upper, 2.0);
        let z = rip_bounds(0.0, 0.3).unwrap();
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
        let tight = rip_bounds(4.0, 1e-9).unwrap();
        assert!((tight.lower - 4.0).abs() < 1e-8 && (tight.upper - 4.0).abs() < 1e-8);
        assert!(rip_bounds(1.0, 0.0).is_err());
        assert!(rip_bounds(1.0, 1.0).is_err());
        assert!(rip_bounds(-1.0, 0.5).is_err());
    }

    #[test]
    fn measurement_error_edge_cases() {
        let img = Image::from_fn(16, 16, |r, c| (r * 16 + c) as f64).unwrap();
        let grid = PatchGrid::for_image(&img, 8).unwrap();
        let phi = gen_matrix(2, 1, 6, 64, 4).unwrap();
        let every: Vec<usize> = (0..4).collect();
        let y1 = measure_stage(&phi, &img, &grid, &every, &NoiseSpec::none()).unwrap();

        let at_truth = measurement_error(&y1, &phi, &img, &grid).unwrap();
        assert!(at_truth.iter().flatten().all(|&d| d.abs() < 1e-9));

        let zero = Image::zeros(16, 16).unwrap();
        let from_zero = measurement_error(&y1, &phi, &zero, &grid).unwrap();
        for j in 0..4 {
            assert_eq!(from_zero[j], y1.vectors[&j]);
        }

        let phi2 = gen_matrix(2, 2, 6, 64, 4).unwrap();
        let y2 = measure_stage(&phi2, &img, &grid, &every, &NoiseSpec::none()).unwrap();
        assert!(measurement_error(&y2, &phi2, &img, &grid).is_err());
    }

    #[test]
    fn oracle_mask_at_truth_uses_tie_rule() {
        let img = Image::from_fn(160, 160, |r, c| (r ^ c) as f64).unwrap();
        let mask = oracle_mask(&img, &img, 0.7, 2, &grid400()).unwrap();
        assert_eq!(mask.popcount(), 280);
        assert!(mask.bits[..280].iter().all(|&b| b));
    }
}
