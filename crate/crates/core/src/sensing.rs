//! Random Gaussian patch measurements.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::patching::{PatchGrid, PatchVector};
use crate::rng;

/// Measurement operator of one stage: an independent `m x n` Gaussian block
/// for every patch of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    stage: usize,
    m: usize,
    n: usize,
    seed: u64,
    patch_count: usize,
    /// `patch_count` row-major `m x n` blocks, back to back.
    entries: Vec<f64>,
}

impl SensingMatrix {
    /// I.i.d. `N(0, 1/m)` entries. Entry `(i, k)` of patch `j` is drawn from
    /// the counter-based stream at `(seed, stage, j, i, k)`, so a matrix with
    /// more rows extends one with fewer and generation order is irrelevant.
    pub fn generate(
        seed: u64,
        stage: usize,
        m: usize,
        n: usize,
        patch_count: usize,
    ) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Contract(
                "measurement count must satisfy 1 <= m <= n",
            ));
        }
        if patch_count == 0 {
            return Err(Error::Contract("at least one patch is required"));
        }
        let scale = 1.0 / libm::sqrt(m as f64);
        let mut entries = Vec::with_capacity(patch_count * m * n);
        for j in 0..patch_count {
            for i in 0..m {
                for k in 0..n {
                    let key = [
                        rng::domain::SENSING,
                        seed,
                        stage as u64,
                        j as u64,
                        i as u64,
                        k as u64,
                    ];
                    entries.push(scale * rng::normal(&key));
                }
            }
        }
        Ok(Self {
            stage,
            m,
            n,
            seed,
            patch_count,
            entries,
        })
    }

    /// Explicit per-patch blocks, mostly for fixtures.
    pub fn from_blocks(stage: usize, m: usize, n: usize, blocks: &[Vec<f64>]) -> Result<Self> {
        if m == 0 || n == 0 || blocks.is_empty() {
            return Err(Error::Contract("matrix dimensions must be positive"));
        }
        let mut entries = Vec::with_capacity(blocks.len() * m * n);
        for block in blocks {
            check_len("matrix block", m * n, block.len())?;
            entries.extend_from_slice(block);
        }
        Ok(Self {
            stage,
            m,
            n,
            seed: 0,
            patch_count: blocks.len(),
            entries,
        })
    }

    /// Every patch block is the `n x n` identity scaled by `scale`.
    pub fn scaled_identity(stage: usize, n: usize, scale: f64, patch_count: usize) -> Result<Self> {
        let mut block = vec![0.0; n * n];
        for i in 0..n {
            block[i * n + i] = scale;
        }
        Self::from_blocks(stage, n, n, &vec![block; patch_count])
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Measurements per patch.
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Pixels per patch.
    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn patch_count(&self) -> usize {
        self.patch_count
    }

    /// Row-major `m x n` block of patch `j`.
    pub fn block(&self, j: usize) -> &[f64] {
        let size = self.m * self.n;
        &self.entries[j * size..(j + 1) * size]
    }

    /// `out = Phi_j x`. Slices must already have the right lengths.
    #[inline]
    pub(crate) fn apply_into(&self, j: usize, x: &[f64], out: &mut [f64]) {
        let block = self.block(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&block[i * self.n..(i + 1) * self.n], x);
        }
    }

    /// `out += Phi_j^T v`.
    #[inline]
    pub(crate) fn adjoint_add_into(&self, j: usize, v: &[f64], out: &mut [f64]) {
        let block = self.block(j);
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(&block[i * self.n..(i + 1) * self.n]) {
                *o += a * vi;
            }
        }
    }

    fn check_patch(&self, j: usize) -> Result<()> {
        if j < self.patch_count {
            Ok(())
        } else {
            Err(Error::Contract(
                "patch index out of range for sensing matrix",
            ))
        }
    }

    pub(crate) fn check_grid(&self, grid: &PatchGrid) -> Result<()> {
        check_len("sensing matrix columns", grid.patch_len(), self.n)?;
        check_len(
            "sensing matrix patches",
            grid.patch_count(),
            self.patch_count,
        )
    }

    /// `Phi_j x`.
    pub fn apply(&self, j: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_patch(j)?;
        check_len("sensing input", self.n, x.len())?;
        let mut out = vec![0.0; self.m];
        self.apply_into(j, x, &mut out);
        Ok(out)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Additive Gaussian measurement noise. `sigma == 0` disables it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    fn validate(&self) -> Result<()> {
        if self.sigma.is_finite() && self.sigma >= 0.0 {
            Ok(())
        } else {
            Err(Error::Contract(
                "noise sigma must be finite and non-negative",
            ))
        }
    }
}

/// Measurements of one stage, keyed by patch index.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub stage: usize,
    pub m: usize,
    pub seed: u64,
    pub vectors: BTreeMap<usize, Vec<f64>>,
}

impl MeasurementSet {
    pub fn sampled_patches(&self) -> impl Iterator<Item = usize> + '_ {
        self.vectors.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn total_measurements(&self) -> usize {
        self.m * self.vectors.len()
    }
}

pub fn gen_matrix(
    seed: u64,
    stage: usize,
    m: usize,
    n: usize,
    patch_count: usize,
) -> Result<SensingMatrix> {
    SensingMatrix::generate(seed, stage, m, n, patch_count)
}

/// `y = Phi x + eps` for one patch; the noise is keyed by stage and patch index.
pub fn measure_patch(
    phi: &SensingMatrix,
    patch: &PatchVector,
    noise: &NoiseSpec,
) -> Result<Vec<f64>> {
    noise.validate()?;
    let mut y = phi.apply(patch.patch_index, &patch.values)?;
    add_noise(&mut y, phi.stage, patch.patch_index, noise);
    Ok(y)
}

fn add_noise(y: &mut [f64], stage: usize, patch: usize, noise: &NoiseSpec) {
    if noise.sigma == 0.0 {
        return;
    }
    for (i, v) in y.iter_mut().enumerate() {
        *v += noise.sigma
            * rng::normal(&[
                rng::domain::NOISE,
                noise.seed,
                stage as u64,
                patch as u64,
                i as u64,
            ]);
    }
}

/// Measures exactly the `selected` patches of `img`.
///
/// This equals measuring `E_a ⊙ x` and dropping the all-zero blocks.
pub fn measure_stage(
    phi: &SensingMatrix,
    img: &Image,
    grid: &PatchGrid,
    selected: &[usize],
    noise: &NoiseSpec,
) -> Result<MeasurementSet> {
    noise.validate()?;
    grid.check_image(img)?;
    phi.check_grid(grid)?;
    let mut vectors = BTreeMap::new();
    let mut patch = vec![0.0; grid.patch_len()];
    for &j in selected {
        if j >= grid.patch_count() {
            return Err(Error::Contract("selected patch index out of range"));
        }
        grid.gather(img.data(), j, &mut patch);
        let mut y = vec![0.0; phi.rows()];
        phi.apply_into(j, &patch, &mut y);
        add_noise(&mut y, phi.stage, j, noise);
        vectors.insert(j, y);
    }
    Ok(MeasurementSet {
        stage: phi.stage,
        m: phi.rows(),
        seed: phi.seed,
        vectors,
    })
}

/// `Phi_j^T v` for patch `j`.
pub fn adjoint_apply(phi: &SensingMatrix, j: usize, v: &[f64]) -> Result<Vec<f64>> {
    phi.check_patch(j)?;
    check_len("adjoint input", phi.rows(), v.len())?;
    let mut out = vec![0.0; phi.cols()];
    phi.adjoint_add_into(j, v, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn gaussian_vec(seed: u64, n: usize) -> Vec<f64> {
        (0..n).map(|i| rng::normal(&[99, seed, i as u64])).collect()
    }

    #[test]
    fn generation_is_deterministic_and_keyed() {
        let a = gen_matrix(7, 1, 16, 64, 3).unwrap();
        assert_eq!(a, gen_matrix(7, 1, 16, 64, 3).unwrap());
        assert_ne!(a.block(0), gen_matrix(7, 2, 16, 64, 3).unwrap().block(0));
        assert_ne!(a.block(0), gen_matrix(8, 1, 16, 64, 3).unwrap().block(0));
        assert_ne!(a.block(0), a.block(1));
        // more rows extend fewer rows
        let short = gen_matrix(7, 1, 4, 64, 3).unwrap();
        let scale = (16.0f64 / 4.0).sqrt();
        for (x, y) in short.block(2).iter().zip(&a.block(2)[..4 * 64]) {
            assert!((x - y * scale).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(gen_matrix(1, 1, 0, 64, 1).is_err());
        assert!(gen_matrix(1, 1, 65, 64, 1).is_err());
        assert!(gen_matrix(1, 1, 4, 64, 0).is_err());
        let phi = gen_matrix(1, 1, 4, 16, 2).unwrap();
        assert!(adjoint_apply(&phi, 0, &[0.0; 3]).is_err());
        assert!(adjoint_apply(&phi, 2, &[0.0; 4]).is_err());
        let short = PatchVector {
            patch_index: 0,
            values: vec![0.0; 15],
        };
        assert!(measure_patch(&phi, &short, &NoiseSpec::none()).is_err());
    }

    #[test]
    fn entry_variance_is_one_over_m() {
        let m = 32;
        let phi = gen_matrix(3, 1, m, 64, 4).unwrap();
        let all = &phi.entries;
        let var = all.iter().map(|v| v * v).sum::<f64>() / all.len() as f64;
        assert!(
            (var * m as f64 - 1.0).abs() < 0.05,
            "m * var = {}",
            var * m as f64
        );
    }

    #[test]
    fn zero_patch_gives_zero_measurement() {
        let phi = gen_matrix(1, 1, 8, 16, 4).unwrap();
        let zero = PatchVector {
            patch_index: 3,
            values: vec![0.0; 16],
        };
        assert_eq!(
            measure_patch(&phi, &zero, &NoiseSpec::none()).unwrap(),
            vec![0.0; 8]
        );
    }

    #[test]
    fn identity_fixture_passes_through() {
        let phi = SensingMatrix::scaled_identity(1, 16, 1.0, 2).unwrap();
        let x = gaussian_vec(1, 16);
        let patch = PatchVector {
            patch_index: 1,
            values: x.clone(),
        };
        assert_eq!(measure_patch(&phi, &patch, &NoiseSpec::none()).unwrap(), x);
        assert_eq!(adjoint_apply(&phi, 1, &x).unwrap(), x);
        assert_eq!(adjoint_apply(&phi, 0, &[0.0; 16]).unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn noise_is_reproducible_and_scaled() {
        let phi = gen_matrix(1, 1, 16, 16, 3).unwrap();
        let patch = PatchVector {
            patch_index: 2,
            values: vec![1.0; 16],
        };
        let noise = NoiseSpec {
            sigma: 2.0,
            seed: 5,
        };
        let clean = measure_patch(&phi, &patch, &NoiseSpec::none()).unwrap();
        let a = measure_patch(&phi, &patch, &noise).unwrap();
        assert_eq!(a, measure_patch(&phi, &patch, &noise).unwrap());
        assert_ne!(a, clean);
        assert!(measure_patch(
            &phi,
            &patch,
            &NoiseSpec {
                sigma: -1.0,
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn stage_measurement_matches_per_patch() {
        let img = Image::from_fn(16, 24, |r, c| (r * 3 + c * 7) as f64 % 255.0).unwrap();
        let grid = PatchGrid::for_image(&img, 8).unwrap();
        let phi = gen_matrix(11, 2, 5, 64, grid.patch_count()).unwrap();
        let all: Vec<usize> = (0..grid.patch_count()).collect();
        let set = measure_stage(&phi, &img, &grid, &all, &NoiseSpec::none()).unwrap();
        assert_eq!(set.len(), grid.patch_count());
        for j in 0..grid.patch_count() {
            let patch = crate::patching::extract_patch(&img, &grid, j).unwrap();
            assert_eq!(
                set.vectors[&j],
                measure_patch(&phi, &patch, &NoiseSpec::none()).unwrap()
            );
        }
        let empty = measure_stage(&phi, &img, &grid, &[], &NoiseSpec::none()).unwrap();
        assert!(empty.is_empty());
        assert!(measure_stage(&phi, &img, &grid, &[6], &NoiseSpec::none()).is_err());
        let wrong = gen_matrix(11, 2, 5, 64, 2).unwrap();
        assert!(measure_stage(&wrong, &img, &grid, &all, &NoiseSpec::none()).is_err());
    }

    proptest! {
        #[test]
        fn adjoint_identity(m in 1usize..40, j in 0usize..3, seed in any::<u64>()) {
            let n = 64;
            let phi = gen_matrix(seed, 1, m, n, 3).unwrap();
            let x = gaussian_vec(seed, n);
            let v = gaussian_vec(seed ^ 1, m);
            let lhs = dot(&phi.apply(j, &x).unwrap(), &v);
            let rhs = dot(&x, &adjoint_apply(&phi, j, &v).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn measurement_is_linear(a in -10.0f64..10.0, b in -10.0f64..10.0, seed in any::<u64>()) {
            let phi = gen_matrix(seed, 1, 12, 64, 1).unwrap();
            let x1 = gaussian_vec(seed, 64);
            let x2 = gaussian_vec(seed ^ 7, 64);
            let mix: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
            let y = phi.apply(0, &mix).unwrap();
            let y1 = phi.apply(0, &x1).unwrap();
            let y2 = phi.apply(0, &x2).unwrap();
            for i in 0..12 {
                let expect = a * y1[i] + b * y2[i];
                prop_assert!((y[i] - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }
    }
}
