//! Image quality and error-proxy statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::adaptive::{AdaptiveMask, ErrorMap};
use crate::error::{check_len, Error, Result};
use crate::image::Image;

const PEAK: f64 = 255.0;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub mask_agreement: Option<f64>,
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Contract("images must have equal dimensions"))
    }
}

/// `10 log10(255^2 / MSE)`; identical images give `f64::INFINITY`.
///
/// No clamping happens here. Callers evaluating reconstructions pass
/// display-clamped images.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    check_shapes(reference, test)?;
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(PEAK * PEAK / mse))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, wi) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *wi = libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Separable "valid" filtering with the SSIM window.
fn filter_valid(data: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oh = h + 1 - SSIM_WINDOW;
    let ow = w + 1 - SSIM_WINDOW;
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = win
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * data[r * w + c + k])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = win
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * rows[(r + k) * ow + c])
                .sum();
        }
    }
    out
}

/// Mean SSIM over all full 11x11 Gaussian windows (sigma 1.5, K1 0.01,
/// K2 0.03, dynamic range 255).
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    check_shapes(reference, test)?;
    let (h, w) = (reference.height(), reference.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Contract("SSIM needs images of at least 11x11"));
    }
    let win = gaussian_window();
    let x = reference.data();
    let y = test.data();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        x.iter().zip(y).map(|(&a, &b)| f(a, b)).collect()
    };
    let mu_x = filter_valid(x, h, w, &win);
    let mu_y = filter_valid(y, h, w, &win);
    let xx = filter_valid(&prod(&|a, _| a * a), h, w, &win);
    let yy = filter_valid(&prod(&|_, b| b * b), h, w, &win);
    let xy = filter_valid(&prod(&|a, b| a * b), h, w, &win);

    let c1 = (SSIM_K1 * PEAK) * (SSIM_K1 * PEAK);
    let c2 = (SSIM_K2 * PEAK) * (SSIM_K2 * PEAK);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = xx[i] - mx * mx;
        let var_y = yy[i] - my * my;
        let cov = xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok(total / mu_x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties receive the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson and Spearman correlation between two per-patch error maps.
///
/// `Ok(None)` means the correlation is undefined because one map is constant.
pub fn correlations(v_dy: &ErrorMap, v_dx: &ErrorMap) -> Result<Option<Correlation>> {
    check_len("error maps", v_dy.len(), v_dx.len())?;
    if v_dy.len() < 3 {
        return Err(Error::Contract("correlation needs at least 3 patches"));
    }
    let Some(pearson_value) = pearson(v_dy.values(), v_dx.values()) else {
        return Ok(None);
    };
    let spearman = pearson(&average_ranks(v_dy.values()), &average_ranks(v_dx.values()));
    Ok(spearman.map(|spearman| Correlation {
        pearson: pearson_value,
        spearman,
    }))
}

/// Fraction of `a`'s selected patches that `b` also selects.
pub fn mask_agreement(a: &AdaptiveMask, b: &AdaptiveMask) -> Result<f64> {
    check_len("mask patch count", a.patch_count(), b.patch_count())?;
    let count = a.popcount();
    check_len("mask popcount", count, b.popcount())?;
    if count == 0 {
        return Err(Error::Contract("masks select no patches"));
    }
    let shared = a.bits.iter().zip(&b.bits).filter(|(&p, &q)| p && q).count();
    Ok(shared as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn textured() -> Image {
        Image::from_fn(48, 40, |r, c| {
            128.0 + 60.0 * libm::sin(r as f64 / 3.0) * libm::cos(c as f64 / 5.0)
        })
        .unwrap()
    }

    #[test]
    fn psnr_values() {
        let a = textured();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let plus10 = a.map(|v| v + 10.0);
        let expect = 20.0 * (255.0f64 / 10.0).log10();
        assert!((psnr(&a, &plus10).unwrap() - expect).abs() < 1e-9);
        assert!((expect - 28.13).abs() < 0.01);
        let plus255 = a.map(|v| v + 255.0);
        assert!(psnr(&a, &plus255).unwrap().abs() < 1e-9);
        assert!(psnr(&a, &Image::zeros(4, 4).unwrap()).is_err());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = textured();
        let b = Image::from_fn(48, 40, |r, c| {
            a.get(r, c) + 15.0 * rng::normal(&[1, r as u64, c as u64])
        })
        .unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let ab = ssim(&a, &b).unwrap();
        assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!(ab < 1.0 && ab > 0.0);
        let small = Image::zeros(10, 40).unwrap();
        assert!(ssim(&small, &small).is_err());
    }

    #[test]
    fn ssim_of_negative_is_low() {
        let a = textured();
        let neg = a.map(|v| 255.0 - v);
        assert!(ssim(&a, &neg).unwrap() < 0.5);
    }

    #[test]
    fn correlation_cases() {
        let dy = ErrorMap::new(vec![1.0, 4.0, 2.0, 8.0, 5.0]).unwrap();
        let dx = ErrorMap::new(dy.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        let c = correlations(&dy, &dx).unwrap().unwrap();
        assert!((c.pearson - 1.0).abs() < 1e-12 && (c.spearman - 1.0).abs() < 1e-12);

        let rev = ErrorMap::new(dy.values().iter().map(|v| 100.0 - v).collect()).unwrap();
        let c = correlations(&dy, &rev).unwrap().unwrap();
        assert!((c.spearman + 1.0).abs() < 1e-12);

        let flat = ErrorMap::new(vec![3.0; 5]).unwrap();
        assert_eq!(correlations(&flat, &flat).unwrap(), None);
        let two = ErrorMap::new(vec![1.0, 2.0]).unwrap();
        assert!(correlations(&two, &two).is_err());
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 30.0]),
            vec![1.5, 3.0, 1.5, 4.0]
        );
    }

    #[test]
    fn agreement_cases() {
        let a = AdaptiveMask::from_bits(2, vec![true, true, false, false]);
        let b = AdaptiveMask::from_bits(2, vec![false, false, true, true]);
        assert_eq!(mask_agreement(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_agreement(&a, &b).unwrap(), 0.0);
        let c = AdaptiveMask::from_bits(2, vec![true, false, false, false]);
        assert!(mask_agreement(&a, &c).is_err());

        // 280 of 400 selected in both, 210 shared
        let x: Vec<bool> = (0..400).map(|j| j < 280).collect();
        let y: Vec<bool> = (0..400).map(|j| (70..350).contains(&j)).collect();
        let agree = mask_agreement(
            &AdaptiveMask::from_bits(2, x),
            &AdaptiveMask::from_bits(2, y),
        )
        .unwrap();
        assert!((agree - 0.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spearman_ignores_monotone_transforms(
            values in proptest::collection::vec(0.0f64..1e3, 5..40),
            other in proptest::collection::vec(0.0f64..1e3, 40),
        ) {
            let n = values.len();
            let a = ErrorMap::new(values.clone()).unwrap();
            let b = ErrorMap::new(other[..n].to_vec()).unwrap();
            let a2 = ErrorMap::new(values.iter().map(|v| (v + 1.0).ln() * 7.0 + v * v).collect()).unwrap();
            let base = correlations(&a, &b).unwrap();
            let moved = correlations(&a2, &b).unwrap();
            match (base, moved) {
                (Some(p), Some(q)) => prop_assert!((p.spearman - q.spearman).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "definedness changed"),
            }
        }

        #[test]
        fn agreement_is_bounded_and_symmetric(seed in any::<u64>(), keep in 1usize..30) {
            let mut x: Vec<bool> = (0..30).map(|j| j < keep).collect();
            let mut y = x.clone();
            // deterministic shuffles
            for i in (1..30).rev() {
                let k = (rng::hash(&[seed, i as u64]) % (i as u64 + 1)) as usize;
                x.swap(i, k);
                let k2 = (rng::hash(&[seed ^ 1, i as u64]) % (i as u64 + 1)) as usize;
                y.swap(i, k2);
            }
            let a = AdaptiveMask::from_bits(2, x);
            let b = AdaptiveMask::from_bits(2, y);
            let ab = mask_agreement(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, mask_agreement(&b, &a).unwrap());
            prop_assert_eq!(ab == 1.0, a.bits == b.bits);
        }
    }
}
