//! Orthonormal 2-D type-II discrete cosine transform of a whole image.
//!
//! The 2-D transform is separable: every row, then every column, goes
//! through an orthonormal 1-D DCT-II. Power-of-two lengths use Lee's
//! recursive factorisation; other lengths multiply by the basis matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Result};
use crate::image::Image;

/// Orthonormal DCT-II basis, row `k` holds frequency `k`.
fn basis(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    let s0 = libm::sqrt(1.0 / n as f64);
    let s = libm::sqrt(2.0 / n as f64);
    for k in 0..n {
        let scale = if k == 0 { s0 } else { s };
        for i in 0..n {
            let angle = core::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64;
            c[k * n + i] = scale * libm::cos(angle);
        }
    }
    c
}

#[derive(Debug, Clone)]
enum Kernel {
    /// `1 / (2 cos((i + 1/2) pi / k))` for every sub-length `k`, packed so the
    /// factors of length `k` start at offset `k / 2`.
    Lee {
        factors: Vec<f64>,
    },
    Matrix {
        basis: Vec<f64>,
    },
}

/// Orthonormal 1-D DCT-II / DCT-III pair of a fixed length.
#[derive(Debug, Clone)]
pub struct Dct1 {
    n: usize,
    kernel: Kernel,
    scale0: f64,
    scale: f64,
}

impl Dct1 {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        let kernel = if n.is_power_of_two() && n > 1 {
            let mut factors = vec![0.0; n];
            let mut k = 2;
            while k <= n {
                let half = k / 2;
                for i in 0..half {
                    let angle = (i as f64 + 0.5) * core::f64::consts::PI / k as f64;
                    factors[half + i] = 1.0 / (2.0 * libm::cos(angle));
                }
                k *= 2;
            }
            Kernel::Lee { factors }
        } else {
            Kernel::Matrix { basis: basis(n) }
        };
        Self {
            n,
            kernel,
            scale0: libm::sqrt(1.0 / n as f64),
            scale: libm::sqrt(2.0 / n as f64),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place orthonormal DCT-II. `scratch` must hold at least `n` values.
    pub fn forward(&self, data: &mut [f64], scratch: &mut [f64]) {
        debug_assert_eq!(data.len(), self.n);
        match &self.kernel {
            Kernel::Lee { factors } => {
                lee_forward(data, &mut scratch[..self.n], factors);
                data[0] *= self.scale0;
                data[1..].iter_mut().for_each(|v| *v *= self.scale);
            }
            Kernel::Matrix { basis } => {
                let n = self.n;
                scratch[..n].copy_from_slice(data);
                for (k, out) in data.iter_mut().enumerate() {
                    *out = basis[k * n..(k + 1) * n]
                        .iter()
                        .zip(&scratch[..n])
                        .map(|(b, x)| b * x)
                        .sum();
                }
            }
        }
    }

    /// In-place inverse of [`Dct1::forward`] (orthonormal DCT-III).
    pub fn inverse(&self, data: &mut [f64], scratch: &mut [f64]) {
        debug_assert_eq!(data.len(), self.n);
        match &self.kernel {
            Kernel::Lee { factors } => {
                data[0] *= self.scale0;
                data[1..].iter_mut().for_each(|v| *v *= self.scale);
                lee_inverse(data, &mut scratch[..self.n], factors);
            }
            Kernel::Matrix { basis } => {
                let n = self.n;
                scratch[..n].copy_from_slice(data);
                data.fill(0.0);
                for (k, &c) in scratch[..n].iter().enumerate() {
                    for (out, b) in data.iter_mut().zip(&basis[k * n..(k + 1) * n]) {
                        *out += b * c;
                    }
                }
            }
        }
    }
}

/// Unnormalised DCT-II, `X_k = sum_i x_i cos(pi (i + 1/2) k / n)`.
fn lee_forward(data: &mut [f64], temp: &mut [f64], factors: &[f64]) {
    let len = data.len();
    if len == 1 {
        return;
    }
    let half = len / 2;
    for i in 0..half {
        let x = data[i];
        let y = data[len - 1 - i];
        temp[i] = x + y;
        temp[i + half] = (x - y) * factors[half + i];
    }
    let (lo, hi) = temp.split_at_mut(half);
    lee_forward(lo, &mut data[..half], factors);
    lee_forward(hi, &mut data[half..], factors);
    for i in 0..half - 1 {
        data[2 * i] = temp[i];
        data[2 * i + 1] = temp[i + half] + temp[i + half + 1];
    }
    data[len - 2] = temp[half - 1];
    data[len - 1] = temp[len - 1];
}

/// Unnormalised DCT-III without the usual halving, `x_i = sum_k X_k cos(pi (i + 1/2) k / n)`.
fn lee_inverse(data: &mut [f64], temp: &mut [f64], factors: &[f64]) {
    let len = data.len();
    if len == 1 {
        return;
    }
    let half = len / 2;
    temp[0] = data[0];
    temp[half] = data[1];
    for i in 1..half {
        temp[i] = data[2 * i];
        temp[i + half] = data[2 * i - 1] + data[2 * i + 1];
    }
    let (lo, hi) = temp.split_at_mut(half);
    lee_inverse(lo, &mut data[..half], factors);
    lee_inverse(hi, &mut data[half..], factors);
    for i in 0..half {
        let x = temp[i];
        let y = temp[i + half] * factors[half + i];
        data[i] = x + y;
        data[len - 1 - i] = x - y;
    }
}

/// Precomputed 2-D transform for a fixed image shape.
#[derive(Debug, Clone)]
pub struct Dct2 {
    height: usize,
    width: usize,
    rows: Dct1,
    cols: Dct1,
}

impl Dct2 {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            rows: Dct1::new(width),
            cols: Dct1::new(height),
        }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn separable(&self, x: &[f64], out: &mut [f64], inverse: bool) {
        let (h, w) = (self.height, self.width);
        debug_assert_eq!(x.len(), h * w);
        debug_assert_eq!(out.len(), h * w);
        out.copy_from_slice(x);
        let mut scratch = vec![0.0; h.max(w)];
        for row in out.chunks_exact_mut(w) {
            if inverse {
                self.rows.inverse(row, &mut scratch);
            } else {
                self.rows.forward(row, &mut scratch);
            }
        }
        let mut column = vec![0.0; h];
        for c in 0..w {
            for r in 0..h {
                column[r] = out[r * w + c];
            }
            if inverse {
                self.cols.inverse(&mut column, &mut scratch);
            } else {
                self.cols.forward(&mut column, &mut scratch);
            }
            for r in 0..h {
                out[r * w + c] = column[r];
            }
        }
    }

    /// `out = C_h x C_w^T`.
    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        self.separable(x, out, false);
    }

    /// `out = C_h^T y C_w`.
    pub fn inverse(&self, y: &[f64], out: &mut [f64]) {
        self.separable(y, out, true);
    }

    pub fn forward_image(&self, img: &Image) -> Result<Image> {
        check_len("dct input", self.len(), img.len())?;
        let mut out = vec![0.0; self.len()];
        self.forward(img.data(), &mut out);
        Image::new(self.height, self.width, out)
    }

    pub fn inverse_image(&self, coeffs: &Image) -> Result<Image> {
        check_len("dct input", self.len(), coeffs.len())?;
        let mut out = vec![0.0; self.len()];
        self.inverse(coeffs.data(), &mut out);
        Image::new(self.height, self.width, out)
    }
}

/// Orthonormal 2-D DCT-II; the coefficient matrix has the image's shape.
pub fn dct2(img: &Image) -> Image {
    let plan = Dct2::new(img.height(), img.width());
    let mut out = vec![0.0; img.len()];
    plan.forward(img.data(), &mut out);
    Image::new(img.height(), img.width(), out).expect("shape preserved")
}

/// Inverse of [`dct2`].
pub fn idct2(coeffs: &Image) -> Image {
    let plan = Dct2::new(coeffs.height(), coeffs.width());
    let mut out = vec![0.0; coeffs.len()];
    plan.inverse(coeffs.data(), &mut out);
    Image::new(coeffs.height(), coeffs.width(), out).expect("shape preserved")
}

/// `sign(c) * max(|c| - t, 0)`, the proximal map of `t * |.|`.
#[inline]
pub fn shrink(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

/// Elementwise soft thresholding of a coefficient matrix.
pub fn soft_threshold(coeffs: &Image, t: f64) -> Result<Image> {
    if !(t >= 0.0) {
        return Err(crate::Error::Contract("threshold must be non-negative"));
    }
    Ok(coeffs.map(|c| shrink(c, t)))
}
