//! Non-overlapping `p x p` patch decomposition.
//!
//! Patch `j` is the block at `(j / cols, j % cols)`: blocks are numbered
//! row-major, and pixels inside a patch vector are row-major too. Every other
//! module indexes patches through this ordering.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    p: usize,
    rows: usize,
    cols: usize,
}

impl PatchGrid {
    /// Grid for an `height x width` image. Both sides must be multiples of `p`.
    pub fn new(height: usize, width: usize, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Contract("patch size must be at least 1"));
        }
        if height == 0 || width == 0 {
            return Err(Error::Contract("image dimensions must be positive"));
        }
        if height % p != 0 || width % p != 0 {
            return Err(Error::Contract(
                "patch size must divide both image dimensions",
            ));
        }
        Ok(Self {
            p,
            rows: height / p,
            cols: width / p,
        })
    }

    pub fn for_image(img: &Image, p: usize) -> Result<Self> {
        Self::new(img.height(), img.width(), p)
    }

    pub fn patch_size(&self) -> usize {
        self.p
    }

    /// Pixels per patch, `p^2`.
    pub fn patch_len(&self) -> usize {
        self.p * self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn patch_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn height(&self) -> usize {
        self.rows * self.p
    }

    pub fn width(&self) -> usize {
        self.cols * self.p
    }

    pub fn pixel_count(&self) -> usize {
        self.height() * self.width()
    }

    /// `(block_row, block_col)` of patch `j`.
    pub fn block_of(&self, j: usize) -> (usize, usize) {
        (j / self.cols, j % self.cols)
    }

    pub fn index_of(&self, block_row: usize, block_col: usize) -> usize {
        block_row * self.cols + block_col
    }

    /// Patch containing pixel `(row, col)`.
    pub fn patch_at_pixel(&self, row: usize, col: usize) -> usize {
        self.index_of(row / self.p, col / self.p)
    }

    pub fn matches(&self, img: &Image) -> bool {
        img.height() == self.height() && img.width() == self.width()
    }

    pub(crate) fn check_image(&self, img: &Image) -> Result<()> {
        if self.matches(img) {
            Ok(())
        } else {
            Err(Error::Contract(
                "image dimensions do not match the patch grid",
            ))
        }
    }

    /// Copies patch `j` of `data` (an image-sized row-major buffer) into `out`.
    pub(crate) fn gather(&self, data: &[f64], j: usize, out: &mut [f64]) {
        let (br, bc) = self.block_of(j);
        let w = self.width();
        let p = self.p;
        for r in 0..p {
            let start = (br * p + r) * w + bc * p;
            out[r * p..(r + 1) * p].copy_from_slice(&data[start..start + p]);
        }
    }

    /// Adds `src` into patch `j` of the image-sized buffer `data`.
    pub(crate) fn scatter_add(&self, data: &mut [f64], j: usize, src: &[f64]) {
        let (br, bc) = self.block_of(j);
        let w = self.width();
        let p = self.p;
        for r in 0..p {
            let start = (br * p + r) * w + bc * p;
            for (d, s) in data[start..start + p]
                .iter_mut()
                .zip(&src[r * p..(r + 1) * p])
            {
                *d += s;
            }
        }
    }

    pub(crate) fn scatter(&self, data: &mut [f64], j: usize, src: &[f64]) {
        let (br, bc) = self.block_of(j);
        let w = self.width();
        let p = self.p;
        for r in 0..p {
            let start = (br * p + r) * w + bc * p;
            data[start..start + p].copy_from_slice(&src[r * p..(r + 1) * p]);
        }
    }
}

/// One flattened patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchVector {
    pub patch_index: usize,
    pub values: Vec<f64>,
}

/// Single patch `j` of `img`.
pub fn extract_patch(img: &Image, grid: &PatchGrid, j: usize) -> Result<PatchVector> {
    grid.check_image(img)?;
    if j >= grid.patch_count() {
        return Err(Error::Contract("patch index out of range"));
    }
    let mut values = vec![0.0; grid.patch_len()];
    grid.gather(img.data(), j, &mut values);
    Ok(PatchVector {
        patch_index: j,
        values,
    })
}

pub fn patchify(img: &Image, p: usize) -> Result<Vec<PatchVector>> {
    let grid = PatchGrid::for_image(img, p)?;
    (0..grid.patch_count())
        .map(|j| extract_patch(img, &grid, j))
        .collect()
}

/// Inverse of [`patchify`]. Patches may arrive in any order but every index
/// must appear exactly once.
pub fn unpatchify(patches: &[PatchVector], grid: &PatchGrid) -> Result<Image> {
    check_len("patch list", grid.patch_count(), patches.len())?;
    let mut seen = vec![false; grid.patch_count()];
    let mut data = vec![0.0; grid.pixel_count()];
    for patch in patches {
        let j = patch.patch_index;
        if j >= grid.patch_count() {
            return Err(Error::Contract("patch index out of range"));
        }
        if seen[j] {
            return Err(Error::Contract("duplicate patch index"));
        }
        seen[j] = true;
        check_len("patch vector", grid.patch_len(), patch.values.len())?;
        grid.scatter(&mut data, j, &patch.values);
    }
    Image::new(grid.height(), grid.width(), data)
}

/// Pixel-wise expansion of a per-patch selection: 1.0 inside selected
/// patches, 0.0 elsewhere.
pub fn expand_mask(bits: &[bool], grid: &PatchGrid) -> Result<Image> {
    check_len("patch mask", grid.patch_count(), bits.len())?;
    Image::from_fn(grid.height(), grid.width(), |r, c| {
        if bits[grid.patch_at_pixel(r, c)] {
            1.0
        } else {
            0.0
        }
    })
}

/// `E_a ⊙ x`: zeroes every pixel outside the selected patches.
pub fn apply_mask(img: &Image, bits: &[bool], grid: &PatchGrid) -> Result<Image> {
    grid.check_image(img)?;
    let mask = expand_mask(bits, grid)?;
    Image::new(
        img.height(),
        img.width(),
        img.data()
            .iter()
            .zip(mask.data())
            .map(|(x, m)| x * m)
            .collect(),
    )
}
