//! Adaptive multi-stage compressive sensing.
//!
//! An image is split into non-overlapping `p x p` patches and sampled in
//! stages. Stage 1 measures every patch with a random Gaussian operator.
//! Each later stage re-measures the stage-1 residual `y1 - Phi1 x_hat` of the
//! current reconstruction, ranks patches by its energy, and spends that
//! stage's budget only on the worst patches. Reconstruction is an
//! l1-regularised least-squares solve in a global 2-D cosine basis (FISTA).
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the command
//! line live in the companion `adacs` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adaptive;
pub mod error;
pub mod image;
pub mod metrics;
pub mod patching;
pub mod pipeline;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod transform;

pub use adaptive::{AdaptiveMask, ErrorMap, RipBounds};
pub use error::{Error, Result};
pub use image::Image;
pub use metrics::{Correlation, MetricReport};
pub use patching::{PatchGrid, PatchVector};
pub use pipeline::{Arm, ErrorProxyStudy, PipelineConfig, PipelineRun, RateMode, StageRecord};
pub use sensing::{MeasurementSet, NoiseSpec, SensingMatrix};
pub use solver::{ReconResult, SolverConfig};

/// Rounds to the nearest integer, with halves going away from zero.
///
/// This is the rounding used everywhere a rate is turned into a count.
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    libm::round(x)
}
