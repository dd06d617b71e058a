//! Retinal blood vessel segmentation.
//!
//! The pipeline takes a color fundus photograph through four stages:
//!
//! 1. [`preprocess`]: green channel extraction, median prefilter, CLAHE, and
//!    a field-of-view mask.
//! 2. [`gabor`]: a bank of oriented real Gabor kernels whose responses are
//!    fused by per-pixel maximum.
//! 3. [`threshold`]: the fused response is quantized, its gray-level
//!    co-occurrence matrix built, and the threshold maximizing the local
//!    second-order entropy selected.
//! 4. [`evaluation`]: contingency counts, sensitivity/specificity and ROC
//!    sweeps against a manual segmentation.
//!
//! [`pipeline`] wires the stages together and [`phantom`] generates synthetic
//! fundus images with exact ground truth for dataset-free testing.
//!
//! Heavy loops run on rayon when the `parallel` feature is enabled (the
//! default). Every operation also accepts an explicit [`Execution`] so both
//! paths can be compared; results are bitwise identical either way.

pub mod error;
pub mod evaluation;
pub mod exec;
pub mod filter;
pub mod gabor;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod raster;
pub mod threshold;

pub use error::{Error, Result};
pub use exec::Execution;
pub use raster::{BinaryMask, FundusImage, GrayImage, Raster, RealImage};
