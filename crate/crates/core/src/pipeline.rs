//! End-to-end segmentation of one fundus image.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gabor::{apply_bank_with, GaborParams, OrientationSet, DEFAULT_EXTENT_SIGMAS};
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::raster::{BinaryMask, FundusImage, GrayImage, RealImage};
use crate::threshold::{binarize_detailed, EntropyScan, DEFAULT_LEVELS};

#[derive(Clone, Debug, PartialEq)]
pub struct GaborConfig {
    /// Vessel thickness in pixels.
    pub thickness: f64,
    pub beta: f64,
    /// Angular spacing of the bank in degrees.
    pub orientation_step: f64,
    /// Kernel half-extent in units of `sigma_x`.
    pub extent_sigmas: f64,
}

impl Default for GaborConfig {
    fn default() -> Self {
        Self {
            thickness: 6.0,
            beta: 0.5,
            orientation_step: 15.0,
            extent_sigmas: DEFAULT_EXTENT_SIGMAS,
        }
    }
}

impl GaborConfig {
    pub fn params(&self) -> Result<GaborParams> {
        GaborParams::derive(self.thickness, self.beta)
    }

    pub fn orientations(&self) -> Result<OrientationSet> {
        OrientationSet::uniform(self.orientation_step)
    }

    pub fn half_extent(&self) -> Result<usize> {
        if !(self.extent_sigmas.is_finite() && self.extent_sigmas > 0.0) {
            return Err(Error::InvalidParameter {
                name: "extent_sigmas",
                reason: format!("must be positive, got {}", self.extent_sigmas),
            });
        }
        Ok(self.params()?.half_extent(self.extent_sigmas))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationConfig {
    pub preprocess: PreprocessConfig,
    pub gabor: GaborConfig,
    /// Quantization levels of the fused response.
    pub levels: usize,
    /// Vessels are darker than the background (true for fundus
    /// photographs); the enhanced image is inverted before filtering so that
    /// vessels become ridges.
    pub vessels_dark: bool,
    pub execution: Execution,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            gabor: GaborConfig::default(),
            levels: DEFAULT_LEVELS,
            vessels_dark: true,
            execution: Execution::default(),
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.gabor.half_extent()?;
        self.gabor.orientations()?;
        if !(2..=256).contains(&self.levels) {
            return Err(Error::InvalidLevels(self.levels));
        }
        Ok(())
    }
}

/// Every intermediate of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub enhanced: GrayImage,
    pub fov: BinaryMask,
    pub response: RealImage,
    pub quantized: GrayImage,
    pub scan: EntropyScan,
    pub mask: BinaryMask,
}

impl Segmentation {
    pub fn threshold(&self) -> usize {
        self.scan.threshold
    }
}

/// Enhancement and fused Gabor response, without thresholding.
pub fn enhance(
    img: &FundusImage,
    cfg: &SegmentationConfig,
) -> Result<(GrayImage, BinaryMask, RealImage)> {
    cfg.validate()?;
    let pre = preprocess(img, &cfg.preprocess)?;
    let input = if cfg.vessels_dark {
        pre.enhanced.map(|&v| f64::from(255 - v))
    } else {
        pre.enhanced.to_real()
    };
    let bank = apply_bank_with(
        &input,
        &cfg.gabor.params()?,
        &cfg.gabor.orientations()?,
        cfg.gabor.half_extent()?,
        cfg.execution,
    )?;
    Ok((pre.enhanced, pre.fov, bank.response))
}

/// Runs the full chain. `fov_override` replaces the computed field-of-view
/// mask when a dataset ships its own.
pub fn segment(
    img: &FundusImage,
    cfg: &SegmentationConfig,
    fov_override: Option<&BinaryMask>,
) -> Result<Segmentation> {
    let (enhanced, computed_fov, response) = enhance(img, cfg)?;
    let fov = match fov_override {
        Some(m) => {
            response.ensure_same_dims(m)?;
            m.clone()
        }
        None => computed_fov,
    };
    let b = binarize_detailed(&response, cfg.levels, &fov)?;
    Ok(Segmentation {
        enhanced,
        fov,
        response,
        quantized: b.quantized,
        scan: b.scan,
        mask: b.mask,
    })
}
