//! Image file reading and writing.

use crate::error::{CliError, Result};
use std::path::Path;
use vesselseg_core::{BinaryMask, FundusImage, GrayImage, Raster};

fn open(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a color or gray image as three 8-bit planes. Gray input is
/// replicated into every plane; deeper samples are scaled to 8 bits.
pub fn read_fundus(path: &Path) -> Result<FundusImage> {
    let rgb = open(path)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(FundusImage::from_interleaved(
        w as usize,
        h as usize,
        rgb.as_raw(),
    )?)
}

/// Reads a single-channel mask; any nonzero sample is set.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let luma = open(path)?.to_luma8();
    let (w, h) = luma.dimensions();
    Ok(Raster::from_vec(
        w as usize,
        h as usize,
        luma.as_raw().iter().map(|&v| v > 0).collect(),
    )?)
}

fn save(path: &Path, result: image::ImageResult<()>) -> Result<()> {
    result.map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes an 8-bit gray image; the format follows the file extension.
pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.as_slice().to_vec(),
    )
    .expect("raster length matches its dimensions");
    save(path, buf.save(path))
}

/// Writes a mask as 0 / 255.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_gray(path, &mask.to_gray())
}

pub fn write_fundus(path: &Path, img: &FundusImage) -> Result<()> {
    let buf = image::RgbImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.to_interleaved(),
    )
    .expect("plane lengths match the dimensions");
    save(path, buf.save(path))
}
