//! Low-level raster operations: 2-D convolution, median filtering, binary
//! erosion and range quantization.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::raster::{BinaryMask, GrayImage, Raster, RealImage};

/// Square all-ones structuring element with an odd side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    side: usize,
}

impl StructuringElement {
    pub fn square(side: usize) -> Result<Self> {
        if side == 0 || side.is_multiple_of(2) {
            return Err(Error::InvalidWindow(side));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn radius(&self) -> usize {
        self.side / 2
    }
}

/// Maps an out-of-range coordinate back into `[0, n)` by mirroring about the
/// edge pixels without repeating them (`d c b | a b c d | c b a`).
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Reflect-padded copy of `image` with `rx` extra columns and `ry` extra rows
/// on every side.
pub(crate) fn pad_reflect<T: Copy>(image: &Raster<T>, rx: usize, ry: usize) -> Raster<T> {
    let (w, h) = image.dims();
    Raster::from_fn(w + 2 * rx, h + 2 * ry, |x, y| {
        let sx = reflect_index(x as isize - rx as isize, w);
        let sy = reflect_index(y as isize - ry as isize, h);
        image.get(sx, sy)
    })
}

fn check_kernel(kernel: &RealImage) -> Result<()> {
    let (kw, kh) = kernel.dims();
    if kw % 2 == 0 || kh % 2 == 0 {
        return Err(Error::EvenKernel {
            width: kw,
            height: kh,
        });
    }
    Ok(())
}

/// One output row of the kernel sum over a padded source. The kernel is
/// anchored at its center and applied without flipping, so an impulse input
/// reproduces the kernel rotated by 180 degrees.
#[inline]
pub(crate) fn filter_row(padded: &RealImage, kernel: &RealImage, y: usize, out: &mut [f64]) {
    let (kw, kh) = kernel.dims();
    let pw = padded.width();
    let pad = padded.as_slice();
    let k = kernel.as_slice();
    for (x, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for ky in 0..kh {
            let src = &pad[(y + ky) * pw + x..(y + ky) * pw + x + kw];
            let krow = &k[ky * kw..(ky + 1) * kw];
            for (a, b) in krow.iter().zip(src) {
                acc += a * b;
            }
        }
        *o = acc;
    }
}

/// Filters `image` with `kernel` under reflect-padded borders. Output has the
/// input's dimensions.
pub fn convolve2d(image: &RealImage, kernel: &RealImage) -> Result<RealImage> {
    convolve2d_with(image, kernel, Execution::default())
}

pub fn convolve2d_with(
    image: &RealImage,
    kernel: &RealImage,
    exec: Execution,
) -> Result<RealImage> {
    image.ensure_nonempty()?;
    check_kernel(kernel)?;
    let (w, h) = image.dims();
    let padded = pad_reflect(image, kernel.width() / 2, kernel.height() / 2);
    let mut out = vec![0.0; w * h];
    exec::for_each_row(exec, &mut out, w, |y, row| {
        filter_row(&padded, kernel, y, row)
    });
    Raster::from_vec(w, h, out)
}

/// Replaces each pixel by the median of its `side x side` reflect-padded
/// neighborhood.
pub fn median_filter(image: &GrayImage, side: usize) -> Result<GrayImage> {
    median_filter_with(image, side, Execution::default())
}

pub fn median_filter_with(image: &GrayImage, side: usize, exec: Execution) -> Result<GrayImage> {
    if side == 0 || side.is_multiple_of(2) {
        return Err(Error::InvalidWindow(side));
    }
    if side == 1 || image.is_empty() {
        return Ok(image.clone());
    }
    let (w, h) = image.dims();
    let r = side / 2;
    let padded = pad_reflect(image, r, r);
    let pw = padded.width();
    let mid = side * side / 2;
    let mut out = vec![0u8; w * h];
    exec::for_each_row(exec, &mut out, w, |y, row| {
        let mut window = Vec::with_capacity(side * side);
        for (x, o) in row.iter_mut().enumerate() {
            window.clear();
            for ky in 0..side {
                let start = (y + ky) * pw + x;
                window.extend_from_slice(&padded.as_slice()[start..start + side]);
            }
            *o = *window.select_nth_unstable(mid).1;
        }
    });
    Raster::from_vec(w, h, out)
}

/// Binary erosion by a centered square element. Pixels outside the image
/// count as 0, so the frame always erodes.
pub fn erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = se.radius();
    // A square element separates into a horizontal and a vertical run.
    let horizontal = Raster::from_fn(w, h, |x, y| {
        x >= r && x + r < w && (x - r..=x + r).all(|xx| mask.get(xx, y))
    });
    Raster::from_fn(w, h, |x, y| {
        y >= r && y + r < h && (y - r..=y + r).all(|yy| horizontal.get(x, yy))
    })
}

fn check_levels(levels: usize) -> Result<()> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidLevels(levels));
    }
    Ok(())
}

fn check_finite(image: &RealImage) -> Result<()> {
    match image.as_slice().iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Affine map of the image's `[min, max]` onto `[0, levels - 1]` with
/// round-half-up. A constant image maps to all zeros.
pub fn quantize(image: &RealImage, levels: usize) -> Result<GrayImage> {
    check_levels(levels)?;
    check_finite(image)?;
    let range = value_range(image.as_slice().iter().copied());
    Ok(apply_quantization(image, levels, range))
}

/// Like [`quantize`], but the `[min, max]` range is taken over pixels set in
/// `region` only. Pixels outside the region are clamped into `[0, levels-1]`.
/// An empty region yields all zeros.
pub fn quantize_in(image: &RealImage, levels: usize, region: &BinaryMask) -> Result<GrayImage> {
    check_levels(levels)?;
    check_finite(image)?;
    image.ensure_same_dims(region)?;
    let range = value_range(
        image
            .as_slice()
            .iter()
            .zip(region.as_slice())
            .filter_map(|(&v, &m)| m.then_some(v)),
    );
    Ok(apply_quantization(image, levels, range))
}

fn value_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn apply_quantization(image: &RealImage, levels: usize, range: Option<(f64, f64)>) -> GrayImage {
    let top = (levels - 1) as f64;
    match range {
        Some((lo, hi)) if hi > lo => {
            let span = hi - lo;
            image.map(|&v| {
                let q = ((v - lo) / span * top + 0.5).floor();
                q.clamp(0.0, top) as u8
            })
        }
        _ => image.map(|_| 0),
    }
}
