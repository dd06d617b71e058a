//! Oriented real Gabor kernels and max-fused filter bank responses.
//!
//! A kernel is the real part of a 2-D Gabor function:
//!
//! ```text
//! g(x, y) = exp(-pi * (xp^2 / sx^2 + yp^2 / sy^2)) * cos(2 pi f xp)
//! xp =  x cos(theta) + y sin(theta)
//! yp = -x sin(theta) + y cos(theta)
//! ```
//!
//! with `x` pointing right, `y` pointing down and `theta` in degrees. The
//! frequency and Gaussian spreads are derived from the expected vessel
//! thickness `t` (see [`GaborParams::derive`]).

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::filter::{filter_row, pad_reflect};
use crate::raster::{Raster, RealImage};
use std::f64::consts::{LN_2, PI};

/// Default half-extent of a kernel in units of `sigma_x`.
pub const DEFAULT_EXTENT_SIGMAS: f64 = 3.0;

/// Scalar parameters of one Gabor kernel family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaborParams {
    /// Vessel thickness in pixels.
    pub thickness: f64,
    /// Bandwidth factor in `[0.5, 1]`.
    pub beta: f64,
    /// Central frequency in cycles per pixel (`beta / t`).
    pub frequency: f64,
    /// `sqrt(2 ln 2 / pi)`.
    pub lambda: f64,
    /// Spread along the kernel direction, `lambda * t / (0.75 pi)`.
    pub sigma_x: f64,
    /// Spread across the kernel direction, `0.85 * sigma_x`.
    pub sigma_y: f64,
}

impl GaborParams {
    pub fn derive(thickness: f64, beta: f64) -> Result<Self> {
        if !(thickness.is_finite() && thickness >= 1.0) {
            return Err(Error::InvalidThickness(thickness));
        }
        if !(0.5..=1.0).contains(&beta) {
            return Err(Error::InvalidBeta(beta));
        }
        let lambda = (2.0 * LN_2 / PI).sqrt();
        let sigma_x = lambda * thickness / (0.75 * PI);
        Ok(Self {
            thickness,
            beta,
            frequency: beta / thickness,
            lambda,
            sigma_x,
            sigma_y: 0.85 * sigma_x,
        })
    }

    /// `ceil(sigmas * sigma_x)`, at least 1.
    pub fn half_extent(&self, sigmas: f64) -> usize {
        ((sigmas * self.sigma_x).ceil() as usize).max(1)
    }

    /// Continuous kernel value at `(x, y)` for orientation `theta_deg`.
    pub fn evaluate(&self, theta_deg: f64, x: f64, y: f64) -> f64 {
        let (sin, cos) = reduce_degrees(theta_deg).to_radians().sin_cos();
        let xp = x * cos + y * sin;
        let yp = -x * sin + y * cos;
        let envelope = (-PI
            * (xp * xp / (self.sigma_x * self.sigma_x) + yp * yp / (self.sigma_y * self.sigma_y)))
            .exp();
        envelope * (2.0 * PI * self.frequency * xp).cos()
    }
}

/// The kernel is pi-periodic in theta; reducing first makes
/// `theta` and `theta + 180` produce bit-identical samples.
fn reduce_degrees(theta: f64) -> f64 {
    theta.rem_euclid(180.0)
}

/// A sampled kernel on a `(2R+1) x (2R+1)` grid centered at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct GaborKernel {
    pub theta_deg: f64,
    pub half_extent: usize,
    /// `samples.get(x + R, y + R)` is the kernel value at `(x, y)`.
    pub samples: RealImage,
}

impl GaborKernel {
    pub fn at(&self, x: isize, y: isize) -> f64 {
        let r = self.half_extent as isize;
        self.samples.get((x + r) as usize, (y + r) as usize)
    }

    pub fn sum(&self) -> f64 {
        self.samples.as_slice().iter().sum()
    }
}

pub fn make_kernel(params: &GaborParams, theta_deg: f64, half_extent: usize) -> GaborKernel {
    let r = half_extent as isize;
    let side = 2 * half_extent + 1;
    let samples = Raster::from_fn(side, side, |i, j| {
        params.evaluate(theta_deg, (i as isize - r) as f64, (j as isize - r) as f64)
    });
    GaborKernel {
        theta_deg,
        half_extent,
        samples,
    }
}

/// Ordered list of kernel orientations in degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationSet {
    angles: Vec<f64>,
}

impl OrientationSet {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::EmptyOrientations);
        }
        if let Some(&a) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "orientation",
                reason: format!("non-finite angle {a}"),
            });
        }
        Ok(Self { angles })
    }

    /// `0, step, 2*step, ...` up to but excluding 180 degrees.
    pub fn uniform(step_deg: f64) -> Result<Self> {
        if !(step_deg.is_finite() && step_deg > 0.0 && step_deg <= 180.0) {
            return Err(Error::InvalidParameter {
                name: "orientation_step",
                reason: format!("must lie in (0, 180], got {step_deg}"),
            });
        }
        let count = (180.0 / step_deg - 1e-9).ceil() as usize;
        Self::new((0..count).map(|k| k as f64 * step_deg).collect())
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

impl Default for OrientationSet {
    /// Twelve orientations, 0 to 165 degrees in steps of 15.
    fn default() -> Self {
        Self {
            angles: (0..12).map(|k| 15.0 * k as f64).collect(),
        }
    }
}

/// Fused bank output.
#[derive(Clone, Debug, PartialEq)]
pub struct BankResponse {
    /// Per-pixel maximum over orientations.
    pub response: RealImage,
    /// Index into the orientation set of the first orientation attaining the
    /// maximum.
    pub best: Raster<u16>,
}

/// Filters `img` with one kernel per orientation and keeps the per-pixel
/// maximum. Kernels use half-extent `ceil(3 sigma_x)`.
pub fn apply_bank(
    img: &RealImage,
    params: &GaborParams,
    orients: &OrientationSet,
) -> Result<RealImage> {
    Ok(apply_bank_with(
        img,
        params,
        orients,
        params.half_extent(DEFAULT_EXTENT_SIGMAS),
        Execution::default(),
    )?
    .response)
}

pub fn apply_bank_with(
    img: &RealImage,
    params: &GaborParams,
    orients: &OrientationSet,
    half_extent: usize,
    exec: Execution,
) -> Result<BankResponse> {
    img.ensure_nonempty()?;
    if orients.is_empty() {
        return Err(Error::EmptyOrientations);
    }
    let kernels: Vec<GaborKernel> = orients
        .angles()
        .iter()
        .map(|&a| make_kernel(params, a, half_extent))
        .collect();
    let (w, h) = img.dims();
    let padded = pad_reflect(img, half_extent, half_extent);

    let rows: Vec<(Vec<f64>, Vec<u16>)> = exec::map_indices(exec, h, |y| {
        let mut best = vec![f64::NEG_INFINITY; w];
        let mut arg = vec![0u16; w];
        let mut scratch = vec![0.0; w];
        for (k, kernel) in kernels.iter().enumerate() {
            filter_row(&padded, &kernel.samples, y, &mut scratch);
            for x in 0..w {
                if scratch[x] > best[x] {
                    best[x] = scratch[x];
                    arg[x] = k as u16;
                }
            }
        }
        (best, arg)
    });

    let mut response = Vec::with_capacity(w * h);
    let mut best = Vec::with_capacity(w * h);
    for (r, a) in rows {
        response.extend(r);
        best.extend(a);
    }
    Ok(BankResponse {
        response: Raster::from_vec(w, h, response)?,
        best: Raster::from_vec(w, h, best)?,
    })
}
