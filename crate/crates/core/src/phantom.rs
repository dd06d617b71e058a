//! Synthetic fundus-like images with exact vessel ground truth.
//!
//! Vessels are drawn darker than the background in the green plane, as in
//! real fundus photographs. Geometry is rasterized by distance to the vessel
//! centerline: a pixel is vessel when its center lies strictly closer than
//! half the vessel width.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FundusImage, GrayImage, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VesselKind {
    /// Straight bar through the image center; the angle is measured from the
    /// x-axis toward the y-axis (image y points down).
    Bar { angle_deg: f64 },
    /// Horizontal sine wave through the center.
    Sinusoid { amplitude: f64, period: f64 },
    /// Binary tree rising from the bottom edge.
    Tree { depth: u32 },
}

impl VesselKind {
    pub fn name(&self) -> &'static str {
        match self {
            VesselKind::Bar { .. } => "bar",
            VesselKind::Sinusoid { .. } => "sinusoid",
            VesselKind::Tree { .. } => "tree",
        }
    }
}

/// Kind selector without geometry, for parsing command-line input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindName {
    Bar,
    Sinusoid,
    Tree,
}

impl FromStr for KindName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bar" => Ok(KindName::Bar),
            "sinusoid" | "sine" => Ok(KindName::Sinusoid),
            "tree" | "branching" => Ok(KindName::Tree),
            other => Err(Error::InvalidParameter {
                name: "kind",
                reason: format!("unknown vessel kind `{other}` (bar, sinusoid, tree)"),
            }),
        }
    }
}

impl fmt::Display for KindName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KindName::Bar => "bar",
            KindName::Sinusoid => "sinusoid",
            KindName::Tree => "tree",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub kind: VesselKind,
    /// Vessel width in pixels.
    pub vessel_width: f64,
    /// Green-level drop of vessel pixels below the background.
    pub contrast: u8,
    /// Standard deviation of additive Gaussian noise in gray levels.
    pub noise_sd: f64,
    /// Green level of the retina background.
    pub background: u8,
    /// Black out everything outside a centered disc, like a fundus camera.
    pub fov_disc: bool,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            kind: VesselKind::Bar { angle_deg: 90.0 },
            vessel_width: 6.0,
            contrast: 60,
            noise_sd: 0.0,
            background: 150,
            fov_disc: false,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.width == 0 || self.height == 0 {
            return bad("size", format!("{}x{} is empty", self.width, self.height));
        }
        if !(self.vessel_width.is_finite() && self.vessel_width >= 1.0) {
            return bad(
                "vessel_width",
                format!("must be >= 1, got {}", self.vessel_width),
            );
        }
        if self.contrast == 0 {
            return bad("contrast", "must lie in [1, 255]".into());
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(
                "noise_sd",
                format!("must be finite and >= 0, got {}", self.noise_sd),
            );
        }
        match self.kind {
            VesselKind::Bar { angle_deg } if !angle_deg.is_finite() => {
                bad("angle", format!("non-finite angle {angle_deg}"))
            }
            VesselKind::Sinusoid { amplitude, period }
                if !(amplitude.is_finite() && period.is_finite() && period > 0.0) =>
            {
                bad(
                    "period",
                    format!("invalid sinusoid amplitude {amplitude} / period {period}"),
                )
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub image: FundusImage,
    pub truth: BinaryMask,
    /// Green plane before noise was added.
    pub clean_green: GrayImage,
}

/// Renders `spec`; the same `seed` always yields the same phantom.
pub fn generate(spec: &PhantomSpec, seed: u64) -> Result<Phantom> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let half = spec.vessel_width / 2.0;

    let mut geometry_rng = ChaCha8Rng::seed_from_u64(seed);
    geometry_rng.set_stream(1);
    let vessel = match spec.kind {
        VesselKind::Bar { angle_deg } => {
            let (s, c) = angle_deg.to_radians().sin_cos();
            Raster::from_fn(w, h, |x, y| {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                (-dx * s + dy * c).abs() < half
            })
        }
        VesselKind::Sinusoid { amplitude, period } => {
            sinusoid_mask(w, h, cy, amplitude, period, half)
        }
        VesselKind::Tree { depth } => {
            let mut segments = Vec::new();
            let trunk = h as f64 * 0.35;
            grow_tree(
                &mut segments,
                &mut geometry_rng,
                (cx, h as f64 - 1.0),
                -PI / 2.0,
                trunk,
                depth,
            );
            Raster::from_fn(w, h, |x, y| {
                let p = (x as f64, y as f64);
                segments
                    .iter()
                    .any(|&(a, b)| segment_distance(p, a, b) < half)
            })
        }
    };

    let radius = 0.47 * w.min(h) as f64;
    let in_field = |x: usize, y: usize| {
        !spec.fov_disc || ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() <= radius
    };
    let truth = Raster::from_fn(w, h, |x, y| vessel.get(x, y) && in_field(x, y));
    let clean_green = Raster::from_fn(w, h, |x, y| {
        if !in_field(x, y) {
            0
        } else if truth.get(x, y) {
            spec.background.saturating_sub(spec.contrast)
        } else {
            spec.background
        }
    });

    let mut green = clean_green.clone();
    if spec.noise_sd > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::InvalidParameter {
            name: "noise_sd",
            reason: e.to_string(),
        })?;
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(2);
        for y in 0..h {
            for x in 0..w {
                let n: f64 = normal.sample(&mut noise_rng);
                if in_field(x, y) {
                    let v = (f64::from(green.get(x, y)) + n).round().clamp(0.0, 255.0);
                    green.set(x, y, v as u8);
                }
            }
        }
    }

    let red = green.map(|&g| if g == 0 { 0 } else { g.saturating_add(70) });
    let blue = green.map(|&g| g / 2);
    Ok(Phantom {
        image: FundusImage::from_planes(red, green, blue)?,
        truth,
        clean_green,
    })
}

fn sinusoid_mask(
    w: usize,
    h: usize,
    cy: f64,
    amplitude: f64,
    period: f64,
    half: f64,
) -> BinaryMask {
    const STEP: f64 = 0.125;
    let x0 = -2.0 * half;
    let count = ((w as f64 - 1.0 - 2.0 * x0) / STEP).ceil() as usize + 1;
    let samples: Vec<(f64, f64)> = (0..count)
        .map(|k| {
            let x = x0 + k as f64 * STEP;
            (x, cy + amplitude * (2.0 * PI * x / period).sin())
        })
        .collect();
    let lookback = (half / STEP).ceil() as usize + 1;
    Raster::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let centre = ((px - x0) / STEP).round() as usize;
        let lo = centre.saturating_sub(lookback);
        let hi = (centre + lookback).min(samples.len() - 1);
        samples[lo..hi]
            .iter()
            .zip(&samples[lo + 1..=hi])
            .any(|(&a, &b)| segment_distance((px, py), a, b) < half)
    })
}

/// Centerline segment between two points.
type Segment = ((f64, f64), (f64, f64));

fn grow_tree(
    out: &mut Vec<Segment>,
    rng: &mut ChaCha8Rng,
    start: (f64, f64),
    heading: f64,
    length: f64,
    depth: u32,
) {
    let end = (
        start.0 + length * heading.cos(),
        start.1 + length * heading.sin(),
    );
    out.push((start, end));
    if depth == 0 {
        return;
    }
    for side in [-1.0, 1.0] {
        let spread = rng.random_range(20.0f64..35.0).to_radians();
        grow_tree(
            out,
            rng,
            end,
            heading + side * spread,
            length * 0.7,
            depth - 1,
        );
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    (dx * dx + dy * dy).sqrt()
}
