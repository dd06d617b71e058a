//! Green channel extraction, contrast enhancement and field-of-view masking.

use crate::error::{Error, Result};
use crate::filter::{erode, median_filter, reflect_index, StructuringElement};
use crate::raster::{BinaryMask, FundusImage, GrayImage, Raster};

const BINS: usize = 256;
/// Median and erosion window used when cleaning up the fundus mask.
pub const MASK_CLEANUP_SIDE: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessConfig {
    /// Green levels strictly above this value are fundus.
    pub mask_threshold: u8,
    /// Median prefilter window applied before CLAHE.
    pub prefilter_side: usize,
    /// Number of CLAHE tiles along each image axis.
    pub clahe_tiles: usize,
    /// CLAHE clip limit as a multiple of the mean bin height.
    pub clahe_clip: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            mask_threshold: 20,
            prefilter_side: 3,
            clahe_tiles: 8,
            clahe_clip: 3.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prefilter_side == 0 || self.prefilter_side.is_multiple_of(2) {
            return Err(Error::InvalidWindow(self.prefilter_side));
        }
        if self.clahe_tiles < 2 {
            return Err(Error::InvalidParameter {
                name: "clahe_tiles",
                reason: format!("must be >= 2, got {}", self.clahe_tiles),
            });
        }
        check_clip(self.clahe_clip)
    }

    /// Tile size in pixels for an image of the given dimensions.
    pub fn tile_size(&self, (width, height): (usize, usize)) -> (usize, usize) {
        let side = |n: usize| n.div_ceil(self.clahe_tiles.max(1)).max(1);
        (side(width), side(height))
    }
}

fn check_clip(clip: f64) -> Result<()> {
    if !clip.is_finite() || clip < 1.0 {
        return Err(Error::InvalidClip(clip));
    }
    Ok(())
}

pub fn extract_green(img: &FundusImage) -> GrayImage {
    img.green().clone()
}

fn histogram(values: impl Iterator<Item = u8>) -> [u32; BINS] {
    let mut h = [0u32; BINS];
    for v in values {
        h[v as usize] += 1;
    }
    h
}

/// Cumulative-histogram lookup table scaled onto `[0, 255]`, rounding half up.
fn equalization_lut(hist: &[u32; BINS]) -> [u8; BINS] {
    let n: u64 = hist.iter().map(|&c| u64::from(c)).sum();
    let mut lut = [0u8; BINS];
    if n == 0 {
        return lut;
    }
    let mut cdf = 0u64;
    for (v, &c) in hist.iter().enumerate() {
        cdf += u64::from(c);
        lut[v] = ((cdf * 255 + n / 2) / n) as u8;
    }
    lut
}

/// Clips every bin at `limit` and spreads the excess evenly over all bins.
/// The leftover after integer division goes one count at a time to evenly
/// spaced bins.
fn clip_histogram(hist: &mut [u32; BINS], limit: u32) {
    let mut excess = 0u32;
    for c in hist.iter_mut() {
        if *c > limit {
            excess += *c - limit;
            *c = limit;
        }
    }
    let add = excess / BINS as u32;
    let residual = (excess % BINS as u32) as usize;
    for c in hist.iter_mut() {
        *c += add;
    }
    if let Some(step) = BINS.checked_div(residual) {
        for i in (0..BINS).step_by(step.max(1)).take(residual) {
            hist[i] += 1;
        }
    }
}

/// Global histogram equalization. Kept for side-by-side comparison with
/// [`clahe`]; the segmentation pipeline does not use it.
pub fn equalize_histogram(img: &GrayImage) -> GrayImage {
    let lut = equalization_lut(&histogram(img.as_slice().iter().copied()));
    img.map(|&v| lut[v as usize])
}

/// Contrast-limited adaptive histogram equalization.
///
/// The image is cut into `tile.0 x tile.1` pixel tiles; when the size is not
/// a multiple of the tile, the last tiles are completed with reflected pixels
/// so every histogram covers a full tile. Each tile gets a clipped-histogram
/// equalization table; `clip` is the per-bin ceiling in multiples of the
/// mean bin height. Every output pixel blends the tables of the four
/// nearest tile centers bilinearly.
pub fn clahe(img: &GrayImage, tile: (usize, usize), clip: f64) -> Result<GrayImage> {
    let (tw, th) = tile;
    if tw == 0 || th == 0 {
        return Err(Error::InvalidTile(tw, th));
    }
    check_clip(clip)?;
    let (w, h) = img.dims();
    if img.is_empty() {
        return Ok(img.clone());
    }
    let nx = w.div_ceil(tw);
    let ny = h.div_ceil(th);

    let mut luts = Vec::with_capacity(nx * ny);
    for ty in 0..ny {
        for tx in 0..nx {
            let (x0, y0) = (tx * tw, ty * th);
            let mut hist = histogram((y0..y0 + th).flat_map(|y| {
                let row = img.row(reflect_index(y as isize, h));
                (x0..x0 + tw).map(move |x| row[reflect_index(x as isize, w)])
            }));
            let n = (tw * th) as f64;
            let limit = ((clip * n / BINS as f64).floor() as u32).max(1);
            clip_histogram(&mut hist, limit);
            luts.push(equalization_lut(&hist));
        }
    }

    // Neighbouring tile indices and the weight of the second one, for a pixel
    // coordinate along one axis.
    let axis = |p: usize, size: usize, count: usize| -> (usize, usize, f64) {
        let g = (p as f64 + 0.5) / size as f64 - 0.5;
        if g <= 0.0 {
            return (0, 0, 0.0);
        }
        let lo = g.floor() as usize;
        if lo + 1 >= count {
            return (count - 1, count - 1, 0.0);
        }
        (lo, lo + 1, g - lo as f64)
    };
    let xs: Vec<_> = (0..w).map(|x| axis(x, tw, nx)).collect();

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (ya, yb, wy) = axis(y, th, ny);
        for (x, &(xa, xb, wx)) in xs.iter().enumerate() {
            let v = img.get(x, y) as usize;
            let lut = |ty: usize, tx: usize| f64::from(luts[ty * nx + tx][v]);
            let top = lut(ya, xa) * (1.0 - wx) + lut(ya, xb) * wx;
            let bottom = lut(yb, xa) * (1.0 - wx) + lut(yb, xb) * wx;
            let blended = top * (1.0 - wy) + bottom * wy;
            out.push((blended + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    Raster::from_vec(w, h, out)
}

/// Field-of-view mask: threshold, 5x5 median, then 5x5 erosion.
pub fn fundus_mask(green: &GrayImage, cfg: &PreprocessConfig) -> Result<BinaryMask> {
    let raw = green.map(|&v| if v > cfg.mask_threshold { 255u8 } else { 0 });
    let cleaned = median_filter(&raw, MASK_CLEANUP_SIDE)?.map(|&v| v > 0);
    Ok(erode(
        &cleaned,
        StructuringElement::square(MASK_CLEANUP_SIDE)?,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    pub green: GrayImage,
    pub enhanced: GrayImage,
    pub fov: BinaryMask,
}

pub fn preprocess(img: &FundusImage, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    let green = extract_green(img);
    let smoothed = median_filter(&green, cfg.prefilter_side)?;
    let enhanced = clahe(&smoothed, cfg.tile_size(green.dims()), cfg.clahe_clip)?;
    let fov = fundus_mask(&green, cfg)?;
    Ok(Preprocessed {
        green,
        enhanced,
        fov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pixel(r: u8, g: u8, b: u8) -> FundusImage {
        FundusImage::from_interleaved(1, 1, &[r, g, b]).unwrap()
    }

    #[test]
    fn green_extraction() {
        assert_eq!(extract_green(&pixel(0, 255, 0)).get(0, 0), 255);
        assert_eq!(extract_green(&pixel(255, 0, 128)).get(0, 0), 0);
        assert_eq!(extract_green(&pixel(10, 20, 30)).get(0, 0), 20);
    }

    #[test]
    fn clahe_constant_image() {
        let img = GrayImage::filled(40, 30, 93);
        let out = clahe(&img, (8, 8), 3.0).unwrap();
        let v = out.get(0, 0);
        assert!(out.as_slice().iter().all(|&p| p == v));
    }

    #[test]
    fn clahe_two_levels_single_tile_unclipped() {
        // 128 pixels each at 50 and 200; CDF is {128, 256} of 256.
        let img = Raster::from_fn(16, 16, |x, _| if x < 8 { 50 } else { 200 });
        let out = clahe(&img, (16, 16), 1000.0).unwrap();
        // round(128 * 255 / 256) = round(127.5) = 128 (half up); 256 -> 255.
        for (i, o) in img.as_slice().iter().zip(out.as_slice()) {
            assert_eq!(*o, if *i == 50 { 128 } else { 255 });
        }
    }

    #[test]
    fn clahe_two_levels_single_tile_clipped() {
        // clip 3 on 256 pixels: ceiling = 3 per bin. Excess 2 * 125 = 250 is
        // below one full round, so bins 0..250 (step 1) each gain one count.
        // CDF(50) = 51 ones + clipped spike 3 = 54
        // CDF(200) = 201 ones + 3 + 3 = 207
        let img = Raster::from_fn(16, 16, |x, _| if x < 8 { 50 } else { 200 });
        let out = clahe(&img, (16, 16), 3.0).unwrap();
        let expect = |cdf: u64| ((cdf * 255 + 128) / 256) as u8;
        for (i, o) in img.as_slice().iter().zip(out.as_slice()) {
            assert_eq!(*o, if *i == 50 { expect(54) } else { expect(207) });
        }
    }

    #[test]
    fn clahe_rejects_degenerate_tiles() {
        let img = GrayImage::filled(4, 4, 0);
        assert_eq!(clahe(&img, (0, 4), 2.0), Err(Error::InvalidTile(0, 4)));
        assert_eq!(clahe(&img, (4, 4), 0.5), Err(Error::InvalidClip(0.5)));
    }

    #[test]
    fn global_equalization_spreads_levels() {
        let img = Raster::from_fn(4, 1, |x, _| [10u8, 10, 20, 30][x]);
        assert_eq!(equalize_histogram(&img).as_slice(), &[128, 128, 191, 255]);
    }

    #[test]
    fn mask_of_black_and_white() {
        let cfg = PreprocessConfig::default();
        let black = GrayImage::filled(20, 20, 0);
        assert_eq!(fundus_mask(&black, &cfg).unwrap().count_ones(), 0);

        let white = GrayImage::filled(20, 20, 255);
        let m = fundus_mask(&white, &cfg).unwrap();
        for y in 0..20 {
            for x in 0..20 {
                let inner = (2..18).contains(&x) && (2..18).contains(&y);
                assert_eq!(m.get(x, y), inner);
            }
        }
    }

    #[test]
    fn mask_of_disc_shrinks_by_two() {
        let (c, r) = (40.0, 25.0);
        let img = Raster::from_fn(81, 81, |x, y| {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            if d <= r {
                180
            } else {
                5
            }
        });
        let m = fundus_mask(&img, &PreprocessConfig::default()).unwrap();
        // Along the axes the disc ends at offset 25. The median drops the
        // one-pixel tip (11 of 25 votes at offset 25), erosion removes 2 more.
        assert!(m.get(40 + 22, 40) && !m.get(40 + 23, 40));
        assert!(m.get(40, 40 - 22) && !m.get(40, 40 - 23));
        let full = img.as_slice().iter().filter(|&&v| v > 20).count();
        assert!(m.count_ones() < full);
        let shrunk = std::f64::consts::PI * 23.0f64.powi(2);
        assert!((m.count_ones() as f64 - shrunk).abs() / shrunk < 0.08);
    }

    #[test]
    fn preprocess_keeps_dimensions() {
        let img = FundusImage::from_gray(&GrayImage::filled(37, 23, 128));
        let out = preprocess(&img, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.enhanced.dims(), (37, 23));
        assert_eq!(out.fov.dims(), (37, 23));
        let v = out.enhanced.get(0, 0);
        assert!(out.enhanced.as_slice().iter().all(|&p| p == v));
        assert_eq!(
            out.fov,
            fundus_mask(&out.green, &PreprocessConfig::default()).unwrap()
        );
    }

    proptest! {
        #[test]
        fn green_projection_is_idempotent(rgb in proptest::collection::vec(any::<u8>(), 3 * 12)) {
            let img = FundusImage::from_interleaved(4, 3, &rgb).unwrap();
            let once = extract_green(&img);
            prop_assert_eq!(extract_green(&FundusImage::from_gray(&once)), once);
        }

        #[test]
        fn clahe_single_tile_preserves_order(
            data in proptest::collection::vec(any::<u8>(), 144),
            clip in 1.0f64..8.0,
        ) {
            let img = Raster::from_vec(12, 12, data).unwrap();
            let out = clahe(&img, (12, 12), clip).unwrap();
            for i in 0..144 {
                for j in 0..144 {
                    if img.as_slice()[i] <= img.as_slice()[j] {
                        prop_assert!(out.as_slice()[i] <= out.as_slice()[j]);
                    }
                }
            }
        }

        #[test]
        fn mask_monotone_in_threshold(
            data in proptest::collection::vec(any::<u8>(), 15 * 15),
            lo in any::<u8>(),
            bump in any::<u8>(),
        ) {
            let img = Raster::from_vec(15, 15, data).unwrap();
            let hi = lo.saturating_add(bump);
            let m_lo = fundus_mask(&img, &PreprocessConfig { mask_threshold: lo, ..Default::default() }).unwrap();
            let m_hi = fundus_mask(&img, &PreprocessConfig { mask_threshold: hi, ..Default::default() }).unwrap();
            prop_assert!(m_hi.is_subset_of(&m_lo));
        }
    }
}
