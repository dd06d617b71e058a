//! Co-occurrence matrix construction and local-entropy threshold selection.
//!
//! A threshold `T` partitions the `L x L` transition matrix into four
//! quadrants. Quadrant A holds transitions with both levels `<= T`, quadrant
//! C transitions with both levels `> T`; the mixed quadrants B and D are
//! ignored. Each of A and C is renormalized to unit mass and its half
//! Shannon entropy (base 2) taken. The selected threshold maximizes the sum.

use crate::error::{Error, Result};
use crate::filter::quantize_in;
use crate::raster::{BinaryMask, GrayImage, Raster, RealImage};

/// Entropy values closer than this are treated as equal when picking the
/// maximum; the smaller threshold wins.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Default number of gray levels for the quantized response.
pub const DEFAULT_LEVELS: usize = 256;

/// Gray-level co-occurrence counts of right and lower neighbor transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Glcm {
    levels: usize,
    counts: Vec<u64>,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Number of transitions from level `i` to level `j`.
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.levels + j]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn from_counts(levels: usize, counts: Vec<u64>) -> Result<Self> {
        check_levels(levels)?;
        if counts.len() != levels * levels {
            return Err(Error::BufferSize {
                width: levels,
                height: levels,
                len: counts.len(),
            });
        }
        Ok(Self { levels, counts })
    }

    pub fn transpose(&self) -> Self {
        let l = self.levels;
        let counts = (0..l * l)
            .map(|k| self.counts[(k % l) * l + k / l])
            .collect();
        Self { levels: l, counts }
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidLevels(levels));
    }
    Ok(())
}

fn check_pixels(img: &GrayImage, levels: usize) -> Result<()> {
    check_levels(levels)?;
    match img.as_slice().iter().position(|&v| v as usize >= levels) {
        Some(index) => Err(Error::LevelOutOfRange {
            index,
            value: img.as_slice()[index],
            levels,
        }),
        None => Ok(()),
    }
}

/// Counts every right-neighbor and lower-neighbor transition of `img`. Each
/// neighbor contributes independently, so an `M x N` image yields
/// `M(N-1) + (M-1)N` transitions.
pub fn build_glcm(img: &GrayImage, levels: usize) -> Result<Glcm> {
    check_pixels(img, levels)?;
    Ok(accumulate(img, levels, |_, _| true))
}

/// Like [`build_glcm`], but only transitions whose two pixels both lie in
/// `region` are counted.
pub fn build_glcm_in(img: &GrayImage, levels: usize, region: &BinaryMask) -> Result<Glcm> {
    check_pixels(img, levels)?;
    img.ensure_same_dims(region)?;
    let r = region.as_slice();
    Ok(accumulate(img, levels, |a, b| r[a] && r[b]))
}

fn accumulate(img: &GrayImage, levels: usize, keep: impl Fn(usize, usize) -> bool) -> Glcm {
    let (w, h) = img.dims();
    let px = img.as_slice();
    let mut counts = vec![0u64; levels * levels];
    for y in 0..h {
        for x in 0..w {
            let here = y * w + x;
            let from = px[here] as usize * levels;
            if x + 1 < w && keep(here, here + 1) {
                counts[from + px[here + 1] as usize] += 1;
            }
            if y + 1 < h && keep(here, here + w) {
                counts[from + px[here + w] as usize] += 1;
            }
        }
    }
    Glcm { levels, counts }
}

/// Normalized transition probabilities `P[i][j] = t[i][j] / sum(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionProbabilities {
    levels: usize,
    p: Vec<f64>,
}

impl TransitionProbabilities {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

pub fn normalize_glcm(g: &Glcm) -> Result<TransitionProbabilities> {
    let total = g.total();
    if total == 0 {
        return Err(Error::NoTransitions);
    }
    let total = total as f64;
    Ok(TransitionProbabilities {
        levels: g.levels,
        p: g.counts.iter().map(|&c| c as f64 / total).collect(),
    })
}

/// Masses of quadrant A (`i, j <= t`) and quadrant C (`i, j > t`).
pub fn quadrant_probs(p: &TransitionProbabilities, t: usize) -> (f64, f64) {
    let l = p.levels;
    let t = t.min(l - 1);
    let mut a = 0.0;
    let mut c = 0.0;
    for i in 0..l {
        for j in 0..l {
            if i <= t && j <= t {
                a += p.get(i, j);
            } else if i > t && j > t {
                c += p.get(i, j);
            }
        }
    }
    (a, c)
}

/// Half entropy of a quadrant from its mass and `sum(p log2 p)` over its
/// cells: `-1/2 sum (p/m) log2 (p/m) = 1/2 (log2 m - s/m)`.
#[inline]
fn quadrant_entropy(mass: f64, plogp: f64) -> f64 {
    if mass <= 0.0 {
        return 0.0;
    }
    (0.5 * (mass.log2() - plogp / mass)).max(0.0)
}

#[inline]
fn plogp(v: f64) -> f64 {
    if v > 0.0 {
        v * v.log2()
    } else {
        0.0
    }
}

/// Total local entropy `H_A(t) + H_C(t)` evaluated directly for one
/// threshold. [`select_threshold`] computes the same curve for every
/// threshold at once.
pub fn local_entropy(p: &TransitionProbabilities, t: usize) -> f64 {
    let l = p.levels;
    let t = t.min(l - 1);
    let (mut ma, mut sa, mut mc, mut sc) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..l {
        for j in 0..l {
            let v = p.get(i, j);
            if i <= t && j <= t {
                ma += v;
                sa += plogp(v);
            } else if i > t && j > t {
                mc += v;
                sc += plogp(v);
            }
        }
    }
    quadrant_entropy(ma, sa) + quadrant_entropy(mc, sc)
}

/// The local entropy curve and its maximizing level.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyScan {
    /// `entropies[t]` is `H_A(t) + H_C(t)`.
    pub entropies: Vec<f64>,
    /// Smallest level attaining the maximum (within [`TIE_TOLERANCE`]).
    pub threshold: usize,
}

/// First index whose value exceeds the running best by more than
/// [`TIE_TOLERANCE`].
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (t, &h) in values.iter().enumerate().skip(1) {
        if h > values[best] + TIE_TOLERANCE {
            best = t;
        }
    }
    best
}

/// Scans every threshold in `O(L^2)` total.
///
/// Quadrant A grows by one row/column strip as `t` rises and quadrant C
/// grows by one strip as `t` falls, so both masses and `sum(p log2 p)` are
/// accumulated incrementally from opposite ends.
pub fn select_threshold(p: &TransitionProbabilities) -> EntropyScan {
    let l = p.levels;
    let cell = |i: usize, j: usize| p.p[i * l + j];

    let mut h_a = vec![0.0; l];
    let (mut mass, mut s) = (0.0, 0.0);
    for (t, h) in h_a.iter_mut().enumerate() {
        for j in 0..=t {
            let v = cell(t, j);
            mass += v;
            s += plogp(v);
        }
        for i in 0..t {
            let v = cell(i, t);
            mass += v;
            s += plogp(v);
        }
        *h = quadrant_entropy(mass, s);
    }

    let mut h_c = vec![0.0; l];
    let (mut mass, mut s) = (0.0, 0.0);
    for t in (0..l - 1).rev() {
        let k = t + 1;
        for j in k..l {
            let v = cell(k, j);
            mass += v;
            s += plogp(v);
        }
        for i in k + 1..l {
            let v = cell(i, k);
            mass += v;
            s += plogp(v);
        }
        h_c[t] = quadrant_entropy(mass, s);
    }

    let entropies: Vec<f64> = h_a.iter().zip(&h_c).map(|(a, c)| a + c).collect();
    let threshold = argmax_first(&entropies);
    EntropyScan {
        entropies,
        threshold,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binarization {
    /// Response quantized to `[0, levels-1]` over the field of view.
    pub quantized: GrayImage,
    pub scan: EntropyScan,
    pub mask: BinaryMask,
}

pub fn binarize(response: &RealImage, levels: usize, fov: &BinaryMask) -> Result<BinaryMask> {
    Ok(binarize_detailed(response, levels, fov)?.mask)
}

/// Quantizes `response` over `fov`, selects the entropic threshold from the
/// co-occurrence matrix of in-FOV transitions and marks `q > T` inside `fov`.
pub fn binarize_detailed(
    response: &RealImage,
    levels: usize,
    fov: &BinaryMask,
) -> Result<Binarization> {
    let quantized = quantize_in(response, levels, fov)?;
    let glcm = build_glcm_in(&quantized, levels, fov)?;
    let scan = match normalize_glcm(&glcm) {
        Ok(p) => select_threshold(&p),
        // Nothing to learn a threshold from; nothing is marked.
        Err(Error::NoTransitions) => EntropyScan {
            entropies: vec![0.0; levels],
            threshold: levels - 1,
        },
        Err(e) => return Err(e),
    };
    let mask = apply_threshold(&quantized, scan.threshold, fov);
    Ok(Binarization {
        quantized,
        scan,
        mask,
    })
}

/// `q > threshold` inside `fov`.
pub fn apply_threshold(quantized: &GrayImage, threshold: usize, fov: &BinaryMask) -> BinaryMask {
    let data = quantized
        .as_slice()
        .iter()
        .zip(fov.as_slice())
        .map(|(&q, &m)| m && q as usize > threshold)
        .collect();
    Raster::from_vec(quantized.width(), quantized.height(), data)
        .expect("quantized and fov share dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, v: &[u8]) -> GrayImage {
        Raster::from_vec(w, h, v.to_vec()).unwrap()
    }

    fn probs(levels: usize, cells: &[(usize, usize, f64)]) -> TransitionProbabilities {
        let mut p = vec![0.0; levels * levels];
        for &(i, j, v) in cells {
            p[i * levels + j] = v;
        }
        TransitionProbabilities { levels, p }
    }

    #[test]
    fn glcm_small_cases() {
        let g = build_glcm(&gray(2, 2, &[0, 0, 0, 0]), 2).unwrap();
        assert_eq!(g.counts(), &[4, 0, 0, 0]);

        let g = build_glcm(&gray(2, 1, &[0, 1]), 2).unwrap();
        assert_eq!(g.counts(), &[0, 1, 0, 0]);

        let img = Raster::from_fn(30, 20, |x, y| ((x + y) % 7) as u8);
        assert_eq!(build_glcm(&img, 8).unwrap().total(), 20 * 29 + 19 * 30);
    }

    #[test]
    fn glcm_rejects_out_of_range_levels() {
        assert_eq!(
            build_glcm(&gray(3, 1, &[0, 1, 4]), 4),
            Err(Error::LevelOutOfRange {
                index: 2,
                value: 4,
                levels: 4
            })
        );
    }

    #[test]
    fn glcm_in_region() {
        let img = gray(3, 1, &[0, 1, 1]);
        let region = Raster::from_vec(3, 1, vec![false, true, true]).unwrap();
        assert_eq!(
            build_glcm_in(&img, 2, &region).unwrap().counts(),
            &[0, 0, 0, 1]
        );
        let all = BinaryMask::filled(3, 1, true);
        assert_eq!(
            build_glcm_in(&img, 2, &all).unwrap(),
            build_glcm(&img, 2).unwrap()
        );
    }

    #[test]
    fn normalization() {
        let g = build_glcm(&gray(2, 2, &[0; 4]), 2).unwrap();
        assert_eq!(
            normalize_glcm(&g).unwrap().as_slice(),
            &[1.0, 0.0, 0.0, 0.0]
        );

        let g = Glcm::from_counts(2, vec![0, 1, 3, 0]).unwrap();
        assert_eq!(
            normalize_glcm(&g).unwrap().as_slice(),
            &[0.0, 0.25, 0.75, 0.0]
        );

        let single = build_glcm(&gray(1, 1, &[0]), 2).unwrap();
        assert_eq!(normalize_glcm(&single), Err(Error::NoTransitions));
    }

    #[test]
    fn quadrant_examples() {
        let img = Raster::from_fn(5, 4, |x, y| ((x * 3 + y) % 4) as u8);
        let p = normalize_glcm(&build_glcm(&img, 4).unwrap()).unwrap();
        let (a, c) = quadrant_probs(&p, 3);
        assert!((a - 1.0).abs() < 1e-12);
        assert_eq!(c, 0.0);

        let diag = probs(8, &[(0, 0, 0.5), (7, 7, 0.5)]);
        assert_eq!(quadrant_probs(&diag, 0), (0.5, 0.5));

        // Checkerboard: every transition alternates levels.
        let l = 6;
        let board = Raster::from_fn(
            8,
            8,
            |x, y| if (x + y) % 2 == 0 { 0 } else { (l - 1) as u8 },
        );
        let p = normalize_glcm(&build_glcm(&board, l).unwrap()).unwrap();
        for t in 0..l - 1 {
            assert_eq!(quadrant_probs(&p, t), (0.0, 0.0));
        }
    }

    #[test]
    fn entropy_examples() {
        let single = probs(4, &[(0, 0, 0.3), (3, 3, 0.7)]);
        assert_eq!(local_entropy(&single, 1), 0.0);

        // Four equal cells in A: -1/2 * 4 * (1/4 * -2) = 1.
        let four = probs(
            4,
            &[
                (0, 0, 0.1),
                (0, 1, 0.1),
                (1, 0, 0.1),
                (1, 1, 0.1),
                (3, 3, 0.6),
            ],
        );
        assert!((local_entropy(&four, 1) - 1.0).abs() < 1e-12);

        // Empty A at t = 0 contributes nothing; C holds one cell.
        let only_c = probs(4, &[(2, 3, 1.0)]);
        assert_eq!(local_entropy(&only_c, 0), 0.0);
    }

    #[test]
    fn constant_and_checkerboard_scans() {
        let c = GrayImage::filled(6, 6, 3);
        let scan = select_threshold(&normalize_glcm(&build_glcm(&c, 8).unwrap()).unwrap());
        assert_eq!(scan.threshold, 0);
        assert!(scan.entropies.iter().all(|&h| h.abs() < TIE_TOLERANCE));

        // Checkerboard: A and C are empty below the top level. At t = L-1
        // quadrant A is the whole matrix, two cells of 1/2 each, so
        // H = -1/2 * 2 * (1/2 * -1) = 1/2 and the top level wins.
        let board = Raster::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 0 } else { 15 });
        let scan = select_threshold(&normalize_glcm(&build_glcm(&board, 16).unwrap()).unwrap());
        assert!(scan.entropies[..15].iter().all(|&h| h == 0.0));
        assert!((scan.entropies[15] - 0.5).abs() < 1e-12);
        assert_eq!(scan.threshold, 15);
    }

    #[test]
    fn binarize_empty_fov() {
        let r = Raster::from_fn(10, 10, |x, y| (x * y) as f64);
        let fov = BinaryMask::filled(10, 10, false);
        assert_eq!(binarize(&r, 256, &fov).unwrap().count_ones(), 0);
    }

    #[test]
    fn scan_matches_direct_evaluation() {
        let img = Raster::from_fn(13, 11, |x, y| ((x * x + 5 * y + x * y) % 16) as u8);
        let p = normalize_glcm(&build_glcm(&img, 16).unwrap()).unwrap();
        let scan = select_threshold(&p);
        for t in 0..16 {
            assert!((scan.entropies[t] - local_entropy(&p, t)).abs() < 1e-12);
        }
    }

    fn image_strategy(levels: usize) -> impl Strategy<Value = GrayImage> {
        (1usize..12, 2usize..12).prop_flat_map(move |(h, w)| {
            proptest::collection::vec(0..levels as u8, w * h)
                .prop_map(move |d| Raster::from_vec(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn entropy_nonnegative_and_transpose_invariant(img in image_strategy(8)) {
            let g = build_glcm(&img, 8).unwrap();
            let p = normalize_glcm(&g).unwrap();
            let pt = normalize_glcm(&g.transpose()).unwrap();
            let a = select_threshold(&p);
            let b = select_threshold(&pt);
            for t in 0..8 {
                prop_assert!(a.entropies[t] >= 0.0);
                prop_assert!((a.entropies[t] - b.entropies[t]).abs() < 1e-12);
            }
            let total: f64 = p.as_slice().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn unused_top_levels_do_not_move_threshold(img in image_strategy(8), extra in 1usize..40) {
            let small = select_threshold(&normalize_glcm(&build_glcm(&img, 8).unwrap()).unwrap());
            let big = select_threshold(&normalize_glcm(&build_glcm(&img, 8 + extra).unwrap()).unwrap());
            prop_assert_eq!(small.threshold, big.threshold);
        }

        #[test]
        fn binarize_stays_inside_fov(
            data in proptest::collection::vec(-5.0f64..5.0, 100),
            fov in proptest::collection::vec(any::<bool>(), 100),
        ) {
            let r = Raster::from_vec(10, 10, data).unwrap();
            let fov = Raster::from_vec(10, 10, fov).unwrap();
            prop_assert!(binarize(&r, 64, &fov).unwrap().is_subset_of(&fov));
        }
    }
}
