//! Pixel-level scoring of vessel masks against a manual segmentation.

use crate::error::{Error, Result};
use crate::filter::quantize_in;
use crate::raster::{BinaryMask, GrayImage, RealImage};

/// Default ROC threshold step in quantized levels.
pub const DEFAULT_ROC_STEP: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContingencyCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ContingencyCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn sens_spec(&self) -> Result<SensSpec> {
        sens_spec(self)
    }
}

/// Tallies prediction against truth over pixels set in `fov`.
pub fn contingency(
    pred: &BinaryMask,
    truth: &BinaryMask,
    fov: &BinaryMask,
) -> Result<ContingencyCounts> {
    pred.ensure_same_dims(truth)?;
    pred.ensure_same_dims(fov)?;
    let mut c = ContingencyCounts::default();
    for ((&p, &t), &m) in pred
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .zip(fov.as_slice())
    {
        if !m {
            continue;
        }
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensSpec {
    pub sensitivity: f64,
    pub specificity: f64,
}

pub fn sens_spec(c: &ContingencyCounts) -> Result<SensSpec> {
    if c.tp + c.fn_ == 0 {
        return Err(Error::NoPositives);
    }
    if c.tn + c.fp == 0 {
        return Err(Error::NoNegatives);
    }
    Ok(SensSpec {
        sensitivity: c.tp as f64 / (c.tp + c.fn_) as f64,
        specificity: c.tn as f64 / (c.tn + c.fp) as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: usize,
    pub fpr: f64,
    pub tpr: f64,
}

/// Operating points in increasing-threshold order.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn at_threshold(&self, threshold: usize) -> Option<&RocPoint> {
        self.points.iter().find(|p| p.threshold == threshold)
    }
}

/// Thresholds `0, step, 2*step, ...` always closed off with `levels - 1`.
pub fn roc_thresholds(levels: usize, step: usize) -> Vec<usize> {
    let mut ts: Vec<usize> = (0..levels).step_by(step.max(1)).collect();
    if ts.last() != Some(&(levels - 1)) {
        ts.push(levels - 1);
    }
    ts
}

/// Sweeps the binarization threshold over an already quantized response.
/// A pixel is positive at threshold `T` when `q > T`.
pub fn roc_from_quantized(
    quantized: &GrayImage,
    levels: usize,
    truth: &BinaryMask,
    fov: &BinaryMask,
    step: usize,
) -> Result<RocCurve> {
    if step == 0 {
        return Err(Error::InvalidParameter {
            name: "roc_step",
            reason: "must be >= 1".into(),
        });
    }
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidLevels(levels));
    }
    quantized.ensure_same_dims(truth)?;
    quantized.ensure_same_dims(fov)?;

    // Per-level histograms of vessel and background pixels; a suffix sum
    // then gives the positives above any threshold.
    let mut vessel = vec![0u64; levels];
    let mut background = vec![0u64; levels];
    for ((&q, &t), &m) in quantized
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .zip(fov.as_slice())
    {
        if !m {
            continue;
        }
        let q = (q as usize).min(levels - 1);
        if t {
            vessel[q] += 1;
        } else {
            background[q] += 1;
        }
    }
    let positives: u64 = vessel.iter().sum();
    let negatives: u64 = background.iter().sum();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    if negatives == 0 {
        return Err(Error::NoNegatives);
    }
    let mut above_v = vec![0u64; levels];
    let mut above_b = vec![0u64; levels];
    for t in (0..levels - 1).rev() {
        above_v[t] = above_v[t + 1] + vessel[t + 1];
        above_b[t] = above_b[t + 1] + background[t + 1];
    }
    let points = roc_thresholds(levels, step)
        .into_iter()
        .map(|t| RocPoint {
            threshold: t,
            fpr: above_b[t] as f64 / negatives as f64,
            tpr: above_v[t] as f64 / positives as f64,
        })
        .collect();
    Ok(RocCurve { points })
}

/// Quantizes `response` over `fov` to `levels` levels and sweeps the
/// threshold with the given step.
pub fn roc_curve(
    response: &RealImage,
    truth: &BinaryMask,
    fov: &BinaryMask,
    levels: usize,
    step: usize,
) -> Result<RocCurve> {
    let q = quantize_in(response, levels, fov)?;
    roc_from_quantized(&q, levels, truth, fov, step)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub sensitivity: MeanSd,
    pub specificity: MeanSd,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> MeanSd {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    MeanSd {
        mean,
        sd: var.sqrt(),
    }
}

/// Mean and population standard deviation of each metric.
pub fn aggregate(per_image: &[SensSpec]) -> Result<Aggregate> {
    if per_image.is_empty() {
        return Err(Error::EmptyInput("no per-image metrics to aggregate"));
    }
    Ok(Aggregate {
        sensitivity: mean_sd(per_image.iter().map(|m| m.sensitivity)),
        specificity: mean_sd(per_image.iter().map(|m| m.specificity)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;
    use proptest::prelude::*;

    fn mask(v: &[bool]) -> BinaryMask {
        Raster::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn contingency_examples() {
        let truth = Raster::from_fn(10, 10, |x, y| y * 10 + x < 30);
        let fov = BinaryMask::filled(10, 10, true);
        let c = contingency(&truth, &truth, &fov).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (30, 0, 70, 0));

        let ones = BinaryMask::filled(10, 10, true);
        let zeros = BinaryMask::filled(10, 10, false);
        let c = contingency(&ones, &zeros, &fov).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (0, 100, 0, 0));

        let small = BinaryMask::filled(3, 3, true);
        assert!(matches!(
            contingency(&ones, &small, &fov),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn contingency_ignores_outside_fov() {
        let c = contingency(
            &mask(&[true, true, false, false]),
            &mask(&[true, false, true, false]),
            &mask(&[true, false, true, true]),
        )
        .unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 0, 1, 1));
    }

    #[test]
    fn sensitivity_specificity_examples() {
        let s = sens_spec(&ContingencyCounts {
            tp: 87,
            fn_: 13,
            tn: 96,
            fp: 4,
        })
        .unwrap();
        assert!((s.sensitivity - 0.87).abs() < 1e-12);
        assert!((s.specificity - 0.96).abs() < 1e-12);

        let s = sens_spec(&ContingencyCounts {
            tp: 5,
            fn_: 0,
            tn: 9,
            fp: 0,
        })
        .unwrap();
        assert_eq!((s.sensitivity, s.specificity), (1.0, 1.0));

        let s = sens_spec(&ContingencyCounts {
            tp: 1,
            fn_: 3,
            tn: 2,
            fp: 2,
        })
        .unwrap();
        assert_eq!((s.sensitivity, s.specificity), (0.25, 0.5));

        assert_eq!(
            sens_spec(&ContingencyCounts {
                tp: 0,
                fn_: 0,
                tn: 2,
                fp: 2
            }),
            Err(Error::NoPositives)
        );
        assert_eq!(
            sens_spec(&ContingencyCounts {
                tp: 1,
                fn_: 0,
                tn: 0,
                fp: 0
            }),
            Err(Error::NoNegatives)
        );
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[SensSpec {
            sensitivity: 0.9,
            specificity: 0.95,
        }])
        .unwrap();
        assert_eq!(one.sensitivity, MeanSd { mean: 0.9, sd: 0.0 });
        assert_eq!(
            one.specificity,
            MeanSd {
                mean: 0.95,
                sd: 0.0
            }
        );

        let two = aggregate(&[
            SensSpec {
                sensitivity: 0.8,
                specificity: 0.5,
            },
            SensSpec {
                sensitivity: 1.0,
                specificity: 0.5,
            },
        ])
        .unwrap();
        assert!((two.sensitivity.mean - 0.9).abs() < 1e-12);
        assert!((two.sensitivity.sd - 0.1).abs() < 1e-12);
        assert_eq!(two.specificity.sd, 0.0);

        assert!(matches!(aggregate(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn roc_threshold_grid() {
        assert_eq!(roc_thresholds(256, 5).len(), 52);
        assert_eq!(roc_thresholds(256, 5).last(), Some(&255));
        assert_eq!(roc_thresholds(10, 4), vec![0, 4, 8, 9]);
        assert_eq!(roc_thresholds(4, 1), vec![0, 1, 2, 3]);
    }

    #[test]
    fn roc_endpoints_and_separation() {
        // Background at levels 0..=4, vessels at 5..=9.
        let q = Raster::from_vec(10, 1, (0..10u8).collect()).unwrap();
        let truth = Raster::from_fn(10, 1, |x, _| x >= 5);
        let fov = BinaryMask::filled(10, 1, true);
        let roc = roc_from_quantized(&q, 10, &truth, &fov, 1).unwrap();
        let first = roc.points[0];
        assert_eq!((first.fpr, first.tpr), (0.8, 1.0));
        let last = roc.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (0.0, 0.0));
        assert!(roc.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
    }

    proptest! {
        #[test]
        fn swapping_and_complementing(
            p in proptest::collection::vec(any::<bool>(), 64),
            t in proptest::collection::vec(any::<bool>(), 64),
            m in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let (p, t, m) = (mask(&p), mask(&t), mask(&m));
            let c = contingency(&p, &t, &m).unwrap();
            prop_assert_eq!(c.total() as usize, m.count_ones());
            let s = contingency(&t, &p, &m).unwrap();
            prop_assert_eq!((s.tp, s.tn, s.fp, s.fn_), (c.tp, c.tn, c.fn_, c.fp));
            let not = |b: &BinaryMask| b.map(|&v| !v);
            let k = contingency(&not(&p), &not(&t), &m).unwrap();
            prop_assert_eq!((k.tp, k.tn, k.fp, k.fn_), (c.tn, c.tp, c.fn_, c.fp));
            if let Ok(ss) = sens_spec(&c) {
                prop_assert!((0.0..=1.0).contains(&ss.sensitivity));
                prop_assert!((0.0..=1.0).contains(&ss.specificity));
            }
        }

        #[test]
        fn roc_is_monotone(
            r in proptest::collection::vec(-10.0f64..10.0, 144),
            t in proptest::collection::vec(any::<bool>(), 144),
            step in 1usize..20,
        ) {
            let resp = Raster::from_vec(12, 12, r).unwrap();
            let mut truth = Raster::from_vec(12, 12, t).unwrap();
            truth.set(0, 0, true);
            truth.set(1, 0, false);
            let fov = BinaryMask::filled(12, 12, true);
            let roc = roc_curve(&resp, &truth, &fov, 256, step).unwrap();
            for w in roc.points.windows(2) {
                prop_assert!(w[0].threshold < w[1].threshold);
                prop_assert!(w[1].tpr <= w[0].tpr && w[1].fpr <= w[0].fpr);
            }
            for p in &roc.points {
                prop_assert!((0.0..=1.0).contains(&p.tpr) && (0.0..=1.0).contains(&p.fpr));
            }
        }
    }
}
