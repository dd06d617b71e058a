//! Subcommand implementations.
//!
//! Images are processed independently, possibly concurrently; each one
//! writes only its own files. Tables that span images are written after all
//! images are done, in record order.

use crate::args::{DatasetArgs, EvaluateArgs, PhantomArgs, RunArgs, SegmentArgs};
use crate::config::RunConfig;
use crate::dataset::{load_dataset, DatasetRecord};
use crate::error::{CliError, Result};
use crate::io::{read_fundus, read_mask, write_fundus, write_gray, write_mask};
use std::path::{Path, PathBuf};
use std::time::Instant;
use vesselseg_core::evaluation::{
    aggregate, contingency, roc_from_quantized, ContingencyCounts, SensSpec,
};
use vesselseg_core::phantom::{generate, KindName, PhantomSpec, VesselKind};
use vesselseg_core::pipeline::{segment, Segmentation};
use vesselseg_core::preprocess::{equalize_histogram, preprocess};
use vesselseg_core::{BinaryMask, Execution, FundusImage, GrayImage};

/// Exit status of a command that got past configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// At least one image failed; the others were processed.
    PartialFailure,
}

impl Outcome {
    fn from_failures(failures: usize) -> Self {
        if failures == 0 {
            Outcome::Success
        } else {
            Outcome::PartialFailure
        }
    }
}

/// Loads the config file (if any) and applies flag overrides.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seg = &mut cfg.segmentation;
    if let Some(v) = args.t {
        seg.gabor.thickness = v;
    }
    if let Some(v) = args.beta {
        seg.gabor.beta = v;
    }
    if let Some(v) = args.levels {
        seg.levels = v;
    }
    if let Some(v) = args.mask_threshold {
        seg.preprocess.mask_threshold = v;
    }
    if let Some(v) = args.roc_step {
        cfg.roc_step = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = v.clone();
    }
    cfg.segmentation.execution = if cfg!(feature = "parallel") {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `f` on every record, on a pool of `threads` workers when compiled
/// with the `parallel` feature. Results keep record order.
fn per_record<R, F>(threads: usize, records: &[DatasetRecord], f: F) -> Result<Vec<Result<R>>>
where
    R: Send,
    F: Fn(&DatasetRecord) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
        Ok(pool.install(|| records.par_iter().map(&f).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(records.iter().map(f).collect())
    }
}

/// Logs failed records and counts them.
fn report_failures<R>(records: &[DatasetRecord], results: &[Result<R>]) -> usize {
    let mut failures = 0;
    for (r, res) in records.iter().zip(results) {
        if let Err(e) = res {
            log::error!("{}: {e}", r.id);
            failures += 1;
        }
    }
    failures
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(CliError::io(path))
}

fn load_records(args: &DatasetArgs, cfg: &RunConfig) -> Result<Vec<DatasetRecord>> {
    let ds = load_dataset(&args.input, args.layout, &cfg.exclude)?;
    for w in &ds.warnings {
        log::warn!("{w}");
    }
    log::info!(
        "{} records under {} ({} layout)",
        ds.records.len(),
        args.input.display(),
        args.layout
    );
    Ok(ds.records)
}

fn run_segmentation(
    record: &DatasetRecord,
    cfg: &RunConfig,
) -> Result<(FundusImage, Segmentation)> {
    let img = read_fundus(&record.image_path)?;
    let fov = record.fov_path.as_deref().map(read_mask).transpose()?;
    let seg = segment(&img, &cfg.segmentation, fov.as_ref())?;
    Ok((img, seg))
}

/// Quantized response stretched to the full 8-bit range for viewing.
fn response_image(seg: &Segmentation, levels: usize) -> GrayImage {
    let top = (levels - 1) as u32;
    seg.quantized
        .map(|&q| ((u32::from(q) * 255 + top / 2) / top) as u8)
}

/// Pixels that take part in scoring.
fn scoring_region(cfg: &RunConfig, fov: &BinaryMask) -> BinaryMask {
    if cfg.fov_restricted {
        fov.clone()
    } else {
        BinaryMask::filled(fov.width(), fov.height(), true)
    }
}

fn truth_of(record: &DatasetRecord) -> Result<BinaryMask> {
    let path = record
        .truth_path
        .as_deref()
        .ok_or_else(|| CliError::Input("no ground truth found for this image".into()))?;
    read_mask(path)
}

pub fn segment_command(args: &SegmentArgs) -> Result<Outcome> {
    let cfg = resolve_config(&args.dataset.run)?;
    let records = load_records(&args.dataset, &cfg)?;
    let out = &cfg.output_dir;
    create_dir(out)?;
    let levels = cfg.segmentation.levels;

    let results = per_record(cfg.threads, &records, |r| {
        let start = Instant::now();
        let (img, seg) = run_segmentation(r, &cfg)?;
        let elapsed = start.elapsed();
        write_mask(&out.join(format!("{}.mask.png", r.id)), &seg.mask)?;
        write_gray(
            &out.join(format!("{}.response.png", r.id)),
            &response_image(&seg, levels),
        )?;
        if args.demo_histeq {
            let green = preprocess(&img, &cfg.segmentation.preprocess)?.green;
            write_gray(
                &out.join(format!("{}.histeq.png", r.id)),
                &equalize_histogram(&green),
            )?;
        }
        Ok((img.dims(), seg.threshold(), elapsed))
    })?;

    for (r, res) in records.iter().zip(&results) {
        if let Ok(((w, h), threshold, elapsed)) = res {
            println!(
                "{}\t{w}x{h}\tthreshold {threshold}\t{:.3} s",
                r.id,
                elapsed.as_secs_f64()
            );
        }
    }
    Ok(Outcome::from_failures(report_failures(&records, &results)))
}

struct Scored {
    counts: ContingencyCounts,
    metrics: SensSpec,
}

fn score(record: &DatasetRecord, cfg: &RunConfig, predictions: Option<&Path>) -> Result<Scored> {
    let truth = truth_of(record)?;
    let (pred, fov) = match predictions {
        Some(dir) => {
            let pred = read_mask(&dir.join(format!("{}.mask.png", record.id)))?;
            let fov = match &record.fov_path {
                Some(p) => read_mask(p)?,
                None => {
                    preprocess(
                        &read_fundus(&record.image_path)?,
                        &cfg.segmentation.preprocess,
                    )?
                    .fov
                }
            };
            (pred, fov)
        }
        None => {
            let (_, seg) = run_segmentation(record, cfg)?;
            (seg.mask, seg.fov)
        }
    };
    truth.ensure_same_dims(&fov)?;
    let counts = contingency(&pred, &truth, &scoring_region(cfg, &fov))?;
    Ok(Scored {
        counts,
        metrics: counts.sens_spec()?,
    })
}

pub fn evaluate_command(args: &EvaluateArgs) -> Result<Outcome> {
    let cfg = resolve_config(&args.dataset.run)?;
    let records = load_records(&args.dataset, &cfg)?;
    if records.is_empty() {
        return Err(CliError::Input(format!(
            "no images to evaluate under {}",
            args.dataset.input.display()
        )));
    }
    create_dir(&cfg.output_dir)?;
    let results = per_record(cfg.threads, &records, |r| {
        score(r, &cfg, args.predictions.as_deref())
    })?;
    let failures = report_failures(&records, &results);

    let path = cfg.output_dir.join("metrics.csv");
    let csv_err = |source| CliError::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["id", "sensitivity", "specificity", "tp", "fp", "tn", "fn"])
        .map_err(csv_err)?;
    let mut scored = Vec::new();
    for (r, res) in records.iter().zip(&results) {
        if let Ok(s) = res {
            let c = s.counts;
            w.write_record([
                r.id.clone(),
                s.metrics.sensitivity.to_string(),
                s.metrics.specificity.to_string(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
            ])
            .map_err(csv_err)?;
            scored.push(s.metrics);
        }
    }
    if let Ok(agg) = aggregate(&scored) {
        let (se, sp) = (agg.sensitivity, agg.specificity);
        for (label, a, b) in [("mean", se.mean, sp.mean), ("sd", se.sd, sp.sd)] {
            w.write_record([label, &a.to_string(), &b.to_string(), "", "", "", ""])
                .map_err(csv_err)?;
        }
        println!(
            "{} images\tsensitivity {:.4} ± {:.4}\tspecificity {:.4} ± {:.4}",
            scored.len(),
            se.mean,
            se.sd,
            sp.mean,
            sp.sd
        );
    }
    w.flush().map_err(CliError::io(&path))?;
    Ok(Outcome::from_failures(failures))
}

pub fn roc_command(args: &DatasetArgs) -> Result<Outcome> {
    let cfg = resolve_config(&args.run)?;
    let records = load_records(args, &cfg)?;
    let dir: PathBuf = cfg.output_dir.join("roc");
    create_dir(&dir)?;
    let levels = cfg.segmentation.levels;

    let results = per_record(cfg.threads, &records, |r| {
        let truth = truth_of(r)?;
        let (_, seg) = run_segmentation(r, &cfg)?;
        truth.ensure_same_dims(&seg.fov)?;
        let curve = roc_from_quantized(
            &seg.quantized,
            levels,
            &truth,
            &scoring_region(&cfg, &seg.fov),
            cfg.roc_step,
        )?;
        let path = dir.join(format!("{}.csv", r.id));
        let csv_err = |source| CliError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(["threshold", "fpr", "tpr"])
            .map_err(csv_err)?;
        for p in &curve.points {
            w.write_record([
                p.threshold.to_string(),
                p.fpr.to_string(),
                p.tpr.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(CliError::io(&path))?;
        Ok(curve.points.len())
    })?;
    Ok(Outcome::from_failures(report_failures(&records, &results)))
}

pub fn phantom_spec(args: &PhantomArgs) -> PhantomSpec {
    let kind = match args.kind {
        KindName::Bar => VesselKind::Bar {
            angle_deg: args.angle,
        },
        KindName::Sinusoid => VesselKind::Sinusoid {
            amplitude: args.amplitude,
            period: args.period,
        },
        KindName::Tree => VesselKind::Tree { depth: args.depth },
    };
    PhantomSpec {
        width: args.width,
        height: args.height,
        kind,
        vessel_width: args.vessel_width,
        contrast: args.contrast,
        noise_sd: args.noise_sd,
        background: args.background,
        fov_disc: args.fov_disc,
    }
}

pub fn phantom_command(args: &PhantomArgs) -> Result<Outcome> {
    let spec = phantom_spec(args);
    let phantom = generate(&spec, args.seed).map_err(|e| CliError::Config(e.to_string()))?;
    create_dir(&args.out)?;
    write_fundus(&args.out.join(format!("{}.png", args.id)), &phantom.image)?;
    write_mask(
        &args.out.join(format!("{}_truth.png", args.id)),
        &phantom.truth,
    )?;
    Ok(Outcome::Success)
}
