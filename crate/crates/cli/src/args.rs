use crate::dataset::Layout;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use vesselseg_core::phantom::KindName;

#[derive(Debug, Parser)]
#[command(
    name = "vesselseg",
    version,
    about = "Retinal vessel segmentation with a Gabor filter bank and co-occurrence entropy thresholding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment every image of a dataset and write masks and response maps.
    Segment(SegmentArgs),
    /// Score segmentations against manual truth and write metrics.csv.
    Evaluate(EvaluateArgs),
    /// Write one threshold / fpr / tpr table per image.
    Roc(DatasetArgs),
    /// Render a synthetic image with exact vessel truth.
    Phantom(PhantomArgs),
}

/// Settings shared by every dataset command. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per logical processor.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Expected vessel thickness in pixels.
    #[arg(long)]
    pub t: Option<f64>,
    /// Gabor bandwidth factor in [0.5, 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Gray levels of the quantized response.
    #[arg(long)]
    pub levels: Option<usize>,
    /// ROC threshold step.
    #[arg(long)]
    pub roc_step: Option<usize>,
    /// Green level above which a pixel belongs to the field of view.
    #[arg(long)]
    pub mask_threshold: Option<u8>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Dataset root directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory layout: drive, stare or flat.
    #[arg(long, default_value = "flat")]
    pub layout: Layout,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Also write a globally equalized green channel, `<id>.histeq.png`.
    #[arg(long)]
    pub demo_histeq: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Score existing `<id>.mask.png` files from this directory instead of
    /// segmenting.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// File stem; writes `<id>.png` and `<id>_truth.png`.
    #[arg(long, default_value = "phantom")]
    pub id: String,
    /// bar, sinusoid or tree.
    #[arg(long, default_value = "bar")]
    pub kind: KindName,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 6.0)]
    pub vessel_width: f64,
    #[arg(long, default_value_t = 60)]
    pub contrast: u8,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 150)]
    pub background: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bar angle in degrees from the x-axis.
    #[arg(long, default_value_t = 90.0)]
    pub angle: f64,
    /// Sinusoid amplitude in pixels.
    #[arg(long, default_value_t = 20.0)]
    pub amplitude: f64,
    /// Sinusoid period in pixels.
    #[arg(long, default_value_t = 64.0)]
    pub period: f64,
    /// Tree branching depth.
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    /// Black out everything outside a centered disc.
    #[arg(long)]
    pub fov_disc: bool,
}
