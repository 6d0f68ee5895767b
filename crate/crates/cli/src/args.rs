//! Command-line surface: subcommands, flags, and shared value enums.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::synth::Background;

const DATASET_HINT: &str = "Datasets are a directory holding annotations.json:\n  \
{\"images\":[{\"id\":\"img_000\",\"file\":\"img_000.pgm\",\"height\":96,\"width\":96,\n    \
\"targets\":[{\"bbox\":[x0,y0,x1,y1],\"centroid\":[x,y]}]}]}\n\
Referenced images may be PGM (P5) or grayscale PNG.";

const DETECTIONS_HINT: &str = "Detections are JSON lines, one object per detection:\n  \
{\"image_id\":\"img_000\",\"bbox\":[x0,y0,x1,y1],\"score\":0.97}";

#[derive(Debug, Parser)]
#[command(
    name = "sirstbench",
    version,
    about = "Small-target detection bench: centroid-aware evaluation, label assignment, and classic baselines",
    after_help = "Set SIRSTBENCH_LOG=debug|info|warn|error to control logging."
)]
pub struct Cli {
    /// Worker threads for per-image fan-out (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render per-image contrast maps to binary rasters.
    #[command(after_help = DATASET_HINT)]
    NocoGen(NocoGenArgs),
    /// Run a score-map baseline over a dataset and write detections.
    #[command(after_help = DATASET_HINT)]
    Detect(DetectArgs),
    /// Evaluate detections against a dataset (mNoCoAP).
    #[command(after_help = format!("{DATASET_HINT}\n\n{DETECTIONS_HINT}"))]
    Eval(EvalArgs),
    /// Report label-assignment coverage over a dataset's targets.
    #[command(after_help = DATASET_HINT)]
    AssignStats(AssignStatsArgs),
    /// Compute detection losses on a self-contained JSON fixture.
    #[command(after_help = "Fixture schema: {\"height\":H,\"width\":W,\"gt_boxes\":[[x0,y0,x1,y1],..],\n  \
\"head_high\":{\"stride\":S,\"pseudo_factor\":F,\"cls_preds\":[..],\"box_preds\":[[..4],..]},\n  \
\"head_low\":{..},\"noco_preds\":[..],\"noco_targets\":[..],\"config\":{..}?}")]
    LossEval(LossEvalArgs),
    /// Generate a synthetic blob dataset.
    Synth(SynthArgs),
    /// Print the worked overlap-sensitivity example for tiny boxes.
    IouDemo(IouDemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lcm,
    Mpcm,
    Ipi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Center,
    Aspb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Svg,
}

#[derive(Debug, Parser)]
pub struct NocoGenArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for one `<image_id>.noco` raster per image.
    #[arg(long)]
    pub out: PathBuf,
    /// Region growth divisor (border = max(extent / gamma, 1)).
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Gaussian width as a fraction of half the region extent.
    #[arg(long, default_value_t = 0.5)]
    pub sigma_scale: f64,
}

#[derive(Debug, Parser)]
pub struct DetectArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Baseline to run.
    #[arg(long, value_enum)]
    pub method: Method,
    /// Output detections file (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Threshold factor k in mean + k * std (default per method: lcm 3, mpcm 13, ipi 10).
    #[arg(long)]
    pub k_sigma: Option<f64>,
}

#[derive(Debug, Parser)]
pub struct EvalArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Detections file (JSON lines).
    #[arg(long)]
    pub detections: PathBuf,
    /// Comma-separated thresholds in (0, 1), strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Region growth divisor.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Gaussian width scale.
    #[arg(long, default_value_t = 0.5)]
    pub sigma_scale: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct AssignStatsArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Assignment scheme.
    #[arg(long, value_enum, default_value_t = Scheme::Aspb)]
    pub scheme: Scheme,
    /// Comma-separated pyramid strides.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4u32, 8, 16])]
    pub stride: Vec<u32>,
    /// Pseudo-box size as a multiple of the stride (aspb only).
    #[arg(long, default_value_t = 1.0)]
    pub pseudo_factor: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct LossEvalArgs {
    /// Loss fixture (JSON).
    #[arg(long)]
    pub fixture: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct SynthArgs {
    /// Output dataset directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed; fixed seed gives bit-identical output.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of images.
    #[arg(long, default_value_t = 20)]
    pub images: usize,
    #[arg(long, default_value_t = 96)]
    pub height: usize,
    #[arg(long, default_value_t = 96)]
    pub width: usize,
    /// Targets per image.
    #[arg(long, default_value_t = 3)]
    pub targets: usize,
    /// Blob sigma range; ground-truth boxes span 3 sigma.
    #[arg(long, default_value_t = 0.8)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 1.6)]
    pub sigma_max: f64,
    /// Blob peak amplitude above the background.
    #[arg(long, default_value_t = 0.6)]
    pub amplitude: f64,
    /// Additive Gaussian pixel-noise sigma.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = Background::Flat)]
    pub background: Background,
}

#[derive(Debug, Parser)]
pub struct IouDemoArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the demo output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
