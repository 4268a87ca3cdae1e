use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cosfire-scene", version, about = "Scene labelling of egocentric photo streams with COSFIRE filters")]
pub struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Omit the `# generated_at` line so outputs are byte-identical across runs.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Configure filters from prototype keypoints and write a filter-bank file.
    Configure(ConfigureArgs),
    /// Label every frame of a manifest.
    Label(LabelArgs),
    /// Fill short unknown holes in a labels file.
    Smooth(SmoothArgs),
    /// Group labelled frames into timed events.
    Segment(SegmentArgs),
    /// Score labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Write the synthetic test corpus.
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Args)]
pub struct ConfigureArgs {
    /// Prototype image; repeat once per entry, paired in order with --keypoint, --scene and --name.
    #[arg(long = "image")]
    pub images: Vec<PathBuf>,
    /// Keypoint as `x,y` in pixels.
    #[arg(long = "keypoint")]
    pub keypoints: Vec<String>,
    #[arg(long = "scene")]
    pub scenes: Vec<String>,
    #[arg(long = "name")]
    pub names: Vec<String>,
    /// CSV of entries (`image,keypoint_x,keypoint_y,scene,name`), added after the flag entries.
    #[arg(long)]
    pub entries: Option<PathBuf>,
    /// Output filter-bank file.
    #[arg(long, short)]
    pub out: PathBuf,

    /// Comma-separated circle radii, starting at 0.
    #[arg(long, default_value = "0,5,10,20")]
    pub radii: String,
    /// Angular sampling step along the circles (radians or `pi/N`).
    #[arg(long, default_value = "pi/60")]
    pub angular_step: String,
    #[arg(long, default_value_t = 0.75)]
    pub t2: f64,
    #[arg(long, default_value_t = 0.25)]
    pub t3: f64,
    #[arg(long, default_value_t = 0.67)]
    pub sigma0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha_blur: f64,
    /// `uniform` or the σ of Gaussian tuple weights.
    #[arg(long, default_value = "uniform")]
    pub weight_sigma: String,
    /// Fraction of prototype response a filter needs to count as responding.
    #[arg(long, default_value_t = 0.25)]
    pub detection_threshold: f64,

    #[command(flatten)]
    pub bank: BankArgs,
}

#[derive(Debug, Args)]
pub struct BankArgs {
    /// Comma-separated Gabor wavelengths in pixels.
    #[arg(long, default_value = "4,5.656854249492381,8,11.313708498984761,16")]
    pub lambdas: String,
    /// Number of orientations, evenly spaced over [0, π).
    #[arg(long, default_value_t = 8)]
    pub orientations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.56)]
    pub sigma_over_lambda: f64,
    /// Gabor responses below this fraction of the stack maximum are zeroed.
    #[arg(long, default_value_t = 0.1)]
    pub t1: f64,
    /// Surround inhibition strength; 0 disables it.
    #[arg(long, default_value_t = 1.0)]
    pub inhibition_alpha: f64,
    /// Outer to inner σ ratio of the inhibition surround.
    #[arg(long, default_value_t = 4.0)]
    pub inhibition_ratio: f64,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Rotations to try, multiples of the bank orientation step, e.g. `-pi/8,0,pi/8`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub psis: String,
    /// Overrides the per-scene detection thresholds stored in the bank.
    #[arg(long)]
    pub detection_threshold: Option<f64>,
    /// Downscale frames so their larger side is at most this many pixels.
    #[arg(long)]
    pub resize_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Frames considered on each side of a hole.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Scenes to score, comma-separated (default: the scene columns of the labels file).
    #[arg(long)]
    pub scenes: Option<String>,
    /// Also write the full-precision report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub frames: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
}
