use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::formats::{parse_dims, parse_list, parse_ratio};

/// A comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn float_list(s: &str) -> Result<FloatList, String> {
    parse_list(s).map(FloatList)
}

#[derive(Debug, Clone, Parser)]
#[command(name = "persal", version, about = "Personalized saliency ground truth, baselines and evaluation")]
pub struct Cli {
    /// Worker threads for per-image work (default: number of processors).
    #[arg(long, short = 'j', global = true, env = "PERSAL_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build a preference vector from a detection history or manual ratings.
    Profile(ProfileArgs),
    /// Generate personalized ground-truth maps for annotated images.
    GenGt(GenGtArgs),
    /// Sum fixation maps into a center prior.
    Prior(PriorArgs),
    /// Score predicted maps against ground-truth maps.
    Eval(EvalArgs),
    /// Produce center-prior or detection baseline maps.
    Baseline(BaselineArgs),
    /// Sweep the ground-truth blend weights against reference labels.
    Tune(TuneArgs),
    /// Convert grids between FGRD, CSV and PGM.
    Convert(ConvertArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::GenGt(_) => "gen-gt",
            Command::Prior(_) => "prior",
            Command::Eval(_) => "eval",
            Command::Baseline(_) => "baseline",
            Command::Tune(_) => "tune",
            Command::Convert(_) => "convert",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Detection manifest, or a directory of manifests whose records without
    /// a timestamp take the file's modification time.
    #[arg(long, required_unless_present = "ratings", conflicts_with = "ratings")]
    pub detections: Option<PathBuf>,
    /// Category mapping (default: bundled 12-group COCO mapping).
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long, default_value_t = persal_core::preference::DEFAULT_WINDOW_DAYS)]
    pub window_days: u32,
    /// Reference time in Unix seconds (default: now).
    #[arg(long, allow_hyphen_values = true)]
    pub now: Option<i64>,
    /// Manual 0-10 ratings, one per super category, e.g. "10,8,2".
    #[arg(long)]
    pub ratings: Option<String>,
    /// Write the vector here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenGtArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub pvec: PathBuf,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// alpha,beta,gamma
    #[arg(long, default_value = "0.06,0.752,0.188", value_parser = float_list)]
    pub weights: FloatList,
    /// Output resolution HxW.
    #[arg(long, default_value = "38x38", value_parser = parse_dims, conflicts_with = "full_res")]
    pub grid: (usize, usize),
    /// Generate at each fixation map's own resolution.
    #[arg(long)]
    pub full_res: bool,
    /// Also write a PGM preview per image.
    #[arg(long)]
    pub pgm: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    /// Directory of FGRD fixation maps.
    #[arg(long, required_unless_present = "annotations", conflicts_with = "annotations")]
    pub fixations: Option<PathBuf>,
    /// Annotation manifest whose fixation maps are summed.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Resample every map to HxW first.
    #[arg(long, value_parser = parse_dims)]
    pub grid: Option<(usize, usize)>,
    /// Output FGRD file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroundArg {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of predicted FGRD maps.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth FGRD maps with the same file names.
    #[arg(long)]
    pub gt: PathBuf,
    /// Maps larger than RxR are downsampled (mass-preserving) for EMD.
    #[arg(long, default_value_t = persal_core::metrics::emd::DEFAULT_EMD_RESOLUTION)]
    pub emd_res: usize,
    #[arg(long, value_enum, default_value_t = GroundArg::Euclidean)]
    pub ground: GroundArg,
    /// Rescale both maps to unit mass before scoring.
    #[arg(long)]
    pub normalize: bool,
    /// Directory for metrics.csv and summary.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    CenterPrior,
    Detection,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Seed for the random fallback maps.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Detection confidence threshold.
    #[arg(long, default_value_t = persal_core::raster::COCO_CONFIDENCE)]
    pub threshold: f64,
    /// Center prior FGRD (center-prior kind).
    #[arg(long, required_if_eq("kind", "center-prior"))]
    pub prior: Option<PathBuf>,
    /// Detection or annotation manifest; one map is written per record.
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Preference vector (detection kind).
    #[arg(long, required_if_eq("kind", "detection"))]
    pub pvec: Option<PathBuf>,
    /// Output resolution HxW (default 38x38, or the prior's size).
    #[arg(long, value_parser = parse_dims)]
    pub grid: Option<(usize, usize)>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// Directory of reference label maps named `<image_id>.fgrd`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub pvec: PathBuf,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long, default_value = "38x38", value_parser = parse_dims, conflicts_with = "full_res")]
    pub grid: (usize, usize),
    #[arg(long)]
    pub full_res: bool,
    #[arg(long, default_value = "0.01,0.02,0.04,0.06,0.08,0.10,0.14,0.20", value_parser = float_list)]
    pub alpha_grid: FloatList,
    /// Beta fractions beta / (beta + gamma).
    #[arg(long, default_value = "0.5,0.6,0.7,0.8,0.9,1.0", value_parser = float_list)]
    pub ratio_grid: FloatList,
    /// Alpha for the ratio sweep (default: the alpha sweep's winner).
    #[arg(long)]
    pub fixed_alpha: Option<f64>,
    /// beta:gamma held during the alpha sweep.
    #[arg(long, default_value = "0.8:0.2", value_parser = parse_ratio)]
    pub fixed_ratio: (f64, f64),
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    /// .fgrd or .csv
    #[arg(long)]
    pub input: PathBuf,
    /// .fgrd, .csv or .pgm
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
