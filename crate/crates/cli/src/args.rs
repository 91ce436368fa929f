use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use pkde_evalreport::{GroupBy, ReportFormat};
use pkde_nn::SkipMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Parser)]
#[command(name = "pkde", version, about = "Pore probability maps from layerwise monitoring images")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. In a config file they sit at the top
/// level; subcommand options go in an object named after the subcommand.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [env: PKDE_THREADS; default: available cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON config file; flags given on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(default)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate a synthetic build: images, CT volumes and manifest.
    Synth(SynthArgs),
    /// Detect pores in the CT volumes and write pore-probability labels.
    Label(LabelArgs),
    /// Train the segmentation network.
    Train(TrainArgs),
    /// Search learning rate and batch size.
    Tune(TuneArgs),
    /// Predict and score a split of a labeled dataset.
    Eval(EvalArgs),
    /// Regroup scores into box statistics and failure flags.
    Report(ReportArgs),
}

impl Command {
    pub const NAMES: [&'static str; 6] = ["synth", "label", "train", "tune", "eval", "report"];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Label(_) => "label",
            Command::Train(_) => "train",
            Command::Tune(_) => "tune",
            Command::Eval(_) => "eval",
            Command::Report(_) => "report",
        }
    }
}

fn parse_skip(s: &str) -> Result<SkipMode, String> {
    match s {
        "concat" => Ok(SkipMode::Concat),
        "add" => Ok(SkipMode::Add),
        _ => Err(format!("unknown skip mode `{s}` (concat, add)")),
    }
}

fn parse_group(s: &str) -> Result<GroupBy, String> {
    GroupBy::parse(s).ok_or_else(|| {
        let names: Vec<&str> = GroupBy::ALL.iter().map(|g| g.as_str()).collect();
        format!("unknown grouping `{s}` ({})", names.join(", "))
    })
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        _ => Err(format!("unknown format `{s}` (json, csv)")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Build plan JSON; the ten-part reference build when omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Layers per part.
    #[arg(long)]
    pub layers: Option<u32>,
    /// Image width and height in pixels.
    #[arg(long)]
    pub size: Option<usize>,
    /// Expected pores per layer at nominal energy density.
    #[arg(long)]
    pub pore_rate: Option<f64>,
    /// Factor on the HR and OT pore signature amplitudes.
    #[arg(long)]
    pub signature: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct LabelArgs {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// KDE bandwidth in pixels.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Kernel truncation radius in bandwidths.
    #[arg(long)]
    pub truncation: Option<f64>,
    /// CT intensity below which a voxel is void.
    #[arg(long)]
    pub threshold: Option<f32>,
    /// Smallest pore equivalent diameter kept, in µm.
    #[arg(long)]
    pub min_diameter: Option<f64>,
    /// Label from the seeded pores of a synthetic build instead of the CT.
    #[arg(long)]
    #[serde(default)]
    pub from_seeded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Encoder levels.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Channels at the first level; doubled per level.
    #[arg(long)]
    pub width: Option<usize>,
    /// How decoder and encoder features merge: concat or add.
    #[arg(long, value_parser = parse_skip)]
    pub skip: Option<SkipMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Labeled dataset directory or manifest file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Split file; a seeded 60/20/20 split is drawn and saved when omitted.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Take learning rate and batch size from a tuning result.
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Total trials, including those already in the log.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Epochs per trial.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Trials run concurrently.
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Uniform random search instead of the surrogate model.
    #[arg(long)]
    #[serde(default)]
    pub random: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Groupings, comma separated; all by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_group)]
    pub group_by: Option<Vec<GroupBy>>,
    /// MAE above which a layer is flagged.
    #[arg(long)]
    pub flag_threshold: Option<f64>,
    /// Output formats, comma separated: json, csv.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    pub format: Option<Vec<ReportFormat>>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Trained weights directory.
    #[arg(long, conflicts_with = "predictions")]
    pub weights: Option<PathBuf>,
    /// Score existing prediction images instead of running a network.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Layers to score; `test` with a split, `all` without.
    #[arg(long, value_enum)]
    pub subset: Option<Subset>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Scores CSV, or an eval output directory holding one.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Dataset the scores came from: parameters, sections and labels.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Prediction images, to classify flagged layers.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
