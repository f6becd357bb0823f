//! Command-line surface: calibrate, fuse, evaluate, augment-plan, simulate.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fusekit_core::augmentation::{self, PlanOptions, SourceImage, DEFAULT_CROP_FRACTION};
use fusekit_core::calibration::calibrate_weights;
use fusekit_core::fusion::{fuse_batch_with, DecisionRule, FusedBatch, ScoreMode};
use fusekit_core::metrics::{full_report, ReportConfig, DEFAULT_THRESHOLD};
use fusekit_core::simulator::{self, SimConfig, WeightsMode};
use fusekit_core::{ClassIndex, Error, PredictionSet, ProbVector, WeightTable};
use log::info;

use crate::error::{FormatError, Result};
use crate::labels::{parse_labels, write_labels};
use crate::manifest::{format_manifest, write_manifest};
use crate::ppm::PpmDirectory;
use crate::predictions::{format_predictions, read_prediction_file, write_prediction_file, PredictionFile};
use crate::report::{format_report, ReportFile};
use crate::weights::{format_weights, parse_weights};

/// Source counts of the 2,000-image training set.
pub const DEFAULT_COUNTS: &str = "melanoma=374,nevus=1372,seborrheic_keratosis=254";
/// Per-class targets after augmentation (14,300 images in total).
pub const DEFAULT_TARGETS: &str = "melanoma=4600,nevus=8200,seborrheic_keratosis=1500";

#[derive(Debug, Parser)]
#[command(name = "fusekit", version, about = "Weighted majority-vote fusion of softmax classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive per-classifier weights (mean of melanoma and SK AUCs).
    Calibrate(CalibrateArgs),
    /// Fuse prediction files into one ensemble prediction file.
    Fuse(FuseArgs),
    /// Compute the two-task metric report.
    Evaluate(EvaluateArgs),
    /// Plan (and optionally execute) training-set augmentation.
    AugmentPlan(AugmentArgs),
    /// Generate a synthetic ensemble in the prediction-file format.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum ScoreModeArg {
    #[default]
    VoteRestricted,
    FullAverage,
}

impl From<ScoreModeArg> for ScoreMode {
    fn from(m: ScoreModeArg) -> Self {
        match m {
            ScoreModeArg::VoteRestricted => ScoreMode::VoteRestricted,
            ScoreModeArg::FullAverage => ScoreMode::FullAverage,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(required = true)]
    pub predictions: Vec<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Weight file produced by `calibrate`.
    #[arg(long, conflicts_with = "uniform")]
    pub weights: Option<PathBuf>,
    /// Give every classifier weight 1.
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, value_enum, default_value_t = ScoreModeArg::VoteRestricted)]
    pub score_mode: ScoreModeArg,
    /// Plain majority vote; ties fall back to the weighted vote.
    #[arg(long)]
    pub plain: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    #[arg(required = true)]
    pub predictions: Vec<PathBuf>,
    #[command(flatten)]
    pub weighting: WeightArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// A fused file, or per-classifier files together with --weights/--uniform.
    #[arg(required = true)]
    pub predictions: Vec<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub weighting: WeightArgs,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.82,0.89,0.95")]
    pub se_levels: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AugmentArgs {
    /// Source images per class, e.g. `melanoma=374,nevus=1372,sk=254`.
    #[arg(long, default_value = DEFAULT_COUNTS, value_parser = parse_class_counts)]
    pub counts: ClassCounts,
    #[arg(long, default_value = DEFAULT_TARGETS, value_parser = parse_class_counts)]
    pub targets: ClassCounts,
    /// Take source ids and classes from a label file instead of --counts.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CROP_FRACTION)]
    pub crop_fraction: f64,
    #[arg(long)]
    pub subsample_allowed: bool,
    /// Directory of `<source_id>.ppm` images; when set the plan is executed.
    #[arg(long, requires = "image_out")]
    pub images: Option<PathBuf>,
    /// Directory receiving `<output_id>.ppm` images.
    #[arg(long)]
    pub image_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Uniform,
    Calibrated,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.7,0.5")]
    pub accuracies: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub n_images: usize,
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
    #[arg(long, default_value_t = 4.0)]
    pub concentration: f64,
    /// Class distribution of the ground truth (defaults to the training-set mix).
    #[arg(long, value_delimiter = ',')]
    pub truth_dist: Option<Vec<f64>>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for `<classifier>.csv` and `labels.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also run the fusion experiment and print its summary.
    #[arg(long, value_enum)]
    pub experiment: Option<ExperimentArg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts(pub BTreeMap<ClassIndex, usize>);

pub fn parse_class_counts(s: &str) -> std::result::Result<ClassCounts, String> {
    let mut map = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, count) = part
            .split_once('=')
            .ok_or_else(|| format!("expected class=count, got `{part}`"))?;
        let class = ClassIndex::parse(name).ok_or_else(|| format!("unknown class `{name}`"))?;
        let count = count
            .trim()
            .parse()
            .map_err(|_| format!("invalid count `{count}` for `{name}`"))?;
        if map.insert(class, count).is_some() {
            return Err(format!("class `{name}` given twice"));
        }
    }
    Ok(ClassCounts(map))
}

fn usage(msg: impl Into<String>) -> FormatError {
    Error::Usage(msg.into()).into()
}

fn load_sets(paths: &[PathBuf]) -> Result<Vec<PredictionFile>> {
    let files = paths
        .iter()
        .map(|p| read_prediction_file(p))
        .collect::<Result<Vec<_>>>()?;
    let mut ids = HashSet::new();
    for f in &files {
        if !ids.insert(f.set.classifier_id().to_string()) {
            return Err(usage(format!("classifier id `{}` appears twice", f.set.classifier_id())));
        }
        info!("loaded `{}` with {} rows", f.set.classifier_id(), f.set.len());
    }
    Ok(files)
}

fn resolve_weights(sets: &[PredictionSet], weighting: &WeightArgs) -> Result<Vec<f64>> {
    match (&weighting.weights, weighting.uniform) {
        (Some(path), _) => {
            let table = parse_weights(path)?;
            let ids: Vec<&str> = sets.iter().map(PredictionSet::classifier_id).collect();
            Ok(table.aligned_to(&ids)?)
        }
        (None, true) => Ok(vec![1.0; sets.len()]),
        (None, false) => Err(usage("fusing requires --weights <file> or --uniform")),
    }
}

fn fuse_sets(sets: &[PredictionSet], weighting: &WeightArgs) -> Result<FusedBatch> {
    let weights = resolve_weights(sets, weighting)?;
    let rule = if weighting.plain {
        DecisionRule::PlainWithFallback
    } else {
        DecisionRule::Weighted
    };
    let batch = fuse_batch_with(sets, &weights, weighting.score_mode.into(), rule)?;
    if weighting.plain {
        info!("{} plain-vote ties resolved by the weighted vote", batch.plain_ties);
    }
    Ok(batch)
}

pub fn run_calibrate(args: &CalibrateArgs) -> Result<WeightTable> {
    let sets: Vec<PredictionSet> = load_sets(&args.predictions)?.into_iter().map(|f| f.set).collect();
    let truth = parse_labels(&args.labels)?;
    let table = calibrate_weights(&sets, &truth)?;
    for (id, w) in table.iter() {
        info!("weight `{id}` = {w}");
    }
    Ok(table)
}

pub fn run_fuse(args: &FuseArgs) -> Result<PredictionFile> {
    let sets: Vec<PredictionSet> = load_sets(&args.predictions)?.into_iter().map(|f| f.set).collect();
    let batch = fuse_sets(&sets, &args.weighting)?;
    Ok(PredictionFile {
        set: PredictionSet::new("ensemble", batch.image_ids, batch.scores)?,
        decisions: Some(batch.decisions),
    })
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<ReportFile> {
    let truth = parse_labels(&args.labels)?;
    let files = load_sets(&args.predictions)?;
    let weighted = args.weighting.weights.is_some() || args.weighting.uniform;
    let (ids, scores): (Vec<String>, Vec<ProbVector>) = if files.len() == 1 && !weighted {
        let set = files.into_iter().next().expect("one file").set;
        (set.image_ids().to_vec(), set.rows().to_vec())
    } else {
        let sets: Vec<PredictionSet> = files.into_iter().map(|f| f.set).collect();
        let batch = fuse_sets(&sets, &args.weighting)?;
        (batch.image_ids, batch.scores)
    };
    let labels = truth.aligned_labels(&ids)?;
    let rows: Vec<&ProbVector> = scores.iter().collect();
    let config = ReportConfig {
        threshold: args.threshold,
        se_levels: args.se_levels.clone(),
    };
    let report = full_report(&rows, &labels, &config)?;
    info!("overall score {}", report.overall_score());
    Ok(ReportFile::from_report(&report))
}

pub fn run_augment(args: &AugmentArgs) -> Result<Vec<augmentation::ManifestRow>> {
    let options = PlanOptions {
        crop_fraction: args.crop_fraction,
        allow_subsample: args.subsample_allowed,
    };
    let plan = match &args.labels {
        Some(path) => {
            let truth = parse_labels(path)?;
            let sources: Vec<SourceImage> = truth
                .image_ids()
                .iter()
                .zip(truth.labels())
                .map(|(id, &class)| SourceImage { id: id.clone(), class })
                .collect();
            augmentation::plan(&sources, &args.targets.0, args.seed, options)?
        }
        None => augmentation::plan_from_counts(&args.counts.0, &args.targets.0, args.seed, options)?,
    };
    for (class, n) in &plan.totals {
        info!("class {class}: {n} outputs");
    }
    match (&args.images, &args.image_out) {
        (Some(images), Some(out_dir)) => {
            std::fs::create_dir_all(out_dir).map_err(|e| FormatError::io(out_dir, e))?;
            let mut source = PpmDirectory::new(images);
            let mut sink = PpmDirectory::new(out_dir);
            Ok(augmentation::execute_plan(&plan, &mut source, &mut sink)?)
        }
        _ => Ok(plan.manifest()),
    }
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Option<simulator::ExperimentSummary>> {
    let config = SimConfig {
        n_images: args.n_images,
        n_classifiers: args.accuracies.len(),
        accuracies: args.accuracies.clone(),
        correlation: args.correlation,
        concentration: args.concentration,
        seed: args.seed,
    };
    let dist = match &args.truth_dist {
        Some(d) => ProbVector::new(d.clone())?,
        None => simulator::training_distribution(),
    };
    if dist.len() != 3 {
        return Err(usage("--truth-dist needs three class probabilities"));
    }
    let (sets, truth) = simulator::synth_ensemble(&config, &dist)?;
    std::fs::create_dir_all(&args.out).map_err(|e| FormatError::io(&args.out, e))?;
    for set in sets {
        let path = args.out.join(format!("{}.csv", set.classifier_id()));
        write_prediction_file(&path, &PredictionFile { set, decisions: None })?;
    }
    write_labels(&args.out.join("labels.csv"), &truth)?;
    args.experiment
        .map(|mode| {
            let mode = match mode {
                ExperimentArg::Uniform => WeightsMode::Uniform,
                ExperimentArg::Calibrated => WeightsMode::Calibrated,
            };
            simulator::ensemble_experiment(&config, &dist, mode).map_err(FormatError::from)
        })
        .transpose()
}

pub fn format_summary(s: &simulator::ExperimentSummary) -> String {
    let mut out = String::new();
    for (i, (a, w)) in s.individual_accuracies.iter().zip(&s.weights).enumerate() {
        out.push_str(&format!("{},accuracy={a},weight={w}\n", simulator::classifier_id(i)));
    }
    out.push_str(&format!("plain_vote_accuracy={}\n", s.plain_vote_accuracy));
    out.push_str(&format!("plain_with_fallback_accuracy={}\n", s.plain_with_fallback_accuracy));
    out.push_str(&format!("weighted_vote_accuracy={}\n", s.weighted_vote_accuracy));
    out.push_str(&format!("ties={}\n", s.tie_count));
    out
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| FormatError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| FormatError::io("<stdout>", e)),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Calibrate(a) => emit(a.out.as_deref(), &format_weights(&run_calibrate(a)?)),
        Command::Fuse(a) => emit(a.out.as_deref(), &format_predictions(&run_fuse(a)?)?),
        Command::Evaluate(a) => emit(a.out.as_deref(), &format_report(&run_evaluate(a)?)),
        Command::AugmentPlan(a) => {
            let rows = run_augment(a)?;
            match &a.out {
                Some(path) => write_manifest(path, &rows),
                None => emit(None, &format_manifest(&rows)),
            }
        }
        Command::Simulate(a) => match run_simulate(a)? {
            Some(summary) => emit(None, &format_summary(&summary)),
            None => Ok(()),
        },
    }
}
