//! Command-line entry point. Every command writes into `--out` and stamps the
//! directory with a `run.json` echoing the resolved configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use posgrid_core::coco::{balanced_subset, build_coco_set, split_train_val};
use posgrid_core::probe::{layer_sweep, ProbeConfig};
use posgrid_core::retrieval::build_retrieval_candidates;
use posgrid_core::score::score;
use posgrid_core::synth::{
    add_distractors, build_eval_set, build_train_set, scale_subsets, DistractorOptions,
    DEFAULT_LADDER,
};
use posgrid_core::{PositionLabel, GENERATOR_VERSION};
use serde::Serialize;

use crate::coco_json::ingest_annotations;
use crate::dataset_io::{read_dataset, write_dataset, Images};
use crate::error::{PosgridError, Result};
use crate::fsutil;
use crate::hsd_io::read_dumps;
use crate::predictions::{read_predictions, stub_predictions, write_records, Mode, Stub};
use crate::report::emit_reports;

/// Relative `--out` paths are resolved against this directory when set.
pub const OUT_ROOT_ENV: &str = "POSGRID_OUT_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "posgrid",
    version,
    about = "Absolute-position VQA datasets, scoring and probing"
)]
pub struct Cli {
    /// Worker threads for rendering and copying (0 = all cores). Output does
    /// not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub group: Group,
}

#[derive(Debug, Subcommand)]
pub enum Group {
    /// Generate datasets.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Augment an existing synthetic dataset.
    #[command(subcommand)]
    Augment(AugmentCmd),
    /// Select subsets of a dataset.
    #[command(subcommand)]
    Subset(SubsetCmd),
    /// Score predictions and prepare model inputs.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Linear probing of hidden-state dumps.
    #[command(subcommand)]
    Probe(ProbeCmd),
}

#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum GenCmd {
    /// Exhaustive evaluation set: 6 colors × 4 shapes × 2 sizes × 81 cells.
    SynthEval(SynthArgs),
    /// Training set (colored plusses and white shapes) split 80/20 per cell
    /// into `train/` and `val/`.
    SynthTrain(SynthArgs),
    /// Single-instance questions from a COCO instances file.
    Coco(CocoArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
    /// Skip PNG rendering.
    #[arg(long)]
    pub no_images: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CocoSplit {
    Train,
    Val,
}

#[derive(Debug, Args, Serialize)]
pub struct CocoArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// `train` writes an image-disjoint `train/` + `val/` split; `val` writes
    /// a single evaluation dataset.
    #[arg(long, value_enum, default_value_t = CocoSplit::Train)]
    pub split: CocoSplit,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum AugmentCmd {
    /// Add k distractors per image in distinct free cells.
    Distractors(DistractorArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DistractorArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Accept k outside {1, 3, 5}.
    #[arg(long)]
    pub allow_any_k: bool,
    /// Allow plus-shaped distractors next to white targets.
    #[arg(long)]
    pub allow_plus: bool,
    #[arg(long)]
    pub no_images: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum SubsetCmd {
    /// Region-balanced subset with round-robin category spread.
    Balanced(BalancedArgs),
    /// Nested cell-stratified subsets, one directory per fraction.
    Scale(ScaleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BalancedArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 1296)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScaleArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Percentages, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LADDER.to_vec())]
    pub fractions: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Score a predictions file against a dataset.
    Score(ScoreArgs),
    /// Write the nine retrieval texts per sample for dual-encoder runners.
    Candidates(CandidateArgs),
    /// Write predictions from a reference predictor.
    Stub(StubArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Predictions carry embeddings; pick the candidate with the highest
    /// cosine similarity.
    #[arg(long)]
    pub retrieval: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CandidateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StubKind {
    Gold,
    Constant,
    Random,
    RetrievalGold,
}

#[derive(Debug, Args, Serialize)]
pub struct StubArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub kind: StubKind,
    /// Answer for `--kind constant`, e.g. "top center".
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum ProbeCmd {
    /// Cross-validated linear SVM accuracy for every layer.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub dumps: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a T,
}

fn resolve_out(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) if out.is_relative() => PathBuf::from(root).join(out),
        _ => out.to_path_buf(),
    }
}

fn stamp<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<()> {
    fsutil::create_dir_all(out)?;
    fsutil::write_json(
        &out.join("run.json"),
        &RunRecord {
            tool: "posgrid",
            version: GENERATOR_VERSION,
            command,
            config,
        },
    )
}

fn images(no_images: bool) -> Images {
    if no_images {
        Images::None
    } else {
        Images::Render
    }
}

fn run_probe(args: &SweepArgs, out: &Path) -> Result<()> {
    let config = ProbeConfig {
        folds: args.folds,
        c: args.c,
        epochs: args.epochs,
        seed: args.out.seed,
        repeats: args.repeats,
    };
    let dumps = read_dumps(&args.dumps)?;
    let scores = layer_sweep(&dumps, &config)?;
    fsutil::create_dir_all(out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layer", "mean", "std"])
        .map_err(|e| PosgridError::Input(e.to_string()))?;
    for s in &scores {
        w.write_record([
            s.layer.to_string(),
            format!("{:.6}", s.mean),
            format!("{:.6}", s.std),
        ])
        .map_err(|e| PosgridError::Input(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PosgridError::Input(e.to_string()))?;
    fsutil::write_atomic(&out.join("probe.csv"), &bytes)?;
    fsutil::write_json(&out.join("probe.json"), &scores)
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.group {
        Group::Gen(GenCmd::SynthEval(a)) => {
            let out = resolve_out(&a.out.out);
            stamp(&out, "gen synth-eval", a)?;
            write_dataset(&out, &build_eval_set(a.out.seed), &images(a.no_images))
        }
        Group::Gen(GenCmd::SynthTrain(a)) => {
            let out = resolve_out(&a.out.out);
            stamp(&out, "gen synth-train", a)?;
            let (train, val) = build_train_set(a.out.seed);
            write_dataset(&out.join("train"), &train, &images(a.no_images))?;
            write_dataset(&out.join("val"), &val, &images(a.no_images))
        }
        Group::Gen(GenCmd::Coco(a)) => {
            let out = resolve_out(&a.out.out);
            if !(0.0..1.0).contains(&a.val_fraction) {
                return Err(PosgridError::Input(format!(
                    "--val-fraction {} outside [0, 1)",
                    a.val_fraction
                )));
            }
            let idx = ingest_annotations(&a.annotations)?;
            stamp(&out, "gen coco", a)?;
            fsutil::write_json(&out.join("ingest.json"), &idx.stats)?;
            match a.split {
                CocoSplit::Train => {
                    let all = build_coco_set(&idx, "train", a.out.seed);
                    let (train, val) = split_train_val(&all, a.val_fraction, a.out.seed);
                    write_dataset(&out.join("train"), &train, &Images::None)?;
                    write_dataset(&out.join("val"), &val, &Images::None)
                }
                CocoSplit::Val => write_dataset(
                    &out,
                    &build_coco_set(&idx, "val", a.out.seed),
                    &Images::None,
                ),
            }
        }
        Group::Augment(AugmentCmd::Distractors(a)) => {
            let out = resolve_out(&a.out.out);
            let d = read_dataset(&a.dataset)?;
            let opts = DistractorOptions {
                allow_any_k: a.allow_any_k,
                allow_plus: a.allow_plus,
            };
            let aug = add_distractors(&d, a.k, a.out.seed, opts)?;
            stamp(&out, "augment distractors", a)?;
            write_dataset(&out, &aug, &images(a.no_images))
        }
        Group::Subset(SubsetCmd::Balanced(a)) => {
            let out = resolve_out(&a.out.out);
            let d = read_dataset(&a.dataset)?;
            let sub = balanced_subset(&d, a.n, a.out.seed)?;
            stamp(&out, "subset balanced", a)?;
            write_dataset(&out, &sub, &Images::CopyFrom(a.dataset.clone()))
        }
        Group::Subset(SubsetCmd::Scale(a)) => {
            let out = resolve_out(&a.out.out);
            let d = read_dataset(&a.dataset)?;
            let subsets = scale_subsets(&d, &a.fractions, a.out.seed)?;
            stamp(&out, "subset scale", a)?;
            for (f, sub) in a.fractions.iter().zip(&subsets) {
                write_dataset(
                    &out.join(format!("pct_{f}")),
                    sub,
                    &Images::CopyFrom(a.dataset.clone()),
                )?;
            }
            Ok(())
        }
        Group::Eval(EvalCmd::Score(a)) => {
            let out = resolve_out(&a.out);
            let d = read_dataset(&a.dataset)?;
            let mode = if a.retrieval {
                Mode::Retrieval
            } else {
                Mode::Text
            };
            let preds = read_predictions(&a.predictions, mode)?;
            let report = score(&d, &preds)?;
            stamp(&out, "eval score", a)?;
            emit_reports(&report, &out)
        }
        Group::Eval(EvalCmd::Candidates(a)) => {
            #[derive(Serialize)]
            struct Line<'a> {
                sample_id: &'a str,
                candidates: [String; 9],
            }
            let out = resolve_out(&a.out);
            let d = read_dataset(&a.dataset)?;
            stamp(&out, "eval candidates", a)?;
            let mut text = String::new();
            for s in &d.samples {
                let line = Line {
                    sample_id: &s.id,
                    candidates: build_retrieval_candidates(s),
                };
                text.push_str(
                    &serde_json::to_string(&line)
                        .map_err(|e| PosgridError::Input(e.to_string()))?,
                );
                text.push('\n');
            }
            fsutil::write_atomic(&out.join("candidates.jsonl"), text.as_bytes())
        }
        Group::Eval(EvalCmd::Stub(a)) => {
            let out = resolve_out(&a.out.out);
            let stub = match a.kind {
                StubKind::Gold => Stub::Gold,
                StubKind::Random => Stub::Random,
                StubKind::RetrievalGold => Stub::RetrievalGold,
                StubKind::Constant => {
                    let raw = a.label.as_deref().ok_or_else(|| {
                        PosgridError::Input("--kind constant needs --label".into())
                    })?;
                    let label: PositionLabel = raw
                        .parse()
                        .map_err(|_| PosgridError::Input(format!("unknown label {raw:?}")))?;
                    Stub::Constant(label)
                }
            };
            let d = read_dataset(&a.dataset)?;
            stamp(&out, "eval stub", a)?;
            write_records(
                &out.join("predictions.jsonl"),
                &stub_predictions(&d, stub, a.out.seed),
            )
        }
        Group::Probe(ProbeCmd::Sweep(a)) => {
            let out = resolve_out(&a.out.out);
            stamp(&out, "probe sweep", a)?;
            run_probe(a, &out)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 on success, 1 on input or usage errors, 2 on IO errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
