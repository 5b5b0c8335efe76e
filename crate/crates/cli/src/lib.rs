//! Argument parsing and subcommand execution for the `dapotion` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dapotion_core::descriptor::{read_descriptor, write_descriptor};
use dapotion_core::encoder::{encode_many, EncoderConfig, Scheme};
use dapotion_core::fsutil::{create_dir_all, write_atomic};
use dapotion_core::fusion::{clip_id, evaluate, fuse_scores, labels_from_manifest, Evaluation, ScoreSet};
use dapotion_core::manifest::{Manifest, Record};
use dapotion_core::pose_io::{prepare_for_grid, read_pose_file};
use dapotion_core::render::render_slice;
use dapotion_core::synth::{generate_dataset, SynthClass, SynthSpec};
use dapotion_nn::checkpoint::{read_checkpoint, write_checkpoint};
use dapotion_nn::train::{predict, train, Example};
use dapotion_nn::{AugmentConfig, ChannelLayout, ClassifierConfig, Model};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "dapotion", version, about = "Depth-aware pose motion descriptors", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset with train/test manifests.
    SynthGen(SynthArgs),
    /// Encode every clip of a manifest into a descriptor file.
    Encode(EncodeArgs),
    /// Train a classifier on a descriptor manifest.
    Train(TrainArgs),
    /// Score a descriptor manifest with a trained checkpoint.
    Predict(PredictArgs),
    /// Report accuracy and the confusion matrix of scores or a checkpoint.
    Eval(EvalArgs),
    /// Average score files.
    Fuse(FuseArgs),
    /// Write depth slices of one descriptor as PGM/PPM images.
    RenderSlices(RenderArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated class names; all classes by default.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<SynthClass>,
    #[arg(long, default_value_t = 50)]
    per_class: usize,
    /// Fraction of each class assigned to the training manifest.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 24)]
    frames: usize,
    #[arg(long, default_value_t = 4)]
    joints: usize,
    #[arg(long, default_value_t = 60.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 2.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Manifest of pose files.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for descriptors and their manifest.
    #[arg(long)]
    out: PathBuf,
    /// Side of the cubic voxel grid.
    #[arg(long, default_value_t = 32)]
    grid: usize,
    /// Heatmap standard deviation in voxels; 4 * grid / 64 by default.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    channels: usize,
    #[arg(long, default_value = "nui")]
    scheme: Scheme,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Descriptor manifest (as written by `encode`).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    val_manifest: Option<PathBuf>,
    /// Checkpoint path; the history is written next to it as CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.97)]
    lr_decay: f64,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Filters per block, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    filters: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    dropout: f64,
    #[arg(long)]
    no_augment: bool,
    #[arg(long, default_value_t = 15.0)]
    max_rotation: f64,
    /// Voxels; 4 * grid / 64 by default.
    #[arg(long)]
    max_translation: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    flip_prob: f64,
    /// Joint pairs swapped on a y flip, e.g. `0:1,2:3`.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    mirror_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Score file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Labels come from this manifest; with `--checkpoint` it also lists the
    /// descriptors to score.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    scores: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Optional JSON report with the confusion matrix.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long, required = true, num_args = 1..)]
    scores: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Descriptor file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    depth_indices: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    joint: usize,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let a = a.parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

/// A fully resolved invocation.
#[derive(Clone, Debug, PartialEq)]
pub enum RunConfig {
    SynthGen {
        out: PathBuf,
        templates: Vec<SynthSpec>,
        per_class: usize,
        split: f64,
        seed: u64,
    },
    Encode {
        manifest: PathBuf,
        out: PathBuf,
        encoder: EncoderConfig,
        workers: usize,
    },
    Train {
        manifest: PathBuf,
        val_manifest: Option<PathBuf>,
        out: PathBuf,
        /// `input_channels` and `num_classes` are filled in from the data.
        classifier: ClassifierConfig,
        augment: Option<AugmentOverrides>,
        mirror_pairs: Vec<(usize, usize)>,
    },
    Predict {
        checkpoint: PathBuf,
        manifest: PathBuf,
        out: PathBuf,
    },
    Eval {
        manifest: PathBuf,
        source: ScoreSource,
        out: Option<PathBuf>,
    },
    Fuse {
        scores: Vec<PathBuf>,
        weights: Option<Vec<f64>>,
        out: PathBuf,
    },
    RenderSlices {
        input: PathBuf,
        out: PathBuf,
        depth_indices: Vec<usize>,
        joint: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentOverrides {
    pub max_rotation_deg: f64,
    pub max_translation: Option<f64>,
    pub flip_prob: f64,
}

impl AugmentOverrides {
    fn resolve(&self, grid: usize) -> AugmentConfig {
        let base = AugmentConfig::for_grid(grid);
        AugmentConfig {
            max_rotation_deg: self.max_rotation_deg,
            max_translation: self.max_translation.unwrap_or(base.max_translation),
            flip_prob_y: self.flip_prob,
            flip_prob_z: self.flip_prob,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScoreSource {
    Scores(PathBuf),
    Checkpoint(PathBuf),
}

#[derive(Debug)]
pub enum ParseError {
    /// Unknown flags, missing values, help and version requests.
    Clap(clap::Error),
    Invalid(String),
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseError::Clap(e) => write!(f, "{e}"),
            ParseError::Invalid(m) => write!(f, "invalid arguments: {m}"),
        }
    }
}

impl std::error::Error for ParseError {}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseError::Clap)?;
    let invalid = |e: &dyn std::fmt::Display| ParseError::Invalid(e.to_string());
    let config = match cli.command {
        Command::SynthGen(a) => {
            let classes = if a.classes.is_empty() { SynthClass::ALL.to_vec() } else { a.classes };
            let templates: Vec<SynthSpec> = classes
                .into_iter()
                .map(|class| SynthSpec {
                    class,
                    frames: a.frames,
                    joints: a.joints,
                    amplitude: a.amplitude,
                    noise_std: a.noise,
                    seed: 0,
                })
                .collect();
            for t in &templates {
                t.validate().map_err(|e| invalid(&e))?;
            }
            if a.per_class < 2 || !(a.split > 0.0 && a.split < 1.0) {
                return Err(ParseError::Invalid("need --per-class >= 2 and --split in (0, 1)".into()));
            }
            RunConfig::SynthGen {
                out: a.out,
                templates,
                per_class: a.per_class,
                split: a.split,
                seed: a.seed,
            }
        }
        Command::Encode(a) => {
            let mut encoder = EncoderConfig::cube(a.grid);
            encoder.channels = a.channels;
            encoder.scheme = a.scheme;
            if let Some(s) = a.sigma {
                encoder.sigma = s;
            }
            encoder.validate().map_err(|e| invalid(&e))?;
            let workers = a
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if workers == 0 {
                return Err(ParseError::Invalid("--workers must be >= 1".into()));
            }
            RunConfig::Encode {
                manifest: a.manifest,
                out: a.out,
                encoder,
                workers,
            }
        }
        Command::Train(a) => {
            let classifier = ClassifierConfig {
                filters: a.filters,
                dropout_p: a.dropout,
                epochs: a.epochs,
                batch_size: a.batch,
                lr_init: a.lr,
                lr_decay: a.lr_decay,
                seed: a.seed,
                ..ClassifierConfig::new(1, 2)
            };
            classifier.validate().map_err(|e| invalid(&e))?;
            if classifier.epochs == 0 {
                return Err(ParseError::Invalid("--epochs must be >= 1".into()));
            }
            let augment = (!a.no_augment).then_some(AugmentOverrides {
                max_rotation_deg: a.max_rotation,
                max_translation: a.max_translation,
                flip_prob: a.flip_prob,
            });
            if let Some(o) = &augment {
                o.resolve(64).validate().map_err(|e| invalid(&e))?;
            }
            RunConfig::Train {
                manifest: a.manifest,
                val_manifest: a.val_manifest,
                out: a.out,
                classifier,
                augment,
                mirror_pairs: a.mirror_pairs,
            }
        }
        Command::Predict(a) => RunConfig::Predict {
            checkpoint: a.checkpoint,
            manifest: a.manifest,
            out: a.out,
        },
        Command::Eval(a) => RunConfig::Eval {
            manifest: a.manifest,
            source: match (a.scores, a.checkpoint) {
                (Some(s), _) => ScoreSource::Scores(s),
                (None, Some(c)) => ScoreSource::Checkpoint(c),
                (None, None) => unreachable!("clap requires one of them"),
            },
            out: a.out,
        },
        Command::Fuse(a) => RunConfig::Fuse {
            weights: if a.weights.is_empty() { None } else { Some(a.weights) },
            scores: a.scores,
            out: a.out,
        },
        Command::RenderSlices(a) => RunConfig::RenderSlices {
            input: a.input,
            out: a.out,
            depth_indices: a.depth_indices,
            joint: a.joint,
        },
    };
    Ok(config)
}

/// Executes a subcommand and returns its summary record.
pub fn run(config: &RunConfig) -> Result<Value> {
    let start = Instant::now();
    let mut summary = match config {
        RunConfig::SynthGen {
            out,
            templates,
            per_class,
            split,
            seed,
        } => {
            let ds = generate_dataset(templates, *per_class, *split, *seed, out)?;
            json!({
                "command": "synth-gen",
                "records": ds.train.len() + ds.test.len(),
                "train": ds.train.len(),
                "test": ds.test.len(),
            })
        }
        RunConfig::Encode {
            manifest,
            out,
            encoder,
            workers,
        } => run_encode(manifest, out, encoder, *workers)?,
        RunConfig::Train {
            manifest,
            val_manifest,
            out,
            classifier,
            augment,
            mirror_pairs,
        } => run_train(manifest, val_manifest.as_deref(), out, classifier, augment.as_ref(), mirror_pairs)?,
        RunConfig::Predict { checkpoint, manifest, out } => {
            let scores = score_manifest(checkpoint, manifest)?;
            scores.write(out)?;
            json!({"command": "predict", "records": scores.scores.len()})
        }
        RunConfig::Eval { manifest, source, out } => {
            let m = Manifest::read(manifest)?;
            let scores = match source {
                ScoreSource::Scores(p) => ScoreSet::read(p)?,
                ScoreSource::Checkpoint(c) => score_manifest(c, manifest)?,
            };
            let ev = evaluate(&scores, &labels_from_manifest(&m))?;
            if let Some(path) = out {
                let report = json!({
                    "class_names": scores.class_names,
                    "accuracy": ev.accuracy,
                    "confusion": ev.confusion,
                });
                write_atomic(path, format!("{report}\n").as_bytes())?;
            }
            eval_summary(&ev)
        }
        RunConfig::Fuse { scores, weights, out } => {
            let sets = scores.iter().map(|p| ScoreSet::read(p)).collect::<dapotion_core::Result<Vec<_>>>()?;
            let fused = fuse_scores(&sets, weights.as_deref())?;
            fused.write(out)?;
            json!({"command": "fuse", "records": fused.scores.len(), "inputs": sets.len()})
        }
        RunConfig::RenderSlices {
            input,
            out,
            depth_indices,
            joint,
        } => {
            let d = read_descriptor(input)?;
            create_dir_all(out)?;
            let stem = clip_id(input);
            for &z in depth_indices {
                let img = render_slice(&d, *joint, z).with_context(|| format!("depth index {z}"))?;
                let path = out.join(format!("{stem}_j{joint}_z{z:03}.{}", img.extension()));
                write_atomic(&path, &img.to_bytes())?;
            }
            json!({"command": "render-slices", "records": depth_indices.len()})
        }
    };
    summary["elapsed_s"] = json!(start.elapsed().as_secs_f64());
    Ok(summary)
}

fn eval_summary(ev: &Evaluation) -> Value {
    json!({
        "command": "eval",
        "records": ev.total,
        "correct": ev.correct,
        "accuracy": ev.accuracy,
    })
}

fn run_encode(manifest: &Path, out: &Path, encoder: &EncoderConfig, workers: usize) -> Result<Value> {
    let m = Manifest::read(manifest)?;
    let mut clips = Vec::with_capacity(m.len());
    for r in &m.records {
        let poses = read_pose_file(&r.path)?;
        let grid = prepare_for_grid(poses, encoder.dims).with_context(|| r.path.display().to_string())?;
        clips.push(grid);
    }
    create_dir_all(out)?;
    let mut written = Manifest::default();
    for (r, d) in m.records.iter().zip(encode_many(&clips, encoder, workers)?) {
        let mut d = d.with_context(|| r.path.display().to_string())?;
        let id = clip_id(&r.path);
        d.source_id = id.clone();
        let path = out.join(format!("{id}.dapt"));
        write_descriptor(&path, &d)?;
        written.records.push(Record {
            path,
            label: r.label.clone(),
        });
    }
    write_atomic(&out.join("manifest.tsv"), written.to_text(out).as_bytes())?;
    Ok(json!({"command": "encode", "records": written.len()}))
}

/// Descriptors of a manifest as training examples, with the channel layout
/// of the first one.
fn load_examples(m: &Manifest, class_names: &[String]) -> Result<(Vec<Example>, Option<ChannelLayout>)> {
    let mut examples = Vec::with_capacity(m.len());
    let mut layout = None;
    for r in &m.records {
        let d = read_descriptor(&r.path)?;
        let label = class_names
            .iter()
            .position(|c| *c == r.label)
            .ok_or_else(|| anyhow!("{}: label {:?} is not a training class", r.path.display(), r.label))?;
        layout.get_or_insert_with(|| ChannelLayout::of(&d));
        examples.push(Example { volume: d.volume, label });
    }
    Ok((examples, layout))
}

fn run_train(
    manifest: &Path,
    val_manifest: Option<&Path>,
    out: &Path,
    classifier: &ClassifierConfig,
    augment: Option<&AugmentOverrides>,
    mirror_pairs: &[(usize, usize)],
) -> Result<Value> {
    let m = Manifest::read(manifest)?;
    let class_names = m.class_names();
    let (train_set, layout) = load_examples(&m, &class_names)?;
    let layout = layout
        .ok_or_else(|| anyhow!("{}: empty manifest", manifest.display()))?
        .with_mirror_pairs(mirror_pairs.to_vec());
    let val = match val_manifest {
        Some(p) => load_examples(&Manifest::read(p)?, &class_names)?.0,
        None => Vec::new(),
    };
    let config = ClassifierConfig {
        input_channels: train_set[0].volume.channels(),
        num_classes: class_names.len(),
        ..classifier.clone()
    };
    let aug = augment.map(|a| a.resolve(train_set[0].volume.dims()[0]));
    let (model, history) = train(&train_set, &val, &layout, &config, aug.as_ref())?;
    write_checkpoint(out, &model, &class_names)?;
    write_atomic(&out.with_extension("csv"), history.to_csv().as_bytes())?;
    let last = history.epochs.last().expect("epochs >= 1");
    let mut summary = json!({
        "command": "train",
        "records": train_set.len(),
        "epochs": history.len(),
        "train_loss": last.train_loss,
    });
    if !val.is_empty() {
        summary["accuracy"] = json!(last.val_accuracy);
    }
    Ok(summary)
}

fn score_manifest(checkpoint: &Path, manifest: &Path) -> Result<ScoreSet> {
    let (model, class_names): (Model<f32>, Vec<String>) = read_checkpoint(checkpoint)?;
    let m = Manifest::read(manifest)?;
    let mut scores = ScoreSet::new(clip_id(checkpoint), class_names);
    for r in &m.records {
        let d = read_descriptor(&r.path)?;
        let v = predict(&model, &d.volume).with_context(|| r.path.display().to_string())?;
        scores.insert(clip_id(&r.path), v)?;
    }
    if scores.scores.is_empty() {
        bail!("{}: empty manifest", manifest.display());
    }
    Ok(scores)
}
