//! Late fusion of per-class probability vectors and accuracy evaluation.
//!
//! Score files are tab-separated. The header line is `clip_id` followed by
//! the class names; every record is a clip id followed by one probability per
//! class in header order.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::manifest::Manifest;

/// Per-class probabilities of one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Scores(format!("not a probability vector: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Scores(format!("probabilities sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSet {
    pub model: String,
    pub class_names: Vec<String>,
    pub scores: BTreeMap<String, ScoreVector>,
}

impl ScoreSet {
    pub fn new(model: impl Into<String>, class_names: Vec<String>) -> Self {
        Self {
            model: model.into(),
            class_names,
            scores: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, clip: impl Into<String>, v: ScoreVector) -> Result<()> {
        if v.0.len() != self.class_names.len() {
            return Err(Error::Scores(format!(
                "{} probabilities for {} classes",
                v.0.len(),
                self.class_names.len()
            )));
        }
        self.scores.insert(clip.into(), v);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("clip_id");
        for c in &self.class_names {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (clip, v) in &self.scores {
            out.push_str(clip);
            for p in &v.0 {
                out.push('\t');
                out.push_str(&p.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(model: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Scores("empty score file".into()))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("clip_id") {
            return Err(Error::Scores("header must start with clip_id".into()));
        }
        let class_names: Vec<String> = fields.map(str::to_string).collect();
        if class_names.is_empty() {
            return Err(Error::Scores("header declares no classes".into()));
        }
        let mut set = Self::new(model, class_names);
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let clip = fields.next().unwrap_or_default();
            let probs = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Scores(format!("line {}: {e}", n + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            set.insert(clip, ScoreVector::new(probs)?)?;
        }
        Ok(set)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(model, &text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

/// Sum that does not depend on the order of its terms.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Weighted average of score sets over the clips present in every set.
/// `None` weights every set equally; weights are renormalized to sum to one.
pub fn fuse_scores(sets: &[ScoreSet], weights: Option<&[f64]>) -> Result<ScoreSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Scores("nothing to fuse".into()))?;
    if let Some(bad) = sets.iter().find(|s| s.class_names != first.class_names) {
        return Err(Error::Scores(format!(
            "class list of {:?} differs from {:?}",
            bad.model, first.model
        )));
    }
    let weights: Vec<f64> = match weights {
        Some(w) if w.len() != sets.len() => {
            return Err(Error::Scores(format!("{} weights for {} sets", w.len(), sets.len())))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; sets.len()],
    };
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Scores(format!("weights must be nonnegative: {weights:?}")));
    }
    let total = canonical_sum(weights.clone());
    if total <= 0.0 {
        return Err(Error::Scores("all weights are zero".into()));
    }

    let mut fused = ScoreSet::new("fused", first.class_names.clone());
    for clip in first.scores.keys() {
        let vectors: Option<Vec<&ScoreVector>> = sets.iter().map(|s| s.scores.get(clip)).collect();
        let Some(vectors) = vectors else { continue };
        let probs = (0..first.class_names.len())
            .map(|c| {
                let terms = vectors.iter().zip(&weights).map(|(v, w)| w * v.0[c]).collect();
                canonical_sum(terms) / total
            })
            .collect();
        fused.scores.insert(clip.clone(), ScoreVector(probs));
    }
    if fused.scores.is_empty() {
        return Err(Error::Scores("no clip is scored by every set".into()));
    }
    Ok(fused)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// Rows are true classes, columns predictions; rows sum to one (or zero
    /// for classes without clips).
    pub confusion: Vec<Vec<f64>>,
}

/// Accuracy and row-normalized confusion matrix of argmax predictions.
/// `labels` maps clip ids to class names.
pub fn evaluate(scores: &ScoreSet, labels: &BTreeMap<String, String>) -> Result<Evaluation> {
    let k = scores.class_names.len();
    let mut counts = vec![vec![0usize; k]; k];
    let mut correct = 0;
    for (clip, v) in &scores.scores {
        let label = labels
            .get(clip)
            .ok_or_else(|| Error::Scores(format!("no label for clip {clip:?}")))?;
        let truth = scores
            .class_names
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::Scores(format!("label {label:?} is not a scored class")))?;
        let pred = v.argmax();
        counts[truth][pred] += 1;
        correct += usize::from(pred == truth);
    }
    let total = scores.scores.len();
    if total == 0 {
        return Err(Error::Scores("no scored clips".into()));
    }
    let confusion = counts
        .iter()
        .map(|row| {
            let n: usize = row.iter().sum();
            row.iter()
                .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                .collect()
        })
        .collect();
    Ok(Evaluation {
        accuracy: correct as f64 / total as f64,
        correct,
        total,
        confusion,
    })
}

/// Clip id of a manifest record: its file stem.
pub fn clip_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn labels_from_manifest(m: &Manifest) -> BTreeMap<String, String> {
    m.records
        .iter()
        .map(|r| (clip_id(&r.path), r.label.clone()))
        .collect()
}
