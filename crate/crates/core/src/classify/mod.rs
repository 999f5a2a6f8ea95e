//! Electricity-related vs. non-electricity-related classification.
//!
//! Documents are featurized as bag-of-words or TFIDF vectors over a
//! vocabulary built from the training split, then scored by a linear model
//! through a sigmoid: `p = 1 / (1 + exp(-(w.x + b)))`. Two trainers produce
//! the weights: L2-regularized logistic regression (full-batch gradient
//! descent) and a soft-margin linear SVM (hinge-loss subgradient descent).
//! Scores produced elsewhere can be loaded through [`external`] and are
//! thresholded the same way.

mod eval;
pub mod external;
mod features;
mod model;
mod split;
mod train;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{evaluate, predict_labels, EvalReport};
pub use external::{classify_corpus, load_external_scores, read_external_scores, Scorer};
pub use features::{build_vocabulary, featurize, FeatureMode, FeatureVector, Vocabulary};
pub use model::{sigmoid, sigmoid_score, ClassifierModel, Hyperparams, TrainerKind, MODEL_FORMAT_VERSION};
pub use split::split_dataset;
pub use train::{train, train_lr, train_svm, HingeObjective, LogisticObjective, TrainedWeights};

use crate::corpus::TweetRecord;
use crate::textprep::{self, Lemmatizer};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains a single class")]
    SingleClass,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("split ratios must be nonnegative and sum to 1 (got {0:?})")]
    InvalidRatios([f64; 3]),
    #[error("unknown record id {0:?}")]
    UnknownRecord(String),
    #[error("duplicate record id {0:?}")]
    DuplicateRecord(String),
    #[error("score {score} for {id:?} outside [0, 1]")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("no score for record {0:?}")]
    MissingScore(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("model has {weights} weights for a vocabulary of {vocab}")]
    VocabularyMismatch { weights: usize, vocab: usize },
    #[error("unsupported model format version {0}")]
    UnsupportedFormat(u32),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid model file: {0}")]
    Json(#[from] serde_json::Error),
}

impl ClassifyError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

/// Positive class is electricity-related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "electricity")]
    Electricity,
    #[serde(rename = "non-electricity")]
    NonElectricity,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Electricity
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Electricity
        } else {
            Label::NonElectricity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub record_id: String,
    pub tokens: Vec<String>,
    pub label: Label,
}

pub type LabeledSet = Vec<LabeledDoc>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct LabelRow {
    record_id: String,
    label: Label,
}

/// Reads newline-delimited `{record_id, label}` rows in file order.
pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<(String, Label)>, ClassifyError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ClassifyError::Malformed { line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: LabelRow = serde_json::from_str(&line)
            .map_err(|e| ClassifyError::Malformed { line: i + 1, reason: e.to_string() })?;
        if !seen.insert(row.record_id.clone()) {
            return Err(ClassifyError::DuplicateRecord(row.record_id));
        }
        out.push((row.record_id, row.label));
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<(String, Label)>, ClassifyError> {
    let file = File::open(path).map_err(|e| ClassifyError::io(path, e))?;
    read_labels(BufReader::new(file))
}

pub fn labels_to_ndjson(labels: &[(String, Label)]) -> String {
    let mut s = String::new();
    for (id, label) in labels {
        let row = LabelRow { record_id: id.clone(), label: *label };
        s.push_str(&serde_json::to_string(&row).expect("label row serializes"));
        s.push('\n');
    }
    s
}

/// Joins labels with corpus records, preprocessing text for the classifier
/// (clean, tokenize, lemmatize; stop words kept).
pub fn labeled_set(
    labels: &[(String, Label)],
    records: &[TweetRecord],
    lemmatizer: &Lemmatizer,
) -> Result<LabeledSet, ClassifyError> {
    let by_id: BTreeMap<&str, &TweetRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    labels
        .iter()
        .map(|(id, label)| {
            let rec = by_id.get(id.as_str()).ok_or_else(|| ClassifyError::UnknownRecord(id.clone()))?;
            Ok(LabeledDoc {
                record_id: id.clone(),
                tokens: textprep::preprocess(&rec.text, lemmatizer),
                label: *label,
            })
        })
        .collect()
}
