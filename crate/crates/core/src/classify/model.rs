use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureMode, FeatureVector, Vocabulary};
use super::ClassifyError;
use crate::scalar::Real;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerKind {
    Lr,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real", deny_unknown_fields)]
pub struct Hyperparams<F> {
    pub learning_rate: F,
    pub l2: F,
    pub epochs: usize,
    /// Full-batch training stops once the gradient norm falls below this.
    pub tolerance: F,
    pub seed: u64,
}

impl<F: Real> Hyperparams<F> {
    pub fn lr_default() -> Self {
        Self { learning_rate: F::lit(0.1), l2: F::lit(1e-4), epochs: 500, tolerance: F::lit(1e-8), seed: 42 }
    }

    pub fn svm_default() -> Self {
        Self { learning_rate: F::lit(0.01), ..Self::lr_default() }
    }

    pub fn default_for(kind: TrainerKind) -> Self {
        match kind {
            TrainerKind::Lr => Self::lr_default(),
            TrainerKind::Svm => Self::svm_default(),
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<F: Real>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// A trained linear classifier with the vocabulary it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ClassifierModel<F> {
    pub format_version: u32,
    pub trainer: TrainerKind,
    pub mode: FeatureMode,
    pub hyper: Hyperparams<F>,
    pub threshold: F,
    pub vocabulary: Vocabulary,
    pub weights: Vec<F>,
    pub bias: F,
}

impl<F: Real> ClassifierModel<F> {
    pub fn features(&self, tokens: &[String]) -> FeatureVector<F> {
        featurize(tokens, &self.vocabulary, self.mode)
    }

    pub fn decision(&self, x: &FeatureVector<F>) -> F {
        x.dot(&self.weights) + self.bias
    }

    pub fn score_tokens(&self, tokens: &[String]) -> F {
        sigmoid_score(self, &self.features(tokens))
    }

    pub fn predict(&self, tokens: &[String]) -> bool {
        self.score_tokens(tokens) >= self.threshold
    }

    fn check(&self) -> Result<(), ClassifyError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::UnsupportedFormat(self.format_version));
        }
        if self.weights.len() != self.vocabulary.len() {
            return Err(ClassifyError::VocabularyMismatch { weights: self.weights.len(), vocab: self.vocabulary.len() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        crate::io::write_atomic(path, self.to_json().as_bytes()).map_err(|e| ClassifyError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let text = fs::read_to_string(path).map_err(|e| ClassifyError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `1 / (1 + exp(-(w.x + b)))`.
pub fn sigmoid_score<F: Real>(model: &ClassifierModel<F>, x: &FeatureVector<F>) -> F {
    sigmoid(model.decision(x))
}
