use serde::Serialize;

use super::model::ClassifierModel;
use super::{ClassifyError, LabeledDoc};
use crate::scalar::Real;

/// Confusion counts with the positive class = electricity. Ratios are `None`
/// when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
        }
    }

    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        Self::from_counts(tp, fp, fn_, tn)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub const CSV_HEADER: [&'static str; 9] = ["split", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy"];

    /// One CSV row; undefined ratios are empty cells.
    pub fn csv_row(&self, split: &str) -> Vec<String> {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        vec![
            split.to_string(),
            self.tp.to_string(),
            self.fp.to_string(),
            self.fn_.to_string(),
            self.tn.to_string(),
            fmt(self.precision),
            fmt(self.recall),
            fmt(self.f1),
            fmt(self.accuracy),
        ]
    }

    pub fn to_csv(&self, split: &str) -> Vec<u8> {
        crate::io::csv_bytes(&Self::CSV_HEADER, [self.csv_row(split)])
    }
}

pub fn predict_labels<F: Real>(model: &ClassifierModel<F>, docs: &[LabeledDoc]) -> Vec<bool> {
    docs.iter().map(|d| model.predict(&d.tokens)).collect()
}

pub fn evaluate<F: Real>(model: &ClassifierModel<F>, test: &[LabeledDoc]) -> Result<EvalReport, ClassifyError> {
    if test.is_empty() {
        return Err(ClassifyError::EmptyTestSet);
    }
    let predicted = predict_labels(model, test);
    let actual: Vec<bool> = test.iter().map(|d| d.label.is_positive()).collect();
    Ok(EvalReport::from_predictions(&predicted, &actual))
}
