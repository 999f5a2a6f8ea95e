//! Bridge for scores computed outside this crate.
//!
//! A score file is newline-delimited JSON, one `{"record_id": ..., "score": ...}`
//! object per line, with scores in `[0, 1]`. Blank lines are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::ClassifierModel;
use super::{ClassifyError, Label};
use crate::scalar::Real;
use crate::textprep::TokenDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRow {
    pub record_id: String,
    pub score: f64,
}

/// Parses a score file. With `known_ids`, ids outside that set are rejected.
pub fn read_external_scores<R: BufRead>(
    reader: R,
    known_ids: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, f64>, ClassifyError> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let malformed = |reason: String| ClassifyError::Malformed { line: i + 1, reason };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ScoreRow = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if !(0.0..=1.0).contains(&row.score) {
            return Err(ClassifyError::ScoreOutOfRange { id: row.record_id, score: row.score });
        }
        if known_ids.is_some_and(|k| !k.contains(&row.record_id)) {
            return Err(ClassifyError::UnknownRecord(row.record_id));
        }
        if out.insert(row.record_id.clone(), row.score).is_some() {
            return Err(ClassifyError::DuplicateRecord(row.record_id));
        }
    }
    Ok(out)
}

pub fn load_external_scores(
    path: &Path,
    known_ids: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, f64>, ClassifyError> {
    let file = File::open(path).map_err(|e| ClassifyError::io(path, e))?;
    read_external_scores(BufReader::new(file), known_ids)
}

pub fn scores_to_ndjson(scores: &BTreeMap<String, f64>) -> String {
    let mut s = String::new();
    for (id, &score) in scores {
        let row = ScoreRow { record_id: id.clone(), score };
        s.push_str(&serde_json::to_string(&row).expect("score row serializes"));
        s.push('\n');
    }
    s
}

/// Where positive/negative decisions for unlabeled documents come from.
pub enum Scorer<'a, F> {
    Model(&'a ClassifierModel<F>),
    External { scores: &'a BTreeMap<String, f64>, threshold: f64 },
}

impl<F: Real> Scorer<'_, F> {
    pub fn is_positive(&self, doc: &TokenDoc) -> Result<bool, ClassifyError> {
        match self {
            Scorer::Model(m) => Ok(m.predict(&doc.tokens)),
            Scorer::External { scores, threshold } => scores
                .get(&doc.record_id)
                .map(|&s| s >= *threshold)
                .ok_or_else(|| ClassifyError::MissingScore(doc.record_id.clone())),
        }
    }
}

/// Ids of electricity-related documents, in input order. Documents with a
/// manual label keep it; the rest are decided by `scorer`.
pub fn classify_corpus<F: Real>(
    scorer: &Scorer<'_, F>,
    labels: &BTreeMap<String, Label>,
    docs: &[TokenDoc],
) -> Result<Vec<String>, ClassifyError> {
    let mut out = Vec::new();
    for doc in docs {
        let positive = match labels.get(&doc.record_id) {
            Some(l) => l.is_positive(),
            None => scorer.is_positive(doc)?,
        };
        if positive {
            out.push(doc.record_id.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str) -> TokenDoc {
        TokenDoc { record_id: id.into(), tokens: vec![], phase: None, region: None }
    }

    #[test]
    fn parses_and_validates() {
        let text = "{\"record_id\":\"a\",\"score\":0.9}\n\n{\"record_id\":\"b\",\"score\":0}\n";
        let s = read_external_scores(text.as_bytes(), None).unwrap();
        assert_eq!(s.get("a"), Some(&0.9));
        assert_eq!(s.get("b"), Some(&0.0));
        assert_eq!(read_external_scores(scores_to_ndjson(&s).as_bytes(), None).unwrap(), s);

        let bad = |t: &str| read_external_scores(t.as_bytes(), None).unwrap_err();
        assert!(matches!(bad(r#"{"record_id":"a","score":1.5}"#), ClassifyError::ScoreOutOfRange { .. }));
        assert!(matches!(bad(r#"{"record_id":"a","score":-0.1}"#), ClassifyError::ScoreOutOfRange { .. }));
        assert!(matches!(bad(r#"{"record_id":"a"}"#), ClassifyError::Malformed { line: 1, .. }));
        assert!(matches!(bad("not json"), ClassifyError::Malformed { line: 1, .. }));
        let dup = "{\"record_id\":\"a\",\"score\":0.1}\n{\"record_id\":\"a\",\"score\":0.2}\n";
        assert!(matches!(bad(dup), ClassifyError::DuplicateRecord(_)));

        let known: BTreeSet<String> = ["a".to_string()].into();
        assert!(matches!(
            read_external_scores(r#"{"record_id":"z","score":0.5}"#.as_bytes(), Some(&known)),
            Err(ClassifyError::UnknownRecord(_))
        ));
    }

    #[test]
    fn labels_override_scores_and_missing_is_an_error() {
        let scores: BTreeMap<String, f64> = [("a".into(), 0.7), ("b".into(), 0.2), ("c".into(), 0.5)].into();
        let labels: BTreeMap<String, Label> = [("b".to_string(), Label::Electricity)].into();
        let scorer: Scorer<'_, f64> = Scorer::External { scores: &scores, threshold: 0.5 };
        let docs = [doc("a"), doc("b"), doc("c")];
        assert_eq!(classify_corpus(&scorer, &labels, &docs).unwrap(), ["a", "b", "c"]);
        assert!(matches!(
            classify_corpus(&scorer, &labels, &[doc("q")]),
            Err(ClassifyError::MissingScore(_))
        ));
    }
}
