use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Bow,
    Tfidf,
}

/// Training-split vocabulary: terms in lexicographic order with their
/// document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary", into = "RawVocabulary")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawVocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = String;

    fn try_from(raw: RawVocabulary) -> Result<Self, String> {
        if raw.terms.len() != raw.df.len() {
            return Err("terms and df lengths differ".into());
        }
        if raw.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err("terms must be strictly increasing".into());
        }
        if raw.df.iter().any(|&d| d == 0 || d > raw.n_docs) {
            return Err("document frequencies must lie in [1, n_docs]".into());
        }
        let index = raw.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self { terms: raw.terms, df: raw.df, n_docs: raw.n_docs, index })
    }
}

impl From<Vocabulary> for RawVocabulary {
    fn from(v: Vocabulary) -> Self {
        Self { terms: v.terms, df: v.df, n_docs: v.n_docs }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.df[i])
    }

    pub(crate) fn df_at(&self, i: usize) -> usize {
        self.df[i]
    }
}

/// Terms with document frequency at least `min_df`.
pub fn build_vocabulary<D: AsRef<[String]>>(docs: &[D], min_df: usize) -> Result<Vocabulary, ClassifyError> {
    if docs.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let (terms, dfs): (Vec<String>, Vec<usize>) =
        df.into_iter().filter(|&(_, d)| d >= min_df.max(1)).map(|(t, d)| (t.to_owned(), d)).unzip();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary { terms, df: dfs, n_docs: docs.len(), index })
}

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<F> {
    pub entries: Vec<(usize, F)>,
    pub mode: FeatureMode,
}

impl<F: Real> FeatureVector<F> {
    pub fn dot(&self, weights: &[F]) -> F {
        self.entries.iter().map(|&(i, v)| weights[i] * v).sum()
    }

    pub fn scaled(&self, c: F) -> Self {
        Self { entries: self.entries.iter().map(|&(i, v)| (i, v * c)).collect(), mode: self.mode }
    }
}

/// BOW term counts or TFIDF `count * ln(n_docs / df)`; out-of-vocabulary tokens are ignored.
pub fn featurize<F: Real>(tokens: &[String], vocab: &Vocabulary, mode: FeatureMode) -> FeatureVector<F> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(i, c)| {
            let tf = F::from_count(c);
            let v = match mode {
                FeatureMode::Bow => tf,
                FeatureMode::Tfidf => tf * (F::from_count(vocab.n_docs) / F::from_count(vocab.df_at(i))).ln(),
            };
            (i, v)
        })
        .collect();
    FeatureVector { entries, mode }
}
