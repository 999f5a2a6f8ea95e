//! Bigram and trigram phrase detection.
//!
//! A pair of adjacent units `(a, b)` becomes a phrase when it occurs at least
//! `min_count` times and
//!
//! ```text
//! score(a, b) = (count(a b) - min_count) * n / (count(a) * count(b))
//! ```
//!
//! is strictly greater than the threshold, where `n` is the corpus size.
//! Bigrams come from a first pass over plain tokens. The second pass rewrites
//! every document with the accepted bigrams merged (leftmost first) and scores
//! pairs made of one merged bigram and one plain unigram; accepted pairs are
//! the trigrams.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::textprep::TokenDoc;

/// Glue between the words of a merged phrase token.
pub const JOINER: char = '_';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PhraseError {
    #[error("unigram counts must be positive (got {c_a} and {c_b})")]
    ZeroUnigramCount { c_a: usize, c_b: usize },
    #[error("corpus size must be positive")]
    ZeroCorpusSize,
    #[error("empty corpus")]
    EmptyCorpus,
}

/// What `n` in the phrase score counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSizeMode {
    /// Total tokens in the (rewritten) corpus.
    #[default]
    Tokens,
    /// Distinct units in the (rewritten) corpus.
    Vocabulary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhraseConfig<S> {
    pub min_count: usize,
    pub threshold: S,
    pub size_mode: CorpusSizeMode,
}

impl<S: Scalar> Default for PhraseConfig<S> {
    fn default() -> Self {
        Self { min_count: 5, threshold: S::one(), size_mode: CorpusSizeMode::Tokens }
    }
}

/// `(c_ab - c_min) * n / (c_a * c_b)`, with numerator and denominator formed
/// in integers so the only rounding is the final division.
pub fn score_bigram<S: Scalar>(c_ab: usize, c_a: usize, c_b: usize, c_min: usize, n: usize) -> Result<S, PhraseError> {
    if c_a == 0 || c_b == 0 {
        return Err(PhraseError::ZeroUnigramCount { c_a, c_b });
    }
    if n == 0 {
        return Err(PhraseError::ZeroCorpusSize);
    }
    let num = (c_ab as i128 - c_min as i128) * n as i128;
    let den = c_a as i128 * c_b as i128;
    Ok(S::ratio(num, den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhraseStats<S> {
    pub count: usize,
    pub score: S,
}

/// Accepted trigram; `split` is the number of words in its left unit
/// (2 for `bigram + word`, 1 for `word + bigram`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrigramKey {
    pub words: [String; 3],
    pub split: usize,
}

impl TrigramKey {
    pub fn bigram(&self) -> [&str; 2] {
        if self.split == 2 {
            [&self.words[0], &self.words[1]]
        } else {
            [&self.words[1], &self.words[2]]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseTables<S> {
    pub bigrams: BTreeMap<[String; 2], PhraseStats<S>>,
    pub trigrams: BTreeMap<TrigramKey, PhraseStats<S>>,
    pub min_count: usize,
    pub threshold: S,
    /// `n` used for bigram scores.
    pub corpus_size: usize,
    /// `n` used for trigram scores (over the bigram-merged corpus).
    pub merged_corpus_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Unit<'a> {
    Word(&'a str),
    Pair(&'a str, &'a str),
}

fn corpus_size<K>(counts: &HashMap<K, usize>, mode: CorpusSizeMode) -> usize {
    match mode {
        CorpusSizeMode::Tokens => counts.values().sum(),
        CorpusSizeMode::Vocabulary => counts.len(),
    }
}

/// Leftmost-first, non-overlapping merge of accepted bigrams.
fn merge_bigrams<'a, S>(doc: &'a [String], bigrams: &BTreeMap<[String; 2], PhraseStats<S>>) -> Vec<Unit<'a>> {
    let mut out = Vec::with_capacity(doc.len());
    let mut i = 0;
    while i < doc.len() {
        if i + 1 < doc.len() && bigrams.contains_key(&[doc[i].clone(), doc[i + 1].clone()]) {
            out.push(Unit::Pair(&doc[i], &doc[i + 1]));
            i += 2;
        } else {
            out.push(Unit::Word(&doc[i]));
            i += 1;
        }
    }
    out
}

/// Builds both phrase tables over `docs`. Adjacency never crosses documents.
pub fn build_phrase_tables<S: Scalar, D: AsRef<[String]>>(
    docs: &[D],
    cfg: &PhraseConfig<S>,
) -> Result<PhraseTables<S>, PhraseError> {
    let mut unigrams: HashMap<&str, usize> = HashMap::new();
    let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
    for doc in docs {
        let doc = doc.as_ref();
        for t in doc {
            *unigrams.entry(t).or_default() += 1;
        }
        for w in doc.windows(2) {
            *pairs.entry((&w[0], &w[1])).or_default() += 1;
        }
    }
    let n = corpus_size(&unigrams, cfg.size_mode);
    if n == 0 {
        return Err(PhraseError::EmptyCorpus);
    }

    let mut bigrams = BTreeMap::new();
    for (&(a, b), &count) in &pairs {
        if count < cfg.min_count {
            continue;
        }
        let score: S = score_bigram(count, unigrams[a], unigrams[b], cfg.min_count, n)?;
        if score > cfg.threshold {
            bigrams.insert([a.to_owned(), b.to_owned()], PhraseStats { count, score });
        }
    }

    let merged: Vec<Vec<Unit>> = docs.iter().map(|d| merge_bigrams(d.as_ref(), &bigrams)).collect();
    let mut units: HashMap<Unit, usize> = HashMap::new();
    let mut unit_pairs: HashMap<(Unit, Unit), usize> = HashMap::new();
    for doc in &merged {
        for &u in doc {
            *units.entry(u).or_default() += 1;
        }
        for w in doc.windows(2) {
            let mixed = matches!((w[0], w[1]), (Unit::Pair(..), Unit::Word(_)) | (Unit::Word(_), Unit::Pair(..)));
            if mixed {
                *unit_pairs.entry((w[0], w[1])).or_default() += 1;
            }
        }
    }
    let merged_n = corpus_size(&units, cfg.size_mode);

    let mut trigrams = BTreeMap::new();
    for (&(left, right), &count) in &unit_pairs {
        if count < cfg.min_count {
            continue;
        }
        let score: S = score_bigram(count, units[&left], units[&right], cfg.min_count, merged_n)?;
        if !(score > cfg.threshold) {
            continue;
        }
        let key = match (left, right) {
            (Unit::Pair(a, b), Unit::Word(c)) => TrigramKey { words: [a.into(), b.into(), c.into()], split: 2 },
            (Unit::Word(a), Unit::Pair(b, c)) => TrigramKey { words: [a.into(), b.into(), c.into()], split: 1 },
            _ => unreachable!("only mixed pairs are counted"),
        };
        trigrams.insert(key, PhraseStats { count, score });
    }

    Ok(PhraseTables {
        bigrams,
        trigrams,
        min_count: cfg.min_count,
        threshold: cfg.threshold,
        corpus_size: n,
        merged_corpus_size: merged_n,
    })
}

impl<S: Scalar> PhraseTables<S> {
    pub fn has_bigram(&self, a: &str, b: &str) -> bool {
        self.bigrams.contains_key(&[a.to_owned(), b.to_owned()])
    }

    pub fn has_trigram(&self, a: &str, b: &str, c: &str) -> bool {
        let words = [a.to_owned(), b.to_owned(), c.to_owned()];
        (1..=2).any(|split| self.trigrams.contains_key(&TrigramKey { words: words.clone(), split }))
    }

    /// Greedy leftmost, longest-first merge of accepted phrases.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 2 < tokens.len() && self.has_trigram(&tokens[i], &tokens[i + 1], &tokens[i + 2]) {
                out.push(join(&tokens[i..i + 3]));
                i += 3;
            } else if i + 1 < tokens.len() && self.has_bigram(&tokens[i], &tokens[i + 1]) {
                out.push(join(&tokens[i..i + 2]));
                i += 2;
            } else {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
        out
    }

    pub fn bigrams_csv(&self) -> Vec<u8> {
        crate::io::csv_bytes(
            &["phrase", "count", "score"],
            self.bigrams.iter().map(|(w, s)| [w.join(" "), s.count.to_string(), s.score.to_string()]),
        )
    }

    pub fn trigrams_csv(&self) -> Vec<u8> {
        crate::io::csv_bytes(
            &["phrase", "count", "score"],
            self.trigrams.iter().map(|(k, s)| [k.words.join(" "), s.count.to_string(), s.score.to_string()]),
        )
    }
}

pub fn apply_phrases<S: Scalar>(doc: &TokenDoc, tables: &PhraseTables<S>) -> TokenDoc {
    TokenDoc { tokens: tables.apply(&doc.tokens), ..doc.clone() }
}

pub fn join(words: &[String]) -> String {
    words.join(&JOINER.to_string())
}

/// Phrase token in display form (`no_power` -> `no power`).
pub fn display_term(token: &str) -> String {
    token.replace(JOINER, " ")
}

/// Display form back to a token (`no power` -> `no_power`).
pub fn term_token(display: &str) -> String {
    display.split_whitespace().collect::<Vec<_>>().join(&JOINER.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn score_examples() {
        let s: Exact = score_bigram(6, 10, 12, 5, 100).unwrap();
        assert_eq!(s, Exact::new(100, 120));
        let f: f64 = score_bigram(6, 10, 12, 5, 100).unwrap();
        assert!((f - 0.833_333_333_333_333_3).abs() < 1e-15);
        let zero: f64 = score_bigram(5, 10, 12, 5, 100).unwrap();
        assert_eq!(zero, 0.0);
        let five: Exact = score_bigram(15, 20, 20, 5, 200).unwrap();
        assert_eq!(five, Exact::from_integer(5));
        assert!(score_bigram::<f64>(4, 10, 12, 5, 100).unwrap() < 0.0);
        assert_eq!(score_bigram::<f64>(6, 0, 12, 5, 100), Err(PhraseError::ZeroUnigramCount { c_a: 0, c_b: 12 }));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let docs: Vec<Vec<String>> = vec![];
        assert_eq!(build_phrase_tables::<f64, _>(&docs, &PhraseConfig::default()), Err(PhraseError::EmptyCorpus));
        let blank: Vec<Vec<String>> = vec![vec![]];
        assert!(build_phrase_tables::<f64, _>(&blank, &PhraseConfig::default()).is_err());
    }

    fn formulaic_corpus() -> Vec<Vec<String>> {
        let mut docs = Vec::new();
        for i in 0..70 {
            docs.push(toks(&format!("we have no power filler{i}")));
        }
        for i in 0..62 {
            docs.push(toks(&format!("still no power day{i}")));
        }
        for i in 0..4 {
            docs.push(toks(&format!("rare pair{i}")));
            docs.push(toks("rare pair"));
        }
        for i in 0..300 {
            docs.push(toks(&format!("noise{} word{}", i % 97, i % 89)));
        }
        docs
    }

    #[test]
    fn builds_formulaic_phrases() {
        let t = build_phrase_tables::<f64, _>(&formulaic_corpus(), &PhraseConfig::default()).unwrap();
        assert!(t.has_bigram("no", "power"));
        assert_eq!(t.bigrams[&["no".to_string(), "power".to_string()]].count, 132);
        // "rare pair" occurs 4 times: below the minimum count whatever its score
        assert!(!t.has_bigram("rare", "pair"));
        assert!(t.has_trigram("still", "no", "power"));
        for (k, s) in &t.trigrams {
            let [a, b] = k.bigram();
            assert!(t.has_bigram(a, b));
            assert!(s.count >= t.min_count && s.score > t.threshold);
        }
    }

    #[test]
    fn apply_examples() {
        let t = build_phrase_tables::<f64, _>(&formulaic_corpus(), &PhraseConfig::default()).unwrap();
        assert_eq!(t.apply(&toks("still no power")), toks("still_no_power"));
        assert!(t.apply(&[]).is_empty());
        assert_eq!(t.apply(&toks("no power no power")), toks("no_power no_power"));
        assert_eq!(t.apply(&toks("power no")), toks("power no"));
    }

    #[test]
    fn display_round_trip() {
        assert_eq!(display_term("still_no_power"), "still no power");
        assert_eq!(term_token("still no  power"), "still_no_power");
    }

    /// Every way to cut `tokens` into accepted phrases and single tokens,
    /// ordered so the first element is the leftmost-longest choice.
    fn segmentations(tokens: &[String], t: &PhraseTables<f64>) -> Vec<Vec<String>> {
        if tokens.is_empty() {
            return vec![vec![]];
        }
        let mut all = Vec::new();
        for len in [3usize, 2, 1] {
            if len > tokens.len() {
                continue;
            }
            let ok = match len {
                3 => t.has_trigram(&tokens[0], &tokens[1], &tokens[2]),
                2 => t.has_bigram(&tokens[0], &tokens[1]),
                _ => true,
            };
            if ok {
                for rest in segmentations(&tokens[len..], t) {
                    let mut seg = vec![tokens[..len].join("_")];
                    seg.extend(rest);
                    all.push(seg);
                }
            }
        }
        all
    }

    proptest! {
        #[test]
        fn apply_is_first_greedy_segmentation(idx in prop::collection::vec(0usize..5, 0..12)) {
            let t = build_phrase_tables::<f64, _>(&formulaic_corpus(), &PhraseConfig::default()).unwrap();
            let vocab = ["still", "no", "power", "we", "have"];
            let tokens: Vec<String> = idx.iter().map(|&i| vocab[i].to_string()).collect();
            let out = t.apply(&tokens);
            prop_assert_eq!(&out, &segmentations(&tokens, &t)[0]);
            let rejoined: Vec<String> = out.iter().flat_map(|m| m.split(JOINER).map(String::from).collect::<Vec<_>>()).collect();
            prop_assert_eq!(rejoined, tokens);
        }

        #[test]
        fn bigrams_shrink_with_stricter_rules(
            docs in prop::collection::vec(prop::collection::vec(0u8..6, 0..12), 1..40),
            bump in 0usize..3,
            raise in 0.0f64..3.0,
        ) {
            let docs: Vec<Vec<String>> = docs.into_iter().map(|d| d.into_iter().map(|i| format!("w{i}")).collect()).collect();
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let loose = PhraseConfig { min_count: 2, threshold: 0.5, size_mode: CorpusSizeMode::Tokens };
            let strict = PhraseConfig { min_count: 2 + bump, threshold: 0.5 + raise, ..loose };
            let a = build_phrase_tables::<f64, _>(&docs, &loose).unwrap();
            let b = build_phrase_tables::<f64, _>(&docs, &strict).unwrap();
            for k in b.bigrams.keys() {
                prop_assert!(a.bigrams.contains_key(k));
            }
        }
    }

    #[test]
    fn vocabulary_size_mode_uses_distinct_units() {
        let docs = vec![toks("a b a b a b a b a b a b a b")];
        let cfg = PhraseConfig { min_count: 1, threshold: Exact::from_integer(0), size_mode: CorpusSizeMode::Vocabulary };
        let t = build_phrase_tables::<Exact, _>(&docs, &cfg).unwrap();
        assert_eq!(t.corpus_size, 2);
        // (7 - 1) * 2 / (7 * 7)
        assert_eq!(t.bigrams[&["a".to_string(), "b".to_string()]].score, Exact::new(12, 49));
    }
}
