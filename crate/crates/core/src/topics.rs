//! Top-k terms, aggregated topics and topic engagement.
//!
//! Topic engagement of topic `T` in scope `P` is `ATC / NT`: the summed
//! counts of the topic's terms over the number of documents in the scope.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phrases::{display_term, term_token};
use crate::scalar::Scalar;
use crate::textprep::TokenDoc;

/// Region label for documents without one.
pub const UNKNOWN_REGION: &str = "UNKNOWN";
/// Region label for whole-corpus rows.
pub const ALL_REGIONS: &str = "ALL";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopicError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("term {term:?} belongs to both {first:?} and {second:?}")]
    OverlappingTopics { term: String, first: String, second: String },
    #[error("duplicate topic name {0:?}")]
    DuplicateTopic(String),
    #[error("topic {0:?} has no terms")]
    EmptyTopic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: usize,
}

/// How equal counts are ordered in top-k lists.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Lexicographic,
    /// Earlier first occurrence in document order wins.
    FirstSeen,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Every occurrence counts.
    #[default]
    Occurrences,
    /// A term counts once per document.
    Documents,
}

/// Term counts over `docs`, sorted by descending count then `tie`.
pub fn term_counts(docs: &[&TokenDoc], tie: TieBreak, mode: CountMode) -> Vec<TermCount> {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    let mut order = 0usize;
    for doc in docs {
        let mut seen = BTreeSet::new();
        for t in &doc.tokens {
            if mode == CountMode::Documents && !seen.insert(t.as_str()) {
                continue;
            }
            let e = counts.entry(t).or_insert_with(|| {
                order += 1;
                (0, order)
            });
            e.0 += 1;
        }
    }
    let mut rows: Vec<(&str, usize, usize)> = counts.into_iter().map(|(t, (c, o))| (t, c, o)).collect();
    rows.sort_by(|a, b| {
        b.1.cmp(&a.1).then_with(|| match tie {
            TieBreak::Lexicographic => a.0.cmp(b.0),
            TieBreak::FirstSeen => a.2.cmp(&b.2),
        })
    });
    rows.into_iter().map(|(t, c, _)| TermCount { term: t.to_owned(), count: c }).collect()
}

/// The `k` most frequent terms of `docs`.
pub fn top_k_terms(docs: &[&TokenDoc], k: usize, tie: TieBreak, mode: CountMode) -> Result<Vec<TermCount>, TopicError> {
    if k == 0 {
        return Err(TopicError::ZeroK);
    }
    let mut all = term_counts(docs, tie, mode);
    all.truncate(k);
    Ok(all)
}

/// Replaces tokens found in `entities` with their target term.
pub fn merge_entities(doc: &TokenDoc, entities: &BTreeMap<String, String>) -> TokenDoc {
    let tokens = doc
        .tokens
        .iter()
        .map(|t| entities.get(t).cloned().unwrap_or_else(|| t.clone()))
        .collect();
    TokenDoc { tokens, ..doc.clone() }
}

/// A named group of terms. Terms are stored in token form (`no_power`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedTopic {
    pub name: String,
    pub terms: BTreeSet<String>,
}

impl AggregatedTopic {
    /// Builds a topic from display-form terms (`"no power"`).
    pub fn new<I, T>(name: &str, terms: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        Self { name: name.to_owned(), terms: terms.into_iter().map(|t| term_token(t.as_ref())).collect() }
    }
}

/// The five aggregated electricity topics.
pub fn irma_topics() -> Vec<AggregatedTopic> {
    vec![
        AggregatedTopic::new(
            "no-power",
            [
                "power outage",
                "lose power",
                "no power",
                "without power",
                "still without power",
                "power out",
                "still no power",
                "power go out",
            ],
        ),
        AggregatedTopic::new("have-power", ["have power", "still have power", "power back on", "power back", "get power"]),
        AggregatedTopic::new("safety-check", ["good", "safe"]),
        AggregatedTopic::new("damage", ["tree", "damage", "fall power cable", "power line"]),
        AggregatedTopic::new("restoration", ["utility company", "restore"]),
    ]
}

pub fn validate_topics(topics: &[AggregatedTopic]) -> Result<(), TopicError> {
    let mut owner: HashMap<&str, &str> = HashMap::new();
    let mut names = BTreeSet::new();
    for t in topics {
        if !names.insert(t.name.as_str()) {
            return Err(TopicError::DuplicateTopic(t.name.clone()));
        }
        if t.terms.is_empty() {
            return Err(TopicError::EmptyTopic(t.name.clone()));
        }
        for term in &t.terms {
            if let Some(first) = owner.insert(term, &t.name) {
                return Err(TopicError::OverlappingTopics {
                    term: display_term(term),
                    first: first.to_owned(),
                    second: t.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Aggregated topic count per topic, in topic order.
pub fn aggregate_topics(
    counts: &HashMap<String, usize>,
    topics: &[AggregatedTopic],
) -> Result<Vec<(String, usize)>, TopicError> {
    validate_topics(topics)?;
    Ok(topics
        .iter()
        .map(|t| (t.name.clone(), t.terms.iter().filter_map(|term| counts.get(term)).sum()))
        .collect())
}

/// `atc / nt`, or `None` when the scope is empty.
pub fn topic_engagement<S: Scalar>(atc: usize, nt: usize) -> Option<S> {
    (nt > 0).then(|| S::ratio(atc as i128, nt as i128))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementRow<S> {
    pub phase: String,
    pub region: String,
    pub topic: String,
    pub atc: usize,
    pub nt: usize,
    pub te: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementReport<S> {
    pub rows: Vec<EngagementRow<S>>,
}

impl<S: Scalar> EngagementReport<S> {
    pub fn get(&self, phase: &str, region: &str, topic: &str) -> Option<&EngagementRow<S>> {
        self.rows.iter().find(|r| r.phase == phase && r.region == region && r.topic == topic)
    }

    /// `phase,topic,ATC,NT,TE` for whole-corpus rows.
    pub fn phase_csv(&self) -> Vec<u8> {
        crate::io::csv_bytes(
            &["phase", "topic", "ATC", "NT", "TE"],
            self.rows.iter().filter(|r| r.region == ALL_REGIONS).map(|r| {
                [r.phase.clone(), r.topic.clone(), r.atc.to_string(), r.nt.to_string(), format_te(r.te)]
            }),
        )
    }

    /// `region,phase,topic,ATC,NT,TE` for per-region rows.
    pub fn region_csv(&self) -> Vec<u8> {
        crate::io::csv_bytes(
            &["region", "phase", "topic", "ATC", "NT", "TE"],
            self.rows.iter().filter(|r| r.region != ALL_REGIONS).map(|r| {
                [
                    r.region.clone(),
                    r.phase.clone(),
                    r.topic.clone(),
                    r.atc.to_string(),
                    r.nt.to_string(),
                    format_te(r.te),
                ]
            }),
        )
    }
}

/// TE rendered with four decimals.
pub fn format_te<S: Scalar>(te: S) -> String {
    format!("{:.4}", te.to_f64().expect("TE is finite"))
}

fn occurrence_counts(docs: &[&TokenDoc]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for d in docs {
        for t in &d.tokens {
            *counts.entry(t.clone()).or_default() += 1;
        }
    }
    counts
}

fn scope_rows<S: Scalar>(
    docs: &[&TokenDoc],
    region: &str,
    phases: &[&str],
    topics: &[AggregatedTopic],
    rows: &mut Vec<EngagementRow<S>>,
) -> Result<(), TopicError> {
    for &phase in phases {
        let scoped: Vec<&TokenDoc> = docs.iter().copied().filter(|d| d.phase.as_deref() == Some(phase)).collect();
        let nt = scoped.len();
        if nt == 0 {
            log::warn!("no documents for region {region:?} in phase {phase:?}; engagement undefined, rows omitted");
            continue;
        }
        for (topic, atc) in aggregate_topics(&occurrence_counts(&scoped), topics)? {
            let te = topic_engagement(atc, nt).expect("nt > 0");
            rows.push(EngagementRow { phase: phase.to_owned(), region: region.to_owned(), topic, atc, nt, te });
        }
    }
    Ok(())
}

/// Whole-corpus engagement rows (region [`ALL_REGIONS`]) per phase and topic.
pub fn phase_engagement<S: Scalar>(
    docs: &[TokenDoc],
    phases: &[&str],
    topics: &[AggregatedTopic],
) -> Result<EngagementReport<S>, TopicError> {
    let all: Vec<&TokenDoc> = docs.iter().collect();
    let mut rows = Vec::new();
    scope_rows(&all, ALL_REGIONS, phases, topics, &mut rows)?;
    Ok(EngagementReport { rows })
}

/// Documents per region label, unlabeled documents under [`UNKNOWN_REGION`].
pub fn region_counts(docs: &[TokenDoc]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for d in docs {
        *counts.entry(d.region.clone().unwrap_or_else(|| UNKNOWN_REGION.to_owned())).or_default() += 1;
    }
    counts
}

/// Labeled regions with at least `min_docs` documents, in name order.
pub fn active_regions(docs: &[TokenDoc], min_docs: usize) -> Vec<String> {
    region_counts(docs)
        .into_iter()
        .filter(|(r, n)| r != UNKNOWN_REGION && *n >= min_docs)
        .map(|(r, _)| r)
        .collect()
}

/// Per-region engagement rows with region-local document counts, for regions
/// passing the `min_docs` cut. Rows are ordered by region, phase, topic.
pub fn regional_breakdown<S: Scalar>(
    docs: &[TokenDoc],
    phases: &[&str],
    topics: &[AggregatedTopic],
    min_docs: usize,
) -> Result<EngagementReport<S>, TopicError> {
    let mut rows = Vec::new();
    for region in active_regions(docs, min_docs) {
        let local: Vec<&TokenDoc> = docs.iter().filter(|d| d.region.as_deref() == Some(region.as_str())).collect();
        scope_rows(&local, &region, phases, topics, &mut rows)?;
    }
    Ok(EngagementReport { rows })
}

/// Rendered `rank,term,count` rows for one phase.
pub fn top_k_csv(terms: &[TermCount]) -> Vec<u8> {
    crate::io::csv_bytes(
        &["rank", "term", "count"],
        terms
            .iter()
            .enumerate()
            .map(|(i, t)| [(i + 1).to_string(), display_term(&t.term), t.count.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use proptest::prelude::*;

    fn doc(id: &str, tokens: &str, phase: &str, region: Option<&str>) -> TokenDoc {
        TokenDoc {
            record_id: id.into(),
            tokens: tokens.split_whitespace().map(String::from).collect(),
            phase: Some(phase.into()),
            region: region.map(String::from),
        }
    }

    #[test]
    fn top_k_counts_occurrences_and_breaks_ties() {
        let docs = [doc("1", "b a a", "p", None), doc("2", "c b", "p", None)];
        let refs: Vec<&TokenDoc> = docs.iter().collect();
        let top = top_k_terms(&refs, 2, TieBreak::Lexicographic, CountMode::Occurrences).unwrap();
        assert_eq!(top, vec![TermCount { term: "a".into(), count: 2 }, TermCount { term: "b".into(), count: 2 }]);
        let first = top_k_terms(&refs, 2, TieBreak::FirstSeen, CountMode::Occurrences).unwrap();
        assert_eq!(first[0].term, "b");
        let by_doc = top_k_terms(&refs, 1, TieBreak::Lexicographic, CountMode::Documents).unwrap();
        assert_eq!(by_doc, vec![TermCount { term: "b".into(), count: 2 }]);
        assert_eq!(top_k_terms(&refs, 10, TieBreak::Lexicographic, CountMode::Occurrences).unwrap().len(), 3);
        assert_eq!(top_k_terms(&refs, 0, TieBreak::Lexicographic, CountMode::Occurrences), Err(TopicError::ZeroK));
    }

    #[test]
    fn entity_merge() {
        let map: BTreeMap<String, String> = [("fpl", "utility_company"), ("dukeenergy", "utility_company")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(merge_entities(&doc("1", "fpl restore", "p", None), &map).tokens, vec!["utility_company", "restore"]);
        assert_eq!(merge_entities(&doc("1", "dukeenergy", "p", None), &map).tokens, vec!["utility_company"]);
        let plain = doc("1", "tree down", "p", None);
        assert_eq!(merge_entities(&plain, &map), plain);
    }

    #[test]
    fn irma_topics_are_disjoint() {
        let topics = irma_topics();
        validate_topics(&topics).unwrap();
        assert_eq!(topics.len(), 5);
        assert!(topics[0].terms.contains("still_without_power"));
    }

    #[test]
    fn overlapping_topics_rejected() {
        let topics = vec![AggregatedTopic::new("a", ["no power"]), AggregatedTopic::new("b", ["no power", "tree"])];
        assert!(matches!(aggregate_topics(&HashMap::new(), &topics), Err(TopicError::OverlappingTopics { .. })));
    }

    #[test]
    fn aggregation_sums_listed_terms() {
        let counts: HashMap<String, usize> = [
            ("no_power", 68),
            ("lose_power", 48),
            ("power_out", 37),
            ("power_outage", 26),
            ("without_power", 25),
            ("power_go_out", 28),
            ("tree", 43),
        ]
        .into_iter()
        .map(|(t, c)| (t.to_string(), c))
        .collect();
        let atc = aggregate_topics(&counts, &irma_topics()).unwrap();
        assert_eq!(atc[0], ("no-power".to_string(), 232));
        assert_eq!(atc[3], ("damage".to_string(), 43));
        assert_eq!(atc[4], ("restoration".to_string(), 0));
    }

    #[test]
    fn engagement_ratio() {
        let te: f64 = topic_engagement(68, 550).unwrap();
        assert_eq!(format!("{te:.4}"), "0.1236");
        assert_eq!(topic_engagement::<Exact>(0, 10), Some(Exact::from_integer(0)));
        assert_eq!(topic_engagement::<Exact>(7, 7), Some(Exact::from_integer(1)));
        assert_eq!(topic_engagement::<f64>(1, 0), None);
    }

    #[test]
    fn regional_cut_and_local_counts() {
        let mut docs = Vec::new();
        for i in 0..5 {
            docs.push(doc(&format!("a{i}"), "no_power tree", "during", Some("A")));
        }
        docs.push(doc("b0", "no_power", "during", Some("B")));
        docs.push(doc("u0", "no_power", "during", None));
        let topics = irma_topics();
        let report = regional_breakdown::<Exact>(&docs, &["before", "during"], &topics, 2).unwrap();
        assert!(report.rows.iter().all(|r| r.region == "A" && r.phase == "during"));
        let row = report.get("during", "A", "no-power").unwrap();
        assert_eq!((row.atc, row.nt, row.te), (5, 5, Exact::from_integer(1)));
        let all = regional_breakdown::<Exact>(&docs, &["during"], &topics, 1).unwrap();
        let regions: BTreeSet<&str> = all.rows.iter().map(|r| r.region.as_str()).collect();
        assert_eq!(regions, BTreeSet::from(["A", "B"]));
    }

    fn arb_docs() -> impl Strategy<Value = Vec<TokenDoc>> {
        let term = prop::sample::select(vec!["no_power", "tree", "good", "safe", "restore", "x", "have_power"]);
        let phase = prop::sample::select(vec!["before", "during", "after"]);
        let region = prop::sample::select(vec![Some("A"), Some("B"), Some("C"), None]);
        prop::collection::vec((prop::collection::vec(term, 0..6), phase, region), 0..40).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (ts, p, r))| TokenDoc {
                    record_id: i.to_string(),
                    tokens: ts.into_iter().map(String::from).collect(),
                    phase: Some(p.to_string()),
                    region: r.map(String::from),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn engagement_rows_match_recount(docs in arb_docs(), min_docs in 1usize..6) {
            let topics = irma_topics();
            let phases = ["before", "during", "after"];
            let report = regional_breakdown::<Exact>(&docs, &phases, &topics, min_docs).unwrap();
            for row in &report.rows {
                let scope: Vec<&TokenDoc> = docs.iter()
                    .filter(|d| d.region.as_deref() == Some(row.region.as_str()) && d.phase.as_deref() == Some(row.phase.as_str()))
                    .collect();
                let terms = &topics.iter().find(|t| t.name == row.topic).unwrap().terms;
                let atc: usize = scope.iter().map(|d| d.tokens.iter().filter(|t| terms.contains(*t)).count()).sum();
                prop_assert_eq!(row.nt, scope.len());
                prop_assert_eq!(row.atc, atc);
                prop_assert_eq!(row.te, Exact::new(atc as i128, scope.len() as i128));
                prop_assert!(docs.iter().filter(|d| d.region.as_deref() == Some(row.region.as_str())).count() >= min_docs);
            }
        }

        #[test]
        fn duplicating_docs_keeps_engagement(docs in arb_docs()) {
            let topics = irma_topics();
            let phases = ["before", "during", "after"];
            let once = phase_engagement::<Exact>(&docs, &phases, &topics).unwrap();
            let twice_docs: Vec<TokenDoc> = docs.iter().chain(docs.iter()).cloned().collect();
            let twice = phase_engagement::<Exact>(&twice_docs, &phases, &topics).unwrap();
            prop_assert_eq!(once.rows.len(), twice.rows.len());
            for (a, b) in once.rows.iter().zip(&twice.rows) {
                prop_assert_eq!(a.te, b.te);
            }
        }

        #[test]
        fn top_k_is_prefix_of_sorted_counts(docs in arb_docs(), k in 1usize..10) {
            let refs: Vec<&TokenDoc> = docs.iter().collect();
            let top = top_k_terms(&refs, k, TieBreak::Lexicographic, CountMode::Occurrences).unwrap();
            let mut brute: BTreeMap<&str, usize> = BTreeMap::new();
            for d in &docs {
                for t in &d.tokens {
                    *brute.entry(t).or_default() += 1;
                }
            }
            let mut sorted: Vec<(&str, usize)> = brute.into_iter().collect();
            sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            let expected: Vec<TermCount> = sorted.into_iter().take(k)
                .map(|(t, c)| TermCount { term: t.to_string(), count: c }).collect();
            prop_assert_eq!(top, expected);
        }

        #[test]
        fn topic_counts_bounded_by_term_total(docs in arb_docs()) {
            let counts = occurrence_counts(&docs.iter().collect::<Vec<_>>());
            let total: usize = counts.values().sum();
            let atc: usize = aggregate_topics(&counts, &irma_topics()).unwrap().iter().map(|(_, n)| n).sum();
            prop_assert!(atc <= total);
        }
    }
}
