//! Record ingestion, disaster-phase windows, and the bot and keyword filters.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::textprep;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("invalid phase windows: {0}")]
    Phases(String),
    #[error("invalid keyword scheme: {0}")]
    Keywords(String),
}

/// One ingested post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub user_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    pub text: String,
}

impl TweetRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Source key for each record field in the input objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub id: String,
    pub timestamp: String,
    pub user_id: String,
    pub lat: String,
    pub lon: String,
    pub region: String,
    pub text: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            id: "id".into(),
            timestamp: "timestamp".into(),
            user_id: "user_id".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            region: "region".into(),
            text: "text".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Abort on the first malformed line instead of collecting it.
    pub fail_hard: bool,
    /// Report duplicate ids as line errors (first occurrence kept) instead of failing.
    pub allow_duplicates: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<TweetRecord>,
    pub errors: Vec<LineError>,
}

/// Accepts RFC 3339, `Z`-suffixed timestamps without seconds, and naive
/// date-times (taken as UTC).
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    let naive = s.strip_suffix('Z').or_else(|| s.strip_suffix('z')).unwrap_or(s);
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%d %H:%M"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(naive, f).ok())
        .map(|n| n.and_utc())
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str, required: bool) -> Result<Option<String>, String> {
    match field(obj, key) {
        None if required => Err(format!("missing field {key:?}")),
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(_) => Err(format!("field {key:?} must be a string")),
    }
}

fn coord_field(obj: &serde_json::Map<String, Value>, key: &str, bound: f64) -> Result<Option<f64>, String> {
    match field(obj, key) {
        None => Ok(None),
        Some(v) => {
            let x = v.as_f64().ok_or_else(|| format!("field {key:?} must be a number"))?;
            if !(-bound..=bound).contains(&x) {
                return Err(format!("field {key:?} = {x} outside [-{bound}, {bound}]"));
            }
            Ok(Some(x))
        }
    }
}

/// Parses one input line into a record.
pub fn parse_record(line: &str, fields: &FieldMap) -> Result<TweetRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    let id = string_field(obj, &fields.id, true)?.unwrap_or_default();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let raw_ts = string_field(obj, &fields.timestamp, true)?.unwrap_or_default();
    let timestamp = parse_timestamp(&raw_ts).ok_or_else(|| format!("unparseable timestamp {raw_ts:?}"))?;
    let user_id = string_field(obj, &fields.user_id, true)?.unwrap_or_default();
    let text = string_field(obj, &fields.text, true)?.unwrap_or_default();
    Ok(TweetRecord {
        id,
        timestamp,
        user_id,
        lat: coord_field(obj, &fields.lat, 90.0)?,
        lon: coord_field(obj, &fields.lon, 180.0)?,
        region: string_field(obj, &fields.region, false)?.filter(|r| !r.is_empty()),
        text,
    })
}

/// Reads newline-delimited records. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R, fields: &FieldMap, opts: LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Malformed { line: line_no, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, fields) {
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    if !opts.allow_duplicates {
                        return Err(CorpusError::DuplicateId { line: line_no, id: rec.id });
                    }
                    out.errors.push(LineError { line: line_no, reason: format!("duplicate record id {:?}", rec.id) });
                    continue;
                }
                out.records.push(rec);
            }
            Err(reason) if opts.fail_hard => return Err(CorpusError::Malformed { line: line_no, reason }),
            Err(reason) => out.errors.push(LineError { line: line_no, reason }),
        }
    }
    Ok(out)
}

pub fn load_corpus(path: &Path, fields: &FieldMap, opts: LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    read_corpus(BufReader::new(file), fields, opts)
}

/// A named, inclusive range of UTC calendar dates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Ordered, disjoint disaster phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseWindows {
    phases: Vec<Phase>,
}

impl PhaseWindows {
    pub fn new(phases: Vec<Phase>) -> Result<Self, CorpusError> {
        if phases.is_empty() {
            return Err(CorpusError::Phases("no phases".into()));
        }
        let mut names = HashSet::new();
        for p in &phases {
            if p.name.is_empty() || !names.insert(p.name.as_str()) {
                return Err(CorpusError::Phases(format!("phase name {:?} empty or repeated", p.name)));
            }
            if p.start > p.end {
                return Err(CorpusError::Phases(format!("phase {:?} starts after it ends", p.name)));
            }
        }
        for pair in phases.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(CorpusError::Phases(format!(
                    "phase {:?} overlaps or precedes {:?}",
                    pair[1].name, pair[0].name
                )));
            }
        }
        Ok(Self { phases })
    }

    /// Before / during / after windows around the Hurricane Irma landfall.
    pub fn irma() -> Self {
        let d = |m, day| NaiveDate::from_ymd_opt(2017, m, day).unwrap();
        Self::new(vec![
            Phase { name: "before".into(), start: d(9, 1), end: d(9, 9) },
            Phase { name: "during".into(), start: d(9, 10), end: d(9, 11) },
            Phase { name: "after".into(), start: d(9, 12), end: d(9, 30) },
        ])
        .unwrap()
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.phases.iter().map(|p| p.name.as_str())
    }

    pub fn phase_of(&self, ts: DateTime<Utc>) -> Option<&str> {
        let date = ts.date_naive();
        self.phases
            .iter()
            .find(|p| p.start <= date && date <= p.end)
            .map(|p| p.name.as_str())
    }
}

impl Default for PhaseWindows {
    fn default() -> Self {
        Self::irma()
    }
}

pub fn assign_phase<'w>(record: &TweetRecord, windows: &'w PhaseWindows) -> Option<&'w str> {
    windows.phase_of(record.timestamp)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BotFilter {
    pub kept: Vec<TweetRecord>,
    pub removed_users: BTreeSet<String>,
}

/// Removes every post of users with more than `max_posts` posts in `corpus`.
pub fn filter_bots(corpus: Vec<TweetRecord>, max_posts: usize) -> BotFilter {
    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for r in &corpus {
        *per_user.entry(r.user_id.as_str()).or_default() += 1;
    }
    let removed_users: BTreeSet<String> = per_user
        .into_iter()
        .filter(|&(_, n)| n > max_posts)
        .map(|(u, _)| u.to_owned())
        .collect();
    let kept = corpus.into_iter().filter(|r| !removed_users.contains(&r.user_id)).collect();
    BotFilter { kept, removed_users }
}

/// Electricity keywords, their abbreviations, and the utility-company names among them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordScheme {
    keywords: BTreeSet<String>,
    abbreviations: BTreeMap<String, String>,
    local_entities: BTreeSet<String>,
}

impl KeywordScheme {
    pub fn new(
        keywords: impl IntoIterator<Item = String>,
        abbreviations: impl IntoIterator<Item = (String, String)>,
        local_entities: impl IntoIterator<Item = String>,
    ) -> Result<Self, CorpusError> {
        let keywords: BTreeSet<String> = keywords.into_iter().map(|k| k.to_lowercase()).collect();
        if keywords.is_empty() {
            return Err(CorpusError::Keywords("no keywords".into()));
        }
        if let Some(k) = keywords.iter().find(|k| k.is_empty() || k.contains(char::is_whitespace)) {
            return Err(CorpusError::Keywords(format!("keyword {k:?} is not a single token")));
        }
        let abbreviations: BTreeMap<String, String> =
            abbreviations.into_iter().map(|(a, k)| (a.to_lowercase(), k.to_lowercase())).collect();
        for (alias, target) in &abbreviations {
            if !keywords.contains(target) {
                return Err(CorpusError::Keywords(format!("abbreviation {alias:?} maps to unknown keyword {target:?}")));
            }
        }
        let local_entities: BTreeSet<String> = local_entities.into_iter().map(|k| k.to_lowercase()).collect();
        if let Some(e) = local_entities.iter().find(|e| !keywords.contains(*e)) {
            return Err(CorpusError::Keywords(format!("local entity {e:?} is not a keyword")));
        }
        Ok(Self { keywords, abbreviations, local_entities })
    }

    /// The seven Irma keywords with `pwr -> power`.
    pub fn irma() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self::new(
            s(&["blackout", "electric", "electricity", "outage", "power", "dukeenergy", "fpl"]),
            [("pwr".to_string(), "power".to_string())],
            s(&["dukeenergy", "fpl"]),
        )
        .unwrap()
    }

    pub fn keywords(&self) -> &BTreeSet<String> {
        &self.keywords
    }

    pub fn abbreviations(&self) -> &BTreeMap<String, String> {
        &self.abbreviations
    }

    pub fn local_entities(&self) -> &BTreeSet<String> {
        &self.local_entities
    }

    /// Canonical keyword for a token, resolving aliases.
    pub fn canonical(&self, token: &str) -> Option<&str> {
        if let Some(k) = self.keywords.get(token) {
            return Some(k);
        }
        self.abbreviations.get(token).map(String::as_str)
    }

    /// Keywords (canonicalized) present as tokens in `text`.
    pub fn matches(&self, text: &str) -> BTreeSet<String> {
        let cleaned = textprep::clean(text);
        let mut found = BTreeSet::new();
        for token in cleaned.split_whitespace() {
            let bare = token.strip_suffix("'s").unwrap_or(token);
            if let Some(k) = self.canonical(token).or_else(|| self.canonical(bare)) {
                found.insert(k.to_owned());
            }
        }
        found
    }

    /// Keywords and aliases that are not utility-company names: the
    /// "already known" unigrams dropped on the topic path.
    pub fn known_unigrams(&self) -> BTreeSet<String> {
        self.keywords
            .iter()
            .chain(self.abbreviations.keys())
            .filter(|k| !self.local_entities.contains(*k))
            .cloned()
            .collect()
    }
}

impl Default for KeywordScheme {
    fn default() -> Self {
        Self::irma()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordMatch {
    pub record: TweetRecord,
    pub keywords: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordFilter {
    pub matched: Vec<KeywordMatch>,
    /// Records matching each keyword; every scheme keyword is present.
    pub counts: BTreeMap<String, usize>,
}

impl KeywordFilter {
    pub fn records(&self) -> impl Iterator<Item = &TweetRecord> {
        self.matched.iter().map(|m| &m.record)
    }

    pub fn into_records(self) -> Vec<TweetRecord> {
        self.matched.into_iter().map(|m| m.record).collect()
    }

    pub fn counts_csv(&self) -> Vec<u8> {
        crate::io::csv_bytes(
            &["keyword", "count"],
            self.counts.iter().map(|(k, n)| [k.clone(), n.to_string()]),
        )
    }
}

pub fn filter_keywords(corpus: Vec<TweetRecord>, scheme: &KeywordScheme) -> KeywordFilter {
    let mut counts: BTreeMap<String, usize> = scheme.keywords.iter().map(|k| (k.clone(), 0)).collect();
    let mut matched = Vec::new();
    for record in corpus {
        let keywords = scheme.matches(&record.text);
        if keywords.is_empty() {
            continue;
        }
        for k in &keywords {
            *counts.get_mut(k).expect("canonical keyword") += 1;
        }
        matched.push(KeywordMatch { record, keywords });
    }
    KeywordFilter { matched, counts }
}
