//! Seeded synthetic corpora and the bundled fixtures.
//!
//! [`generate`] produces a raw, Irma-shaped corpus (electricity posts, keyword
//! look-alikes, unrelated chatter, and hyperactive accounts) together with
//! manual labels for part of the keyword-matched posts. [`separable_corpus`]
//! builds a fully labeled set the linear classifiers can separate, and
//! [`table2_fixture`] builds the classified corpus whose top-20 terms per
//! phase are the published Irma lists.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::Label;
use crate::corpus::{PhaseWindows, TweetRecord};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    /// Posts from ordinary users (bot posts come on top).
    pub records: usize,
    pub users: usize,
    /// No ordinary user gets more posts than this.
    pub max_posts_per_user: usize,
    pub electricity_fraction: f64,
    /// Unrelated posts that still contain a keyword token ("God's power").
    pub keyword_noise_fraction: f64,
    /// Chance that an electricity post carries the planted "no power".
    pub phrase_prob: f64,
    pub bot_users: usize,
    pub bot_posts: usize,
    pub unlabeled_region_fraction: f64,
    /// Share of keyword-matched posts that receive a manual label.
    pub label_fraction: f64,
    /// One weight per phase window.
    pub phase_weights: Vec<f64>,
    pub regions: BTreeMap<String, f64>,
}

impl Default for SynthParams {
    fn default() -> Self {
        let regions = [
            ("Miami-Dade", 6.0),
            ("Broward", 4.5),
            ("Palm Beach", 3.5),
            ("Orange", 3.0),
            ("Hillsborough", 2.5),
            ("Pinellas", 2.0),
            ("Duval", 2.0),
            ("Lee", 1.5),
            ("Collier", 1.0),
            ("Monroe", 1.0),
        ];
        Self {
            seed: 42,
            records: 4000,
            users: 1500,
            max_posts_per_user: 10,
            electricity_fraction: 0.05,
            keyword_noise_fraction: 0.01,
            phrase_prob: 0.3,
            bot_users: 3,
            bot_posts: 15,
            unlabeled_region_fraction: 0.2,
            label_fraction: 0.7,
            phase_weights: vec![0.15, 0.35, 0.5],
            regions: regions.iter().map(|(r, w)| (r.to_string(), *w)).collect(),
        }
    }
}

impl SynthParams {
    /// Every post is an electricity post and there are no bots.
    pub fn zero_noise(seed: u64) -> Self {
        Self { seed, electricity_fraction: 1.0, keyword_noise_fraction: 0.0, bot_users: 0, ..Self::default() }
    }

    fn validate(&self, windows: &PhaseWindows) -> Result<(), SynthError> {
        let err = |m: &str| Err(SynthError::Params(m.to_owned()));
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![self.electricity_fraction, self.keyword_noise_fraction, self.phrase_prob]
            .into_iter()
            .chain([self.unlabeled_region_fraction, self.label_fraction])
            .all(unit)
        {
            return err("fractions and probabilities must lie in [0, 1]");
        }
        if self.electricity_fraction + self.keyword_noise_fraction > 1.0 {
            return err("electricity_fraction + keyword_noise_fraction exceeds 1");
        }
        if self.phase_weights.len() != windows.phases().len() {
            return err("phase_weights needs one weight per phase");
        }
        if self.phase_weights.iter().any(|w| !w.is_finite() || *w < 0.0) || self.phase_weights.iter().sum::<f64>() <= 0.0
        {
            return err("phase_weights must be nonnegative with a positive sum");
        }
        if self.records > 0 && self.users.saturating_mul(self.max_posts_per_user) < self.records {
            return err("users * max_posts_per_user must cover records");
        }
        if self.unlabeled_region_fraction < 1.0
            && self.records > 0
            && (self.regions.is_empty() || self.regions.values().any(|w| !w.is_finite() || *w < 0.0))
        {
            return err("regions need nonnegative weights");
        }
        Ok(())
    }
}

/// A generated corpus with its manual labels and generator bookkeeping.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthCorpus {
    pub records: Vec<TweetRecord>,
    /// `(record_id, label)` in id order.
    pub labels: Vec<(String, Label)>,
    /// Ids of posts generated as electricity-related.
    pub electricity: BTreeSet<String>,
    /// Ids of electricity posts carrying the planted phrase.
    pub planted: BTreeSet<String>,
    pub bot_users: BTreeSet<String>,
}

impl SynthCorpus {
    pub fn records_jsonl(&self) -> String {
        records_jsonl(&self.records)
    }
}

pub fn records_jsonl(records: &[TweetRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_json_line());
        s.push('\n');
    }
    s
}

const OPENERS: &[&str] = &["", "", "Ugh", "Update:", "Day 2 and", "Irma update:", "Wow", "Heads up:"];
const PLANTED: &[&str] = &["no power", "No power", "NO POWER", "still no power", "Still no power"];
const ELECTRICITY_BODIES: &[&str] = &[
    "lost power",
    "power went out",
    "power outage on our street",
    "still have power",
    "power is back",
    "FPL crews working",
    "pwr out since last night",
    "trees down on power lines",
    "electricity out",
    "blackout in the neighborhood",
    "@DukeEnergy trucks on our street",
    "waiting on @FPL",
    "electric pole snapped",
];
const DETAILS: &[&str] = &["", "", "since last night", "in Kendall", "stay safe everyone", "generator running", "#Irma", "#HurricaneIrma", "😩", "🙏"];
const NOISE_BODIES: &[&str] = &[
    "In our weaknesses, God's power and strength are truly manifested",
    "never underestimate the power of prayer",
    "electric slide at the shelter",
    "power ballads all night on the radio",
];
const PLAIN_BODIES: &[&str] = &[
    "stocking up on water",
    "boarding up the windows",
    "traffic on I-95 is terrible",
    "stay safe everyone",
    "the wind is picking up",
    "shelter is full",
    "gas lines everywhere",
    "powerful storm coming",
    "praying for Florida",
    "empowering our neighbors",
    "school closed tomorrow",
];

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Electricity,
    KeywordNoise,
    Plain,
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("nonempty choice list")
}

fn join_words(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join(" ")
}

fn random_instant(rng: &mut ChaCha8Rng, start: NaiveDate, end: NaiveDate) -> DateTime<Utc> {
    let days = (end - start).num_days();
    let day = start + Duration::days(rng.gen_range(0..=days));
    let secs = rng.gen_range(0..86_400);
    day.and_hms_opt(0, 0, 0).expect("midnight").and_utc() + Duration::seconds(secs)
}

/// Generates a raw corpus. Same params and windows give identical output.
pub fn generate(params: &SynthParams, windows: &PhaseWindows) -> Result<SynthCorpus, SynthError> {
    params.validate(windows)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let phase_dist = WeightedIndex::new(&params.phase_weights).map_err(|e| SynthError::Params(e.to_string()))?;
    let region_names: Vec<&String> = params.regions.keys().collect();
    let region_dist = if params.regions.values().any(|w| *w > 0.0) {
        Some(WeightedIndex::new(params.regions.values()).map_err(|e| SynthError::Params(e.to_string()))?)
    } else {
        None
    };

    struct Draft {
        ts: DateTime<Utc>,
        user: String,
        region: Option<String>,
        text: String,
        kind: Option<Kind>,
        planted: bool,
        labeled: bool,
    }
    let mut drafts = Vec::with_capacity(params.records + params.bot_users * params.bot_posts);
    let mut per_user = vec![0usize; params.users];
    for _ in 0..params.records {
        let r: f64 = rng.gen();
        let kind = if r < params.electricity_fraction {
            Kind::Electricity
        } else if r < params.electricity_fraction + params.keyword_noise_fraction {
            Kind::KeywordNoise
        } else {
            Kind::Plain
        };
        let mut u = rng.gen_range(0..params.users);
        while per_user[u] >= params.max_posts_per_user {
            u = (u + 1) % params.users;
        }
        per_user[u] += 1;
        let phase = &windows.phases()[phase_dist.sample(&mut rng)];
        let ts = random_instant(&mut rng, phase.start, phase.end);
        let region = match &region_dist {
            Some(d) if !rng.gen_bool(params.unlabeled_region_fraction) => Some(region_names[d.sample(&mut rng)].clone()),
            _ => None,
        };
        let mut planted = false;
        let text = match kind {
            Kind::Electricity => {
                planted = rng.gen_bool(params.phrase_prob);
                let body = if planted { pick(&mut rng, PLANTED) } else { pick(&mut rng, ELECTRICITY_BODIES) };
                join_words(&[pick(&mut rng, OPENERS), body, pick(&mut rng, DETAILS)])
            }
            Kind::KeywordNoise => join_words(&[pick(&mut rng, NOISE_BODIES), pick(&mut rng, DETAILS)]),
            Kind::Plain => join_words(&[pick(&mut rng, OPENERS), pick(&mut rng, PLAIN_BODIES), pick(&mut rng, DETAILS)]),
        };
        let labeled = kind != Kind::Plain && rng.gen_bool(params.label_fraction);
        drafts.push(Draft { ts, user: format!("u{u:05}"), region, text, kind: Some(kind), planted, labeled });
    }
    let all = windows.phases();
    let (first, last) = (all[0].start, all[all.len() - 1].end);
    let mut bots = BTreeSet::new();
    for b in 0..params.bot_users {
        let user = format!("bot{b:02}");
        for k in 0..params.bot_posts {
            let ts = random_instant(&mut rng, first, last);
            let text = format!("Outage map update {k} https://example.org/outages/{b}/{k}");
            drafts.push(Draft { ts, user: user.clone(), region: None, text, kind: None, planted: false, labeled: false });
        }
        bots.insert(user);
    }
    // stable: equal instants keep generation order
    drafts.sort_by_key(|d| d.ts);

    let mut out = SynthCorpus { bot_users: bots, ..SynthCorpus::default() };
    for (i, d) in drafts.into_iter().enumerate() {
        let id = format!("syn-{:06}", i + 1);
        if d.kind == Some(Kind::Electricity) {
            out.electricity.insert(id.clone());
            if d.planted {
                out.planted.insert(id.clone());
            }
        }
        if d.labeled {
            out.labels.push((id.clone(), Label::from_positive(d.kind == Some(Kind::Electricity))));
        }
        out.records.push(TweetRecord {
            id,
            timestamp: d.ts,
            user_id: d.user,
            lat: None,
            lon: None,
            region: d.region,
            text: d.text,
        });
    }
    Ok(out)
}

const SEPARABLE_POSITIVE: &[&str] = &[
    "power", "outage", "electricity", "blackout", "transformer", "generator", "grid", "substation", "pole", "crew", "fpl",
    "restoration",
];
const SEPARABLE_NEGATIVE: &[&str] =
    &["water", "gas", "shelter", "traffic", "storm", "surge", "flood", "evacuation", "window", "food", "school", "church"];
const SEPARABLE_SHARED: &[&str] =
    &["today", "home", "still", "everyone", "street", "night", "road", "hurricane", "irma", "update", "family", "week"];

/// `n` fully labeled posts, alternating classes. Every positive contains a
/// word from a positive-only list and every negative one from a disjoint
/// negative list, so a linear model over unigrams separates them.
pub fn separable_corpus(n: usize, seed: u64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2017, 9, 10).expect("valid date");
    let mut out = SynthCorpus::default();
    for i in 0..n {
        let positive = i % 2 == 0;
        let own = if positive { SEPARABLE_POSITIVE } else { SEPARABLE_NEGATIVE };
        let len = rng.gen_range(3..=7);
        let mut words = vec![pick(&mut rng, own)];
        while words.len() < len {
            words.push(if rng.gen_bool(0.5) { pick(&mut rng, own) } else { pick(&mut rng, SEPARABLE_SHARED) });
        }
        words.shuffle(&mut rng);
        let id = format!("sep-{:05}", i + 1);
        if positive {
            out.electricity.insert(id.clone());
        }
        out.labels.push((id.clone(), Label::from_positive(positive)));
        out.records.push(TweetRecord {
            id,
            timestamp: random_instant(&mut rng, start, start),
            user_id: format!("s{:04}", i % 400),
            lat: None,
            lon: None,
            region: None,
            text: words.join(" "),
        });
    }
    out
}

/// Published top-20 terms and post counts per Irma phase.
pub const TABLE2: [(&str, usize, [(&str, usize); 20]); 3] = [
    (
        "before",
        77,
        [
            ("power outage", 11),
            ("lose power", 9),
            ("ready", 7),
            ("nb sb", 7),
            ("power out", 6),
            ("go", 6),
            ("cook", 6),
            ("sfltraffic", 6),
            ("still have power", 5),
            ("the avenue", 5),
            ("street", 5),
            ("power go out", 5),
            ("good", 4),
            ("wind", 4),
            ("still", 4),
            ("make", 4),
            ("stay", 4),
            ("forecast", 4),
            ("home", 3),
            ("tomorrow", 3),
        ],
    ),
    (
        "during",
        550,
        [
            ("no power", 68),
            ("still have power", 52),
            ("still", 48),
            ("lose power", 48),
            ("tree", 43),
            ("good", 40),
            ("safe", 39),
            ("power out", 37),
            ("wind", 36),
            ("go", 31),
            ("damage", 31),
            ("power go out", 28),
            ("have power", 28),
            ("power outage", 26),
            ("without power", 25),
            ("make", 22),
            ("power line", 21),
            ("road", 20),
            ("house", 20),
            ("time", 20),
        ],
    ),
    (
        "after",
        1136,
        [
            ("have power", 101),
            ("no power", 86),
            ("home", 67),
            ("still no power", 62),
            ("day", 62),
            ("utility company", 61),
            ("without power", 60),
            ("power back", 59),
            ("power outage", 58),
            ("back", 58),
            ("still", 51),
            ("restore", 45),
            ("work", 45),
            ("open", 45),
            ("water", 42),
            ("get power", 42),
            ("today", 39),
            ("thank you", 38),
            ("week", 35),
            ("house", 35),
        ],
    ),
];

/// Surface forms that preprocess to the given term.
fn surface_forms(term: &str) -> &'static [&'static str] {
    match term {
        "power outage" => &["power outage", "Power outage", "POWER OUTAGE", "power outages"],
        "lose power" => &["lost power", "lose power", "losing power", "Lost Power"],
        "ready" => &["ready", "Ready"],
        "nb sb" => &["NB/SB", "nb sb", "NB SB"],
        "power out" => &["power out", "Power OUT", "power out"],
        "go" => &["go", "going", "went", "Go"],
        "cook" => &["cook", "cooking", "cooked"],
        "sfltraffic" => &["#SFLTraffic", "#sfltraffic"],
        "still have power" => &["still have power", "still has power", "Still have power"],
        "the avenue" => &["The Avenue", "the avenue"],
        "street" => &["street", "streets"],
        "power go out" => &["power went out", "power goes out", "power go out", "Power went out"],
        "good" => &["good", "Good"],
        "wind" => &["wind", "winds"],
        "still" => &["still", "STILL", "Still"],
        "make" => &["make", "made", "making"],
        "stay" => &["stay", "staying", "stayed"],
        "forecast" => &["forecast", "forecasts"],
        "home" => &["home", "homes", "Home"],
        "tomorrow" => &["tomorrow", "Tomorrow"],
        "no power" => &["no power", "No power", "NO POWER"],
        "still no power" => &["still no power", "Still no power", "STILL NO POWER"],
        "tree" => &["tree", "trees", "Trees"],
        "safe" => &["safe", "SAFE", "Safe"],
        "damage" => &["damage", "damaged", "damages"],
        "have power" => &["have power", "has power", "Have power"],
        "without power" => &["without power", "Without power"],
        "power line" => &["power line", "power lines"],
        "road" => &["road", "roads"],
        "house" => &["house", "houses"],
        "time" => &["time", "times"],
        "day" => &["day", "days"],
        "utility company" => &["@FPL", "@DukeEnergy", "#FPL"],
        "power back" => &["power back", "Power back"],
        "back" => &["back", "Back"],
        "restore" => &["restore", "restored", "restoring"],
        "work" => &["work", "working", "worked"],
        "open" => &["open", "opened", "opening"],
        "water" => &["water", "Water"],
        "get power" => &["get power", "got power", "getting power"],
        "today" => &["today", "Today"],
        "thank you" => &["thank you", "Thank you", "THANK YOU"],
        "week" => &["week", "weeks"],
        other => panic!("no surface forms for {other:?}"),
    }
}

const SEPARATORS: &[&str] = &[" ", ", ", "! ", "... ", " - ", " | ", " & ", " / "];
const SUFFIXES: &[&str] = &["", "", "", "", "!", "!!", "...", " ⚡", " 😩", "?"];
const FILLERS: &[&str] = &["Electricity", "BLACKOUT", "electric", "Electricity ⚡", "blackout..."];

/// Region label counts: five large counties, 17 mid-size, 45 small.
fn fixture_regions() -> Vec<(&'static str, usize)> {
    let mut v = vec![("Miami-Dade", 287), ("Broward", 215), ("Orange", 186), ("Pinellas", 140), ("Palm Beach", 110)];
    let mid = [
        ("Hillsborough", 60),
        ("Duval", 52),
        ("Lee", 45),
        ("Polk", 40),
        ("Brevard", 35),
        ("Volusia", 30),
        ("Seminole", 26),
        ("Sarasota", 22),
        ("Manatee", 19),
        ("Collier", 16),
        ("Marion", 14),
        ("Lake", 12),
        ("Osceola", 11),
        ("Escambia", 10),
        ("St. Lucie", 10),
        ("Leon", 10),
        ("Alachua", 10),
    ];
    v.extend(mid);
    let small = [
        "Baker", "Bay", "Bradford", "Calhoun", "Charlotte", "Citrus", "Clay", "Columbia", "DeSoto", "Dixie", "Flagler",
        "Franklin", "Gadsden", "Gilchrist", "Glades", "Gulf", "Hamilton", "Hardee", "Hendry", "Hernando", "Highlands",
        "Holmes", "Indian River", "Jackson", "Jefferson", "Lafayette", "Levy", "Liberty", "Madison", "Martin", "Monroe",
        "Nassau", "Okaloosa", "Okeechobee", "Pasco", "Putnam", "St. Johns", "Santa Rosa", "Sumter", "Suwannee",
        "Taylor", "Union", "Wakulla", "Walton", "Washington",
    ];
    v.extend(small.iter().enumerate().map(|(i, c)| (*c, i % 5 + 1)));
    v
}

fn words(term: &str) -> Vec<&str> {
    term.split(' ').collect()
}

/// The classified Irma fixture: 1,763 posts whose phrase-merged, stop-word
/// stripped tokens count exactly to [`TABLE2`] per phase.
///
/// Each phase opens with one single-term post per top term in rank order, so
/// first-seen tie-breaking reproduces the published ranks. The remaining term
/// occurrences are shuffled into one- or two-term posts. Two neighbouring
/// terms never form a word pair that occurs inside some term, and any other
/// cross-term word pair occurs at most four times overall, below the phrase
/// minimum count.
pub fn table2_fixture() -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(2017_09_10);
    let windows = PhaseWindows::irma();
    let internal: BTreeSet<(&str, &str)> = TABLE2
        .iter()
        .flat_map(|(_, _, terms)| terms.iter())
        .flat_map(|(t, _)| {
            let w = words(t);
            (1..w.len()).map(move |i| (w[i - 1], w[i])).collect::<Vec<_>>()
        })
        .collect();
    let mut cross: HashMap<(&str, &str), usize> = HashMap::new();
    let mut texts: Vec<(usize, String)> = Vec::new();

    for (phase_idx, (_, n_docs, terms)) in TABLE2.iter().enumerate() {
        let mut rest: Vec<&str> =
            terms.iter().flat_map(|(t, c)| std::iter::repeat(*t).take(c - 1)).collect();
        rest.shuffle(&mut rng);
        let extras = if phase_idx == 2 { 45 } else { 0 };
        let term_docs = n_docs - extras - terms.len();
        let doubles = rest.len() - term_docs;
        let mut sizes: Vec<usize> = std::iter::repeat(2).take(doubles).chain(std::iter::repeat(1).take(term_docs - doubles)).collect();
        sizes.shuffle(&mut rng);

        let mut docs: Vec<Vec<&str>> = terms.iter().map(|(t, _)| vec![*t]).collect();
        let mut pos = 0;
        for size in sizes {
            if size == 2 {
                let a = rest[pos];
                let ok = |b: &str, cross: &HashMap<(&str, &str), usize>| {
                    let pair = (*words(a).last().unwrap(), words(b)[0]);
                    b != a && !internal.contains(&pair) && cross.get(&pair).copied().unwrap_or(0) < 4
                };
                let j = (pos + 1..rest.len())
                    .find(|&j| ok(rest[j], &cross))
                    .expect("fixture construction found no compatible partner");
                rest.swap(pos + 1, j);
                let b = rest[pos + 1];
                *cross.entry((*words(a).last().unwrap(), words(b)[0])).or_default() += 1;
                docs.push(vec![a, b]);
            } else {
                docs.push(vec![rest[pos]]);
            }
            pos += size;
        }
        let mut rendered: Vec<String> = docs
            .iter()
            .map(|doc| {
                let parts: Vec<&str> = doc.iter().map(|t| pick(&mut rng, surface_forms(t))).collect();
                let mut s = parts.join(pick(&mut rng, SEPARATORS));
                s.push_str(pick(&mut rng, SUFFIXES));
                if rng.gen_bool(0.15) {
                    let code: String = (0..8).map(|_| rng.sample(rand::distributions::Alphanumeric) as char).collect();
                    s.push_str(&format!(" https://t.co/{code}"));
                }
                s
            })
            .collect();
        if extras > 0 {
            // one stray "the avenue" lifts its pair count above the minimum
            let mut extra: Vec<String> = vec!["the Avenue".to_owned()];
            extra.extend((1..extras).map(|_| pick(&mut rng, FILLERS).to_owned()));
            for e in extra {
                let at = rng.gen_range(terms.len()..=rendered.len());
                rendered.insert(at, e);
            }
        }
        texts.extend(rendered.into_iter().map(|t| (phase_idx, t)));
    }

    let mut regions: Vec<Option<&str>> = fixture_regions()
        .into_iter()
        .flat_map(|(r, n)| std::iter::repeat(Some(r)).take(n))
        .collect();
    regions.resize(texts.len(), None);
    regions.shuffle(&mut rng);
    let mut users: Vec<usize> = (0..texts.len()).map(|i| i % 700).collect();
    users.shuffle(&mut rng);

    let mut records = Vec::with_capacity(texts.len());
    let mut offset = 0;
    for (phase_idx, phase) in windows.phases().iter().enumerate() {
        let in_phase: Vec<&String> = texts.iter().filter(|(p, _)| *p == phase_idx).map(|(_, t)| t).collect();
        let start = phase.start.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
        let span = ((phase.end - phase.start).num_days() + 1) * 86_400;
        let step = span / in_phase.len() as i64;
        for (i, text) in in_phase.into_iter().enumerate() {
            let k = offset + i;
            let ts = start + Duration::seconds(i as i64 * step + rng.gen_range(0..step));
            records.push(TweetRecord {
                id: format!("irma-{:04}", k + 1),
                timestamp: ts,
                user_id: format!("fx{:04}", users[k]),
                lat: None,
                lon: None,
                region: regions[k].map(str::to_owned),
                text: text.clone(),
            });
        }
        offset = records.len();
    }
    records
}
