//! Config-driven pipeline stages.
//!
//! Every stage reads its inputs from explicit paths in [`InputConfig`] or,
//! when unset, from the files earlier stages leave in `output_dir`:
//!
//! | stage    | reads                                   | writes |
//! |----------|-----------------------------------------|--------|
//! | filter   | raw corpus                              | `filtered.jsonl`, `keyword_counts.csv`, `filter_summary.csv`, `load_errors.csv` |
//! | train    | filtered corpus, labels                 | `model.json`, `train_report.csv`, `split.csv` |
//! | eval     | filtered corpus, labels, model          | `eval.csv`, `eval.json` |
//! | classify | filtered corpus, labels, model or scores| `classified.jsonl`, `positive_ids.txt` |
//! | topics   | classified corpus                       | `topk_terms_<phase>.csv`, `engagement.csv`, `county_engagement.csv`, `region_counts.csv`, `daily_counts.csv`, `bigrams.csv`, `trigrams.csv` |
//! | synth    | parameters                              | `synth_raw.jsonl`, `synth_labels.jsonl` |

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    self, classify_corpus, evaluate, labeled_set, load_external_scores, split_dataset, ClassifierModel, ClassifyError,
    EvalReport, FeatureMode, Hyperparams, Label, LabeledDoc, Scorer, TrainerKind,
};
use crate::corpus::{
    filter_bots, filter_keywords, load_corpus, CorpusError, FieldMap, KeywordScheme, LoadOptions, Phase, PhaseWindows,
    TweetRecord,
};
use crate::io::{write_atomic, write_csv};
use crate::phrases::{build_phrase_tables, term_token, CorpusSizeMode, PhraseConfig, PhraseError, PhraseTables};
use crate::synth::{self, SynthError, SynthParams};
use crate::textprep::{self, remove_stopwords, Lemmatizer, StopwordList, TokenDoc};
use crate::topics::{
    self, irma_topics, merge_entities, phase_engagement, region_counts, regional_breakdown, top_k_csv, top_k_terms,
    AggregatedTopic, CountMode, TieBreak, TopicError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl PipelineError {
    /// 1 for config, 2 for data, 3 for internal errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Phases(_) | CorpusError::Keywords(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<ClassifyError> for PipelineError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::InvalidRatios(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<TopicError> for PipelineError {
    fn from(e: TopicError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<PhraseError> for PipelineError {
    fn from(e: PhraseError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<SynthError> for PipelineError {
    fn from(e: SynthError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn write_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Internal(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub raw: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub filtered: Option<PathBuf>,
    pub classified: Option<PathBuf>,
    pub model: Option<PathBuf>,
    /// Externally computed scores; when set, classify uses them instead of the model.
    pub scores: Option<PathBuf>,
    pub fields: FieldMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub max_posts: usize,
    pub keywords: Vec<String>,
    pub abbreviations: BTreeMap<String, String>,
    pub local_entities: Vec<String>,
    pub fail_hard: bool,
    pub allow_duplicates: bool,
    /// Filter fails with a data error when matched/raw exceeds this.
    pub max_reduction_ratio: Option<f64>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        let s = KeywordScheme::irma();
        Self {
            max_posts: 10,
            keywords: s.keywords().iter().cloned().collect(),
            abbreviations: s.abbreviations().clone(),
            local_entities: s.local_entities().iter().cloned().collect(),
            fail_hard: false,
            allow_duplicates: false,
            max_reduction_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub trainer: TrainerKind,
    pub features: FeatureMode,
    pub min_df: usize,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub epochs: Option<usize>,
    pub tolerance: Option<f64>,
    pub split: [f64; 3],
    pub threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            trainer: TrainerKind::Lr,
            features: FeatureMode::Bow,
            min_df: 1,
            learning_rate: None,
            l2: None,
            epochs: None,
            tolerance: None,
            split: [0.6, 0.2, 0.2],
            threshold: 0.5,
        }
    }
}

impl ClassifierConfig {
    pub fn hyperparams(&self, seed: u64) -> Hyperparams<f64> {
        let d = Hyperparams::<f64>::default_for(self.trainer);
        Hyperparams {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            l2: self.l2.unwrap_or(d.l2),
            epochs: self.epochs.unwrap_or(d.epochs),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhraseSettings {
    pub min_count: usize,
    pub threshold: f64,
    pub corpus_size_mode: CorpusSizeMode,
}

impl Default for PhraseSettings {
    fn default() -> Self {
        Self { min_count: 5, threshold: 1.0, corpus_size_mode: CorpusSizeMode::Tokens }
    }
}

impl PhraseSettings {
    pub fn config(&self) -> PhraseConfig<f64> {
        PhraseConfig { min_count: self.min_count, threshold: self.threshold, size_mode: self.corpus_size_mode }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicDef {
    pub name: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicSettings {
    pub k: usize,
    pub tie_break: TieBreak,
    pub count_mode: CountMode,
    pub min_docs: usize,
    /// Term that local utility names are merged into.
    pub entity_target: String,
    /// Aggregated topics; the five Irma topics when absent.
    pub definitions: Option<Vec<TopicDef>>,
}

impl Default for TopicSettings {
    fn default() -> Self {
        Self {
            k: 20,
            tie_break: TieBreak::Lexicographic,
            count_mode: CountMode::Occurrences,
            min_docs: 100,
            entity_target: "utility company".into(),
            definitions: None,
        }
    }
}

fn irma_phases() -> Vec<Phase> {
    PhaseWindows::irma().phases().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub input: InputConfig,
    pub corpus: CorpusConfig,
    pub phases: Vec<Phase>,
    pub classifier: ClassifierConfig,
    pub phrases: PhraseSettings,
    pub topics: TopicSettings,
    pub synth: SynthParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: PathBuf::from("out"),
            input: InputConfig::default(),
            corpus: CorpusConfig::default(),
            phases: irma_phases(),
            classifier: ClassifierConfig::default(),
            phrases: PhraseSettings::default(),
            topics: TopicSettings::default(),
            synth: SynthParams::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths are resolved against `base` when given.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(base) = base {
            cfg.rebase(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent())
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        let i = &mut self.input;
        for p in [&mut i.raw, &mut i.labels, &mut i.filtered, &mut i.classified, &mut i.model, &mut i.scores]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    /// Checks every section; stages call this before touching any file.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.scheme()?;
        self.windows()?;
        self.topic_definitions()?;
        if self.corpus.max_posts == 0 {
            return bad("corpus.max_posts must be at least 1".into());
        }
        if self.topics.k == 0 {
            return bad("topics.k must be at least 1".into());
        }
        if self.topics.min_docs == 0 {
            return bad("topics.min_docs must be at least 1".into());
        }
        if self.topics.entity_target.trim().is_empty() {
            return bad("topics.entity_target is empty".into());
        }
        if self.phrases.min_count == 0 || !self.phrases.threshold.is_finite() {
            return bad("phrases.min_count must be positive and phrases.threshold finite".into());
        }
        let c = &self.classifier;
        if !(0.0..=1.0).contains(&c.threshold) {
            return bad(format!("classifier.threshold {} outside [0, 1]", c.threshold));
        }
        let sum: f64 = c.split.iter().sum();
        if c.split.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return bad(format!("classifier.split {:?} must be nonnegative and sum to 1", c.split));
        }
        let h = c.hyperparams(self.seed);
        if !(h.learning_rate > 0.0 && h.l2 >= 0.0 && h.tolerance >= 0.0) || h.epochs == 0 {
            return bad("classifier hyperparameters out of range".into());
        }
        if let Some(r) = self.corpus.max_reduction_ratio {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("corpus.max_reduction_ratio {r} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<KeywordScheme> {
        Ok(KeywordScheme::new(
            self.corpus.keywords.iter().cloned(),
            self.corpus.abbreviations.clone(),
            self.corpus.local_entities.iter().cloned(),
        )?)
    }

    pub fn windows(&self) -> Result<PhaseWindows> {
        Ok(PhaseWindows::new(self.phases.clone())?)
    }

    pub fn topic_definitions(&self) -> Result<Vec<AggregatedTopic>> {
        let defs = match &self.topics.definitions {
            None => irma_topics(),
            Some(d) => d.iter().map(|t| AggregatedTopic::new(&t.name, &t.terms)).collect(),
        };
        topics::validate_topics(&defs)?;
        Ok(defs)
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions { fail_hard: self.corpus.fail_hard, allow_duplicates: self.corpus.allow_duplicates }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn input_or_output(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out(name))
    }

    pub fn filtered_path(&self) -> PathBuf {
        self.input_or_output(&self.input.filtered, "filtered.jsonl")
    }

    pub fn classified_path(&self) -> PathBuf {
        self.input_or_output(&self.input.classified, "classified.jsonl")
    }

    pub fn model_path(&self) -> PathBuf {
        self.input_or_output(&self.input.model, "model.json")
    }
}

/// Stage outputs are written with the canonical field names.
fn read_stage_records(path: &Path) -> Result<Vec<TweetRecord>> {
    let opts = LoadOptions { fail_hard: true, allow_duplicates: false };
    Ok(load_corpus(path, &FieldMap::default(), opts)?.records)
}

fn write_records(path: &Path, records: &[TweetRecord]) -> Result<()> {
    write_atomic(path, synth::records_jsonl(records).as_bytes()).map_err(|e| write_err(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).map_err(|e| write_err(path, e))
}

fn read_labels(cfg: &PipelineConfig) -> Result<Vec<(String, Label)>> {
    let path = cfg
        .input
        .labels
        .as_ref()
        .ok_or_else(|| PipelineError::Config("input.labels is required for this stage".into()))?;
    Ok(classify::load_labels(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSummary {
    pub raw: usize,
    pub after_bots: usize,
    pub matched: usize,
    pub removed_users: usize,
    pub load_errors: usize,
}

impl FilterSummary {
    /// Matched records over raw records (0 for an empty corpus).
    pub fn reduction_ratio(&self) -> f64 {
        if self.raw == 0 {
            0.0
        } else {
            self.matched as f64 / self.raw as f64
        }
    }
}

/// Bot filter then keyword filter over the raw corpus.
pub fn run_filter(cfg: &PipelineConfig) -> Result<FilterSummary> {
    cfg.validate()?;
    let raw_path =
        cfg.input.raw.as_ref().ok_or_else(|| PipelineError::Config("input.raw is required for filter".into()))?;
    let loaded = load_corpus(raw_path, &cfg.input.fields, cfg.load_options())?;
    write_csv(
        &cfg.out("load_errors.csv"),
        &["line", "reason"],
        loaded.errors.iter().map(|e| [e.line.to_string(), e.reason.clone()]),
    )
    .map_err(|e| write_err(&cfg.out("load_errors.csv"), e))?;
    let raw = loaded.records.len();
    let bots = filter_bots(loaded.records, cfg.corpus.max_posts);
    let after_bots = bots.kept.len();
    let kw = filter_keywords(bots.kept, &cfg.scheme()?);
    let summary = FilterSummary {
        raw,
        after_bots,
        matched: kw.matched.len(),
        removed_users: bots.removed_users.len(),
        load_errors: loaded.errors.len(),
    };
    write_bytes(&cfg.out("keyword_counts.csv"), &kw.counts_csv())?;
    write_csv(
        &cfg.out("filter_summary.csv"),
        &["raw", "after_bots", "matched", "removed_users", "load_errors", "reduction_ratio"],
        [[
            summary.raw.to_string(),
            summary.after_bots.to_string(),
            summary.matched.to_string(),
            summary.removed_users.to_string(),
            summary.load_errors.to_string(),
            format!("{:.6}", summary.reduction_ratio()),
        ]],
    )
    .map_err(|e| write_err(&cfg.out("filter_summary.csv"), e))?;
    write_records(&cfg.out("filtered.jsonl"), &kw.into_records())?;
    if let Some(max) = cfg.corpus.max_reduction_ratio {
        if summary.reduction_ratio() > max {
            return Err(PipelineError::Data(format!(
                "reduction ratio {:.4} exceeds corpus.max_reduction_ratio {max}",
                summary.reduction_ratio()
            )));
        }
    }
    Ok(summary)
}

fn labeled_docs(cfg: &PipelineConfig, lemmatizer: &Lemmatizer) -> Result<Vec<LabeledDoc>> {
    let labels = read_labels(cfg)?;
    let records = read_stage_records(&cfg.filtered_path())?;
    Ok(labeled_set(&labels, &records, lemmatizer)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub validation_report: EvalReport,
    pub test_report: EvalReport,
}

fn fit(cfg: &PipelineConfig, docs: &[LabeledDoc]) -> Result<ClassifierModel<f64>> {
    let c = &cfg.classifier;
    let mut model = classify::train(c.trainer, docs, c.features, c.hyperparams(cfg.seed), c.min_df)?;
    model.threshold = c.threshold;
    Ok(model)
}

fn split_labeled(cfg: &PipelineConfig, docs: &[LabeledDoc]) -> Result<[Vec<LabeledDoc>; 3]> {
    Ok(split_dataset(docs, cfg.classifier.split, cfg.seed)?)
}

/// Seeded split; fit on train and score validation; refit on train +
/// validation and score the untouched test part. The refit model is saved.
pub fn run_train(cfg: &PipelineConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let lemmatizer = Lemmatizer::bundled();
    let docs = labeled_docs(cfg, &lemmatizer)?;
    let [train, val, test] = split_labeled(cfg, &docs)?;
    let first = fit(cfg, &train)?;
    let validation_report = evaluate(&first, &val)?;
    let combined: Vec<LabeledDoc> = train.iter().chain(&val).cloned().collect();
    let model = fit(cfg, &combined)?;
    let test_report = evaluate(&model, &test)?;

    model.save(&cfg.out("model.json")).map_err(|e| PipelineError::Internal(e.to_string()))?;
    write_csv(
        &cfg.out("train_report.csv"),
        &EvalReport::CSV_HEADER,
        [validation_report.csv_row("validation"), test_report.csv_row("test")],
    )
    .map_err(|e| write_err(&cfg.out("train_report.csv"), e))?;
    let assignments = [("train", &train), ("validation", &val), ("test", &test)]
        .into_iter()
        .flat_map(|(name, part)| part.iter().map(move |d| [d.record_id.clone(), name.to_owned()]));
    write_csv(&cfg.out("split.csv"), &["record_id", "split"], assignments)
        .map_err(|e| write_err(&cfg.out("split.csv"), e))?;
    Ok(TrainSummary { train: train.len(), validation: val.len(), test: test.len(), validation_report, test_report })
}

/// Scores the saved model on the test part of the seeded split.
pub fn run_eval(cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let lemmatizer = Lemmatizer::bundled();
    let model = ClassifierModel::<f64>::load(&cfg.model_path())?;
    let docs = labeled_docs(cfg, &lemmatizer)?;
    let [_, _, test] = split_labeled(cfg, &docs)?;
    let report = evaluate(&model, &test)?;
    write_bytes(&cfg.out("eval.csv"), &report.to_csv("test"))?;
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| PipelineError::Internal(e.to_string()))?;
    json.push('\n');
    write_bytes(&cfg.out("eval.json"), json.as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifySummary {
    pub input: usize,
    pub positive: usize,
}

/// Keeps electricity-related posts: manual labels where present, otherwise
/// the model's (or the external scorer's) decision.
pub fn run_classify(cfg: &PipelineConfig) -> Result<ClassifySummary> {
    cfg.validate()?;
    let lemmatizer = Lemmatizer::bundled();
    let records = read_stage_records(&cfg.filtered_path())?;
    let labels: BTreeMap<String, Label> = match &cfg.input.labels {
        Some(p) => classify::load_labels(p)?.into_iter().collect(),
        None => BTreeMap::new(),
    };
    let docs: Vec<TokenDoc> = records
        .iter()
        .map(|r| TokenDoc {
            record_id: r.id.clone(),
            tokens: textprep::preprocess(&r.text, &lemmatizer),
            phase: None,
            region: r.region.clone(),
        })
        .collect();
    let positives = match &cfg.input.scores {
        Some(path) => {
            let known: BTreeSet<String> = records.iter().map(|r| r.id.clone()).collect();
            let scores = load_external_scores(path, Some(&known))?;
            let scorer: Scorer<'_, f64> = Scorer::External { scores: &scores, threshold: cfg.classifier.threshold };
            classify_corpus(&scorer, &labels, &docs)?
        }
        None => {
            let model = ClassifierModel::<f64>::load(&cfg.model_path())?;
            classify_corpus(&Scorer::Model(&model), &labels, &docs)?
        }
    };
    let keep: BTreeSet<&str> = positives.iter().map(String::as_str).collect();
    let classified: Vec<TweetRecord> = records.iter().filter(|r| keep.contains(r.id.as_str())).cloned().collect();
    write_records(&cfg.out("classified.jsonl"), &classified)?;
    let mut ids = positives.join("\n");
    if !ids.is_empty() {
        ids.push('\n');
    }
    write_bytes(&cfg.out("positive_ids.txt"), ids.as_bytes())?;
    Ok(ClassifySummary { input: records.len(), positive: classified.len() })
}

/// Token documents ready for top-k counting, plus the phrase tables built
/// on the way.
pub struct TopicCorpus {
    pub tables: PhraseTables<f64>,
    pub docs: Vec<TokenDoc>,
}

/// The topic path: preprocess, build phrases over the whole corpus, merge
/// phrases, merge utility names, then drop stop words and known keywords.
pub fn topic_corpus(
    records: &[TweetRecord],
    windows: &PhaseWindows,
    scheme: &KeywordScheme,
    phrases: &PhraseConfig<f64>,
    entity_target: &str,
) -> Result<TopicCorpus> {
    let lemmatizer = Lemmatizer::bundled();
    let token_lists: Vec<Vec<String>> = records.iter().map(|r| textprep::preprocess(&r.text, &lemmatizer)).collect();
    let tables = build_phrase_tables(&token_lists, phrases)?;
    let target = term_token(entity_target);
    let entities: BTreeMap<String, String> =
        scheme.local_entities().iter().map(|e| (e.clone(), target.clone())).collect();
    let stopwords = StopwordList::english();
    let known = scheme.known_unigrams();
    let docs = records
        .iter()
        .zip(token_lists)
        .map(|(r, tokens)| {
            let doc = TokenDoc {
                record_id: r.id.clone(),
                tokens: tables.apply(&tokens),
                phase: windows.phase_of(r.timestamp).map(str::to_owned),
                region: r.region.clone(),
            };
            let merged = merge_entities(&doc, &entities);
            TokenDoc { tokens: remove_stopwords(&merged.tokens, &stopwords, &known), ..merged }
        })
        .collect();
    Ok(TopicCorpus { tables, docs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicsSummary {
    pub docs: usize,
    pub active_regions: Vec<String>,
}

/// Top-k terms per phase, engagement per phase and per active region, and
/// the supporting count tables.
pub fn run_topics(cfg: &PipelineConfig) -> Result<TopicsSummary> {
    cfg.validate()?;
    let records = read_stage_records(&cfg.classified_path())?;
    if records.is_empty() {
        return Err(PipelineError::Data("classified corpus is empty".into()));
    }
    let windows = cfg.windows()?;
    let defs = cfg.topic_definitions()?;
    let t = &cfg.topics;
    let corpus = topic_corpus(&records, &windows, &cfg.scheme()?, &cfg.phrases.config(), &t.entity_target)?;
    let phases: Vec<&str> = windows.names().collect();

    for phase in &phases {
        let scoped: Vec<&TokenDoc> = corpus.docs.iter().filter(|d| d.phase.as_deref() == Some(*phase)).collect();
        let top = top_k_terms(&scoped, t.k, t.tie_break, t.count_mode)?;
        write_bytes(&cfg.out(&format!("topk_terms_{phase}.csv")), &top_k_csv(&top))?;
    }
    let engagement = phase_engagement::<f64>(&corpus.docs, &phases, &defs)?;
    write_bytes(&cfg.out("engagement.csv"), &engagement.phase_csv())?;
    let regional = regional_breakdown::<f64>(&corpus.docs, &phases, &defs, t.min_docs)?;
    write_bytes(&cfg.out("county_engagement.csv"), &regional.region_csv())?;

    let counts = region_counts(&corpus.docs);
    let active = topics::active_regions(&corpus.docs, t.min_docs);
    write_csv(
        &cfg.out("region_counts.csv"),
        &["region", "posts", "included"],
        counts.iter().map(|(r, n)| [r.clone(), n.to_string(), active.contains(r).to_string()]),
    )
    .map_err(|e| write_err(&cfg.out("region_counts.csv"), e))?;

    let mut daily: BTreeMap<_, usize> = BTreeMap::new();
    for r in &records {
        *daily.entry(r.date()).or_default() += 1;
    }
    write_csv(
        &cfg.out("daily_counts.csv"),
        &["date", "phase", "posts"],
        daily.iter().map(|(d, n)| {
            let noon = d.and_hms_opt(12, 0, 0).expect("noon").and_utc();
            [d.to_string(), windows.phase_of(noon).unwrap_or("").to_owned(), n.to_string()]
        }),
    )
    .map_err(|e| write_err(&cfg.out("daily_counts.csv"), e))?;
    write_bytes(&cfg.out("bigrams.csv"), &corpus.tables.bigrams_csv())?;
    write_bytes(&cfg.out("trigrams.csv"), &corpus.tables.trigrams_csv())?;
    Ok(TopicsSummary { docs: corpus.docs.len(), active_regions: active })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub records: usize,
    pub labels: usize,
}

/// Writes a synthetic raw corpus and its labels into the output directory.
pub fn run_synth(cfg: &PipelineConfig) -> Result<SynthSummary> {
    cfg.validate()?;
    let corpus = synth::generate(&cfg.synth, &cfg.windows()?)?;
    write_bytes(&cfg.out("synth_raw.jsonl"), corpus.records_jsonl().as_bytes())?;
    write_bytes(&cfg.out("synth_labels.jsonl"), classify::labels_to_ndjson(&corpus.labels).as_bytes())?;
    Ok(SynthSummary { records: corpus.records.len(), labels: corpus.labels.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub filter: FilterSummary,
    pub train: Option<TrainSummary>,
    pub eval: Option<EvalReport>,
    pub classify: ClassifySummary,
    pub topics: TopicsSummary,
}

/// filter -> train -> eval -> classify -> topics. Training is skipped when
/// external scores are configured.
pub fn run_all(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    // later stages must read this run's outputs, not configured inputs
    let mut staged = cfg.clone();
    staged.input.filtered = None;
    staged.input.classified = None;
    let filter = run_filter(&staged)?;
    let (train, eval) = if staged.input.scores.is_some() {
        (None, None)
    } else {
        if staged.input.model.is_none() {
            (Some(run_train(&staged)?), Some(run_eval(&staged)?))
        } else {
            (None, Some(run_eval(&staged)?))
        }
    };
    let classify = run_classify(&staged)?;
    let topics = run_topics(&staged)?;
    Ok(RunSummary { filter, train, eval, classify, topics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
        let cfg = PipelineConfig::from_toml("", None).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = PipelineConfig::from_toml("sed = 1", None).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = PipelineConfig::from_toml("[topics]\nkk = 3", None).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            "[topics]\nk = 0",
            "[corpus]\nmax_posts = 0",
            "[classifier]\nsplit = [0.5, 0.5, 0.5]",
            "[corpus]\nkeywords = []",
            "[[phases]]\nname = \"a\"\nstart = \"2017-09-05\"\nend = \"2017-09-01\"",
            "[[topics.definitions]]\nname = \"x\"\nterms = [\"tree\"]\n[[topics.definitions]]\nname = \"y\"\nterms = [\"tree\"]",
        ] {
            let e = PipelineConfig::from_toml(text, None).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let cfg = PipelineConfig::from_toml("output_dir = \"o\"\n[input]\nraw = \"r.jsonl\"", Some(Path::new("/cfg")))
            .unwrap();
        assert_eq!(cfg.output_dir, Path::new("/cfg/o"));
        assert_eq!(cfg.input.raw.as_deref(), Some(Path::new("/cfg/r.jsonl")));
    }

    #[test]
    fn missing_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig { output_dir: dir.path().to_owned(), ..PipelineConfig::default() };
        assert_eq!(run_filter(&cfg).unwrap_err().exit_code(), 1);
        let cfg = PipelineConfig {
            input: InputConfig { raw: Some(dir.path().join("nope.jsonl")), ..InputConfig::default() },
            ..cfg
        };
        assert_eq!(run_filter(&cfg).unwrap_err().exit_code(), 2);
        assert_eq!(run_topics(&cfg).unwrap_err().exit_code(), 2);
    }
}
