//! Electricity-infrastructure condition sensing from geotagged social-media posts.
//!
//! The crate is organised as a batch pipeline:
//!
//! - [`corpus`]: ingestion, disaster-phase windows, bot and keyword filters
//! - [`textprep`]: cleaning, tokenization, lemmatization, stop-word removal
//! - [`classify`]: BOW/TFIDF featurization, logistic-regression and linear-SVM
//!   trainers, evaluation and the external-score bridge
//! - [`phrases`]: bigram/trigram phrase tables and phrase merging
//! - [`topics`]: top-k terms, aggregated topics and topic engagement
//! - [`pipeline`]: config-driven stages producing the CSV reports
//! - [`synth`]: seeded synthetic corpora and bundled fixtures
//!
//! Numerical code is generic over the scalar type (see [`scalar`]); the type
//! aliases below pin the common instantiations.

pub mod classify;
pub mod corpus;
pub mod io;
pub mod phrases;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod textprep;
pub mod topics;

pub use scalar::{Real, Scalar};

/// Exact rational used for oracle-grade phrase scores and engagement ratios.
pub type Exact = num_rational::Ratio<i128>;

pub type Model = classify::ClassifierModel<f64>;
pub type Features = classify::FeatureVector<f64>;
pub type Phrases = phrases::PhraseTables<f64>;
pub type ExactPhrases = phrases::PhraseTables<Exact>;
pub type Report = topics::EngagementReport<f64>;
pub type ExactReport = topics::EngagementReport<Exact>;
