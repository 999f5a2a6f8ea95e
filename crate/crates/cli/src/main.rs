use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridsense::classify::{EvalReport, FeatureMode, TrainerKind};
use gridsense::pipeline::{self, PipelineConfig, PipelineError};
use gridsense::topics::TieBreak;

#[derive(Parser)]
#[command(name = "gridsense", version, about = "Power-outage signal extraction from geotagged posts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop heavy posters and keep keyword matches
    Filter(Opts),
    /// Split labels, fit, validate, refit on train+validation and test
    Train(Opts),
    /// Score the saved model on the held-out split
    Eval(Opts),
    /// Keep electricity-related posts using the model or a score file
    Classify(Opts),
    /// Phrase detection, top-k terms and topic engagement
    Topics(Opts),
    /// Write a synthetic raw corpus and labels
    Synth(Opts),
    /// filter, train, eval, classify and topics in one go
    RunAll(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum Trainer {
    Lr,
    Svm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Features {
    Bow,
    Tfidf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ties {
    Lexicographic,
    FirstSeen,
}

#[derive(Args)]
struct Opts {
    /// TOML config; relative paths inside it resolve against its directory
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Raw posts (JSON lines)
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Filtered posts from an earlier `filter` run
    #[arg(long)]
    filtered: Option<PathBuf>,
    /// Classified posts from an earlier `classify` run
    #[arg(long)]
    classified: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// External `{record_id, score}` file used instead of the model
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_posts: Option<usize>,
    #[arg(long, value_enum)]
    trainer: Option<Trainer>,
    #[arg(long, value_enum)]
    features: Option<Features>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_docs: Option<usize>,
    #[arg(long, value_enum)]
    tie_break: Option<Ties>,
    /// Number of synthetic records
    #[arg(long)]
    records: Option<usize>,
}

impl Opts {
    fn config(&self, required: bool) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None if required => return Err(PipelineError::Config("--config is required for run-all".into())),
            None => PipelineConfig::default(),
        };
        let set = |dst: &mut Option<PathBuf>, src: &Option<PathBuf>| {
            if src.is_some() {
                dst.clone_from(src);
            }
        };
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        set(&mut cfg.input.raw, &self.input);
        set(&mut cfg.input.labels, &self.labels);
        set(&mut cfg.input.filtered, &self.filtered);
        set(&mut cfg.input.classified, &self.classified);
        set(&mut cfg.input.model, &self.model);
        set(&mut cfg.input.scores, &self.scores);
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.synth.seed = s;
        }
        if let Some(m) = self.max_posts {
            cfg.corpus.max_posts = m;
        }
        if let Some(t) = self.trainer {
            cfg.classifier.trainer = match t {
                Trainer::Lr => TrainerKind::Lr,
                Trainer::Svm => TrainerKind::Svm,
            };
        }
        if let Some(f) = self.features {
            cfg.classifier.features = match f {
                Features::Bow => FeatureMode::Bow,
                Features::Tfidf => FeatureMode::Tfidf,
            };
        }
        if let Some(t) = self.threshold {
            cfg.classifier.threshold = t;
        }
        if let Some(k) = self.k {
            cfg.topics.k = k;
        }
        if let Some(m) = self.min_docs {
            cfg.topics.min_docs = m;
        }
        if let Some(t) = self.tie_break {
            cfg.topics.tie_break = match t {
                Ties::Lexicographic => TieBreak::Lexicographic,
                Ties::FirstSeen => TieBreak::FirstSeen,
            };
        }
        if let Some(n) = self.records {
            cfg.synth.records = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn print_report(name: &str, r: &EvalReport) {
    println!(
        "{name}: precision {} recall {} f1 {} (tp {} fp {} fn {} tn {})",
        metric(r.precision),
        metric(r.recall),
        metric(r.f1),
        r.tp,
        r.fp,
        r.fn_,
        r.tn
    );
}

fn print_filter(s: &pipeline::FilterSummary) {
    println!(
        "filter: {} raw, {} after bot removal ({} users removed), {} matched, reduction ratio {:.4}",
        s.raw,
        s.after_bots,
        s.removed_users,
        s.matched,
        s.reduction_ratio()
    );
    if s.load_errors > 0 {
        println!("filter: {} malformed records skipped, see load_errors.csv", s.load_errors);
    }
}

fn print_train(s: &pipeline::TrainSummary) {
    println!("train: split {}/{}/{}", s.train, s.validation, s.test);
    print_report("validation", &s.validation_report);
    print_report("test", &s.test_report);
}

fn print_topics(s: &pipeline::TopicsSummary) {
    println!("topics: {} documents, regions included: {}", s.docs, s.active_regions.join(", "));
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Filter(o) => print_filter(&pipeline::run_filter(&o.config(false)?)?),
        Command::Train(o) => print_train(&pipeline::run_train(&o.config(false)?)?),
        Command::Eval(o) => print_report("test", &pipeline::run_eval(&o.config(false)?)?),
        Command::Classify(o) => {
            let s = pipeline::run_classify(&o.config(false)?)?;
            println!("classify: {} of {} posts are electricity-related", s.positive, s.input);
        }
        Command::Topics(o) => print_topics(&pipeline::run_topics(&o.config(false)?)?),
        Command::Synth(o) => {
            let s = pipeline::run_synth(&o.config(false)?)?;
            println!("synth: {} records, {} labels", s.records, s.labels);
        }
        Command::RunAll(o) => {
            let s = pipeline::run_all(&o.config(true)?)?;
            print_filter(&s.filter);
            if let Some(t) = &s.train {
                print_train(t);
            }
            if let Some(e) = &s.eval {
                print_report("eval", e);
            }
            println!("classify: {} of {} posts are electricity-related", s.classify.positive, s.classify.input);
            print_topics(&s.topics);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage mistakes are configuration errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("gridsense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
