//! The `lendwise` command-line tool.
//!
//! Every command reads its inputs from flags or a `--config` file, writes
//! CSV reports (plus a plain-text summary next to them) into `--out`, and
//! prints the paths it wrote. Usage errors exit with status 2, data errors
//! with status 1.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use lendwise_core::ml::ModelKind;
use lendwise_core::pipeline::{LoanTask, Selection};
use lendwise_core::select::Method;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "lendwise", version, about = "Recommend a traditional or a bidding loan to a P2P borrower")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean and encode the exports; report dropped rows and columns.
    Ingest,
    /// Compare mean interest per grade between the loan types.
    AnalyzeGrades,
    /// Cross-validate one or all models, selecting features inside each split.
    Cv,
    /// Run feature selection on the full data of a task.
    Select,
    /// Sweep the description sentiment of non-funded listings.
    SweepSentiment,
    /// Fit the three predictors and save them as a bundle.
    Train,
    /// Recommend a loan type for each borrower in `--input`.
    Recommend,
    /// Recommend for a set of past loans and compare with what happened.
    Portfolio {
        /// Sentiment given to every loan; defaults to the bundle's optimum.
        #[arg(long, allow_negative_numbers = true)]
        sentiment: Option<f64>,
    },
    /// Write seeded synthetic exports and a matching loan history.
    Synth {
        #[arg(long, default_value_t = 10_000)]
        n_traditional: usize,
        #[arg(long, default_value_t = 12_006)]
        n_bidding: usize,
        /// Past loans of each type in the history file.
        #[arg(long, default_value_t = 500)]
        history: usize,
        /// TOML file overriding the generator's parameters.
        #[arg(long)]
        synth_config: Option<PathBuf>,
    },
    /// Serve the bundle over HTTP.
    Serve,
}

#[derive(Debug, Args)]
pub struct Opts {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// linear|logit|rf|svm|knn, or `all` for `cv`.
    #[arg(long, global = true, value_parser = parse_model)]
    pub model: Option<ModelChoice>,
    /// forward|backward|recursive|exhaustive|none|baseline
    #[arg(long = "select", global = true, value_parser = parse_selection)]
    pub selection: Option<Selection>,
    /// trad-rate|bid-rate|bid-success; commands default to all three.
    #[arg(long, global = true, value_parser = parse_task)]
    pub task: Option<LoanTask>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Traditional loan export (CSV).
    #[arg(long, global = true)]
    pub traditional: Option<PathBuf>,
    /// Bidding listing export (CSV).
    #[arg(long, global = true)]
    pub bidding: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    pub traditional_schema: Option<PathBuf>,
    #[arg(long, global = true)]
    pub bidding_schema: Option<PathBuf>,
    /// Input CSV of `recommend` and `portfolio`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Model bundle; defaults to `<out>/bundle.json`.
    #[arg(long, global = true)]
    pub bundle: Option<PathBuf>,
    /// Outer cross-validation runs.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true)]
    pub split_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub sentiment_step: Option<f64>,
    #[arg(long, global = true)]
    pub bind: Option<String>,
    #[arg(long, global = true)]
    pub cors_origin: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    One(ModelKind),
    All,
}

fn parse_model(s: &str) -> Result<ModelChoice, String> {
    if s == "all" {
        return Ok(ModelChoice::All);
    }
    s.parse().map(ModelChoice::One).map_err(|e: lendwise_core::Error| e.to_string())
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    s.parse().map_err(|e: lendwise_core::Error| e.to_string())
}

fn parse_task(s: &str) -> Result<LoanTask, String> {
    s.parse().map_err(|e: lendwise_core::Error| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    Usage(String),
    /// Unreadable or invalid data; exit status 1.
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<lendwise_core::Error> for CliError {
    fn from(e: lendwise_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

/// Flags merged over the config file merged over the defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub traditional: Option<PathBuf>,
    pub bidding: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub traditional_schema: Option<PathBuf>,
    pub bidding_schema: Option<PathBuf>,
    pub seed: u64,
    pub model: ModelChoice,
    pub selection: Selection,
    pub task: Option<LoanTask>,
    pub runs: usize,
    pub split_ratio: f64,
    pub sentiment_step: f64,
    pub out: PathBuf,
    pub bundle: PathBuf,
    pub input: Option<PathBuf>,
    pub bind: SocketAddr,
    pub cors_origin: Option<String>,
}

impl Settings {
    pub fn resolve(o: &Opts) -> Result<Self, CliError> {
        let c = match &o.config {
            Some(p) => RunConfig::load(p).map_err(CliError::Usage)?,
            None => RunConfig::default(),
        };
        let usage = |e: String| CliError::Usage(e);
        let model = match (o.model, &c.model) {
            (Some(m), _) => m,
            (None, Some(s)) => parse_model(s).map_err(usage)?,
            (None, None) => ModelChoice::One(ModelKind::RandomForest),
        };
        let selection = match (o.selection, &c.select) {
            (Some(s), _) => s,
            (None, Some(s)) => parse_selection(s).map_err(usage)?,
            (None, None) => Selection::Search(Method::Recursive),
        };
        let task = match (o.task, &c.task) {
            (Some(t), _) => Some(t),
            (None, Some(s)) => Some(parse_task(s).map_err(usage)?),
            (None, None) => None,
        };
        let out = o.out.clone().or(c.out).unwrap_or_else(|| PathBuf::from("out"));
        let bind_s = o.bind.clone().or(c.bind).unwrap_or_else(|| "127.0.0.1:8080".into());
        let bind = bind_s
            .parse()
            .map_err(|_| CliError::Usage(format!("--bind: `{bind_s}` is not a host:port address")))?;
        Ok(Settings {
            traditional: o.traditional.clone().or(c.traditional),
            bidding: o.bidding.clone().or(c.bidding),
            lexicon: o.lexicon.clone().or(c.lexicon),
            traditional_schema: o.traditional_schema.clone().or(c.traditional_schema),
            bidding_schema: o.bidding_schema.clone().or(c.bidding_schema),
            seed: o.seed.or(c.seed).unwrap_or(0),
            model,
            selection,
            task,
            runs: o.runs.or(c.runs).unwrap_or(5),
            split_ratio: o.split_ratio.or(c.split_ratio).unwrap_or(0.8),
            sentiment_step: o
                .sentiment_step
                .or(c.sentiment_step)
                .unwrap_or(lendwise_core::sentiment_opt::DEFAULT_STEP),
            bundle: o.bundle.clone().or(c.bundle).unwrap_or_else(|| out.join("bundle.json")),
            out,
            input: o.input.clone().or(c.input),
            bind,
            cors_origin: o.cors_origin.clone().or(c.cors_origin),
        })
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = Settings::resolve(&cli.opts).and_then(|s| commands::execute(&cli.command, &s));
    match result {
        Ok(written) => {
            for p in written {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
