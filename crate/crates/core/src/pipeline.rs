//! The modelling workflow end to end: clean and encode both exports, pick
//! features, cross-validate, and train the three predictors behind a
//! recommendation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{
    filter_table, split_montecarlo, Dataset, DatasetKind, DropReport, FilterPolicy, RawTable, SplitPlan,
    BORROWER_RATE, LOAN_STATUS,
};
use crate::encoding::{encode_dataset, EncodingSchema, SentimentLexicon, SENTIMENT_FEATURE};
use crate::eval::{confusion, ConfusionMatrix};
use crate::ml::{fit, score, ModelKind, ModelSpec, Task, TrainedModel};
use crate::recommend::ModelBundle;
use crate::select::{baseline_preset, select, Method, SelectionReport};
use crate::sentiment_opt::{optimal_sentiment, sweep_sentiment, uplift_report, SweepCurve, Uplift};
use crate::{rng, Error, Result};

/// How the feature subset of a model is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Every available feature.
    None,
    /// The fixed feature list of the earlier bidding model.
    Baseline,
    Search(Method),
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::None => f.write_str("none"),
            Selection::Baseline => f.write_str("baseline"),
            Selection::Search(m) => m.fmt(f),
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Selection::None),
            "baseline" => Ok(Selection::Baseline),
            other => Ok(Selection::Search(other.parse()?)),
        }
    }
}

/// The three prediction problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoanTask {
    TradRate,
    BidRate,
    BidSuccess,
}

impl LoanTask {
    pub const ALL: [LoanTask; 3] = [LoanTask::TradRate, LoanTask::BidRate, LoanTask::BidSuccess];

    pub fn task(self) -> Task {
        match self {
            LoanTask::BidSuccess => Task::Classification,
            _ => Task::Regression,
        }
    }

    /// Spec for `kind` on this task. Linear and logistic regression stand in
    /// for each other when the task needs the other family.
    pub fn spec(self, kind: ModelKind, seed: u64) -> Result<ModelSpec> {
        let kind = match (kind, self.task()) {
            (ModelKind::Linear, Task::Classification) => ModelKind::Logit,
            (ModelKind::Logit, Task::Regression) => ModelKind::Linear,
            (k, _) => k,
        };
        Ok(ModelSpec::new(kind, self.task())?.seed(seed))
    }

    /// Position in [`LoanTask::ALL`]; also the seed stream of the task.
    pub fn index(self) -> u64 {
        match self {
            LoanTask::TradRate => 0,
            LoanTask::BidRate => 1,
            LoanTask::BidSuccess => 2,
        }
    }
}

impl fmt::Display for LoanTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoanTask::TradRate => "trad-rate",
            LoanTask::BidRate => "bid-rate",
            LoanTask::BidSuccess => "bid-success",
        })
    }
}

impl FromStr for LoanTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trad-rate" => Ok(LoanTask::TradRate),
            "bid-rate" => Ok(LoanTask::BidRate),
            "bid-success" => Ok(LoanTask::BidSuccess),
            other => Err(Error::invalid(format!(
                "unknown task `{other}` (expected trad-rate, bid-rate or bid-success)"
            ))),
        }
    }
}

/// Both exports cleaned and encoded, with the schemas resolved against them.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    /// Traditional loans, response BorrowerRate.
    pub traditional: Dataset,
    /// All bidding listings, response funded/not funded.
    pub bidding: Dataset,
    /// All bidding listings, response BorrowerRate.
    pub bidding_rates: Dataset,
    pub traditional_schema: EncodingSchema,
    pub bidding_schema: EncodingSchema,
    pub traditional_report: DropReport,
    pub bidding_report: DropReport,
}

fn clean(t: &RawTable, expect: DatasetKind) -> Result<(RawTable, DropReport)> {
    if t.kind != expect {
        return Err(Error::invalid(format!("expected a {expect} export, got {}", t.kind)));
    }
    let f = filter_table(t, &FilterPolicy::bundled(t.kind));
    Ok((f.table, f.report))
}

/// Cleans and encodes both exports with the given schemas.
pub fn prepare(
    traditional: &RawTable,
    bidding: &RawTable,
    traditional_schema: &EncodingSchema,
    bidding_schema: &EncodingSchema,
    lex: &SentimentLexicon,
) -> Result<Prepared> {
    let (trad, traditional_report) = clean(traditional, DatasetKind::Traditional)?;
    let (bid, bidding_report) = clean(bidding, DatasetKind::Bidding)?;
    Ok(Prepared {
        traditional: encode_dataset(&trad, traditional_schema, lex, BORROWER_RATE)?,
        bidding: encode_dataset(&bid, bidding_schema, lex, LOAN_STATUS)?,
        bidding_rates: encode_dataset(&bid, bidding_schema, lex, BORROWER_RATE)?,
        traditional_schema: traditional_schema.resolve(&trad)?,
        bidding_schema: bidding_schema.resolve(&bid)?,
        traditional_report,
        bidding_report,
    })
}

impl Prepared {
    /// Training data of a task: all traditional loans, funded bidding loans
    /// for the bidding rate, and a funded/non-funded balanced sample for
    /// bidding success.
    pub fn task_data(&self, task: LoanTask, seed: u64) -> Dataset {
        match task {
            LoanTask::TradRate => self.traditional.clone(),
            LoanTask::BidRate => {
                let rows: Vec<usize> = (0..self.bidding.n_rows()).filter(|&i| self.bidding.y[i] == 1.0).collect();
                self.bidding_rates.subset(&rows)
            }
            LoanTask::BidSuccess => self.bidding.balanced(seed),
        }
    }

    /// Loans that were not funded, for the sentiment sweep.
    pub fn non_funded(&self) -> Dataset {
        self.bidding.filter_response(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub features: Vec<String>,
    pub report: Option<SelectionReport>,
}

/// Feature subset for `spec` on `d`; searches score subsets on `inner`
/// splits of `d` only.
pub fn choose_features(spec: &ModelSpec, d: &Dataset, selection: Selection, inner: &SplitPlan) -> Result<Chosen> {
    match selection {
        Selection::None => Ok(Chosen {
            features: d.feature_names.clone(),
            report: None,
        }),
        Selection::Baseline => {
            let features = baseline_preset();
            d.feature_indices(&features)?;
            Ok(Chosen { features, report: None })
        }
        Selection::Search(m) => {
            let report = select(m, spec, d, inner)?;
            Ok(Chosen {
                features: report.selected.clone(),
                report: Some(report),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedCvReport {
    pub spec: ModelSpec,
    pub selection: Selection,
    /// `r2` or `accuracy`.
    pub metric: String,
    pub runs: Vec<f64>,
    pub mean: f64,
    /// Features chosen inside each outer run.
    pub features: Vec<Vec<String>>,
    pub confusion: Vec<ConfusionMatrix>,
}

/// Monte-Carlo CV with feature selection redone inside every outer training
/// split, so the held-out rows never influence the chosen subset.
pub fn nested_cv(spec: &ModelSpec, d: &Dataset, selection: Selection, outer: &SplitPlan) -> Result<NestedCvReport> {
    let splits = split_montecarlo(d, outer)?;
    let mut runs = Vec::with_capacity(splits.len());
    let mut features = Vec::with_capacity(splits.len());
    let mut matrices = Vec::new();
    for (k, (train, test)) in splits.iter().enumerate() {
        let inner = SplitPlan::inner(rng::derive(outer.seed, 1000 + k as u64));
        let chosen = choose_features(spec, train, selection, &inner)?;
        let m = fit(spec, &train.select_features(&chosen.features)?)?;
        let test = test.select_features(&chosen.features)?;
        runs.push(score(&m, &test)?);
        if spec.is_classification() {
            matrices.push(confusion(&test.y, &m.predict_labels(&test.x)?)?);
        }
        features.push(chosen.features);
    }
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    Ok(NestedCvReport {
        spec: spec.clone(),
        selection,
        metric: if spec.is_classification() { "accuracy" } else { "r2" }.into(),
        runs,
        mean,
        features,
        confusion: matrices,
    })
}

impl NestedCvReport {
    /// One row per report: `model,selection,metric,run1..runK,mean`.
    pub fn write_csv<W: Write>(reports: &[NestedCvReport], w: W) -> Result<()> {
        let k = reports.iter().map(|r| r.runs.len()).max().unwrap_or(0);
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["model".to_string(), "selection".into(), "metric".into()];
        header.extend((1..=k).map(|i| format!("run{i}")));
        header.push("mean".into());
        out.write_record(&header)?;
        for r in reports {
            let mut row = vec![r.spec.kind().to_string(), r.selection.to_string(), r.metric.clone()];
            row.extend(r.runs.iter().map(|v| format!("{v:.4}")));
            row.extend(std::iter::repeat_n(String::new(), k - r.runs.len()));
            row.push(format!("{:.4}", r.mean));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }

    /// `run,tp,fp,fn,tn` per outer run.
    pub fn write_confusion_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "tp", "fp", "fn", "tn"])?;
        for (k, c) in self.confusion.iter().enumerate() {
            out.write_record([k + 1, c.tp, c.fp, c.fn_, c.tn].map(|v| v.to_string()))?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }

    /// `run,features` with features joined by `;`.
    pub fn write_features_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "features"])?;
        for (k, f) in self.features.iter().enumerate() {
            out.write_record([(k + 1).to_string(), f.join(";")])?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    /// Applied to every task, except that the baseline preset (a bidding
    /// feature list) leaves the traditional model on all features.
    pub selection: Selection,
    pub seed: u64,
    /// Sweep step for the optimal sentiment; `None` skips the sweep.
    pub sentiment_step: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::RandomForest,
            selection: Selection::Search(Method::Recursive),
            seed: 0,
            sentiment_step: Some(crate::sentiment_opt::DEFAULT_STEP),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub chosen: Vec<(LoanTask, Chosen)>,
    pub sweep: Option<SweepCurve>,
    pub uplift: Option<Uplift>,
}

/// Selects features for and fits one task.
pub fn train_task(p: &Prepared, task: LoanTask, cfg: &TrainConfig) -> Result<(TrainedModel, Chosen)> {
    let seed = rng::derive(cfg.seed, task.index());
    let spec = task.spec(cfg.model, seed)?;
    let d = p.task_data(task, seed);
    let selection = match (task, cfg.selection) {
        (LoanTask::TradRate, Selection::Baseline) => Selection::None,
        (_, s) => s,
    };
    let chosen = choose_features(&spec, &d, selection, &SplitPlan::inner(rng::derive(seed, 1)))?;
    let m = fit(&spec, &d.select_features(&chosen.features)?)?;
    Ok((m, chosen))
}

/// Trains all three predictors and, when the success model uses the
/// sentiment feature, sweeps the non-funded listings for the best sentiment.
pub fn train_bundle(p: &Prepared, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut models = Vec::with_capacity(3);
    let mut chosen = Vec::with_capacity(3);
    for task in LoanTask::ALL {
        let (m, c) = train_task(p, task, cfg)?;
        models.push(m);
        chosen.push((task, c));
    }
    let bidding_success = models.pop().expect("three models");
    let bidding_rate = models.pop().expect("three models");
    let traditional_rate = models.pop().expect("three models");

    let (mut sweep, mut uplift, mut optimal) = (None, None, None);
    if let Some(step) = cfg.sentiment_step {
        let non_funded = p.non_funded();
        if bidding_success.uses_feature(SENTIMENT_FEATURE) && !non_funded.is_empty() {
            let curve = sweep_sentiment(&bidding_success, &non_funded, step)?;
            let (g, _) = optimal_sentiment(&curve)?;
            uplift = Some(uplift_report(&bidding_success, &p.bidding, g)?);
            optimal = Some(g);
            sweep = Some(curve);
        }
    }
    let bundle = ModelBundle {
        traditional_rate,
        bidding_rate,
        bidding_success,
        traditional_schema: p.traditional_schema.clone(),
        bidding_schema: p.bidding_schema.clone(),
        optimal_sentiment: optimal,
    };
    bundle.validate()?;
    Ok(TrainOutcome {
        bundle,
        chosen,
        sweep,
        uplift,
    })
}
