use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lendwise_core::data::synth::{synth_history, synth_tables, SynthConfig};
use lendwise_core::data::{filter_table, load_table, DatasetKind, FilterPolicy, RawTable, SplitPlan};
use lendwise_core::encoding::{encode_dataset, EncodingSchema, SentimentLexicon, SENTIMENT_FEATURE};
use lendwise_core::eval::analyze_grades;
use lendwise_core::ml::{ModelKind, Task};
use lendwise_core::pipeline::{choose_features, nested_cv, prepare, train_bundle, LoanTask, NestedCvReport, Prepared, TrainConfig};
use lendwise_core::recommend::{
    self, portfolio_eval, read_borrowers, read_history, write_history, write_recommendations, ModelBundle,
};
use lendwise_core::rng;
use lendwise_core::sentiment_opt::{optimal_sentiment, sweep_sentiment, uplift_report};

use crate::{CliError, Command, ModelChoice, Settings};

type Result<T> = std::result::Result<T, CliError>;

/// Collects the files a command writes under the output directory.
struct Out {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Out {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn file(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> lendwise_core::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let io = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w)?;
        w.flush().map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.file(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| lendwise_core::Error::Io {
                    path: name.into(),
                    source: e,
                })
        })
    }
}

fn finish<W: Write>(mut c: csv::Writer<W>, name: &str) -> lendwise_core::Result<()> {
    c.flush().map_err(|e| lendwise_core::Error::Io {
        path: name.into(),
        source: e,
    })
}

fn lexicon(s: &Settings) -> Result<SentimentLexicon> {
    Ok(match &s.lexicon {
        Some(p) => SentimentLexicon::load(p)?,
        None => SentimentLexicon::bundled(),
    })
}

fn schema(s: &Settings, kind: DatasetKind) -> Result<EncodingSchema> {
    let path = match kind {
        DatasetKind::Traditional => &s.traditional_schema,
        DatasetKind::Bidding => &s.bidding_schema,
    };
    Ok(match path {
        Some(p) => EncodingSchema::load(p)?,
        None => EncodingSchema::bundled(kind),
    })
}

fn table(s: &Settings, kind: DatasetKind) -> Result<Option<RawTable>> {
    let path = match kind {
        DatasetKind::Traditional => &s.traditional,
        DatasetKind::Bidding => &s.bidding,
    };
    path.as_ref().map(|p| load_table(p, kind).map_err(CliError::from)).transpose()
}

fn required_table(s: &Settings, kind: DatasetKind) -> Result<RawTable> {
    table(s, kind)?.ok_or_else(|| {
        CliError::Usage(format!("no {kind} export: pass --{kind} or set `{kind}` in the config"))
    })
}

fn prepared(s: &Settings) -> Result<Prepared> {
    let t = required_table(s, DatasetKind::Traditional)?;
    let b = required_table(s, DatasetKind::Bidding)?;
    Ok(prepare(
        &t,
        &b,
        &schema(s, DatasetKind::Traditional)?,
        &schema(s, DatasetKind::Bidding)?,
        &lexicon(s)?,
    )?)
}

fn bundle(s: &Settings) -> Result<ModelBundle> {
    Ok(ModelBundle::load(&s.bundle)?)
}

fn input(s: &Settings) -> Result<File> {
    let p = s
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --input <csv>".into()))?;
    File::open(p).map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))
}

fn tasks(s: &Settings) -> Vec<LoanTask> {
    s.task.map_or_else(|| LoanTask::ALL.to_vec(), |t| vec![t])
}

fn single_model(s: &Settings) -> Result<ModelKind> {
    match s.model {
        ModelChoice::One(k) => Ok(k),
        ModelChoice::All => Err(CliError::Usage("--model all is only accepted by `cv`".into())),
    }
}

fn task_seed(s: &Settings, task: LoanTask) -> u64 {
    rng::derive(s.seed, task.index())
}

pub(crate) fn execute(cmd: &Command, s: &Settings) -> Result<Vec<PathBuf>> {
    let mut out = Out::new(&s.out)?;
    match cmd {
        Command::Ingest => ingest(s, &mut out)?,
        Command::AnalyzeGrades => grades(s, &mut out)?,
        Command::Cv => cv(s, &mut out)?,
        Command::Select => select(s, &mut out)?,
        Command::SweepSentiment => sweep(s, &mut out)?,
        Command::Train => train(s, &mut out)?,
        Command::Recommend => recommend_cmd(s, &mut out)?,
        Command::Portfolio { sentiment } => portfolio(s, *sentiment, &mut out)?,
        Command::Synth {
            n_traditional,
            n_bidding,
            history,
            synth_config,
        } => synth(s, *n_traditional, *n_bidding, *history, synth_config.as_deref(), &mut out)?,
        Command::Serve => serve(s)?,
    }
    Ok(out.written)
}

fn ingest(s: &Settings, out: &mut Out) -> Result<()> {
    let lex = lexicon(s)?;
    let mut summary = String::new();
    let mut rows = Vec::new();
    for kind in [DatasetKind::Traditional, DatasetKind::Bidding] {
        let Some(t) = table(s, kind)? else { continue };
        let f = filter_table(&t, &FilterPolicy::bundled(kind));
        let response = match kind {
            DatasetKind::Traditional => lendwise_core::data::BORROWER_RATE,
            DatasetKind::Bidding => lendwise_core::data::LOAN_STATUS,
        };
        let d = encode_dataset(&f.table, &schema(s, kind)?, &lex, response)?;
        out.file(&format!("{kind}_encoded.csv"), |w| d.write_csv(w))?;
        let _ = write!(summary, "[{kind}]\n{}features: {}\n\n", f.report, d.n_features());
        rows.push((kind, f.report, d.n_features()));
    }
    if rows.is_empty() {
        return Err(CliError::Usage("ingest needs --traditional and/or --bidding".into()));
    }
    out.file("ingest.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "dataset",
            "rows_in",
            "rows_out",
            "rows_with_missing",
            "features",
            "post_origination_columns",
            "constant_or_blank_columns",
        ])?;
        for (kind, r, nf) in &rows {
            c.write_record([
                kind.to_string(),
                r.rows_in.to_string(),
                r.rows_out.to_string(),
                r.rows_with_missing.to_string(),
                nf.to_string(),
                r.post_origination_columns.join(";"),
                r.constant_or_blank_columns.join(";"),
            ])?;
        }
        finish(c, "ingest.csv")
    })?;
    out.text("ingest.txt", &summary)
}

fn grades(s: &Settings, out: &mut Out) -> Result<()> {
    let p = prepared(s)?;
    let bid = p.task_data(LoanTask::BidRate, s.seed);
    let r = analyze_grades(&p.traditional, &bid)?;
    out.file("grades.csv", |w| r.write_csv(w))?;
    let mut text = format!(
        "traditional loans: {}\nfunded bidding loans: {}\n",
        p.traditional.n_rows(),
        bid.n_rows()
    );
    for row in &r.rows {
        let verdict = match row.test {
            Some(t) if row.computed => format!("t = {:.3}, p = {:.4}{}", t.t, t.p, if t.reject() { ", different" } else { "" }),
            _ => "not computed".into(),
        };
        let _ = writeln!(
            text,
            "{}: traditional {:.4}, bidding {:.4}; {verdict}",
            row.grade, row.mean_traditional, row.mean_bidding
        );
    }
    out.text("grades.txt", &text)
}

fn cv(s: &Settings, out: &mut Out) -> Result<()> {
    let p = prepared(s)?;
    let kinds = match s.model {
        ModelChoice::One(k) => vec![k],
        ModelChoice::All => vec![ModelKind::Linear, ModelKind::RandomForest, ModelKind::Svm, ModelKind::Knn],
    };
    for task in tasks(s) {
        let seed = task_seed(s, task);
        let d = p.task_data(task, seed);
        let outer = SplitPlan::new(s.split_ratio, s.runs, seed)?;
        let mut reports = Vec::new();
        let mut text = format!("task: {task}\nrows: {}\nouter splits: {} at {}\n", d.n_rows(), s.runs, s.split_ratio);
        for &k in &kinds {
            let spec = task.spec(k, seed)?;
            log::info!("cv {task} {k} {}", s.selection);
            let r = nested_cv(&spec, &d, s.selection, &outer)?;
            let model = spec.kind();
            out.file(&format!("cv_{task}_{model}_features.csv"), |w| r.write_features_csv(w))?;
            if task.task() == Task::Classification {
                out.file(&format!("cv_{task}_{model}_confusion.csv"), |w| r.write_confusion_csv(w))?;
            }
            let _ = writeln!(text, "{model} ({}): mean {} {:.4}", s.selection, r.metric, r.mean);
            reports.push(r);
        }
        out.file(&format!("cv_{task}.csv"), |w| NestedCvReport::write_csv(&reports, w))?;
        out.text(&format!("cv_{task}.txt"), &text)?;
    }
    Ok(())
}

fn select(s: &Settings, out: &mut Out) -> Result<()> {
    let p = prepared(s)?;
    let kind = single_model(s)?;
    for task in tasks(s) {
        let seed = task_seed(s, task);
        let spec = task.spec(kind, seed)?;
        let d = p.task_data(task, seed);
        let c = choose_features(&spec, &d, s.selection, &SplitPlan::inner(rng::derive(seed, 1)))?;
        let name = format!("select_{task}");
        match &c.report {
            Some(r) => {
                out.file(&format!("{name}.csv"), |w| r.write_trajectory_csv(w))?;
                out.text(&format!("{name}.txt"), &format!("task: {task}\nmodel: {}\n{}", spec.kind(), r.summary()))?;
            }
            None => {
                out.file(&format!("{name}.csv"), |w| {
                    let mut c2 = csv::Writer::from_writer(w);
                    c2.write_record(["feature"])?;
                    for f in &c.features {
                        c2.write_record([f])?;
                    }
                    finish(c2, "select.csv")
                })?;
                out.text(
                    &format!("{name}.txt"),
                    &format!("task: {task}\nselection: {}\nselected: {}\n", s.selection, c.features.join(", ")),
                )?;
            }
        }
    }
    Ok(())
}

fn sweep(s: &Settings, out: &mut Out) -> Result<()> {
    let p = prepared(s)?;
    let b = bundle(s)?;
    let m = &b.bidding_success;
    if !m.uses_feature(SENTIMENT_FEATURE) {
        return Err(CliError::Data(format!(
            "the bundle's success model does not use {SENTIMENT_FEATURE}; nothing to sweep"
        )));
    }
    let non_funded = p.non_funded();
    let curve = sweep_sentiment(m, &non_funded, s.sentiment_step)?;
    let (g, best) = optimal_sentiment(&curve)?;
    let u = uplift_report(m, &p.bidding, g)?;
    out.file("sentiment_sweep.csv", |w| curve.write_csv(w))?;
    let test = u
        .test
        .map_or("not computed".to_string(), |t| format!("t = {:.3}, p = {:.3e}", t.t, t.p));
    out.text(
        "sentiment_sweep.txt",
        &format!(
            "non-funded listings: {}\noptimal sentiment: {g:.2} ({best} predicted funded)\nfunded before: {}\nfunded after: {}\nwelch: {test}\n",
            curve.n_loans, u.before, u.after
        ),
    )
}

fn train(s: &Settings, out: &mut Out) -> Result<()> {
    let p = prepared(s)?;
    let cfg = TrainConfig {
        model: single_model(s)?,
        selection: s.selection,
        seed: s.seed,
        sentiment_step: Some(s.sentiment_step),
    };
    let t = train_bundle(&p, &cfg)?;
    if let Some(dir) = s.bundle.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    t.bundle.save(&s.bundle)?;
    out.written.push(s.bundle.clone());
    out.file("train_features.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["task", "model", "features"])?;
        for ((task, chosen), m) in t.chosen.iter().zip([&t.bundle.traditional_rate, &t.bundle.bidding_rate, &t.bundle.bidding_success]) {
            c.write_record([task.to_string(), m.kind().to_string(), chosen.features.join(";")])?;
        }
        finish(c, "train_features.csv")
    })?;
    let mut text = format!("model: {}\nselection: {}\nseed: {}\n", cfg.model, cfg.selection, cfg.seed);
    for (task, c) in &t.chosen {
        let _ = writeln!(text, "{task}: {} features", c.features.len());
    }
    if let Some(curve) = &t.sweep {
        out.file("sentiment_sweep.csv", |w| curve.write_csv(w))?;
    }
    match (t.bundle.optimal_sentiment, &t.uplift) {
        (Some(g), Some(u)) => {
            let _ = writeln!(text, "optimal sentiment: {g:.2}\nfunded before: {}\nfunded after: {}", u.before, u.after);
        }
        _ => text.push_str("optimal sentiment: not computed\n"),
    }
    out.text("train.txt", &text)
}

fn recommend_cmd(s: &Settings, out: &mut Out) -> Result<()> {
    let b = bundle(s)?;
    let lex = lexicon(s)?;
    let borrowers = read_borrowers(input(s)?)?;
    let recs = borrowers
        .iter()
        .enumerate()
        .map(|(i, r)| {
            recommend::recommend(r, &b, &lex).map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    out.file("recommendations.csv", |w| write_recommendations(&recs, w))?;
    let bidding = recs.iter().filter(|r| r.chosen == DatasetKind::Bidding).count();
    out.text(
        "recommendations.txt",
        &format!(
            "borrowers: {}\ntraditional: {}\nbidding: {bidding}\n",
            recs.len(),
            recs.len() - bidding
        ),
    )
}

fn portfolio(s: &Settings, sentiment: Option<f64>, out: &mut Out) -> Result<()> {
    let b = bundle(s)?;
    let lex = lexicon(s)?;
    let history = read_history(input(s)?)?;
    let g = sentiment.or(b.optimal_sentiment);
    let (sum, recs) = portfolio_eval(&history, &b, &lex, g)?;
    out.file("portfolio.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["metric", "historical", "recommended"])?;
        c.write_record(["funded".to_string(), sum.historical_funded.to_string(), format!("{:.2}", sum.expected_funded)])?;
        c.write_record([
            "mean_rate".to_string(),
            format!("{:.4}", sum.historical_mean_rate),
            format!("{:.4}", sum.mean_predicted_rate),
        ])?;
        finish(c, "portfolio.csv")
    })?;
    out.file("portfolio_recommendations.csv", |w| write_recommendations(&recs, w))?;
    let g_text = g.map_or("as described".to_string(), |g| format!("{g:.2}"));
    out.text(
        "portfolio.txt",
        &format!(
            "loans: {} ({} skipped for missing fields)\nsentiment: {g_text}\nrecommended traditional: {}\nrecommended bidding: {}\nfunded: {} historical, {:.2} recommended\nmean rate: {:.4} historical, {:.4} recommended\n",
            sum.n_loans,
            sum.skipped,
            sum.recommended_traditional,
            sum.recommended_bidding,
            sum.historical_funded,
            sum.expected_funded,
            sum.historical_mean_rate,
            sum.mean_predicted_rate
        ),
    )
}

fn synth(
    s: &Settings,
    n_traditional: usize,
    n_bidding: usize,
    history: usize,
    config: Option<&Path>,
    out: &mut Out,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<SynthConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    cfg.n_traditional = n_traditional;
    cfg.n_bidding = n_bidding;
    let t = synth_tables(&cfg, s.seed)?;
    let h = synth_history(&cfg, history.min(n_traditional), history.min(n_bidding), s.seed)?;
    out.file("traditional.csv", |w| t.traditional.write_csv(w))?;
    out.file("bidding.csv", |w| t.bidding.write_csv(w))?;
    out.file("history.csv", |w| write_history(&h, w))?;
    out.text(
        "synth.txt",
        &format!(
            "seed: {}\ntraditional loans: {n_traditional}\nbidding listings: {n_bidding}\nfunded fraction: {}\nhistory: {} loans\n",
            s.seed,
            cfg.funded_fraction,
            h.len()
        ),
    )
}

fn serve(s: &Settings) -> Result<()> {
    let advisor = lendwise_service::Advisor::new(bundle(s)?, lexicon(s)?)?;
    // A bad origin is a usage error, found before the runtime starts.
    if let Err(e) = lendwise_service::cors(s.cors_origin.as_deref()) {
        return Err(CliError::Usage(e));
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(format!("cannot start runtime: {e}")))?;
    eprintln!("serving {} on http://{}", s.bundle.display(), s.bind);
    rt.block_on(lendwise_service::serve(Arc::new(advisor), s.bind, s.cors_origin.as_deref()))
        .map_err(|e| CliError::Data(format!("server: {e}")))
}
