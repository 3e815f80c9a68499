use lendwise_core::data::synth::*;
use lendwise_core::data::SplitPlan;
use lendwise_core::encoding::{EncodingSchema, SentimentLexicon, SENTIMENT_FEATURE};
use lendwise_core::ml::ModelKind;
use lendwise_core::pipeline::*;
use lendwise_core::recommend::*;
use lendwise_core::select::Method;
use lendwise_core::data::DatasetKind;

fn small() -> SynthConfig {
    SynthConfig {
        n_traditional: 400,
        n_bidding: 1500,
        funded_fraction: 0.2,
        ..SynthConfig::default()
    }
}

fn prepared(seed: u64) -> Prepared {
    let t = synth_tables(&small(), seed).unwrap();
    prepare(
        &t.traditional,
        &t.bidding,
        &EncodingSchema::bundled(DatasetKind::Traditional),
        &EncodingSchema::bundled(DatasetKind::Bidding),
        &SentimentLexicon::bundled(),
    )
    .unwrap()
}

#[test]
fn task_data_follows_the_training_populations() {
    let p = prepared(1);
    let funded = p.bidding.y.iter().filter(|v| **v == 1.0).count();
    assert_eq!(p.task_data(LoanTask::TradRate, 0).n_rows(), p.traditional.n_rows());
    assert_eq!(p.task_data(LoanTask::BidRate, 0).n_rows(), funded);
    assert_eq!(p.task_data(LoanTask::BidSuccess, 0).n_rows(), 2 * funded);
    assert_eq!(p.non_funded().n_rows(), p.bidding.n_rows() - funded);
}

#[test]
fn trained_bundle_recommends_every_historical_loan() {
    let p = prepared(2);
    let cfg = TrainConfig {
        model: ModelKind::Linear,
        selection: Selection::None,
        seed: 2,
        sentiment_step: Some(0.05),
    };
    let out = train_bundle(&p, &cfg).unwrap();
    assert_eq!(out.bundle.bidding_success.spec.kind(), ModelKind::Logit);
    assert!(out.bundle.bidding_success.uses_feature(SENTIMENT_FEATURE));
    let g = out.bundle.optimal_sentiment.unwrap();
    assert_eq!(out.sweep.as_ref().unwrap().grid.len(), 41);
    assert!((-1.0..=1.0).contains(&g));
    let u = out.uplift.unwrap();
    assert!(u.after >= u.before);

    let mut buf = Vec::new();
    out.bundle.write(&mut buf).unwrap();
    let bundle = ModelBundle::read(buf.as_slice()).unwrap();
    assert_eq!(bundle, out.bundle);

    let history = synth_history(&small(), 50, 50, 2).unwrap();
    let lex = SentimentLexicon::bundled();
    let (s, recs) = portfolio_eval(&history, &bundle, &lex, Some(g)).unwrap();
    assert_eq!((s.n_loans, s.skipped), (100, 0));
    assert_eq!(s.recommended_bidding + s.recommended_traditional, 100);
    assert!(recs.iter().all(|r| r.sentiment_advice.as_ref().is_some_and(|a| a.sentiment == g)));
    for r in &recs {
        assert!((0.0..=1.0).contains(&r.bidding.success));
        assert_eq!(r.traditional.success, TRADITIONAL_SUCCESS);
    }
}

#[test]
fn training_is_deterministic_and_selection_runs_inside() {
    let p = prepared(3);
    let cfg = TrainConfig {
        model: ModelKind::Linear,
        selection: Selection::Search(Method::Forward),
        seed: 9,
        sentiment_step: None,
    };
    let a = train_bundle(&p, &cfg).unwrap();
    let b = train_bundle(&p, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.sweep.is_none() && a.bundle.optimal_sentiment.is_none());
    for (task, c) in &a.chosen {
        let r = c.report.as_ref().unwrap();
        assert_eq!(c.features, r.selected, "{task}");
    }
}

#[test]
fn baseline_keeps_all_traditional_features() {
    let p = prepared(4);
    let cfg = TrainConfig {
        model: ModelKind::Linear,
        selection: Selection::Baseline,
        seed: 4,
        sentiment_step: None,
    };
    let out = train_bundle(&p, &cfg).unwrap();
    assert_eq!(out.bundle.traditional_rate.feature_names, p.traditional.feature_names);
    assert_eq!(out.bundle.bidding_rate.feature_names.len(), 5);
}

#[test]
fn nested_cv_reports_one_score_per_outer_split() {
    let p = prepared(5);
    let d = p.task_data(LoanTask::BidSuccess, 5);
    let spec = LoanTask::BidSuccess.spec(ModelKind::Linear, 5).unwrap();
    let outer = SplitPlan::new(0.8, 3, 5).unwrap();
    let r = nested_cv(&spec, &d, Selection::Search(Method::Forward), &outer).unwrap();
    assert_eq!((r.runs.len(), r.features.len(), r.confusion.len()), (3, 3, 3));
    assert_eq!(r.metric, "accuracy");
    assert!((r.mean - r.runs.iter().sum::<f64>() / 3.0).abs() < 1e-12);

    let mut out = Vec::new();
    NestedCvReport::write_csv(&[r], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("model,selection,metric,run1,run2,run3,mean\nlogit,forward,accuracy,"));
}

#[test]
fn wrong_export_kind_is_rejected() {
    let t = synth_tables(&small(), 6).unwrap();
    let schema = EncodingSchema::bundled(DatasetKind::Traditional);
    assert!(prepare(&t.bidding, &t.bidding, &schema, &schema, &SentimentLexicon::bundled()).is_err());
}
