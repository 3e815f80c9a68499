use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, ConfusionMatrix};
use crate::data::{split_montecarlo, Dataset, SplitPlan};
use crate::ml::{fit, score, ModelSpec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub spec: ModelSpec,
    pub features: Vec<String>,
    /// `r2` or `accuracy`.
    pub metric: String,
    pub runs: Vec<f64>,
    pub mean: f64,
    /// Per-run confusion counts (classification only).
    pub confusion: Vec<ConfusionMatrix>,
}

/// Fits on each training split restricted to `features` and scores the
/// matching test split: R² for regression, accuracy for classification.
pub fn montecarlo_cv<S: AsRef<str> + Sync>(
    spec: &ModelSpec,
    d: &Dataset,
    plan: &SplitPlan,
    features: &[S],
) -> Result<CvReport> {
    if features.is_empty() {
        return Err(Error::invalid("cross-validation needs at least one feature"));
    }
    let d = d.select_features(features)?;
    let splits = split_montecarlo(&d, plan)?;
    let results: Vec<Result<(f64, Option<ConfusionMatrix>)>> = splits
        .par_iter()
        .map(|(train, test)| {
            let m = fit(spec, train)?;
            let s = score(&m, test)?;
            let cm = if spec.is_classification() {
                Some(confusion(&test.y, &m.predict_labels(&test.x)?)?)
            } else {
                None
            };
            Ok((s, cm))
        })
        .collect();
    let mut runs = Vec::with_capacity(results.len());
    let mut cms = Vec::new();
    for r in results {
        let (s, cm) = r?;
        runs.push(s);
        cms.extend(cm);
    }
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    Ok(CvReport {
        spec: spec.clone(),
        features: d.feature_names.clone(),
        metric: if spec.is_classification() { "accuracy" } else { "r2" }.into(),
        runs,
        mean,
        confusion: cms,
    })
}

impl CvReport {
    /// One row per report: `model,metric,run1..runN,mean,features`.
    pub fn write_csv<W: Write>(reports: &[CvReport], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let runs = reports.iter().map(|r| r.runs.len()).max().unwrap_or(0);
        let mut header = vec!["model".to_string(), "metric".to_string()];
        header.extend((1..=runs).map(|i| format!("run{i}")));
        header.extend(["mean".to_string(), "features".to_string()]);
        out.write_record(&header)?;
        for r in reports {
            let mut row = vec![r.spec.kind().to_string(), r.metric.clone()];
            row.extend(r.runs.iter().map(|v| format!("{v:.6}")));
            row.extend(std::iter::repeat_n(String::new(), runs - r.runs.len()));
            row.push(format!("{:.6}", r.mean));
            row.push(r.features.join(";"));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }

    /// Confusion counts per run plus their sum: `run,tp,fp,fn,tn,tpr,tnr,accuracy`.
    pub fn write_confusion_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["run", "tp", "fp", "fn", "tn", "tpr", "tnr", "accuracy"])?;
        let mut total = ConfusionMatrix::default();
        let rows = self.confusion.iter().enumerate().map(|(i, c)| ((i + 1).to_string(), *c));
        for (label, c) in rows {
            total.tp += c.tp;
            total.fp += c.fp;
            total.fn_ += c.fn_;
            total.tn += c.tn;
            write_cm(&mut out, &label, &c)?;
        }
        if !self.confusion.is_empty() {
            write_cm(&mut out, "total", &total)?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }
}

fn write_cm<W: Write>(out: &mut csv::Writer<W>, label: &str, c: &ConfusionMatrix) -> Result<()> {
    out.write_record([
        label.to_string(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
        format!("{:.6}", c.tpr()),
        format!("{:.6}", c.tnr()),
        format!("{:.6}", c.accuracy()),
    ])?;
    Ok(())
}
