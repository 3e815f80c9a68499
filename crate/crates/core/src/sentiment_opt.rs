//! What-if analysis of the description sentiment: overwrite the sentiment
//! feature of a set of loans with each value on a grid, count how many the
//! success classifier would fund, and pick the best value.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::encoding::SENTIMENT_FEATURE;
use crate::eval::{welch_ttest, TTest};
use crate::ml::TrainedModel;
use crate::{Error, Result};

pub const DEFAULT_STEP: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    /// Ascending sentiment values in [-1, 1].
    pub grid: Vec<f64>,
    pub funded_counts: Vec<usize>,
    pub n_loans: usize,
}

/// `-1, -1 + step, ..., 1`, with values rounded to 12 decimals so grid
/// points such as 0.68 are exact decimal literals.
pub fn sentiment_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 2.0) {
        return Err(Error::invalid(format!("grid step {step} must lie in (0, 2]")));
    }
    let n = (2.0 / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| ((-1.0 + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn model_view(m: &TrainedModel, loans: &Dataset) -> Result<Dataset> {
    if !m.is_classification() {
        return Err(Error::invalid("the sentiment sweep needs the success classifier"));
    }
    if loans.is_empty() {
        return Err(Error::invalid("no loans to sweep"));
    }
    if loans.feature_index(SENTIMENT_FEATURE).is_none() && !m.uses_feature(SENTIMENT_FEATURE) {
        return Err(Error::MissingFeature(SENTIMENT_FEATURE.into()));
    }
    loans.select_features(&m.feature_names)
}

fn funded_at(m: &TrainedModel, view: &Dataset, g: f64) -> Result<Vec<f64>> {
    if m.uses_feature(SENTIMENT_FEATURE) {
        m.predict_labels(&view.with_feature_value(SENTIMENT_FEATURE, g)?.x)
    } else {
        m.predict_labels(&view.x)
    }
}

/// Predicted-funded count at each grid value. A model that does not use the
/// sentiment feature yields a flat curve. `loans` is never modified.
pub fn sweep_sentiment(m: &TrainedModel, loans: &Dataset, grid_step: f64) -> Result<SweepCurve> {
    let view = model_view(m, loans)?;
    let grid = sentiment_grid(grid_step)?;
    let funded_counts = grid
        .par_iter()
        .map(|&g| Ok(funded_at(m, &view, g)?.iter().filter(|v| **v == 1.0).count()))
        .collect::<Result<Vec<usize>>>()?;
    Ok(SweepCurve {
        grid,
        funded_counts,
        n_loans: loans.n_rows(),
    })
}

/// Grid value with the most funded loans. Ties go to the smallest |g| (the
/// least exaggerated description), then to the positive side.
pub fn optimal_sentiment(c: &SweepCurve) -> Result<(f64, usize)> {
    if c.grid.is_empty() || c.grid.len() != c.funded_counts.len() {
        return Err(Error::invalid("empty or malformed sweep curve"));
    }
    let mut best = 0;
    for k in 1..c.grid.len() {
        let (g, n) = (c.grid[k], c.funded_counts[k]);
        let (bg, bn) = (c.grid[best], c.funded_counts[best]);
        let better = n > bn || (n == bn && (g.abs() < bg.abs() || (g.abs() == bg.abs() && g > bg)));
        if better {
            best = k;
        }
    }
    Ok((c.grid[best], c.funded_counts[best]))
}

impl SweepCurve {
    /// Two columns: `sentiment,funded_count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sentiment", "funded_count"])?;
        for (g, n) in self.grid.iter().zip(&self.funded_counts) {
            out.write_record([format!("{g:.2}"), n.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uplift {
    pub sentiment: f64,
    pub n_loans: usize,
    /// Loans funded in the data.
    pub before: usize,
    /// Funded in the data, or predicted funded once their sentiment is set
    /// to `sentiment`. Funded loans are never counted as lost.
    pub after: usize,
    /// Welch test between the before and after 0/1 outcome vectors; `None`
    /// when both vectors are constant.
    pub test: Option<TTest>,
}

pub fn uplift_report(m: &TrainedModel, loans: &Dataset, sentiment: f64) -> Result<Uplift> {
    let view = model_view(m, loans)?;
    let predicted = funded_at(m, &view, sentiment)?;
    let before: Vec<f64> = loans.y.clone();
    if let Some(v) = before.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::invalid(format!("funded label {v} is not 0/1")));
    }
    let after: Vec<f64> = before
        .iter()
        .zip(&predicted)
        .map(|(b, p)| if *b == 1.0 || *p == 1.0 { 1.0 } else { 0.0 })
        .collect();
    let count = |v: &[f64]| v.iter().filter(|x| **x == 1.0).count();
    Ok(Uplift {
        sentiment,
        n_loans: loans.n_rows(),
        before: count(&before),
        after: count(&after),
        test: welch_ttest(&before, &after).ok(),
    })
}
