//! Wrapper feature selection: greedy forward and backward search,
//! importance-driven recursive elimination, and an exhaustive search used as
//! a test oracle.
//!
//! Every subset is scored by the mean inner Monte-Carlo CV metric of the
//! model refitted on that subset. Greedy moves must gain more than
//! [`EPSILON`]; the reported subset is the smallest one visited whose score
//! is within [`EPSILON`] of the best visited score.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_montecarlo, Dataset, SplitPlan};
use crate::eval::montecarlo_cv;
use crate::ml::{fit, ModelSpec};
use crate::{Error, Result};

pub const EPSILON: f64 = 1e-4;

/// Largest feature count the exhaustive oracle accepts by default.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Features of the earlier bidding-success model used as a comparison
/// baseline.
pub const BASELINE_PRESET: [&str; 5] = [
    "BorrowerMaximumRate",
    "DebtToIncomeRatio",
    "LoanAmount",
    "Homeownership",
    "DescriptionLength",
];

pub fn baseline_preset() -> Vec<String> {
    BASELINE_PRESET.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Forward,
    Backward,
    Recursive,
    Exhaustive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Forward => "forward",
            Method::Backward => "backward",
            Method::Recursive => "recursive",
            Method::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Method::Forward),
            "backward" => Ok(Method::Backward),
            "recursive" => Ok(Method::Recursive),
            "exhaustive" => Ok(Method::Exhaustive),
            other => Err(Error::invalid(format!("unknown selection method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub size: usize,
    pub score: f64,
    pub features: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: Method,
    pub selected: Vec<String>,
    /// Subsets accepted along the search, in visiting order.
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_score: f64,
}

impl SelectionReport {
    /// `size,score,features` with features joined by `;`.
    pub fn write_trajectory_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["size", "score", "features"])?;
        for p in &self.trajectory {
            out.write_record([p.size.to_string(), format!("{:.6}", p.score), p.features.join(";")])?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }

    /// Plain-text summary: method, selected features, final score.
    pub fn summary(&self) -> String {
        format!(
            "method: {}\nselected: {}\nfinal_score: {:.6}\n",
            self.method,
            self.selected.join(", "),
            self.final_score
        )
    }
}

struct Scorer<'a> {
    spec: &'a ModelSpec,
    d: &'a Dataset,
    plan: &'a SplitPlan,
}

impl Scorer<'_> {
    /// Subsets are column indices in ascending order.
    fn score(&self, subset: &[usize]) -> Result<f64> {
        let names: Vec<&str> = subset.iter().map(|&j| self.d.feature_names[j].as_str()).collect();
        Ok(montecarlo_cv(self.spec, self.d, self.plan, &names)?.mean)
    }

    fn score_all(&self, candidates: &[Vec<usize>]) -> Result<Vec<f64>> {
        candidates.par_iter().map(|c| self.score(c)).collect()
    }

    fn names(&self, subset: &[usize]) -> Vec<String> {
        subset.iter().map(|&j| self.d.feature_names[j].clone()).collect()
    }

    fn point(&self, subset: &[usize], score: f64) -> TrajectoryPoint {
        TrajectoryPoint {
            size: subset.len(),
            score,
            features: self.names(subset),
        }
    }
}

/// Index of the maximal score; the first one wins ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Smallest visited subset whose score is within EPSILON of the best one;
/// among equal sizes the earlier visit wins.
fn finish(method: Method, trajectory: Vec<TrajectoryPoint>) -> SelectionReport {
    let best = trajectory.iter().map(|p| p.score).fold(f64::NEG_INFINITY, f64::max);
    let chosen = trajectory
        .iter()
        .filter(|p| p.score >= best - EPSILON)
        .min_by_key(|p| p.size)
        .expect("trajectory is never empty")
        .clone();
    SelectionReport {
        method,
        selected: chosen.features,
        final_score: chosen.score,
        trajectory,
    }
}

fn check(d: &Dataset) -> Result<()> {
    if d.n_features() == 0 {
        return Err(Error::invalid("feature selection needs at least one feature"));
    }
    Ok(())
}

/// Greedy forward selection from the empty set.
pub fn forward_select(spec: &ModelSpec, d: &Dataset, plan: &SplitPlan) -> Result<SelectionReport> {
    check(d)?;
    let s = Scorer { spec, d, plan };
    let p = d.n_features();
    let mut current: Vec<usize> = Vec::new();
    let mut current_score = f64::NEG_INFINITY;
    let mut trajectory = Vec::new();
    while current.len() < p {
        let candidates: Vec<Vec<usize>> = (0..p)
            .filter(|j| !current.contains(j))
            .map(|j| {
                let mut c = current.clone();
                c.push(j);
                c.sort_unstable();
                c
            })
            .collect();
        let scores = s.score_all(&candidates)?;
        let b = argmax(&scores);
        if !current.is_empty() && scores[b] - current_score <= EPSILON {
            break;
        }
        current = candidates[b].clone();
        current_score = scores[b];
        trajectory.push(s.point(&current, current_score));
    }
    Ok(finish(Method::Forward, trajectory))
}

/// Greedy backward elimination from the full set. A feature is removed when
/// doing so costs no more than EPSILON.
pub fn backward_select(spec: &ModelSpec, d: &Dataset, plan: &SplitPlan) -> Result<SelectionReport> {
    check(d)?;
    let s = Scorer { spec, d, plan };
    let mut current: Vec<usize> = (0..d.n_features()).collect();
    let mut current_score = s.score(&current)?;
    let mut trajectory = vec![s.point(&current, current_score)];
    while current.len() > 1 {
        let candidates: Vec<Vec<usize>> = (0..current.len())
            .map(|k| {
                let mut c = current.clone();
                c.remove(k);
                c
            })
            .collect();
        let scores = s.score_all(&candidates)?;
        let b = argmax(&scores);
        if scores[b] < current_score - EPSILON {
            break;
        }
        current = candidates[b].clone();
        current_score = scores[b];
        trajectory.push(s.point(&current, current_score));
    }
    Ok(finish(Method::Backward, trajectory))
}

/// Recursive elimination: score the current set, then drop its least
/// important feature (importance measured on the first inner split), down to
/// a single feature.
pub fn recursive_select(spec: &ModelSpec, d: &Dataset, plan: &SplitPlan) -> Result<SelectionReport> {
    check(d)?;
    let s = Scorer { spec, d, plan };
    let mut current: Vec<usize> = (0..d.n_features()).collect();
    let mut trajectory = Vec::new();
    loop {
        let score = s.score(&current)?;
        trajectory.push(s.point(&current, score));
        if current.len() == 1 {
            break;
        }
        let sub = d.select_features(&s.names(&current))?;
        let first = SplitPlan { runs: 1, ..*plan };
        let (train, validation) = split_montecarlo(&sub, &first)?.remove(0);
        let m = fit(spec, &train)?;
        let imp = m.feature_importance(&validation)?;
        let mut worst = 0;
        for (k, v) in imp.iter().enumerate() {
            if *v < imp[worst] {
                worst = k;
            }
        }
        current.remove(worst);
    }
    Ok(finish(Method::Recursive, trajectory))
}

/// Scores every non-empty subset and returns the best; ties go to the
/// smaller subset, then to the earlier subset in column order.
pub fn exhaustive_oracle(
    spec: &ModelSpec,
    d: &Dataset,
    plan: &SplitPlan,
    max_features: usize,
) -> Result<SelectionReport> {
    check(d)?;
    let p = d.n_features();
    if p > max_features.min(EXHAUSTIVE_LIMIT) {
        return Err(Error::invalid(format!(
            "exhaustive search over {p} features exceeds the limit of {}",
            max_features.min(EXHAUSTIVE_LIMIT)
        )));
    }
    let s = Scorer { spec, d, plan };
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << p))
        .map(|mask| (0..p).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let scores = s.score_all(&subsets)?;
    let b = argmax(&scores);
    let trajectory: Vec<TrajectoryPoint> = subsets.iter().zip(&scores).map(|(c, sc)| s.point(c, *sc)).collect();
    Ok(SelectionReport {
        method: Method::Exhaustive,
        selected: trajectory[b].features.clone(),
        final_score: scores[b],
        trajectory,
    })
}

pub fn select(method: Method, spec: &ModelSpec, d: &Dataset, plan: &SplitPlan) -> Result<SelectionReport> {
    match method {
        Method::Forward => forward_select(spec, d, plan),
        Method::Backward => backward_select(spec, d, plan),
        Method::Recursive => recursive_select(spec, d, plan),
        Method::Exhaustive => exhaustive_oracle(spec, d, plan, EXHAUSTIVE_LIMIT),
    }
}

/// Re-scores `features` with the selection scorer.
pub fn inner_score<S: AsRef<str> + Sync>(spec: &ModelSpec, d: &Dataset, plan: &SplitPlan, features: &[S]) -> Result<f64> {
    Ok(montecarlo_cv(spec, d, plan, features)?.mean)
}
