use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{welch_ttest, TTest};
use crate::data::synth::GRADES;
use crate::data::Dataset;
use crate::{Error, Result};

pub const GRADE_FEATURE: &str = "ProsperGrade";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeRow {
    pub grade: String,
    pub n_traditional: usize,
    pub n_bidding: usize,
    pub mean_traditional: f64,
    pub mean_bidding: f64,
    /// Traditional minus bidding.
    pub difference: f64,
    /// `None` when the grade is missing from a dataset or the test is
    /// degenerate (fewer than two rows, or zero variance on both sides).
    pub test: Option<TTest>,
    /// False when the grade has no rows in one of the datasets.
    pub computed: bool,
}

impl GradeRow {
    pub fn reject(&self) -> bool {
        self.test.is_some_and(|t| t.reject())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub rows: Vec<GradeRow>,
}

fn rates_by_grade(d: &Dataset) -> Result<Vec<Vec<f64>>> {
    let j = d
        .feature_index(GRADE_FEATURE)
        .ok_or_else(|| Error::MissingFeature(GRADE_FEATURE.into()))?;
    let mut out = vec![Vec::new(); GRADES.len()];
    for (i, &y) in d.y.iter().enumerate() {
        let code = d.x.get(i, j);
        if code.fract() == 0.0 && (1.0..=GRADES.len() as f64).contains(&code) {
            out[code as usize - 1].push(y);
        }
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Per-grade mean rates of both loan types and a Welch t-test of their
/// difference. Both datasets must carry the ordinal grade feature and a rate
/// response.
pub fn analyze_grades(traditional: &Dataset, bidding: &Dataset) -> Result<GradeReport> {
    let t = rates_by_grade(traditional)?;
    let b = rates_by_grade(bidding)?;
    let rows = GRADES
        .iter()
        .enumerate()
        .map(|(g, name)| {
            let (a, c) = (&t[g], &b[g]);
            let computed = !a.is_empty() && !c.is_empty();
            let (mt, mb) = (mean(a), mean(c));
            GradeRow {
                grade: name.to_string(),
                n_traditional: a.len(),
                n_bidding: c.len(),
                mean_traditional: mt,
                mean_bidding: mb,
                difference: mt - mb,
                test: if computed { welch_ttest(a, c).ok() } else { None },
                computed,
            }
        })
        .collect();
    Ok(GradeReport { rows })
}

impl GradeReport {
    /// `grade,n_traditional,n_bidding,mean_traditional,mean_bidding,difference,t,p_value,decision`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "grade",
            "n_traditional",
            "n_bidding",
            "mean_traditional",
            "mean_bidding",
            "difference",
            "t",
            "p_value",
            "decision",
        ])?;
        for r in &self.rows {
            let (t, p) = r.test.map_or((f64::NAN, f64::NAN), |t| (t.t, t.p));
            let decision = if !r.computed {
                "not computed"
            } else if r.reject() {
                "reject"
            } else {
                "not reject"
            };
            out.write_record([
                r.grade.clone(),
                r.n_traditional.to_string(),
                r.n_bidding.to_string(),
                format!("{:.6}", r.mean_traditional),
                format!("{:.6}", r.mean_bidding),
                format!("{:.6}", r.difference),
                format!("{t:.6}"),
                format!("{p:.6e}"),
                decision.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))
    }
}
