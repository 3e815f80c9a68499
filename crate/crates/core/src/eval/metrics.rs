use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Coefficient of determination, `1 − RSS/TSS`. Not clamped: a model worse
/// than the mean scores below zero.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() || y.len() < 2 {
        return Err(Error::invalid(format!(
            "r_squared needs equal lengths ≥ 2 (got {} and {})",
            y.len(),
            yhat.len()
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if tss == 0.0 {
        return Err(Error::Degenerate("r_squared of a constant response".into()));
    }
    let rss: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - rss / tss)
}

pub fn accuracy(labels: &[f64], predicted: &[f64]) -> Result<f64> {
    if labels.len() != predicted.len() || labels.is_empty() {
        return Err(Error::invalid(format!(
            "accuracy needs equal non-empty lengths (got {} and {})",
            labels.len(),
            predicted.len()
        )));
    }
    let correct = labels.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Counts for the positive class 1 ("funded").
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Sensitivity, tp / (tp + fn).
    pub fn tpr(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    /// Specificity, tn / (tn + fp).
    pub fn tnr(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }
}

pub fn confusion(labels: &[f64], predicted: &[f64]) -> Result<ConfusionMatrix> {
    if labels.len() != predicted.len() {
        return Err(Error::invalid("confusion needs equal lengths"));
    }
    let mut m = ConfusionMatrix::default();
    for (&a, &b) in labels.iter().zip(predicted) {
        match (a == 1.0, b == 1.0) {
            (true, true) => m.tp += 1,
            (false, true) => m.fp += 1,
            (true, false) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 0.5);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!(r_squared(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert_eq!(accuracy(&[1.0, 0.0, 1.0, 0.0], &[1.0, 1.0, 0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn published_confusion_counts() {
        let m = ConfusionMatrix {
            tp: 161,
            fp: 20,
            fn_: 12,
            tn: 171,
        };
        assert_eq!(m.total(), 364);
        assert!((m.accuracy() - 0.912).abs() < 5e-4);
        assert_eq!((m.tpr() * 100.0).round(), 93.0);
        assert_eq!((m.tnr() * 100.0).round(), 90.0);
    }
}
