use std::io::Write;

use serde::{Deserialize, Serialize};

use super::columns::DatasetKind;
use super::raw::format_number;
use crate::{Error, Matrix, Result};

/// What the response column measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Annual interest rate as a fraction in [0, 1].
    Rate,
    /// 1 = funded, 0 = not funded.
    Funded,
    /// Unconstrained real response (synthetic and test data).
    Continuous,
}

impl Target {
    pub fn is_classification(self) -> bool {
        matches!(self, Target::Funded)
    }
}

/// Encoded numeric dataset: features, one response vector and its meaning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub response: String,
    pub target: Target,
}

impl Dataset {
    pub fn new(
        kind: DatasetKind,
        feature_names: Vec<String>,
        x: Matrix,
        y: Vec<f64>,
        response: impl Into<String>,
        target: Target,
    ) -> Result<Self> {
        if x.ncols() != feature_names.len() {
            return Err(Error::invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(v) = x.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature value {v}")));
        }
        let bad = match target {
            Target::Rate => y.iter().find(|v| !(0.0..=1.0).contains(*v)),
            Target::Funded => y.iter().find(|v| **v != 0.0 && **v != 1.0),
            Target::Continuous => y.iter().find(|v| !v.is_finite()),
        };
        if let Some(v) = bad {
            return Err(Error::invalid(format!("response value {v} invalid for {target:?}")));
        }
        Ok(Dataset {
            kind,
            feature_names,
            x,
            y,
            response: response.into(),
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .feature_index(name)
            .ok_or_else(|| Error::MissingFeature(name.to_string()))?;
        Ok(self.x.column(j))
    }

    pub fn feature_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.feature_index(n.as_ref())
                    .ok_or_else(|| Error::MissingFeature(n.as_ref().to_string()))
            })
            .collect()
    }

    /// Restricts to the named features, in the order given.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = self.feature_indices(names)?;
        Ok(Dataset {
            kind: self.kind,
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            x: self.x.select_columns(&idx),
            y: self.y.clone(),
            response: self.response.clone(),
            target: self.target,
        })
    }

    pub fn without_features<S: AsRef<str>>(&self, names: &[S]) -> Dataset {
        let keep: Vec<&str> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .filter(|f| !names.iter().any(|n| n.as_ref() == *f))
            .collect();
        self.select_features(&keep).expect("subset of own features")
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            kind: self.kind,
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            response: self.response.clone(),
            target: self.target,
        }
    }

    /// Rows whose response equals `value`, e.g. only the funded loans.
    pub fn filter_response(&self, value: f64) -> Dataset {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| self.y[i] == value).collect();
        self.subset(&rows)
    }

    /// Uniform random sample of `n` rows without replacement, in the
    /// original row order. Returns everything when `n` covers the dataset.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.n_rows() {
            return self.clone();
        }
        let mut r = crate::rng::stream(seed, 0x5A);
        let mut rows = rand::seq::index::sample(&mut r, self.n_rows(), n).into_vec();
        rows.sort_unstable();
        self.subset(&rows)
    }

    /// Every positive row plus an equal-sized random draw of negatives (all
    /// negatives when there are fewer), for 0/1 responses.
    pub fn balanced(&self, seed: u64) -> Dataset {
        let pos: Vec<usize> = (0..self.n_rows()).filter(|&i| self.y[i] == 1.0).collect();
        let neg: Vec<usize> = (0..self.n_rows()).filter(|&i| self.y[i] != 1.0).collect();
        let mut r = crate::rng::stream(seed, 0xBA);
        let k = pos.len().min(neg.len());
        let mut rows: Vec<usize> = rand::seq::index::sample(&mut r, neg.len(), k)
            .into_iter()
            .map(|i| neg[i])
            .chain(pos)
            .collect();
        rows.sort_unstable();
        self.subset(&rows)
    }

    /// Copy with one feature overwritten by a constant.
    pub fn with_feature_value(&self, name: &str, value: f64) -> Result<Dataset> {
        let j = self
            .feature_index(name)
            .ok_or_else(|| Error::MissingFeature(name.to_string()))?;
        let mut d = self.clone();
        d.x.set_column(j, value);
        Ok(d)
    }

    /// Writes features followed by the response column.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.response);
        out.write_record(&header)?;
        for (i, row) in self.x.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            rec.push(format_number(self.y[i]));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}
