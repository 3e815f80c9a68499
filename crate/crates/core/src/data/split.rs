use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::{rng, Error, Result};

/// Repeated random train/test splitting (Monte-Carlo cross-validation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Training share in (0, 1).
    pub ratio: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            ratio: 0.8,
            runs: 5,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn new(ratio: f64, runs: usize, seed: u64) -> Result<Self> {
        let p = SplitPlan { ratio, runs, seed };
        p.validate()?;
        Ok(p)
    }

    /// Plan used for scoring candidate subsets inside feature selection.
    pub fn inner(seed: u64) -> Self {
        SplitPlan {
            ratio: 0.8,
            runs: 3,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SplitPlan { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::invalid(format!("split ratio {} not in (0, 1)", self.ratio)));
        }
        if self.runs == 0 {
            return Err(Error::invalid("split plan needs at least one run"));
        }
        Ok(())
    }

    /// Test-set size for `n` rows: the held-out share is rounded up.
    pub fn test_size(&self, n: usize) -> usize {
        let t = ((1.0 - self.ratio) * n as f64 - 1e-9).ceil().max(1.0) as usize;
        t.min(n - 1)
    }
}

/// Row-index partitions, one `(train, test)` pair per run, each sorted.
/// With `labels` the split is stratified: every class keeps its share.
pub fn split_indices(
    n: usize,
    labels: Option<&[f64]>,
    plan: &SplitPlan,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    plan.validate()?;
    if n < 5 {
        return Err(Error::invalid(format!("need at least 5 rows to split, got {n}")));
    }
    let n_train = n - plan.test_size(n);

    let groups: Vec<Vec<usize>> = match labels {
        None => vec![(0..n).collect()],
        Some(y) => {
            let mut classes: Vec<f64> = y.to_vec();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            classes
                .iter()
                .map(|c| (0..n).filter(|&i| y[i] == *c).collect())
                .collect()
        }
    };

    // Largest-remainder allocation of the training rows across classes.
    let exact: Vec<f64> = groups
        .iter()
        .map(|g| n_train as f64 * g.len() as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = n_train - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &g in order.iter().cycle().take(order.len() * 2) {
        if rest == 0 {
            break;
        }
        if quota[g] < groups[g].len() {
            quota[g] += 1;
            rest -= 1;
        }
    }

    let mut out = Vec::with_capacity(plan.runs);
    for run in 0..plan.runs {
        let mut r = rng::stream(plan.seed, run as u64);
        let mut train = Vec::with_capacity(n_train);
        let mut test = Vec::with_capacity(n - n_train);
        for (g, q) in groups.iter().zip(&quota) {
            let mut idx = g.clone();
            idx.shuffle(&mut r);
            train.extend_from_slice(&idx[..*q]);
            test.extend_from_slice(&idx[*q..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        out.push((train, test));
    }
    Ok(out)
}

/// Splits a dataset `plan.runs` times; funded/non-funded responses are
/// split stratified.
pub fn split_montecarlo(d: &Dataset, plan: &SplitPlan) -> Result<Vec<(Dataset, Dataset)>> {
    if d.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let labels = d.target.is_classification().then_some(d.y.as_slice());
    Ok(split_indices(d.n_rows(), labels, plan)?
        .into_iter()
        .map(|(tr, te)| (d.subset(&tr), d.subset(&te)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_reported_experiments() {
        let plan = SplitPlan::default();
        let s = split_indices(10_000, None, &plan).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|(tr, te)| tr.len() == 8_000 && te.len() == 2_000));

        let labels: Vec<f64> = (0..1816).map(|i| (i % 2) as f64).collect();
        let s = split_indices(1816, Some(&labels), &plan).unwrap();
        for (tr, te) in &s {
            assert_eq!((tr.len(), te.len()), (1452, 364));
            assert_eq!(tr.iter().filter(|&&i| labels[i] == 1.0).count(), 726);
        }
    }

    #[test]
    fn deterministic_and_partitioning() {
        let plan = SplitPlan::new(0.8, 3, 42).unwrap();
        let a = split_indices(37, None, &plan).unwrap();
        assert_eq!(a, split_indices(37, None, &plan).unwrap());
        assert_ne!(a, split_indices(37, None, &plan.with_seed(43)).unwrap());
        for (tr, te) in &a {
            let mut all: Vec<usize> = tr.iter().chain(te).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..37).collect::<Vec<_>>());
        }
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(split_indices(4, None, &SplitPlan::default()).is_err());
        assert!(SplitPlan::new(1.0, 5, 0).is_err());
        assert!(SplitPlan::new(0.8, 0, 0).is_err());
    }
}
