use rand::seq::SliceRandom;

use super::{score, TrainedModel};
use crate::data::Dataset;
use crate::{rng, Error, Result};

/// Mean drop in held-out score (R² or accuracy) when one feature column is
/// shuffled, over `repeats` seeded shuffles; negative means are clamped to 0.
pub fn permutation_importance(m: &TrainedModel, validation: &Dataset, repeats: usize, seed: u64) -> Result<Vec<f64>> {
    if validation.is_empty() {
        return Err(Error::invalid("permutation importance needs validation rows"));
    }
    if repeats == 0 {
        return Err(Error::invalid("permutation importance needs at least one repeat"));
    }
    let base = score(m, validation)?;
    let p = validation.n_features();
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut r = rng::stream(seed, j as u64);
        let original = validation.x.column(j);
        let mut shuffled = validation.clone();
        let mut drop = 0.0;
        for _ in 0..repeats {
            let mut col = original.clone();
            col.shuffle(&mut r);
            for (i, v) in col.into_iter().enumerate() {
                shuffled.x.set(i, j, v);
            }
            drop += base - score(m, &shuffled)?;
        }
        out.push((drop / repeats as f64).max(0.0));
    }
    Ok(out)
}
