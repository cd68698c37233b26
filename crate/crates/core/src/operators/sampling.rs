use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Shots per individual circuit and the seed of the stream that drives them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotPlan {
    pub shots: u64,
    pub seed: u64,
}

impl ShotPlan {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Validation("shot count must be at least 1".into()));
        }
        Ok(ShotPlan { shots, seed })
    }
}

/// Multinomial draw of `shots` outcomes from `probs`, via a chain of conditional
/// binomials. `probs` is renormalized; tiny negative entries are clamped to zero.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical("outcome distribution has no mass".into()));
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = total;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if i + 1 == probs.len() || p >= mass_left {
            counts[i] = remaining;
            break;
        }
        let cond = (p / mass_left).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, cond)
            .map_err(|e| Error::Numerical(format!("binomial sampler: {e}")))?
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass_left -= p;
        if mass_left <= 0.0 {
            break;
        }
    }
    Ok(counts)
}
