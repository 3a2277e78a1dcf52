use rand::Rng;

use super::{rank_of, Domain, ParticleConfig};
use crate::error::{Error, Result};
use crate::special::binomial_pmf;

/// Probability that particle 2 has rank `k` around particle 1 when the other
/// `N - 2` particles are i.i.d. and fall in the ball through particle 2 with
/// probability `p`.
pub fn rank_pmf(k: usize, n: usize, p: f64) -> Result<f64> {
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::domain(format!("rank {k} outside 1..=N-1 for N = {n}")));
    }
    binomial_pmf((k - 1) as u64, (n - 2) as u64, p)
}

/// Monte Carlo estimate of the rank law: frequencies of ranks `1..=N-1`.
///
/// Particle 1 sits at 0 and particle 2 at `p/2` on the unit circle, so under the
/// uniform density the ball through particle 2 carries mass `p`. The other
/// particles are uniform.
pub fn empirical_rank_law(n: usize, p: f64, samples: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain("the rank law needs N >= 2"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    let domain = Domain::new(1, 1.0)?;
    let mut counts = vec![0usize; n - 1];
    let mut pos = vec![0.0; n];
    pos[1] = 0.5 * p;
    for _ in 0..samples {
        for x in pos.iter_mut().skip(2) {
            *x = rng.random::<f64>();
        }
        let config = ParticleConfig::new(domain, pos.clone())?;
        counts[rank_of(0, 1, &config)? - 1] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / samples as f64).collect())
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
