use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::kernel::RankKernel;
use crate::special::{lambda_knearest, lambda_nearest, validate_weights};

/// Partner-selection law.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionRule {
    NearestNeighbor,
    /// Rank `k` is chosen with probability `alpha[k - 1]`.
    KNearest(Vec<f64>),
    /// Rank `k` is chosen with probability proportional to `K(k / (N - 1))`.
    SmoothRank(RankKernel),
}

impl InteractionRule {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::domain(format!("need at least two particles, got {n}")));
        }
        match self {
            InteractionRule::NearestNeighbor => Ok(()),
            InteractionRule::KNearest(alpha) => {
                validate_weights(alpha)?;
                if alpha.len() > n - 1 {
                    return Err(Error::domain(format!("K = {} exceeds N - 1 = {}", alpha.len(), n - 1)));
                }
                Ok(())
            }
            InteractionRule::SmoothRank(kernel) => kernel.discrete_rank_law(n).map(|_| ()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InteractionRule::NearestNeighbor => "nearest",
            InteractionRule::KNearest(_) => "knearest",
            InteractionRule::SmoothRank(_) => "smooth",
        }
    }
}

/// How the per-particle rate `λ(N)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// The scaling that yields a nontrivial kinetic limit (1 for smooth rank rules).
    Scaled,
    /// `λ = 1` for any rule.
    One,
    /// A fixed per-particle rate, possibly 0.
    Fixed(f64),
}

/// Per-particle rate `λ(N)`.
pub fn per_particle_rate(rule: &InteractionRule, n: usize, d: usize, mode: LambdaMode) -> Result<f64> {
    match mode {
        LambdaMode::One => Ok(1.0),
        LambdaMode::Fixed(l) if l >= 0.0 && l.is_finite() => Ok(l),
        LambdaMode::Fixed(l) => Err(Error::domain(format!("rate must be nonnegative and finite, got {l}"))),
        LambdaMode::Scaled => match rule {
            InteractionRule::NearestNeighbor => lambda_nearest(n, d),
            InteractionRule::KNearest(alpha) => lambda_knearest(n, d, alpha),
            InteractionRule::SmoothRank(_) => Ok(1.0),
        },
    }
}

/// Total event rate `N λ(N)`.
pub fn collision_rate(rule: &InteractionRule, n: usize, d: usize, mode: LambdaMode) -> Result<f64> {
    Ok(n as f64 * per_particle_rate(rule, n, d, mode)?)
}

/// Draws leader ranks according to a rule.
#[derive(Debug, Clone)]
pub enum RankSampler {
    First,
    Table(WeightedAliasIndex<f64>),
}

impl RankSampler {
    pub fn new(rule: &InteractionRule, n: usize) -> Result<Self> {
        rule.validate(n)?;
        let weights = match rule {
            InteractionRule::NearestNeighbor => return Ok(RankSampler::First),
            InteractionRule::KNearest(alpha) => alpha.clone(),
            InteractionRule::SmoothRank(kernel) => kernel.discrete_rank_law(n)?,
        };
        WeightedAliasIndex::new(weights)
            .map(RankSampler::Table)
            .map_err(|e| Error::DegenerateKernel(format!("cannot build rank table: {e}")))
    }

    /// A rank in `1..=N-1`.
    #[inline]
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        match self {
            RankSampler::First => 1,
            RankSampler::Table(t) => t.sample(rng) + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rates_per_rule() {
        let nn = InteractionRule::NearestNeighbor;
        assert!((collision_rate(&nn, 100, 2, LambdaMode::Scaled).unwrap() - 20_000.0).abs() < 1e-8);
        let k = RankKernel::normalized(Profile::Constant).unwrap();
        assert_eq!(collision_rate(&InteractionRule::SmoothRank(k), 37, 1, LambdaMode::Scaled).unwrap(), 37.0);
        let k1 = InteractionRule::KNearest(vec![1.0]);
        for (n, d) in [(10, 1), (57, 2), (300, 3)] {
            let a = collision_rate(&k1, n, d, LambdaMode::Scaled).unwrap();
            let b = collision_rate(&nn, n, d, LambdaMode::Scaled).unwrap();
            assert!(((a - b) / b).abs() < 1e-12);
        }
        assert_eq!(collision_rate(&nn, 10, 1, LambdaMode::One).unwrap(), 10.0);
        assert_eq!(collision_rate(&nn, 10, 1, LambdaMode::Fixed(0.0)).unwrap(), 0.0);
        assert!(collision_rate(&nn, 10, 1, LambdaMode::Fixed(-1.0)).is_err());
    }

    #[test]
    fn point_mass_weights_always_pick_that_rank() {
        let s = RankSampler::new(&InteractionRule::KNearest(vec![0.0, 1.0]), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| s.sample(&mut rng) == 2));
    }

    #[test]
    fn uniform_kernel_gives_uniform_ranks() {
        let k = RankKernel::normalized(Profile::Constant).unwrap();
        let s = RankSampler::new(&InteractionRule::SmoothRank(k), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            counts[s.sample(&mut rng) - 1] += 1;
        }
        let p = 0.1;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn invalid_rules_are_rejected() {
        assert!(RankSampler::new(&InteractionRule::KNearest(vec![0.5, 0.5, 0.0]), 3).is_err());
        assert!(RankSampler::new(&InteractionRule::KNearest(vec![0.5, 0.6]), 10).is_err());
        let narrow = RankKernel::concentrated(Profile::Constant, 1, 0.01).unwrap();
        assert!(matches!(
            RankSampler::new(&InteractionRule::SmoothRank(narrow), 20),
            Err(Error::DegenerateKernel(_))
        ));
    }
}
