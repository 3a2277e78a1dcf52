use std::cmp::Ordering;

use super::ParticleConfig;
use crate::error::{Error, Result};

/// Orders candidates by distance, then by index.
#[inline]
pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i >= n || j >= n {
        return Err(Error::domain(format!("particle index out of range (N = {n})")));
    }
    if i == j {
        return Err(Error::domain("the rank of a particle with respect to itself is undefined"));
    }
    Ok(())
}

/// Rank of `j` in the distance-ordered list of particles around `i` (1-based rank,
/// 0-based indices). Equal distances are ordered by ascending index.
pub fn rank_of(i: usize, j: usize, config: &ParticleConfig) -> Result<usize> {
    let n = config.len();
    check_pair(i, j, n)?;
    let key = (config.dist2(i, j), j);
    let closer = (0..n)
        .filter(|&l| l != i && l != j)
        .filter(|&l| by_distance_then_index(&(config.dist2(i, l), l), &key) == Ordering::Less)
        .count();
    Ok(closer + 1)
}

/// The particle of rank `k` around `i`, by partial selection over all particles.
pub fn k_nearest(i: usize, k: usize, config: &ParticleConfig) -> Result<usize> {
    let n = config.len();
    if i >= n {
        return Err(Error::domain(format!("particle index {i} out of range (N = {n})")));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::domain(format!("rank {k} outside 1..={}", n - 1)));
    }
    let mut cand: Vec<(f64, usize)> = (0..n).filter(|&l| l != i).map(|l| (config.dist2(i, l), l)).collect();
    let (_, kth, _) = cand.select_nth_unstable_by(k - 1, by_distance_then_index);
    Ok(kth.1)
}

/// All other particles sorted by rank around `i`.
pub fn ranked_neighbors(i: usize, config: &ParticleConfig) -> Result<Vec<usize>> {
    let n = config.len();
    if i >= n {
        return Err(Error::domain(format!("particle index {i} out of range (N = {n})")));
    }
    let mut cand: Vec<(f64, usize)> = (0..n).filter(|&l| l != i).map(|l| (config.dist2(i, l), l)).collect();
    cand.sort_unstable_by(by_distance_then_index);
    Ok(cand.into_iter().map(|c| c.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> ParticleConfig {
        ParticleConfig::new(Domain::new(1, 10.0).unwrap(), points.to_vec()).unwrap()
    }

    #[test]
    fn ranks_on_a_line() {
        let c = line(&[0.0, 1.0, 3.0]);
        assert_eq!(rank_of(0, 1, &c).unwrap(), 1);
        assert_eq!(rank_of(0, 2, &c).unwrap(), 2);
        assert_eq!(k_nearest(0, 1, &c).unwrap(), 1);
        assert!(rank_of(0, 0, &c).is_err());
        assert!(k_nearest(0, 3, &c).is_err());
        assert!(k_nearest(0, 0, &c).is_err());
    }

    #[test]
    fn periodic_tie_goes_to_lower_index() {
        let c = line(&[0.0, 2.0, 8.0]);
        assert_eq!(rank_of(0, 1, &c).unwrap(), 1);
        assert_eq!(rank_of(0, 2, &c).unwrap(), 2);
        assert_eq!(k_nearest(0, 1, &c).unwrap(), 1);
    }

    fn random_config(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ParticleConfig {
        let pos = (0..n * d).map(|_| rng.random::<f64>()).collect();
        ParticleConfig::new(Domain::new(d, 1.0).unwrap(), pos).unwrap()
    }

    #[test]
    fn ranks_form_a_bijection_and_invert_k_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [1, 2] {
            let c = random_config(&mut rng, 6, d);
            for i in 0..6 {
                let mut ranks: Vec<usize> = (0..6).filter(|&j| j != i).map(|j| rank_of(i, j, &c).unwrap()).collect();
                ranks.sort_unstable();
                assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
                for j in (0..6).filter(|&j| j != i) {
                    assert_eq!(k_nearest(i, rank_of(i, j, &c).unwrap(), &c).unwrap(), j);
                }
                let sorted = ranked_neighbors(i, &c).unwrap();
                for (r, &j) in sorted.iter().enumerate() {
                    assert_eq!(rank_of(i, j, &c).unwrap(), r + 1);
                }
            }
        }
    }

    #[test]
    fn ranks_are_invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = 2 + trial % 49;
            let d = 1 + trial % 2;
            let c = random_config(&mut rng, n, d);
            let mut sigma: Vec<usize> = (0..n).collect();
            sigma.shuffle(&mut rng);
            // permuted[sigma[l]] = original[l]
            let mut permuted = vec![0.0; n * d];
            for l in 0..n {
                permuted[sigma[l] * d..(sigma[l] + 1) * d].copy_from_slice(c.point(l));
            }
            let pc = ParticleConfig::new(*c.domain(), permuted).unwrap();
            let i = rng.random_range(0..n);
            for j in (0..n).filter(|&j| j != i) {
                assert_eq!(rank_of(sigma[i], sigma[j], &pc).unwrap(), rank_of(i, j, &c).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn bijection_holds_for_random_configs(pos in prop::collection::vec(0.0f64..1.0, 2..40), i_seed in 0usize..1000) {
            let c = ParticleConfig::new(Domain::new(1, 1.0).unwrap(), pos).unwrap();
            let n = c.len();
            let i = i_seed % n;
            let mut ranks: Vec<usize> = (0..n).filter(|&j| j != i).map(|j| rank_of(i, j, &c).unwrap()).collect();
            ranks.sort_unstable();
            prop_assert_eq!(ranks, (1..n).collect::<Vec<_>>());
        }
    }
}
