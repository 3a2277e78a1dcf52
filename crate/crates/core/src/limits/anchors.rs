//! Closed-form anchors: rate scalings, Beta identities and concentration, the rank law.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{Asymptote, LimitReport};
use super::{rel_err, Tolerances};
use crate::error::Result;
use crate::geometry::{empirical_rank_law, rank_pmf, total_variation};
use crate::quadrature::{composite, gl16, integrate_toward_zero};
use crate::special::{beta_function, beta_pdf, binom_real, gamma, knearest_reduction_factor, lambda_knearest, lambda_nearest};

const KNEAREST_WEIGHTS: [&[f64]; 5] = [&[1.0], &[0.5, 0.5], &[0.2, 0.3, 0.5], &[0.25, 0.25, 0.25, 0.25], &[0.1, 0.2, 0.3, 0.2, 0.2]];

/// `λ(N) = 2N` in two dimensions, and the K-nearest rate as the nearest-neighbor
/// rate divided by `Σ α_k C(2/d + k - 1, k - 1)`.
pub fn check_scalings(ns: &[usize], tol: &Tolerances) -> Result<LimitReport> {
    let mut r = LimitReport::new("scalings", "N", Asymptote::Large);
    let mut worst: f64 = 0.0;
    for &n in ns {
        let err = rel_err(lambda_nearest(n, 2)?, 2.0 * n as f64);
        r.push(n as f64, err);
        worst = worst.max(err);
    }
    r.check("lambda_nearest(N, 2) = 2N", worst < tol.scaling_rel, format!("max relative error {worst:.3e}"));

    let mut worst: f64 = 0.0;
    for n in [10usize, 100] {
        for d in 1..=3 {
            let base = lambda_nearest(n, d)?;
            for alpha in KNEAREST_WEIGHTS {
                let expected = base / knearest_reduction_factor(d, alpha)?;
                worst = worst.max(rel_err(lambda_knearest(n, d, alpha)?, expected));
            }
        }
    }
    r.check("K-nearest rate reduction", worst < tol.scaling_rel, format!("max relative error {worst:.3e} over K <= 5, N in {{10, 100}}, d <= 3"));
    Ok(r)
}

/// The shift identity `B(a+k, b-k) = B(a, b) C(a+k-1, k) / C(b-1, k)` and the
/// large-`b` asymptote `B(a, b) b^a → Γ(a)`.
pub fn check_beta_identities(tol: &Tolerances) -> Result<LimitReport> {
    let mut r = LimitReport::new("beta", "case", Asymptote::Large);
    let mut worst: f64 = 0.0;
    let mut case = 0.0;
    for a in [1.5, 2.0, 3.7] {
        for b in [10.0, 100.0] {
            for k in 1..=3u64 {
                let lhs = beta_function(a + k as f64, b - k as f64)?;
                let rhs = beta_function(a, b)? * binom_real(a + k as f64 - 1.0, k)? / binom_real(b - 1.0, k)?;
                let err = rel_err(lhs, rhs);
                case += 1.0;
                r.push(case, err);
                worst = worst.max(err);
            }
        }
    }
    r.check("shift identity", worst < tol.beta_identity_rel, format!("max relative error {worst:.3e} over 18 cases"));

    let b = 1e4;
    let mut worst: f64 = 0.0;
    for a in [1.0, 3.0, 2.0, 1.0 + 2.0 / 3.0] {
        let ratio = beta_function(a, b)? * b.powf(a) / gamma(a)?;
        let err = (ratio - 1.0).abs();
        case += 1.0;
        r.push(case, err);
        worst = worst.max(err);
    }
    r.check("B(a, b) b^a / Γ(a) at b = 1e4", worst < tol.beta_asymptotic_rel, format!("max |ratio - 1| = {worst:.3e}"));
    r.note("cases 1-18: shift identity over a in {1.5, 2, 3.7}, b in {10, 100}, k in {1, 2, 3}; cases 19-22: asymptote for a in {1, 3, 2, 5/3}");
    Ok(r)
}

/// `E_{β(a,b)}[h]` over `[0, 1]`, split at the listed points where `h` has kinks.
fn beta_expectation(h: &(impl Fn(f64) -> f64 + Sync), kinks: &[f64], a: f64, b: f64) -> Result<f64> {
    let mut cuts: Vec<f64> = kinks.iter().copied().filter(|k| *k > 0.0 && *k < 1.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(1.0);
    let mut err = None;
    let mut f = |u: f64| match beta_pdf(u, a, b) {
        Ok(p) => h(u) * p,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    // the density concentrates at width ~ a/b near 0
    let mut total = integrate_toward_zero(cuts[0], 1e-12, 1e-300, &mut f)?;
    for w in cuts.windows(2) {
        total += composite(gl16(), w[0], w[1], 64, &mut f);
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Concentration of `β(a, b)` at 0: `E[h] → 0` as `b` grows, for bounded `h` with `h(0+) = 0`.
pub fn check_beta_concentration(
    h: impl Fn(f64) -> f64 + Sync,
    kinks: &[f64],
    a: f64,
    b_sweep: &[f64],
    tol: &Tolerances,
) -> Result<LimitReport> {
    let mut r = LimitReport::new("beta-concentration", "b", Asymptote::Large);
    let values: Vec<Result<f64>> = b_sweep.par_iter().map(|&b| beta_expectation(&h, kinks, a, b)).collect();
    for (&b, e) in b_sweep.iter().zip(values) {
        r.push(b, e?);
    }
    let decreasing = r.errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    r.check("E[h] nonincreasing in b", decreasing, format!("{:?}", r.errors));
    let last = r.errors.last().copied().unwrap_or(f64::NAN);
    r.check("E[h] small at the largest b", last.abs() <= tol.beta_concentration_final, format!("{last:.3e}"));
    if r.errors.iter().all(|e| *e > 0.0) && r.values.len() >= 4 {
        r.fit();
    }
    Ok(r)
}

/// Total variation between the closed-form rank law and a Monte Carlo estimate.
pub fn check_rank_law(cases: &[(usize, f64)], samples: usize, seed: u64, tol: &Tolerances) -> Result<LimitReport> {
    let mut r = LimitReport::new("rank-law", "case", Asymptote::Large);
    let tvs: Vec<Result<f64>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(n, p))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let emp = empirical_rank_law(n, p, samples, &mut rng)?;
            let exact: Vec<f64> = (1..n).map(|k| rank_pmf(k, n, p)).collect::<Result<_>>()?;
            Ok(total_variation(&exact, &emp))
        })
        .collect();
    for (i, ((n, p), tv)) in cases.iter().zip(tvs).enumerate() {
        let tv = tv?;
        r.push((i + 1) as f64, tv);
        r.check(&format!("TV(N={n}, p={p})"), tv < tol.rank_law_tv, format!("{tv:.4e} with {samples} samples"));
    }
    Ok(r)
}
