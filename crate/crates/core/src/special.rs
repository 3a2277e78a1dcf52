//! Special functions and the collision-rate scalings.
//!
//! Everything here is evaluated in log space. The rate scalings multiply very
//! large binomial coefficients by very small Beta values, so the direct
//! products overflow long before the particle counts of interest.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Below this argument `ln_gamma` shifts upward by recurrence before using
/// the asymptotic series.
const STIRLING_MIN: f64 = 10.0;

/// Remainder of the Stirling series, `ln Γ(x) - [(x - 1/2) ln x - x + ln(2π)/2]`.
///
/// Seven terms give full double precision for `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 / 156.0))))))
}

/// Natural log of the Gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires a positive finite argument, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x >= STIRLING_MIN {
        return (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_correction(x);
    }
    let mut y = x;
    let mut prod = 1.0;
    while y < STIRLING_MIN {
        prod *= y;
        y += 1.0;
    }
    ln_gamma_pos(y) - prod.ln()
}

/// Gamma function for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    Ok(ln_gamma(x)?.exp())
}

/// `ln Γ(b) - ln Γ(a + b)` without cancellation when `b` is large.
fn ln_gamma_diff(a: f64, b: f64) -> f64 {
    let c = a + b;
    if b >= STIRLING_MIN {
        -(b - 0.5) * (a / b).ln_1p() - a * c.ln() + a + stirling_correction(b) - stirling_correction(c)
    } else {
        ln_gamma_pos(b) - ln_gamma_pos(c)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Natural log of the Beta function.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    if small >= STIRLING_MIN {
        let c = a + b;
        // ln(a/c) goes through ln1p when the ratio is close to 1
        let share = |x: f64, y: f64| if x < y { (x / c).ln() } else { (-y / c).ln_1p() };
        let la = share(a, b);
        let lb = share(b, a);
        return Ok(HALF_LN_2PI - 0.5 * c.ln() + (a - 0.5) * la + (b - 0.5) * lb
            + stirling_correction(a)
            + stirling_correction(b)
            - stirling_correction(c));
    }
    Ok(ln_gamma_pos(small) + ln_gamma_diff(small, large))
}

/// Euler Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    Ok(ln_beta(a, b)?.exp())
}

/// Density of the Beta(a, b) distribution at `s`.
pub fn beta_pdf(s: f64, a: f64, b: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::domain(format!("beta_pdf requires s in [0,1], got {s}")));
    }
    let lb = ln_beta(a, b)?;
    // at an endpoint the other factor equals 1
    let edge = |exponent: f64| {
        if exponent > 1.0 {
            Ok(0.0)
        } else if exponent == 1.0 {
            Ok((-lb).exp())
        } else {
            Err(Error::domain("beta_pdf is unbounded at this endpoint"))
        }
    };
    if s == 0.0 {
        return edge(a);
    }
    if s == 1.0 {
        return edge(b);
    }
    Ok(((a - 1.0) * s.ln() + (b - 1.0) * (-s).ln_1p() - lb).exp())
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln(2π)/2]` for real `n > 0`.
fn stirlerr(n: f64) -> f64 {
    if n >= STIRLING_MIN {
        stirling_correction(n)
    } else {
        ln_gamma_pos(n + 1.0) - (n + 0.5) * n.ln() + n - HALF_LN_2PI
    }
}

/// Deviance term `x ln(x/np) + np - x`, evaluated stably when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Binomial probability mass `C(n,k) p^k (1-p)^(n-k)`.
///
/// Uses Loader's saddle-point form so the result keeps full relative accuracy
/// for large `n`.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("binomial_pmf requires k <= n, got k={k}, n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("binomial_pmf requires p in [0,1], got {p}")));
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let (kf, nf) = (k as f64, n as f64);
    if k == 0 {
        return Ok((nf * (-p).ln_1p()).exp());
    }
    if k == n {
        return Ok((nf * p.ln()).exp());
    }
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    Ok((lc - 0.5 * lf).exp())
}

/// Generalized binomial coefficient `C(a+k-1, k) = Γ(a+k) / (Γ(k+1) Γ(a))`.
pub fn gen_binom_coeff(a: f64, k: u64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::domain(format!("gen_binom_coeff requires finite a, got {a}")));
    }
    if a <= 0.0 && a == a.floor() {
        return Err(Error::domain(format!("Γ has a pole at a = {a}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k <= 256 || a < 0.0 {
        let mut c = 1.0;
        for j in 0..k {
            c *= (a + j as f64) / (j + 1) as f64;
        }
        return Ok(c);
    }
    // Γ(a+k) / (Γ(k+1) Γ(a)) = 1 / ((a+k) B(a, k+1))
    let kf = k as f64;
    Ok((-ln_beta(a, kf + 1.0)? - (a + kf).ln()).exp())
}

/// Binomial coefficient `C(y, k)` with real upper argument.
pub fn binom_real(y: f64, k: u64) -> Result<f64> {
    gen_binom_coeff(y - k as f64 + 1.0, k)
}

/// Measure of the unit sphere `S^{d-1}`: 2 for d=1, 2π for d=2, 4π for d=3.
pub fn unit_sphere_measure(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / ln_gamma_pos(h).exp()
}

/// The constant `d^(2/d - 1) / 2` that ties the rank scaling to the second moment
/// of the neighbor distance.
pub fn expansion_constant(d: usize) -> f64 {
    let df = d as f64;
    df.powf(2.0 / df - 1.0) / 2.0
}

/// Parameters of a rank-based scaling: particle count, dimension, rank weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    n: usize,
    d: usize,
    alpha: Vec<f64>,
}

impl ScalingParams {
    pub fn new(n: usize, d: usize, alpha: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("particle count must be >= 2, got {n}")));
        }
        if d == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        validate_weights(&alpha)?;
        if alpha.len() > n - 1 {
            return Err(Error::domain(format!(
                "K = {} exceeds N - 1 = {}",
                alpha.len(),
                n - 1
            )));
        }
        Ok(Self { n, d, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// Checks that `alpha` is a nonempty probability vector (sum 1 within 1e-12).
pub fn validate_weights(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::domain("weight sequence is empty"));
    }
    if let Some(w) = alpha.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::domain(format!("weights must be nonnegative, found {w}")));
    }
    let sum: f64 = alpha.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Per-particle collision rate making the nearest-neighbor limit nontrivial:
/// `1 / ((N-1) c_d B(1 + 2/d, N-1))` with `c_d = d^(2/d-1)/2`.
pub fn lambda_nearest(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("lambda_nearest requires N >= 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    let df = d as f64;
    let lb = ln_beta(1.0 + 2.0 / df, (n - 1) as f64)?;
    Ok((-((n - 1) as f64).ln() - expansion_constant(d).ln() - lb).exp())
}

/// K-nearest analogue of [`lambda_nearest`], weighting the rank-k Beta terms by `alpha`.
pub fn lambda_knearest(n: usize, d: usize, alpha: &[f64]) -> Result<f64> {
    let params = ScalingParams::new(n, d, alpha.to_vec())?;
    let df = params.d as f64;
    let nm1 = (n - 1) as f64;
    // C(N-2, k-1) = 1 / ((N-1) B(k, N-k))
    let mut sum = 0.0;
    for (idx, &w) in params.alpha.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let k = (idx + 1) as f64;
        let term = ln_beta(k + 2.0 / df, nm1 + 1.0 - k)? - ln_beta(k, nm1 + 1.0 - k)? - nm1.ln();
        sum += w * term.exp();
    }
    Ok(1.0 / (nm1 * expansion_constant(d) * sum))
}

/// `Σ_k α_k C(2/d + k - 1, k - 1)`, the factor separating the K-nearest scaling
/// from the nearest-neighbor one.
pub fn knearest_reduction_factor(d: usize, alpha: &[f64]) -> Result<f64> {
    let a = 1.0 + 2.0 / d as f64;
    alpha
        .iter()
        .enumerate()
        .map(|(idx, w)| Ok(w * gen_binom_coeff(a, idx as u64)?))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn beta_by_quadrature(a: f64, b: f64) -> f64 {
        simpson(&|u: f64| u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0), 0.0, 1.0, 1e-14)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_at_integers_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..30u32 {
            assert!((ln_gamma(n as f64).unwrap() - fact.ln()).abs() < 1e-13 * fact.ln().max(1.0));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5).unwrap() - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_large_argument() {
        // ln Γ(1e6) from the factorial recursion would be too slow; compare with a half-step ratio.
        let x = 1e6;
        let lhs = ln_gamma(x + 1.0).unwrap() - ln_gamma(x).unwrap();
        assert!((lhs - x.ln()).abs() < 1e-8);
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
    }

    #[test]
    fn beta_matches_quadrature() {
        assert!(rel(beta_function(2.0, 9.0).unwrap(), 1.0 / 90.0) < 1e-13);
        assert!(rel(beta_by_quadrature(2.0, 9.0), 1.0 / 90.0) < 1e-9);
        for &(a, b) in &[(1.5, 2.5), (3.0, 49.0), (2.0, 2.0), (1.0 + 2.0 / 3.0, 12.0)] {
            let q = beta_by_quadrature(a, b);
            assert!(rel(beta_function(a, b).unwrap(), q) < 1e-8, "B({a},{b})");
        }
        assert!((beta_function(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(beta_function(0.0, 1.0).is_err());
        assert!(beta_function(1.0, -2.0).is_err());
    }

    #[test]
    fn ln_beta_large_arguments_consistent() {
        // B(a, b) = B(a + 1, b) + B(a, b + 1)
        for &(a, b) in &[(20.0, 30.0), (1e5, 3e5), (2.0, 1e6), (12.5, 1e6)] {
            let lhs = ln_beta(a, b).unwrap();
            let r1 = (ln_beta(a + 1.0, b).unwrap() - lhs).exp();
            let r2 = (ln_beta(a, b + 1.0).unwrap() - lhs).exp();
            // the log itself carries an absolute error proportional to its magnitude
            let tol = 1e-12f64.max(8.0 * f64::EPSILON * lhs.abs());
            assert!((r1 + r2 - 1.0).abs() < tol, "({a}, {b}): {}", r1 + r2);
        }
    }

    #[test]
    fn beta_pdf_values() {
        assert!((beta_pdf(0.5, 2.0, 2.0).unwrap() - 1.5).abs() < 1e-14);
        assert_eq!(beta_pdf(0.0, 2.0, 2.0).unwrap(), 0.0);
        for s in [0.0, 0.3, 1.0] {
            assert!((beta_pdf(s, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        }
        let total = simpson(&|s| beta_pdf(s, 2.5, 7.0).unwrap(), 0.0, 1.0, 1e-12);
        assert!((total - 1.0).abs() < 1e-9);
        assert!(beta_pdf(0.0, 0.5, 2.0).is_err());
        assert!(beta_pdf(1.2, 2.0, 2.0).is_err());
    }

    #[test]
    fn binomial_pmf_small_cases() {
        assert!((binomial_pmf(2, 4, 0.5).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(binomial_pmf(0, 0, 0.3).unwrap(), 1.0);
        assert!((binomial_pmf(0, 7, 0.2).unwrap() - 0.8f64.powi(7)).abs() < 1e-15);
        assert!(binomial_pmf(5, 4, 0.5).is_err());
        // direct product oracle
        for n in 1..40u64 {
            let mut c = 1.0f64;
            for k in 0..=n {
                let direct = c * 0.37f64.powi(k as i32) * 0.63f64.powi((n - k) as i32);
                assert!(rel(binomial_pmf(k, n, 0.37).unwrap(), direct) < 1e-12, "n={n} k={k}");
                c = c * (n - k) as f64 / (k + 1) as f64;
            }
        }
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        for &n in &[1u64, 10, 1000, 10_000] {
            for &p in &[0.0, 0.3, 1.0] {
                let s: f64 = (0..=n).map(|k| binomial_pmf(k, n, p).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-12, "n={n} p={p}: {s}");
            }
        }
    }

    #[test]
    fn gen_binom_coeff_values() {
        assert_eq!(gen_binom_coeff(0.7, 0).unwrap(), 1.0);
        for k in 0..20 {
            assert!((gen_binom_coeff(1.0, k).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((gen_binom_coeff(1.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((gen_binom_coeff(2.0, 1).unwrap() - 2.0).abs() < 1e-15);
        // Γ-ratio oracle
        let a = 1.0 + 2.0 / 3.0;
        for k in [1u64, 5, 300, 5000] {
            let oracle = (ln_gamma(a + k as f64).unwrap() - ln_gamma(k as f64 + 1.0).unwrap() - ln_gamma(a).unwrap()).exp();
            assert!(rel(gen_binom_coeff(a, k).unwrap(), oracle) < 1e-11, "k={k}");
        }
        assert!(gen_binom_coeff(0.0, 3).is_err());
        assert!(gen_binom_coeff(-2.0, 3).is_err());
        // C(-1/2 + 2 - 1, 2) = (-1/2)(1/2)/2
        assert!((gen_binom_coeff(-0.5, 2).unwrap() + 0.125).abs() < 1e-15);
    }

    #[test]
    fn lambda_nearest_values() {
        for n in [2usize, 10, 100, 1000, 10_000] {
            assert!(rel(lambda_nearest(n, 2).unwrap(), 2.0 * n as f64) < 1e-12);
        }
        let b = beta_by_quadrature(3.0, 49.0);
        assert!(rel(lambda_nearest(50, 1).unwrap(), 1.0 / (49.0 * 0.5 * b)) < 1e-8);
        assert!(lambda_nearest(1, 2).is_err());
        for d in 1..=3 {
            let mut prev = 0.0;
            for n in [2usize, 3, 10, 50, 1000] {
                let l = lambda_nearest(n, d).unwrap();
                assert!(l > prev);
                prev = l;
            }
        }
    }

    #[test]
    fn lambda_knearest_reduces_to_nearest() {
        assert!(rel(lambda_knearest(20, 2, &[0.5, 0.5]).unwrap(), 40.0 / 1.5) < 1e-12);
        for d in 1..=3 {
            for n in [10usize, 100] {
                let base = lambda_nearest(n, d).unwrap();
                assert!(rel(lambda_knearest(n, d, &[1.0]).unwrap(), base) < 1e-12);
                for alpha in [vec![0.2, 0.3, 0.5], vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![0.1, 0.2, 0.3, 0.2, 0.2]] {
                    let f = knearest_reduction_factor(d, &alpha).unwrap();
                    assert!(rel(lambda_knearest(n, d, &alpha).unwrap(), base / f) < 1e-10);
                }
            }
        }
        let mut alpha = vec![0.0; 9];
        alpha[8] = 1.0;
        let l = lambda_knearest(10, 2, &alpha).unwrap();
        assert!(l.is_finite() && l > 0.0);
        assert!(lambda_knearest(5, 2, &[0.25; 4]).is_ok());
        assert!(lambda_knearest(4, 2, &[0.25; 4]).is_err());
        assert!(lambda_knearest(10, 2, &[0.5, 0.4]).is_err());
    }

    #[test]
    fn sphere_measure_and_constant() {
        assert!((unit_sphere_measure(1) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_measure(2) - 2.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_measure(3) - 4.0 * PI).abs() < 1e-13);
        assert!((expansion_constant(1) - 0.5).abs() < 1e-15);
        assert!((expansion_constant(2) - 0.5).abs() < 1e-15);
        assert!((expansion_constant(3) - 0.5 * 3f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_is_symmetric(a in 0.05f64..500.0, b in 0.05f64..500.0) {
                let x = ln_beta(a, b).unwrap();
                let y = ln_beta(b, a).unwrap();
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }

            #[test]
            fn beta_recurrence(a in 0.1f64..1e4, b in 0.1f64..1e4) {
                let lhs = ln_beta(a + 1.0, b).unwrap() - ln_beta(a, b).unwrap();
                prop_assert!((lhs - (a / (a + b)).ln()).abs() < 1e-11);
            }

            #[test]
            fn binomial_pmf_is_probability(k in 0u64..200, extra in 0u64..200, p in 0.0f64..=1.0) {
                let v = binomial_pmf(k, k + extra, p).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
