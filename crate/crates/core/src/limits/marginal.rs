//! The small-mass expansion of `G` and the rescaled marginal limits of the
//! nearest-neighbor and K-nearest weights.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::report::{Asymptote, LimitReport};
use super::{rel_err, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kinetic::{PhaseField, PhaseGrid, SphereAverages};
use crate::quadrature::integrate_toward_zero;
use crate::special::{binomial_pmf, expansion_constant, ln_beta, unit_sphere_measure};

/// `η = g(v) [ρ0(x) + 0.2 cos(4πx) v/V]` with `ρ0 = 1 + 0.3 sin 2πx` and
/// `g(v) = exp(-2 v²)` on `L = 1`, `V = 1`, normalized to unit mass.
///
/// The velocity-dependent mode keeps `η` from factorizing, so `D[ρ, η] ≠ 0`.
pub fn sine_test_field(nx: usize, nv: usize) -> Result<PhaseField> {
    let grid = PhaseGrid::new(Domain::new(1, 1.0)?, nx, nv, 1.0)?;
    let mut f = PhaseField::from_fn(grid, |x, v| {
        let (x, v) = (x[0], v[0]);
        (-2.0 * v * v).exp() * (1.0 + 0.3 * (TAU * x).sin() + 0.2 * (2.0 * TAU * x).cos() * v)
    })?;
    f.normalize()?;
    Ok(f)
}

/// `H(0) = c_d ρ̃^{-2/d} D[ρ, η] / ρ`, the limit of `(G(m) - G(0)) / m^{2/d}`.
pub fn h_at_zero(avg: &SphereAverages, x: &[f64], vc: usize) -> f64 {
    let d = x.len();
    let (_, rho) = avg.point_values(x, vc);
    let rho_s = unit_sphere_measure(d) * rho;
    expansion_constant(d) * rho_s.powf(-2.0 / d as f64) * avg.d_value(x, vc) / rho
}

/// Twice the spatial cell width: the smallest radius the gridded density resolves.
fn resolution_radius(avg: &SphereAverages) -> f64 {
    2.0 * avg.density().cell_width()
}

/// Relative error, or absolute when the target vanishes.
fn error_to(target: f64, value: f64) -> f64 {
    if target.abs() < 1e-300 {
        value.abs()
    } else {
        rel_err(value, target)
    }
}

/// `H(m) → H(0)` over a sweep in `m`; points with `R(x, m) < 2Δx` are excluded.
pub fn check_expansion(avg: &SphereAverages, x: &[f64], vc: usize, m_sweep: &[f64], tol: &Tolerances) -> Result<LimitReport> {
    let d = x.len();
    let mut r = LimitReport::new("expansion", "m", Asymptote::Small);
    let h0 = h_at_zero(avg, x, vc);
    r.target = Some(h0);
    if h0 == 0.0 {
        r.note("H(0) = 0; errors are absolute");
    }
    let g0 = avg.g_at_zero(x, vc);
    let floor = resolution_radius(avg);
    let mut ms: Vec<f64> = m_sweep.to_vec();
    ms.sort_by(f64::total_cmp);
    let evaluated: Vec<Result<Option<f64>>> = ms
        .par_iter()
        .map(|&m| {
            let radius = avg.density().inverse_partial_mass(x, m)?;
            if radius < floor {
                return Ok(None);
            }
            Ok(Some((avg.g_of_m(x, vc, m)? - g0) / m.powf(2.0 / d as f64)))
        })
        .collect();
    for (&m, h) in ms.iter().zip(evaluated) {
        match h? {
            None => r.exclude(m, "R(x, m) below two cells"),
            Some(h) => {
                r.push(m, error_to(h0, h));
                r.estimates.push(h);
            }
        }
    }
    match r.errors.first() {
        Some(&e) => {
            let m = r.values[0];
            r.check("H(m) near H(0) at the smallest resolvable m", e < tol.expansion_rel, format!("m = {m}: error {e:.3e}, H(0) = {h0:.6e}"));
        }
        None => r.check("H(m) near H(0) at the smallest resolvable m", false, "no resolvable m in the sweep"),
    }
    if r.values.len() >= 4 && r.errors.iter().all(|e| *e > 0.0) {
        if let Some(fit) = r.fit() {
            let slope = fit.slope;
            r.check("error shrinks with m", slope > 0.0, format!("fitted slope {slope:.3}"));
        }
    }
    Ok(r)
}

/// A probability weight on `[0, 1]` whose `m^{2/d}` moment is 1.
trait RankWeight: Sync {
    fn value(&self, m: f64) -> f64;
}

/// `(1-m)^(N-2) / B(1 + 2/d, N-1)`.
struct NearestWeight {
    n: f64,
    ln_norm: f64,
}

impl NearestWeight {
    fn new(n: usize, d: usize) -> Result<Self> {
        Ok(Self { n: n as f64, ln_norm: ln_beta(1.0 + 2.0 / d as f64, (n - 1) as f64)? })
    }
}

impl RankWeight for NearestWeight {
    fn value(&self, m: f64) -> f64 {
        ((self.n - 2.0) * (-m).ln_1p() - self.ln_norm).exp()
    }
}

/// `Σ α_k C(N-2, k-1) m^(k-1) (1-m)^(N-k-1) / Σ α_k C(N-2, k-1) B(k + 2/d, N-k)`.
struct MixtureWeight {
    n: u64,
    alpha: Vec<f64>,
    norm: f64,
}

impl MixtureWeight {
    fn new(n: usize, d: usize, alpha: &[f64]) -> Result<Self> {
        if alpha.is_empty() || alpha.len() > 5 || alpha.len() > n - 1 {
            return Err(Error::domain(format!("need 1 <= K <= min(5, N - 1), got K = {}", alpha.len())));
        }
        let nm1 = (n - 1) as f64;
        let mut norm = 0.0;
        for (i, &a) in alpha.iter().enumerate() {
            let k = (i + 1) as f64;
            // C(N-2, k-1) B(k + 2/d, N-k) with C(N-2, k-1) = 1 / ((N-1) B(k, N-k))
            norm += a * (ln_beta(k + 2.0 / d as f64, nm1 + 1.0 - k)? - ln_beta(k, nm1 + 1.0 - k)? - nm1.ln()).exp();
        }
        Ok(Self { n: n as u64, alpha: alpha.to_vec(), norm })
    }
}

impl RankWeight for MixtureWeight {
    fn value(&self, m: f64) -> f64 {
        let s: f64 = self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, a)| a * binomial_pmf(i as u64, self.n - 2, m).unwrap_or(0.0))
            .sum();
        s / self.norm
    }
}

/// `∫ m^{2/d} w(m) dm`, which is 1 by construction.
fn weight_moment(w: &dyn RankWeight, d: usize) -> Result<f64> {
    integrate_toward_zero(1.0, 1e-12, 1e-300, |m| m.powf(2.0 / d as f64) * w.value(m))
}

fn marginal_sweep(
    name: &str,
    avg: &SphereAverages,
    x: &[f64],
    vc: usize,
    n_sweep: &[usize],
    tol: &Tolerances,
    make: &(dyn Fn(usize) -> Result<Box<dyn RankWeight>> + Sync),
) -> Result<LimitReport> {
    let d = x.len();
    let mut r = LimitReport::new(name, "N", Asymptote::Large);
    let h0 = h_at_zero(avg, x, vc);
    r.target = Some(h0);
    let floor = resolution_radius(avg);
    let mut ns: Vec<usize> = n_sweep.to_vec();
    ns.sort_unstable();
    let evaluated: Vec<Result<Option<f64>>> = ns
        .par_iter()
        .map(|&n| {
            if n < 3 {
                return Err(Error::domain(format!("marginal limits need N >= 3, got {n}")));
            }
            if avg.density().inverse_partial_mass(x, 1.0 / n as f64)? < floor {
                return Ok(None);
            }
            let w = make(n)?;
            Ok(Some(avg.weighted_increment(x, vc, 1e-9, |m| w.value(m))?))
        })
        .collect();
    for (&n, i_n) in ns.iter().zip(evaluated) {
        match i_n? {
            None => r.exclude(n as f64, "R(x, 1/N) below two cells: resolution ceiling"),
            Some(v) => {
                r.push(n as f64, error_to(h0, v));
                r.estimates.push(v);
            }
        }
    }
    let Some(&n_top) = r.values.last() else {
        r.check("I_N near H(0) at the largest resolvable N", false, "no resolvable N in the sweep");
        return Ok(r);
    };
    let e = *r.errors.last().unwrap();
    r.check("I_N near H(0) at the largest resolvable N", e < tol.marginal_rel, format!("N = {n_top}: error {e:.3e}, H(0) = {h0:.6e}"));
    let moment = weight_moment(make(n_top as usize)?.as_ref(), d)?;
    r.check("weight normalization", (moment - 1.0).abs() < tol.quadrature_identity, format!("∫ m^(2/d) w = {moment:.12}"));
    if r.values.len() >= 4 && r.errors.iter().all(|e| *e > 0.0) {
        r.fit();
    }
    Ok(r)
}

/// `I_N = ∫ [G(m) - G(0)] (1-m)^(N-2) / B(1 + 2/d, N-1) dm → H(0)`.
pub fn check_marginal_limit_nearest(avg: &SphereAverages, x: &[f64], vc: usize, n_sweep: &[usize], tol: &Tolerances) -> Result<LimitReport> {
    let d = x.len();
    marginal_sweep("marginal-limit-nearest", avg, x, vc, n_sweep, tol, &|n| Ok(Box::new(NearestWeight::new(n, d)?)))
}

/// The K-nearest analogue with the mixture weight of `alpha`; also checks that
/// it lands on the nearest-neighbor value at the largest resolvable `N`.
pub fn check_marginal_limit_knearest(
    avg: &SphereAverages,
    x: &[f64],
    vc: usize,
    alpha: &[f64],
    n_sweep: &[usize],
    tol: &Tolerances,
) -> Result<LimitReport> {
    let d = x.len();
    let mut r = marginal_sweep("marginal-limit-knearest", avg, x, vc, n_sweep, tol, &|n| Ok(Box::new(MixtureWeight::new(n, d, alpha)?)))?;
    if let (Some(&n), Some(&ik)) = (r.values.last(), r.estimates.last()) {
        let w = NearestWeight::new(n as usize, d)?;
        let i1 = avg.weighted_increment(x, vc, 1e-9, |m| w.value(m))?;
        let h0 = r.target.unwrap_or(0.0);
        let gap = if h0 == 0.0 { (ik - i1).abs() } else { ((ik - i1) / h0).abs() };
        r.check("agrees with the nearest-neighbor limit", gap < tol.agreement_rel, format!("N = {n}: K-nearest {ik:.6e}, nearest {i1:.6e}, gap {gap:.3e} of |H(0)|"));
    }
    Ok(r)
}
