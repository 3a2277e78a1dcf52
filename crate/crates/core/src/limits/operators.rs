//! Operator-level checks: the discrete mass identity of the local operator and
//! the singular limit from the nonlocal operator to the local one.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{Asymptote, LimitReport};
use super::Tolerances;
use crate::error::Result;
use crate::geometry::Domain;
use crate::kernel::{Profile, RankKernel};
use crate::kinetic::{collision_local, collision_nonlocal, collision_nonlocal_averaged, PhaseField, PhaseGrid, SphereAverages};
use crate::special::expansion_constant;

/// Largest per-cell `|Σ_v Q Δv|`.
fn velocity_sum_residual(q: &PhaseField) -> f64 {
    let g = q.grid();
    (0..g.x_cells()).map(|c| (q.slice(c).iter().sum::<f64>() * g.dv_volume()).abs()).fold(0.0, f64::max)
}

/// `Σ_v Q[f] Δv = 0` per cell for random admissible fields, and `Q[ρ ⊗ g] = 0`.
///
/// Cell values are drawn uniformly from `[0.05, 1]`, so the fields are positive
/// but rough; that maximizes the size of `Q` and hence of the rounding. The
/// factorized fields pair random velocity profiles with random three-mode densities.
pub fn check_mass_identity(fields: usize, nx: usize, nv: usize, seed: u64, tol: &Tolerances) -> Result<LimitReport> {
    let grid = PhaseGrid::new(Domain::new(1, 1.0)?, nx, nv, 1.0)?;
    let mut r = LimitReport::new("mass-identity", "field", Asymptote::Large);
    let residuals: Vec<Result<(f64, f64)>> = (0..fields)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let values: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let mut f = PhaseField::new(grid, values)?;
            f.normalize()?;
            let sum = velocity_sum_residual(&collision_local(&f)?);

            // band-limited ρ: the rounding of Δρ grows with its roughness
            let modes: Vec<(f64, f64)> = (0..3).map(|_| (rng.random_range(-0.15..0.15), rng.random_range(0.0..TAU))).collect();
            let rho: Vec<f64> = (0..nx)
                .map(|i| {
                    let x = grid.x_center(i);
                    1.0 + modes.iter().enumerate().map(|(k, (a, ph))| a * (TAU * (k + 1) as f64 * x + ph).sin()).sum::<f64>()
                })
                .collect();
            let gv: Vec<f64> = (0..nv).map(|_| rng.random_range(0.0..1.0)).collect();
            let vals: Vec<f64> = rho.iter().flat_map(|a| gv.iter().map(move |b| a * b)).collect();
            let mut p = PhaseField::new(grid, vals)?;
            p.normalize()?;
            let fact = collision_local(&p)?.values().iter().fold(0.0f64, |m, q| m.max(q.abs()));
            Ok((sum, fact))
        })
        .collect();
    let (mut worst_sum, mut worst_fact) = (0.0f64, 0.0f64);
    for (i, res) in residuals.into_iter().enumerate() {
        let (sum, fact) = res?;
        r.push((i + 1) as f64, sum);
        worst_sum = worst_sum.max(sum);
        worst_fact = worst_fact.max(fact);
    }
    r.check("Σ_v Q Δv = 0 per cell", worst_sum < tol.mass_identity_abs, format!("max {worst_sum:.3e} over {fields} fields on {nx}x{nv}"));
    r.check("Q[ρ ⊗ g] = 0", worst_fact < tol.factorized_abs, format!("max |Q| {worst_fact:.3e}"));
    Ok(r)
}

/// `E(ε) = ‖Q_nonlocal[K^ε] f - Q_local f‖_1` over a sweep in `ε` (one dimension).
///
/// Values of `ε` whose ball radius `R(x, ε)` drops below two cells somewhere are
/// excluded. The sphere-averaged form of the nonlocal operator, which avoids
/// the interpolation of `f` in `x'`, is reported alongside in the notes.
pub fn check_singular_limit(f: &PhaseField, profile: &Profile, eps_sweep: &[f64], tol: &Tolerances) -> Result<LimitReport> {
    let g = *f.grid();
    let d = g.d();
    let mut r = LimitReport::new("singular-limit", "eps", Asymptote::Small);
    let local = collision_local(f)?;
    let density = f.spatial_density()?;
    let floor = 2.0 * g.dx();
    let mut eps_min: f64 = 0.0;
    for c in 0..g.x_cells() {
        eps_min = eps_min.max(density.partial_mass(&g.x_point(c), floor)?);
    }
    r.note(format!("resolution floor: eps_min = {eps_min:.6e} (R(x, eps) = 2 dx at the densest cell)"));
    let avg = SphereAverages::new(f)?;

    let mut eps: Vec<f64> = eps_sweep.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let results: Vec<Result<Option<(f64, f64, f64)>>> = eps
        .par_iter()
        .map(|&e| {
            if e < eps_min {
                return Ok(None);
            }
            let kernel = RankKernel::concentrated(profile.clone(), d, e)?;
            let audit = expansion_constant(d) * kernel.moment(2.0 / d as f64)?;
            let q = collision_nonlocal(f, &kernel)?;
            let qa = collision_nonlocal_averaged(&avg, &kernel)?;
            Ok(Some((q.l1_distance(&local)?, qa.l1_distance(&local)?, audit)))
        })
        .collect();
    let mut worst_audit: f64 = 0.0;
    let mut averaged = Vec::new();
    for (&e, res) in eps.iter().zip(results) {
        match res? {
            None => r.exclude(e, "below the resolution floor"),
            Some((lit, av, audit)) => {
                r.push(e, lit);
                averaged.push((e, av));
                worst_audit = worst_audit.max((audit - 1.0).abs());
            }
        }
    }
    r.check("kernel normalization c_d ∫ m^(2/d) K^ε = 1", worst_audit < tol.quadrature_identity, format!("max deviation {worst_audit:.3e}"));
    let decreasing = r.errors.len() >= 2 && r.errors.windows(2).all(|w| w[1] < w[0]);
    r.check("E strictly decreasing as eps shrinks", decreasing, format!("{:?}", r.errors));
    if let Some(fit) = r.fit() {
        let order = fit.slope;
        r.check("fitted order positive", order > tol.singular_order_min, format!("order {order:.3} [{:.3}, {:.3}]", fit.ci_low, fit.ci_high));
    }
    r.note(format!(
        "sphere-averaged form: {}",
        averaged.iter().map(|(e, v)| format!("E({e}) = {v:.6e}")).collect::<Vec<_>>().join(", ")
    ));
    Ok(r)
}
