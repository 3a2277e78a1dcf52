//! Grid convergence of the local-model solver against a manufactured solution.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Asymptote, LimitReport};
use super::Tolerances;
use crate::error::Result;
use crate::geometry::Domain;
use crate::kinetic::{evolve, stable_dt, Model, PhaseField, PhaseGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSetup {
    pub nx: Vec<usize>,
    pub nv: usize,
    pub vmax: f64,
    pub horizon: f64,
    /// Step as a fraction of the stability bound.
    pub dt_fraction: f64,
}

impl Default for MmsSetup {
    fn default() -> Self {
        Self { nx: vec![64, 128, 256, 512], nv: 8, vmax: 1.0, horizon: 0.05, dt_fraction: 0.5 }
    }
}

/// `f_e = g(v) [1 + 0.3 sin(2πx - t) + 0.2 (v/V) cos(4πx + t)]` with `g = exp(-2v²)`,
/// and the forcing that makes it an exact solution of the continuous local model
/// whose density is the discrete velocity sum `Σ_j f_e(v_j) Δv`.
struct Manufactured {
    vmax: f64,
    g0: f64,
    g1: f64,
}

impl Manufactured {
    fn new(grid: &PhaseGrid) -> Self {
        let (mut g0, mut g1) = (0.0, 0.0);
        for j in 0..grid.nv() {
            let v = grid.v_center(j);
            g0 += Self::g(v) * grid.dv();
            g1 += v * Self::g(v) * grid.dv();
        }
        Self { vmax: grid.vmax(), g0, g1 }
    }

    fn g(v: f64) -> f64 {
        (-2.0 * v * v).exp()
    }

    fn exact(&self, t: f64, x: f64, v: f64) -> f64 {
        Self::g(v) * (1.0 + 0.3 * (TAU * x - t).sin() + 0.2 * v / self.vmax * (2.0 * TAU * x + t).cos())
    }

    fn forcing(&self, t: f64, x: f64, v: f64) -> f64 {
        let (s1, c1) = (TAU * x - t).sin_cos();
        let (s2, c2) = (2.0 * TAU * x + t).sin_cos();
        let w = v / self.vmax;
        let g = Self::g(v);
        let f = self.exact(t, x, v);
        let ft = g * (-0.3 * c1 - 0.2 * w * s2);
        let fx = g * (0.3 * TAU * c1 - 0.2 * w * 2.0 * TAU * s2);
        let fxx = g * (-0.3 * TAU * TAU * s1 - 0.2 * w * 4.0 * TAU * TAU * c2);
        let rho = self.g0 * (1.0 + 0.3 * s1) + 0.2 * c2 * self.g1 / self.vmax;
        let rho_xx = -0.3 * TAU * TAU * s1 * self.g0 - 0.2 * 4.0 * TAU * TAU * c2 * self.g1 / self.vmax;
        // ρ̃ = 2ρ in one dimension
        let q = (fxx - f / rho * rho_xx) / (4.0 * rho * rho);
        ft + v * fx - q
    }
}

/// L1 error at the horizon for each `n_x`, and the fitted spatial order.
pub fn check_manufactured_solution(setup: &MmsSetup, tol: &Tolerances) -> Result<LimitReport> {
    let mut r = LimitReport::new("manufactured-solution", "nx", Asymptote::Large);
    let mut nxs = setup.nx.clone();
    nxs.sort_unstable();
    let runs: Vec<Result<(f64, usize)>> = nxs
        .par_iter()
        .map(|&nx| {
            let grid = PhaseGrid::new(Domain::new(1, 1.0)?, nx, setup.nv, setup.vmax)?;
            let mms = Manufactured::new(&grid);
            let f0 = PhaseField::from_fn(grid, |x, v| mms.exact(0.0, x[0], v[0]))?;
            let limit = setup.dt_fraction * stable_dt(&f0, &Model::Local)?;
            let steps = (setup.horizon / limit).ceil().max(1.0) as usize;
            let dt = setup.horizon / steps as f64;
            let forcing = |t: f64, x: f64, v: f64| mms.forcing(t, x, v);
            let traj = evolve(&f0, &Model::Local, setup.horizon, dt, &[], Some(&forcing))?;
            let exact = PhaseField::from_fn(grid, |x, v| mms.exact(setup.horizon, x[0], v[0]))?;
            Ok((traj.final_field().l1_distance(&exact)?, steps))
        })
        .collect();
    for (&nx, run) in nxs.iter().zip(runs) {
        let (err, steps) = run?;
        r.push(nx as f64, err);
        r.note(format!("nx = {nx}: {steps} steps"));
    }
    if let Some(fit) = r.fit() {
        let order = -fit.slope;
        r.check(
            "spatial order",
            (tol.mms_order_min..=tol.mms_order_max).contains(&order),
            format!("order {order:.3} (interval [{:.3}, {:.3}])", -fit.ci_high, -fit.ci_low),
        );
    }
    Ok(r)
}
