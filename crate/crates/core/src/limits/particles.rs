//! Particle-level checks: the simulated spatial density against the local PDE,
//! pure sampling noise, and the Poisson law of collision counts.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, DiscreteCDF, Poisson};

use super::report::{Asymptote, LimitReport};
use super::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kinetic::{evolve, stable_dt, Model, PhaseField, PhaseGrid};
use crate::sim::{
    chaos_defect, collision_rate, empirical_phase_density, replica_rng, run, run_replicas, sample_ensemble, spatial_histogram,
    EngineKind, Ensemble, InteractionRule, LambdaMode, SimParams, Stream,
};

/// The particle-versus-PDE experiment in one dimension with nearest-neighbor copying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimPdeSetup {
    /// Particle counts of the dynamic comparison.
    pub n: Vec<usize>,
    /// Particle counts of the `t = 0` sampling sweep.
    pub sampling_n: Vec<usize>,
    pub replicas: u64,
    pub horizon: f64,
    /// Number of equal intervals of `[0, horizon]`; the distance is averaged over their endpoints.
    pub intervals: usize,
    /// PDE grid.
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    /// Position bins of the compared spatial densities; must divide `nx`.
    pub bins: usize,
    pub seed: u64,
}

impl Default for SimPdeSetup {
    fn default() -> Self {
        Self {
            n: vec![500, 2000, 8000],
            sampling_n: vec![125, 500, 2000, 8000],
            replicas: 64,
            horizon: 0.25,
            intervals: 5,
            nx: 128,
            nv: 16,
            vmax: 0.5,
            bins: 32,
            seed: 20_240_601,
        }
    }
}

impl SimPdeSetup {
    /// Every problem with the setup, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n.is_empty() {
            out.push("the particle sweep is empty".into());
        }
        if self.n.iter().chain(&self.sampling_n).any(|n| *n < 3) {
            out.push("particle counts must be at least 3".into());
        }
        if self.replicas < 1 {
            out.push("need at least one replica".into());
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            out.push(format!("horizon must be finite and nonnegative, got {}", self.horizon));
        }
        if self.intervals < 1 {
            out.push("need at least one time interval".into());
        }
        if self.bins == 0 || !self.nx.is_multiple_of(self.bins) {
            out.push(format!("bins = {} must divide nx = {}", self.bins, self.nx));
        }
        if !(self.vmax > 0.0) {
            out.push("vmax must be positive".into());
        }
        out
    }

    /// `f0 = (1 + 0.5 sin 2πx)(1 - (v/V)²)`, normalized.
    pub fn initial_field(&self) -> Result<PhaseField> {
        let grid = PhaseGrid::new(Domain::new(1, 1.0)?, self.nx, self.nv, self.vmax)?;
        let vmax = self.vmax;
        let mut f = PhaseField::product(grid, |x| 1.0 + 0.5 * (TAU * x[0]).sin(), |v| 1.0 - (v[0] / vmax).powi(2))?;
        f.normalize()?;
        Ok(f)
    }

    fn times(&self) -> Vec<f64> {
        (0..=self.intervals).map(|k| self.horizon * k as f64 / self.intervals as f64).collect()
    }
}

/// Averages a spatial density from `nx` cells down to `bins` cells.
fn coarsen(rho: &[f64], bins: usize) -> Vec<f64> {
    let r = rho.len() / bins;
    rho.chunks(r).map(|c| c.iter().sum::<f64>() / r as f64).collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn pde_densities(setup: &SimPdeSetup, f0: &PhaseField) -> Result<(Vec<Vec<f64>>, Vec<PhaseField>)> {
    let times = setup.times();
    if setup.horizon == 0.0 {
        return Ok((vec![coarsen(&f0.rho(), setup.bins); times.len()], vec![f0.clone(); times.len()]));
    }
    // whole steps per interval, at half the stability bound
    let per = (setup.horizon / setup.intervals as f64 / (0.5 * stable_dt(f0, &Model::Local)?)).ceil() as usize;
    let dt = setup.horizon / (per * setup.intervals) as f64;
    let traj = evolve(f0, &Model::Local, setup.horizon, dt, &times, None)?;
    if traj.snapshots.len() != times.len() {
        return Err(Error::Consistency(format!("expected {} PDE snapshots, got {}", times.len(), traj.snapshots.len())));
    }
    let rhos = traj.snapshots.iter().map(|(_, f)| coarsen(&f.rho(), setup.bins)).collect();
    Ok((rhos, traj.snapshots.into_iter().map(|(_, f)| f).collect()))
}

/// Time-averaged L1 distance between the pooled particle density and the PDE
/// density, for each `N` of the sweep. The distance must decrease strictly in `N`.
pub fn compare_sim_to_pde(setup: &SimPdeSetup, _tol: &Tolerances) -> Result<LimitReport> {
    let problems = setup.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut r = LimitReport::new("sim-vs-pde", "N", Asymptote::Large);
    let f0 = setup.initial_field()?;
    let (pde_rho, pde_fields) = pde_densities(setup, &f0)?;
    let times = setup.times();
    let mut ns = setup.n.clone();
    ns.sort_unstable();
    for &n in &ns {
        let mut params = SimParams::new(InteractionRule::NearestNeighbor, setup.horizon);
        params.snapshot_times = times.clone();
        let seed = setup.seed.wrapping_add(n as u64);
        let runs = run_replicas(&params, seed, setup.replicas, |rng| sample_ensemble(&f0, n, rng))?;
        let mut dist = Vec::with_capacity(times.len());
        let mut phase = Vec::with_capacity(times.len());
        for (k, rho) in pde_rho.iter().enumerate() {
            let ens: Vec<&Ensemble> = runs.iter().map(|(_, out)| &out.snapshots[k].ensemble).collect();
            dist.push(l1(&spatial_histogram(&ens, setup.bins)?, rho));
            phase.push(empirical_phase_density(&ens, f0.grid())?.field.l1_distance(&pde_fields[k])?);
        }
        let avg = dist.iter().sum::<f64>() / dist.len() as f64;
        r.push(n as f64, avg);
        r.estimates.push(dist[0]);
        let finals: Vec<Ensemble> = runs.iter().map(|(_, out)| out.final_state.clone()).collect();
        let coarse = PhaseGrid::new(*f0.grid().domain(), 4, 4, setup.vmax)?;
        let chaos = chaos_defect(&finals, &coarse)?;
        let events: f64 = runs.iter().map(|(_, out)| out.event_count as f64).sum::<f64>() / runs.len() as f64;
        r.note(format!(
            "N = {n}: spatial L1 by time {}; phase L1 by time {}; chaos defect {:.3e} (noise floor {:.3e}); mean collisions {events:.4e}",
            fmt_list(&dist),
            fmt_list(&phase),
            chaos.defect,
            chaos.noise_floor
        ));
    }
    let decreasing = r.errors.len() >= 2 && r.errors.windows(2).all(|w| w[1] < w[0]);
    r.check("time-averaged distance strictly decreasing in N", decreasing, fmt_list(&r.errors));
    Ok(r)
}

fn fmt_list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", "))
}

/// Distance at `t = 0`, where it is pure i.i.d. sampling noise: fitted slope
/// against `N` must be `-1/2` within tolerance.
pub fn check_sampling_noise(setup: &SimPdeSetup, tol: &Tolerances) -> Result<LimitReport> {
    let problems = setup.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut r = LimitReport::new("sampling-noise", "N", Asymptote::Large);
    let f0 = setup.initial_field()?;
    let rho = coarsen(&f0.rho(), setup.bins);
    let mut ns = setup.sampling_n.clone();
    ns.sort_unstable();
    for &n in &ns {
        let seed = setup.seed.wrapping_add(n as u64);
        let ens: Vec<Ensemble> = (0..setup.replicas)
            .into_par_iter()
            .map(|k| sample_ensemble(&f0, n, &mut replica_rng(seed, k, Stream::Initial)))
            .collect::<Result<_>>()?;
        let refs: Vec<&Ensemble> = ens.iter().collect();
        r.push(n as f64, l1(&spatial_histogram(&refs, setup.bins)?, &rho));
    }
    if let Some(fit) = r.fit() {
        let slope = fit.slope;
        r.check(
            "sampling slope",
            (slope - tol.sampling_slope).abs() <= tol.sampling_slope_tol,
            format!("slope {slope:.3} [{:.3}, {:.3}]", fit.ci_low, fit.ci_high),
        );
    }
    Ok(r)
}

/// Chi-square test of total collision counts over `[0, horizon]` against
/// `Poisson(N λ(N) horizon)`, with bins of nearly equal probability.
pub fn check_event_counts(n: usize, d: usize, horizon: f64, replicas: u64, seed: u64, tol: &Tolerances) -> Result<LimitReport> {
    let rule = InteractionRule::NearestNeighbor;
    let mean = collision_rate(&rule, n, d, LambdaMode::Scaled)? * horizon;
    let mut params = SimParams::new(rule, horizon);
    params.engine = EngineKind::Direct;
    let domain = Domain::new(d, 1.0)?;
    let counts: Vec<u64> = (0..replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_rng(seed, k, Stream::Initial);
            let pos: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
            let vel: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            Ok(run(&Ensemble::new(domain, pos, vel)?, &params, seed, k)?.event_count)
        })
        .collect::<Result<_>>()?;

    let law = Poisson::new(mean).map_err(|e| Error::domain(format!("Poisson law: {e}")))?;
    // about 20 expected counts per bin
    let k = ((replicas / 20) as usize).clamp(2, 20);
    let mut edges: Vec<u64> = (1..k).map(|i| law.inverse_cdf(i as f64 / k as f64)).collect();
    edges.dedup();
    let mut probs = Vec::with_capacity(edges.len() + 1);
    let mut prev = 0.0;
    for &e in &edges {
        let c = law.cdf(e);
        probs.push(c - prev);
        prev = c;
    }
    probs.push(1.0 - prev);
    let mut observed = vec![0.0; probs.len()];
    for &c in &counts {
        observed[edges.partition_point(|e| *e < c)] += 1.0;
    }
    let total = counts.len() as f64;
    let chi2: f64 = observed.iter().zip(&probs).map(|(o, p)| (o - total * p).powi(2) / (total * p)).sum();
    let dof = (probs.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).map_err(|e| Error::domain(format!("chi-square law: {e}")))?.cdf(chi2);

    let mut r = LimitReport::new("event-counts", "bin", Asymptote::Large);
    for (i, (o, p)) in observed.iter().zip(&probs).enumerate() {
        r.push((i + 1) as f64, (o - total * p).abs());
        r.estimates.push(*o);
    }
    let sample_mean = counts.iter().sum::<u64>() as f64 / total;
    r.target = Some(mean);
    r.note(format!("N = {n}, d = {d}, T = {horizon}: Poisson mean {mean}, sample mean {sample_mean:.2}, chi2 = {chi2:.3} on {dof} dof"));
    r.check("chi-square goodness of fit", p_value > tol.poisson_p_min, format!("p = {p_value:.4}"));
    Ok(r)
}
