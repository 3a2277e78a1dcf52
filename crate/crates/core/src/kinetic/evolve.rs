//! Strang splitting of free transport and collisions.

use super::field::{check_rho_floor, PhaseField};
use super::local::{collision_local, local_dt_limit};
use super::nonlocal::NonlocalWeights;
use super::transport::transport_step;
use crate::error::{Error, Result};
use crate::kernel::RankKernel;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Local,
    Nonlocal(RankKernel),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Local => "local",
            Model::Nonlocal(_) => "nonlocal",
        }
    }
}

/// Source term `S(t, x, v)` added to the collision step.
pub type Forcing<'a> = &'a (dyn Fn(f64, f64, f64) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, PhaseField)>,
    /// `(t, ∫∫ f)` after every step, starting with `t = 0`.
    pub mass: Vec<(f64, f64)>,
    /// `(t, min_x ρ)` after every step, starting with `t = 0`.
    pub min_rho: Vec<(f64, f64)>,
    /// Smallest cell value of `f` seen over the run.
    pub min_f: f64,
    pub steps: usize,
    pub dt: f64,
}

impl Trajectory {
    pub fn final_field(&self) -> &PhaseField {
        &self.snapshots.last().expect("a trajectory always holds the initial field").1
    }

    /// Largest `|mass(t) - mass(0)|`.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0].1;
        self.mass.iter().map(|(_, m)| (m - m0).abs()).fold(0.0, f64::max)
    }
}

/// Number of steps `n` with `n dt = horizon`.
fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    if horizon == 0.0 {
        return Ok(0);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let n = (horizon / dt).round();
    if n < 1.0 || (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::domain(format!("horizon {horizon} is not a whole number of steps of {dt}")));
    }
    Ok(n as usize)
}

fn add_forcing(out: &mut PhaseField, forcing: Forcing, t: f64, scale: f64) {
    let g = *out.grid();
    let vals = out.values_mut();
    for i in 0..g.nx() {
        let x = g.x_center(i);
        for j in 0..g.nv() {
            vals[g.index(i, j)] += scale * forcing(t, x, g.v_center(j));
        }
    }
}

fn axpy(y: &mut PhaseField, a: f64, x: &PhaseField) {
    y.values_mut().iter_mut().zip(x.values()).for_each(|(yv, xv)| *yv += a * xv);
}

/// One collision step from `t` to `t + dt`.
fn collide(f: &PhaseField, model: &Model, t: f64, dt: f64, forcing: Option<Forcing>) -> Result<PhaseField> {
    match model {
        Model::Local => {
            let limit = local_dt_limit(f.grid(), &f.rho())?;
            if dt > limit {
                return Err(Error::Cfl { dt, required: limit });
            }
            // Heun's method
            let mut k1 = collision_local(f)?;
            if let Some(s) = forcing {
                add_forcing(&mut k1, s, t, 1.0);
            }
            let mut stage = f.clone();
            axpy(&mut stage, dt, &k1);
            let mut k2 = collision_local(&stage)?;
            if let Some(s) = forcing {
                add_forcing(&mut k2, s, t + dt, 1.0);
            }
            let mut out = f.clone();
            axpy(&mut out, 0.5 * dt, &k1);
            axpy(&mut out, 0.5 * dt, &k2);
            Ok(out)
        }
        Model::Nonlocal(kernel) => {
            let rho = f.rho();
            check_rho_floor(&rho, f.grid().domain())?;
            let weights = NonlocalWeights::new(&f.spatial_density()?, kernel)?;
            let max_rate = weights.loss_rates(&rho).into_iter().fold(0.0, f64::max);
            let limit = 0.5 / max_rate;
            if dt > limit {
                return Err(Error::Cfl { dt, required: limit });
            }
            let (gain, loss) = weights.apply(f)?;
            let mut out = f.clone();
            axpy(&mut out, dt, &gain);
            axpy(&mut out, -dt, &loss);
            if let Some(s) = forcing {
                add_forcing(&mut out, s, t, dt);
            }
            Ok(out)
        }
    }
}

/// Largest stable step for `model` at the state `f`.
pub fn stable_dt(f: &PhaseField, model: &Model) -> Result<f64> {
    let rho = f.check_vacuum()?;
    match model {
        Model::Local => local_dt_limit(f.grid(), &rho),
        Model::Nonlocal(kernel) => {
            let weights = NonlocalWeights::new(&f.spatial_density()?, kernel)?;
            Ok(0.5 / weights.loss_rates(&rho).into_iter().fold(0.0, f64::max))
        }
    }
}

/// Advances `f0` to `horizon` with steps of `dt`: half transport, collision, half transport.
///
/// Snapshots are taken after the steps closest to the requested times; the
/// initial and final fields are always included.
pub fn evolve(f0: &PhaseField, model: &Model, horizon: f64, dt: f64, snapshot_times: &[f64], forcing: Option<Forcing>) -> Result<Trajectory> {
    let n = step_count(horizon, dt)?;
    let rho0 = f0.check_vacuum()?;
    if n > 0 {
        let required = stable_dt(f0, model)?;
        if dt > required {
            return Err(Error::Cfl { dt, required });
        }
    }
    let mut wanted: Vec<usize> = snapshot_times
        .iter()
        .map(|t| if dt > 0.0 { (t / dt).round() as usize } else { 0 })
        .filter(|k| *k > 0 && *k < n)
        .collect();
    wanted.sort_unstable();
    wanted.dedup();

    let min_of = |r: &[f64]| r.iter().copied().fold(f64::INFINITY, f64::min);
    let mut traj = Trajectory {
        snapshots: vec![(0.0, f0.clone())],
        mass: vec![(0.0, f0.mass())],
        min_rho: vec![(0.0, min_of(&rho0))],
        min_f: f0.min(),
        steps: n,
        dt,
    };
    let mut f = f0.clone();
    let mut next = 0;
    for k in 0..n {
        let t = k as f64 * dt;
        f = transport_step(&f, 0.5 * dt)?;
        f = collide(&f, model, t, dt, forcing)?;
        f = transport_step(&f, 0.5 * dt)?;
        let t1 = (k + 1) as f64 * dt;
        traj.mass.push((t1, f.mass()));
        traj.min_rho.push((t1, min_of(&f.rho())));
        traj.min_f = traj.min_f.min(f.min());
        if next < wanted.len() && wanted[next] == k + 1 {
            traj.snapshots.push((t1, f.clone()));
            next += 1;
        }
    }
    if n > 0 {
        traj.snapshots.push((n as f64 * dt, f));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::kernel::Profile;
    use crate::kinetic::transport::transport_step;
    use crate::kinetic::PhaseGrid;
    use std::f64::consts::TAU;

    fn grid(nx: usize, nv: usize) -> PhaseGrid {
        PhaseGrid::new(Domain::new(1, 1.0).unwrap(), nx, nv, 1.0).unwrap()
    }

    fn bimodal(v: f64) -> f64 {
        (-20.0 * (v - 0.5).powi(2)).exp() + (-20.0 * (v + 0.5).powi(2)).exp()
    }

    #[test]
    fn uniform_factorized_data_is_pure_transport() {
        let g = grid(32, 8);
        let mut f0 = PhaseField::product(g, |_| 1.0, |v| bimodal(v[0])).unwrap();
        f0.normalize().unwrap();
        let dt = 0.5 * stable_dt(&f0, &Model::Local).unwrap();
        let n = 10;
        let tr = evolve(&f0, &Model::Local, n as f64 * dt, dt, &[], None).unwrap();
        let mut pure = f0.clone();
        for _ in 0..n {
            pure = transport_step(&pure, dt).unwrap();
        }
        assert!(tr.final_field().l1_distance(&pure).unwrap() < 1e-13);
    }

    #[test]
    fn horizon_zero_echoes_the_input() {
        let g = grid(16, 4);
        let f0 = PhaseField::product(g, |x| 1.0 + 0.5 * (TAU * x[0]).sin(), |v| bimodal(v[0])).unwrap();
        let tr = evolve(&f0, &Model::Local, 0.0, 0.1, &[0.0], None).unwrap();
        assert_eq!(tr.snapshots, vec![(0.0, f0)]);
        assert_eq!(tr.steps, 0);
    }

    #[test]
    fn cfl_violation_is_refused_with_the_required_step() {
        let g = grid(64, 6);
        let f0 = PhaseField::product(g, |x| 1.0 + 0.5 * (TAU * x[0]).sin(), |v| bimodal(v[0])).unwrap();
        let required = stable_dt(&f0, &Model::Local).unwrap();
        match evolve(&f0, &Model::Local, 4.0 * required, 2.0 * required, &[], None) {
            Err(Error::Cfl { dt, required: r }) => assert!(dt > r && (r - required).abs() < 1e-15),
            other => panic!("expected a CFL refusal, got {other:?}"),
        }
        let kernel = RankKernel::concentrated(Profile::Constant, 1, 0.2).unwrap();
        assert!(matches!(evolve(&f0, &Model::Nonlocal(kernel), 1.0, 1.0, &[], None), Err(Error::Cfl { .. })));
    }

    /// x-variation of the velocity profile: Σ_x ‖f(x, ·)/ρ(x) - mean‖².
    fn profile_variation(f: &PhaseField) -> f64 {
        let g = f.grid();
        let rho = f.rho();
        let nv = g.nv();
        let mut mean = vec![0.0; nv];
        for i in 0..g.nx() {
            for j in 0..nv {
                mean[j] += f.at(i, j) / rho[i] / g.nx() as f64;
            }
        }
        (0..g.nx()).map(|i| (0..nv).map(|j| (f.at(i, j) / rho[i] - mean[j]).powi(2)).sum::<f64>()).sum()
    }

    #[test]
    fn local_model_conserves_mass_and_keeps_density_positive() {
        let g = grid(48, 12);
        let mut f0 = PhaseField::from_fn(g, |x, v| (1.0 + 0.5 * (TAU * x[0]).sin()) * bimodal(v[0]) * (1.0 + 0.8 * v[0] * (TAU * x[0]).cos())).unwrap();
        f0.normalize().unwrap();
        // ρ moves under transport, so leave room below the initial bound
        let dt = 0.5 * stable_dt(&f0, &Model::Local).unwrap();
        let n = 1000;
        let times: Vec<f64> = (1..10).map(|k| k as f64 * 100.0 * dt).collect();
        let tr = evolve(&f0, &Model::Local, n as f64 * dt, dt, &times, None).unwrap();
        assert!(tr.max_mass_drift() < 1e-8, "{}", tr.max_mass_drift());
        assert!(tr.min_rho.iter().all(|(_, r)| *r > 0.0));
        assert!(tr.min_f >= -1e-12 * f0.max());
        assert_eq!(tr.snapshots.len(), 11);
        let var: Vec<f64> = tr.snapshots.iter().map(|(_, f)| profile_variation(f)).collect();
        assert!(var.windows(2).all(|w| w[1] < w[0]), "{var:?}");
    }

    #[test]
    fn nonlocal_model_conserves_mass() {
        let g = grid(32, 6);
        let mut f0 = PhaseField::from_fn(g, |x, v| (1.0 + 0.5 * (TAU * x[0]).sin()) * bimodal(v[0]) * (1.0 + 0.5 * v[0] * (TAU * x[0]).cos())).unwrap();
        f0.normalize().unwrap();
        let model = Model::Nonlocal(RankKernel::concentrated(Profile::Tent, 1, 0.3).unwrap());
        let dt = 0.5 * stable_dt(&f0, &model).unwrap();
        let tr = evolve(&f0, &model, 50.0 * dt, dt, &[], None).unwrap();
        assert!(tr.max_mass_drift() < 1e-12);
        assert!(tr.min_f >= 0.0);
    }
}
