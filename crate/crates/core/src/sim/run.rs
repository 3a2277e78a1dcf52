//! Driving engines over a horizon, snapshot emission and replica ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::chain::ChainEngine;
use super::direct::DirectEngine;
use super::rule::{InteractionRule, LambdaMode};
use super::state::{Ensemble, EventLog, Snapshot};
use super::Engine;
use crate::error::{Error, Result};
use crate::kinetic::PhaseField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineKind {
    /// The chain engine where it applies (d=1 nearest neighbor, N >= 3), otherwise direct.
    #[default]
    Auto,
    Direct,
    Chain,
}

/// Independent generator streams per replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Initial = 0,
    Dynamics = 1,
    NoOps = 2,
}

/// Generator for `(seed, replica, purpose)`; each pair maps to its own ChaCha stream.
pub fn replica_rng(seed: u64, replica: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica * 4 + stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub rule: InteractionRule,
    pub mode: LambdaMode,
    pub horizon: f64,
    /// Nondecreasing times in `[0, horizon]` at which the state is recorded.
    pub snapshot_times: Vec<f64>,
    pub engine: EngineKind,
    /// Keep the event log; with the chain engine only velocity-changing events are logged.
    pub record_events: bool,
}

impl SimParams {
    pub fn new(rule: InteractionRule, horizon: f64) -> Self {
        Self { rule, mode: LambdaMode::Scaled, horizon, snapshot_times: Vec::new(), engine: EngineKind::Auto, record_events: false }
    }

    /// Every violation, not just the first.
    pub fn violations(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            out.push(format!("horizon must be finite and nonnegative, got {}", self.horizon));
        }
        if let Err(e) = self.rule.validate(n) {
            out.push(e.to_string());
        }
        if let LambdaMode::Fixed(l) = self.mode {
            if !(l >= 0.0 && l.is_finite()) {
                out.push(format!("fixed rate must be finite and nonnegative, got {l}"));
            }
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon)) {
            out.push("snapshot times must lie in [0, horizon]".into());
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            out.push("snapshot times must be nondecreasing".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub final_state: Ensemble,
    pub time: f64,
    pub event_count: u64,
    pub log: EventLog,
    pub snapshots: Vec<Snapshot>,
}

fn build_engine(initial: &Ensemble, params: &SimParams, seed: u64, replica: u64) -> Result<Box<dyn Engine>> {
    let chain_ok = initial.domain().d() == 1 && params.rule == InteractionRule::NearestNeighbor && initial.len() >= 3;
    let dynamics = replica_rng(seed, replica, Stream::Dynamics);
    match (params.engine, chain_ok) {
        (EngineKind::Chain, false) => Err(Error::Unsupported("the chain engine needs d=1, the nearest-neighbor rule and N >= 3".into())),
        (EngineKind::Chain, true) | (EngineKind::Auto, true) => {
            let noops = replica_rng(seed, replica, Stream::NoOps);
            Ok(Box::new(ChainEngine::new(initial, &params.rule, params.mode, dynamics, noops)?))
        }
        _ => Ok(Box::new(DirectEngine::new(initial, &params.rule, params.mode, dynamics)?)),
    }
}

/// Runs one replica from `initial` to the horizon.
pub fn run(initial: &Ensemble, params: &SimParams, seed: u64, replica: u64) -> Result<RunOutput> {
    let problems = params.violations(initial.len());
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut engine = build_engine(initial, params, seed, replica)?;
    let mut log = EventLog::default();
    let mut scratch = EventLog::default();
    let sink = if params.record_events { &mut log } else { &mut scratch };
    let mut snapshots = Vec::with_capacity(params.snapshot_times.len());
    for &t in &params.snapshot_times {
        engine.run_until(t, sink)?;
        sink_trim(params.record_events, sink);
        snapshots.push(Snapshot { time: t, ensemble: engine.ensemble() });
    }
    engine.run_until(params.horizon, sink)?;
    sink_trim(params.record_events, sink);
    Ok(RunOutput {
        final_state: engine.ensemble(),
        time: engine.time(),
        event_count: engine.event_count(),
        log,
        snapshots,
    })
}

fn sink_trim(keep: bool, log: &mut EventLog) {
    if !keep {
        log.events.clear();
    }
}

/// Runs `replicas` independent replicas, each sampling its own initial state.
///
/// Results are ordered by replica index and do not depend on the thread count.
pub fn run_replicas(
    params: &SimParams,
    seed: u64,
    replicas: u64,
    sample_initial: impl Fn(&mut ChaCha8Rng) -> Result<Ensemble> + Sync,
) -> Result<Vec<(Ensemble, RunOutput)>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r, Stream::Initial);
            let initial = sample_initial(&mut rng)?;
            let out = run(&initial, params, seed, r)?;
            Ok((initial, out))
        })
        .collect()
}

/// Draws `n` i.i.d. particles from a gridded phase density: a cell is chosen with
/// probability proportional to its value, then the point is uniform within it.
pub fn sample_ensemble(field: &PhaseField, n: usize, rng: &mut impl Rng) -> Result<Ensemble> {
    if field.values().iter().any(|v| *v < 0.0) {
        return Err(Error::domain("cannot sample from a field with negative values"));
    }
    let alias = WeightedAliasIndex::new(field.values().to_vec())
        .map_err(|e| Error::domain(format!("cannot sample from this field: {e}")))?;
    let grid = field.grid();
    let d = grid.d();
    let (dx, dv) = (grid.dx(), grid.dv());
    let nvc = grid.v_cells();
    let mut pos = Vec::with_capacity(n * d);
    let mut vel = Vec::with_capacity(n * d);
    for _ in 0..n {
        let cell = alias.sample(rng);
        let (xc, vc) = (cell / nvc, cell % nvc);
        let x = grid.x_point(xc);
        let v = grid.v_point(vc);
        for a in 0..d {
            pos.push(x[a] + dx * (rng.random::<f64>() - 0.5));
            vel.push(v[a] + dv * (rng.random::<f64>() - 0.5));
        }
    }
    Ensemble::new(*grid.domain(), pos, vel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::kinetic::PhaseGrid;

    fn field(d: usize) -> PhaseField {
        let grid = PhaseGrid::new(Domain::new(d, 1.0).unwrap(), 16, 8, 1.0).unwrap();
        let mut f = PhaseField::product(grid, |x| 1.0 + 0.5 * (std::f64::consts::TAU * x[0]).sin(), |v| (-v.iter().map(|a| a * a).sum::<f64>()).exp()).unwrap();
        f.normalize().unwrap();
        f
    }

    #[test]
    fn horizon_zero_returns_the_initial_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = sample_ensemble(&field(1), 50, &mut rng).unwrap();
        let mut p = SimParams::new(InteractionRule::NearestNeighbor, 0.0);
        p.snapshot_times = vec![0.0];
        for engine in [EngineKind::Direct, EngineKind::Chain] {
            p.engine = engine;
            let out = run(&e, &p, 9, 0).unwrap();
            assert_eq!(out.final_state, e);
            assert_eq!(out.snapshots[0].ensemble, e);
            assert_eq!(out.event_count, 0);
        }
    }

    #[test]
    fn same_seed_gives_identical_logs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [1, 2] {
            let e = sample_ensemble(&field(d), 80, &mut rng).unwrap();
            let mut p = SimParams::new(InteractionRule::KNearest(vec![0.5, 0.5]), 0.02);
            p.record_events = true;
            p.snapshot_times = vec![0.01];
            let a = run(&e, &p, 42, 3).unwrap();
            let b = run(&e, &p, 42, 3).unwrap();
            assert!(!a.log.is_empty());
            assert_eq!(a, b);
            let c = run(&e, &p, 42, 4).unwrap();
            assert_ne!(a.log, c.log);
        }
    }

    #[test]
    fn replicas_do_not_depend_on_threading() {
        let p = SimParams::new(InteractionRule::NearestNeighbor, 0.01);
        let f = field(1);
        let sample = |rng: &mut ChaCha8Rng| sample_ensemble(&f, 40, rng);
        let par = run_replicas(&p, 5, 6, sample).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let seq = pool.install(|| run_replicas(&p, 5, 6, sample)).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn invalid_params_list_every_problem() {
        let e = Ensemble::new(Domain::new(1, 1.0).unwrap(), vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let mut p = SimParams::new(InteractionRule::KNearest(vec![0.2, 0.2, 0.2, 0.4]), -1.0);
        p.snapshot_times = vec![0.5];
        match run(&e, &p, 0, 0) {
            Err(Error::Config(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn sampling_follows_the_field() {
        let f = field(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let e = sample_ensemble(&f, n, &mut rng).unwrap();
        let rho = f.rho();
        let dx = f.grid().dx();
        let mut counts = [0.0; 16];
        for x in e.positions() {
            counts[(x / dx) as usize] += 1.0;
        }
        for (c, r) in counts.iter().zip(&rho) {
            let expected = n as f64 * r * dx;
            assert!((c - expected).abs() < 5.0 * expected.sqrt(), "{c} vs {expected}");
        }
        assert!(e.velocities().iter().all(|v| v.abs() <= 1.0));
    }
}
