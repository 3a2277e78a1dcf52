//! Rejection-free nearest-neighbor dynamics on a periodic line.
//!
//! On a circle the nearest neighbor of a particle is one of its two cyclic
//! neighbors, so only the cyclic order and the gaps between consecutive
//! particles matter. A collision changes the state only when the follower's
//! nearest neighbor carries a different velocity; call such particles active.
//! Effective collisions therefore fire at rate `λ |active|`, and the
//! remaining collisions are no-ops whose total count is Poisson with mean
//! `λ ∫ (N - |active|) dt`.
//!
//! Between collisions the active set only changes when two particles cross or
//! when a particle's left and right gaps become equal. Both are scheduled
//! exactly from the affine gap trajectories.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use super::rule::{per_particle_rate, InteractionRule, LambdaMode};
use super::state::{Ensemble, Event, EventLog};
use super::Engine;
use crate::error::{Error, Result};
use crate::geometry::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Crossing,
    Switch,
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    particle: usize,
    kind: Kind,
}

const NOT_QUEUED: usize = usize::MAX;

/// Min-heap holding at most one pending geometric event per particle,
/// ordered by time and then particle index.
#[derive(Debug, Clone)]
struct EventQueue {
    time: Vec<f64>,
    kind: Vec<Kind>,
    heap: Vec<usize>,
    slot: Vec<usize>,
}

impl EventQueue {
    fn new(n: usize) -> Self {
        Self { time: vec![f64::INFINITY; n], kind: vec![Kind::Crossing; n], heap: Vec::with_capacity(n), slot: vec![NOT_QUEUED; n] }
    }

    #[inline]
    fn before(&self, a: usize, b: usize) -> bool {
        self.time[a].total_cmp(&self.time[b]).then(a.cmp(&b)) == Ordering::Less
    }

    fn peek(&self) -> Option<Scheduled> {
        self.heap.first().map(|&q| Scheduled { time: self.time[q], particle: q, kind: self.kind[q] })
    }

    /// Replaces the pending event of `q`, or drops it when `event` is `None`.
    fn set(&mut self, q: usize, event: Option<(f64, Kind)>) {
        let at = self.slot[q];
        match (event, at) {
            (None, NOT_QUEUED) => {}
            (None, at) => {
                let last = self.heap.pop().expect("queued particle implies a nonempty heap");
                self.slot[q] = NOT_QUEUED;
                if last != q {
                    self.heap[at] = last;
                    self.slot[last] = at;
                    self.fix(at);
                }
            }
            (Some((time, kind)), at) => {
                self.time[q] = time;
                self.kind[q] = kind;
                if at == NOT_QUEUED {
                    self.slot[q] = self.heap.len();
                    self.heap.push(q);
                    self.sift_up(self.heap.len() - 1);
                } else {
                    self.fix(at);
                }
            }
        }
    }

    fn fix(&mut self, at: usize) {
        let at = self.sift_up(at);
        self.sift_down(at);
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.slot[self.heap[a]] = a;
        self.slot[self.heap[b]] = b;
    }

    fn sift_up(&mut self, mut at: usize) -> usize {
        while at > 0 {
            let parent = (at - 1) / 2;
            if !self.before(self.heap[at], self.heap[parent]) {
                break;
            }
            self.swap(at, parent);
            at = parent;
        }
        at
    }

    fn sift_down(&mut self, mut at: usize) {
        let len = self.heap.len();
        loop {
            let (l, r) = (2 * at + 1, 2 * at + 2);
            let mut best = at;
            if l < len && self.before(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < len && self.before(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == at {
                return;
            }
            self.swap(at, best);
            at = best;
        }
    }
}

const NOT_ACTIVE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct ChainEngine {
    domain: Domain,
    lambda: f64,
    time: f64,
    x0: Vec<f64>,
    tx: Vec<f64>,
    v: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    /// Distance to the right neighbor, valid at `gap_t`.
    gap: Vec<f64>,
    gap_t: Vec<f64>,
    queue: EventQueue,
    active: Vec<usize>,
    active_pos: Vec<usize>,
    next_copy: f64,
    exposure: f64,
    effective: u64,
    noops: u64,
    rng: ChaCha8Rng,
    noop_rng: ChaCha8Rng,
    tol: f64,
}

impl ChainEngine {
    /// Nearest-neighbor dynamics in d=1 with `N >= 3`.
    ///
    /// `rng` drives the trajectory; `noop_rng` only draws the no-op counts.
    pub fn new(ensemble: &Ensemble, rule: &InteractionRule, mode: LambdaMode, rng: ChaCha8Rng, noop_rng: ChaCha8Rng) -> Result<Self> {
        if ensemble.domain().d() != 1 {
            return Err(Error::Unsupported("the chain engine runs in one dimension only".into()));
        }
        if *rule != InteractionRule::NearestNeighbor {
            return Err(Error::Unsupported("the chain engine implements the nearest-neighbor rule only".into()));
        }
        let n = ensemble.len();
        if n < 3 {
            return Err(Error::Unsupported("the chain engine needs at least three particles".into()));
        }
        let domain = *ensemble.domain();
        let lambda = per_particle_rate(rule, n, 1, mode)?;
        let x0 = ensemble.positions().to_vec();
        let v = ensemble.velocities().to_vec();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x0[a].total_cmp(&x0[b]).then(a.cmp(&b)));
        let mut left = vec![0; n];
        let mut right = vec![0; n];
        let mut gap = vec![0.0; n];
        for (k, &p) in order.iter().enumerate() {
            let q = order[(k + 1) % n];
            right[p] = q;
            left[q] = p;
            gap[p] = domain.wrap(x0[q] - x0[p]);
        }
        // a lone full-period wrap happens only for coincident points
        let l = domain.side();
        if gap.iter().any(|g| *g >= 0.5 * l && n > 2 && *g >= l * (1.0 - 1e-15)) {
            gap.iter_mut().filter(|g| **g >= l * (1.0 - 1e-15)).for_each(|g| *g = 0.0);
        }
        let mut eng = Self {
            domain,
            lambda,
            time: 0.0,
            x0,
            tx: vec![0.0; n],
            v,
            left,
            right,
            gap,
            gap_t: vec![0.0; n],
            queue: EventQueue::new(n),
            active: Vec::new(),
            active_pos: vec![NOT_ACTIVE; n],
            next_copy: f64::INFINITY,
            exposure: 0.0,
            effective: 0,
            noops: 0,
            rng,
            noop_rng,
            tol: 1e-13 * l,
        };
        for p in 0..n {
            eng.refresh(p);
        }
        eng.draw_copy();
        Ok(eng)
    }

    fn n(&self) -> usize {
        self.v.len()
    }

    #[inline]
    fn slope(&self, q: usize) -> f64 {
        self.v[self.right[q]] - self.v[q]
    }

    #[inline]
    fn gap_at(&self, q: usize, t: f64) -> f64 {
        (self.gap[q] + self.slope(q) * (t - self.gap_t[q])).max(0.0)
    }

    fn settle_gap(&mut self, q: usize, t: f64) {
        self.gap[q] = self.gap_at(q, t);
        self.gap_t[q] = t;
    }

    /// Nearest neighbor at `t` with ties going to the lower index.
    fn nearest(&self, q: usize, t: f64) -> usize {
        let (l, r) = (self.left[q], self.right[q]);
        let (gl, gr) = (self.gap_at(l, t), self.gap_at(q, t));
        match gl.total_cmp(&gr) {
            Ordering::Less => l,
            Ordering::Greater => r,
            Ordering::Equal => l.min(r),
        }
    }

    /// Nearest neighbor just after `t`: near-ties are resolved by which gap shrinks faster.
    fn nearest_after(&self, q: usize, t: f64) -> usize {
        let (l, r) = (self.left[q], self.right[q]);
        let (gl, gr) = (self.gap_at(l, t), self.gap_at(q, t));
        if (gl - gr).abs() > self.tol {
            return if gl < gr { l } else { r };
        }
        match self.slope(l).total_cmp(&self.slope(q)) {
            Ordering::Less => l,
            Ordering::Greater => r,
            Ordering::Equal => l.min(r),
        }
    }

    fn set_active(&mut self, q: usize, on: bool) {
        let pos = self.active_pos[q];
        if on && pos == NOT_ACTIVE {
            self.active_pos[q] = self.active.len();
            self.active.push(q);
        } else if !on && pos != NOT_ACTIVE {
            self.active.swap_remove(pos);
            if pos < self.active.len() {
                let moved = self.active[pos];
                self.active_pos[moved] = pos;
            }
            self.active_pos[q] = NOT_ACTIVE;
        }
    }

    /// Recomputes the activity and the next geometric event of `q`.
    fn refresh(&mut self, q: usize) {
        let t = self.time;
        let nn = self.nearest_after(q, t);
        let on = self.v[nn].to_bits() != self.v[q].to_bits();
        self.set_active(q, on);

        let mut best: Option<(f64, Kind)> = None;
        let s = self.slope(q);
        if s < 0.0 {
            let tc = t + self.gap_at(q, t) / (-s);
            best = Some((tc, Kind::Crossing));
        }
        let l = self.left[q];
        let r = self.right[q];
        if self.v[l].to_bits() != self.v[r].to_bits() {
            let diff = self.gap_at(l, t) - self.gap_at(q, t);
            let ds = self.slope(l) - s;
            if diff.abs() > self.tol && diff * ds < 0.0 {
                let ts = t + diff / (-ds);
                if best.is_none_or(|(b, _)| ts < b) {
                    best = Some((ts, Kind::Switch));
                }
            }
        }
        self.queue.set(q, best);
    }

    fn draw_copy(&mut self) {
        let rate = self.lambda * self.active.len() as f64;
        self.next_copy = if rate > 0.0 {
            let e: f64 = Exp1.sample(&mut self.rng);
            self.time + e / rate
        } else {
            f64::INFINITY
        };
    }

    fn position(&self, q: usize, t: f64) -> f64 {
        self.domain.wrap(self.x0[q] + self.v[q] * (t - self.tx[q]))
    }

    fn change_velocity(&mut self, p: usize, new_v: f64) {
        let t = self.time;
        let l = self.left[p];
        let r = self.right[p];
        self.settle_gap(l, t);
        self.settle_gap(p, t);
        self.x0[p] = self.position(p, t);
        self.tx[p] = t;
        self.v[p] = new_v;
        for q in [l, p, r] {
            self.refresh(q);
        }
    }

    fn cross(&mut self, i: usize) {
        let t = self.time;
        let l = self.left[i];
        let r = self.right[i];
        let rr = self.right[r];
        self.settle_gap(l, t);
        self.settle_gap(r, t);
        let old_gap_r = self.gap[r];
        // l → r → i → rr
        self.right[l] = r;
        self.left[r] = l;
        self.right[r] = i;
        self.left[i] = r;
        self.right[i] = rr;
        self.left[rr] = i;
        self.gap[r] = 0.0;
        self.gap_t[r] = t;
        self.gap[i] = old_gap_r;
        self.gap_t[i] = t;
        for q in [l, r, i, rr] {
            self.refresh(q);
        }
    }

    fn copy_event(&mut self, log: &mut EventLog) {
        let t = self.time;
        let a = self.rng.random_range(0..self.active.len());
        let i = self.active[a];
        let j = self.nearest(i, t);
        if self.v[j].to_bits() == self.v[i].to_bits() {
            // only reachable at an exact tie; the event is a no-op
            self.noops += 1;
            self.set_active(i, false);
            self.refresh(i);
            return;
        }
        let vj = self.v[j];
        self.change_velocity(i, vj);
        self.effective += 1;
        log.push(Event { time: t, follower: i, leader: j, rank: 1 });
    }

    /// Number of collisions that changed a velocity.
    pub fn effective_events(&self) -> u64 {
        self.effective
    }

    /// Number of particles whose nearest neighbor has a different velocity.
    pub fn active_count(&self) -> usize {
        self.active.len()
    }
}

impl Engine for ChainEngine {
    fn run_until(&mut self, t_end: f64, log: &mut EventLog) -> Result<()> {
        let start_exposure = self.exposure;
        loop {
            let geo = self.queue.peek();
            let t_geo = geo.map_or(f64::INFINITY, |g| g.time);
            let t_next = t_geo.min(self.next_copy);
            if t_next > t_end {
                break;
            }
            let idle = (self.n() - self.active.len()) as f64;
            self.exposure += idle * (t_next - self.time);
            self.time = t_next;
            if self.next_copy <= t_geo {
                self.copy_event(log);
            } else {
                let g = geo.expect("finite geometric time implies an event");
                self.queue.set(g.particle, None);
                match g.kind {
                    Kind::Crossing => self.cross(g.particle),
                    Kind::Switch => self.refresh(g.particle),
                }
            }
            self.draw_copy();
        }
        if t_end > self.time {
            let idle = (self.n() - self.active.len()) as f64;
            self.exposure += idle * (t_end - self.time);
            self.time = t_end;
        }
        let mean = self.lambda * (self.exposure - start_exposure);
        if mean > 0.0 {
            let draw: f64 = Poisson::new(mean)
                .map_err(|e| Error::domain(format!("no-op count: {e}")))?
                .sample(&mut self.noop_rng);
            self.noops += draw as u64;
        }
        Ok(())
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn event_count(&self) -> u64 {
        self.effective + self.noops
    }

    fn ensemble(&self) -> Ensemble {
        let pos = (0..self.n()).map(|q| self.position(q, self.time)).collect();
        Ensemble::new(self.domain, pos, self.v.clone()).expect("engine state stays valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{k_nearest, ParticleConfig};
    use crate::sim::direct::DirectEngine;
    use rand::SeedableRng;

    fn random_line(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Ensemble {
        let pos = (0..n).map(|_| rng.random::<f64>()).collect();
        let vel = (0..n).map(|_| spread * (rng.random::<f64>() - 0.5)).collect();
        Ensemble::new(Domain::new(1, 1.0).unwrap(), pos, vel).unwrap()
    }

    fn engine(e: &Ensemble, mode: LambdaMode, seed: u64) -> ChainEngine {
        ChainEngine::new(e, &InteractionRule::NearestNeighbor, mode, ChaCha8Rng::seed_from_u64(seed), ChaCha8Rng::seed_from_u64(seed ^ 0xdead)).unwrap()
    }

    /// Order, gaps and activity must agree with a from-scratch recomputation.
    fn audit(eng: &ChainEngine) {
        let e = eng.ensemble();
        let n = e.len();
        let cfg = ParticleConfig::new(*e.domain(), e.positions().to_vec()).unwrap();
        for q in 0..n {
            let r = eng.right[q];
            assert_eq!(eng.left[r], q);
            let g = eng.gap_at(q, eng.time);
            let direct = e.domain().wrap(e.positions()[r] - e.positions()[q]);
            let direct = if direct > 0.5 && g < 0.5 { direct - 1.0 } else { direct };
            assert!((g - direct).abs() < 1e-9, "gap of {q}: {g} vs {direct}");
            let nn = k_nearest(q, 1, &cfg).unwrap();
            let active = e.velocities()[nn] != e.velocities()[q];
            // near-ties may legitimately differ from the brute-force tie rule
            let (gl, gr) = (eng.gap_at(eng.left[q], eng.time), g);
            if (gl - gr).abs() > 1e-9 {
                assert_eq!(eng.active_pos[q] != NOT_ACTIVE, active, "activity of {q}");
            }
        }
    }

    #[test]
    fn structure_stays_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [3usize, 4, 9, 50] {
            let e = random_line(&mut rng, n, 2.0);
            let mut eng = engine(&e, LambdaMode::Fixed(3.0), n as u64);
            let mut log = EventLog::default();
            for k in 1..=60 {
                eng.run_until(0.05 * k as f64, &mut log).unwrap();
                audit(&eng);
            }
            let vel = e.velocities();
            assert!(eng.ensemble().velocities().iter().all(|v| vel.contains(v)));
            assert!(log.events.windows(2).all(|w| w[0].time <= w[1].time));
        }
    }

    #[test]
    fn nearly_static_particles_freeze_into_consensus_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut e = random_line(&mut rng, 30, 0.0);
        // distinct but negligible velocities act as labels
        let vel: Vec<f64> = (0..30).map(|k| k as f64 * 1e-12).collect();
        e = Ensemble::new(*e.domain(), e.positions().to_vec(), vel).unwrap();
        let mut eng = engine(&e, LambdaMode::Scaled, 1);
        let mut log = EventLog::default();
        eng.run_until(10.0, &mut log).unwrap();
        assert_eq!(eng.active_count(), 0);
        for (a, b) in eng.ensemble().positions().iter().zip(e.positions()) {
            assert!((a - b).abs() < 1e-9);
        }
        let cfg = ParticleConfig::new(*e.domain(), e.positions().to_vec()).unwrap();
        let v = eng.ensemble().velocities().to_vec();
        for q in 0..30 {
            assert_eq!(v[k_nearest(q, 1, &cfg).unwrap()], v[q]);
        }
        for ev in &log.events {
            assert_eq!(ev.leader, k_nearest(ev.follower, 1, &cfg).unwrap());
        }
    }

    #[test]
    fn event_queue_tracks_the_earliest_pending_event() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut q = EventQueue::new(n);
        let mut pending: Vec<Option<f64>> = vec![None; n];
        for _ in 0..5000 {
            let p = rng.random_range(0..n);
            let event = if rng.random::<f64>() < 0.3 { None } else { Some((rng.random_range(0..8) as f64, Kind::Switch)) };
            q.set(p, event);
            pending[p] = event.map(|(t, _)| t);
            let want = (0..n).filter_map(|i| pending[i].map(|t| (t, i))).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(q.peek().map(|s| (s.time, s.particle)), want);
        }
    }

    #[test]
    fn rejects_unsupported_setups() {
        let e2 = Ensemble::new(Domain::new(1, 1.0).unwrap(), vec![0.1, 0.5], vec![0.0, 1.0]).unwrap();
        let r = ChainEngine::new(&e2, &InteractionRule::NearestNeighbor, LambdaMode::One, ChaCha8Rng::seed_from_u64(0), ChaCha8Rng::seed_from_u64(1));
        assert!(r.is_err());
        let e3 = Ensemble::new(Domain::new(1, 1.0).unwrap(), vec![0.1, 0.5, 0.7], vec![0.0, 1.0, 0.0]).unwrap();
        let r = ChainEngine::new(&e3, &InteractionRule::KNearest(vec![1.0]), LambdaMode::One, ChaCha8Rng::seed_from_u64(0), ChaCha8Rng::seed_from_u64(1));
        assert!(r.is_err());
    }

    /// Statistics of the final state must match the direct engine.
    #[test]
    fn matches_the_direct_engine_in_distribution() {
        let n = 10;
        let replicas = 1500;
        let mut base = ChaCha8Rng::seed_from_u64(77);
        let e = random_line(&mut base, n, 3.0);
        let stats = |ens: &Ensemble| {
            let v = ens.velocities();
            let mut distinct = v.to_vec();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let mean_v_times_x: f64 = v.iter().zip(ens.positions()).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            [distinct.len() as f64, mean_v_times_x, v[0]]
        };
        let mut sums = [[0.0; 3]; 2];
        let mut sq = [[0.0; 3]; 2];
        let mut counts = [0.0f64; 2];
        for r in 0..replicas {
            let mut log = EventLog::default();
            let mut d = DirectEngine::new(&e, &InteractionRule::NearestNeighbor, LambdaMode::One, ChaCha8Rng::seed_from_u64(1000 + r)).unwrap();
            d.run_until(0.7, &mut log).unwrap();
            let mut c = engine(&e, LambdaMode::One, 5000 + r);
            let mut log2 = EventLog::default();
            c.run_until(0.7, &mut log2).unwrap();
            counts[0] += d.event_count() as f64;
            counts[1] += c.event_count() as f64;
            for (k, ens) in [d.ensemble(), c.ensemble()].iter().enumerate() {
                for (m, s) in stats(ens).iter().enumerate() {
                    sums[k][m] += s;
                    sq[k][m] += s * s;
                }
            }
        }
        let rf = replicas as f64;
        for m in 0..3 {
            let mean = |k: usize| sums[k][m] / rf;
            let var = |k: usize| (sq[k][m] / rf - mean(k).powi(2)) / rf;
            let z = (mean(0) - mean(1)) / (var(0) + var(1)).sqrt();
            assert!(z.abs() < 4.0, "statistic {m}: direct {} chain {} z={z}", mean(0), mean(1));
        }
        // both engines count every collision, including no-ops: mean N λ T = 7 per replica
        for c in counts {
            let mean = c / rf;
            assert!((mean - 7.0).abs() < 4.0 * (7.0 / rf).sqrt(), "mean count {mean}");
        }
    }
}
