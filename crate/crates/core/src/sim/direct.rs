//! Exact event-driven simulation: exponential clocks at total rate `N λ(N)`,
//! free flight between events, follower copies leader.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::rule::{collision_rate, InteractionRule, LambdaMode, RankSampler};
use super::state::{Ensemble, Event, EventLog};
use super::Engine;
use crate::error::{Error, Result};
use crate::geometry::MovingIndex;

/// Simulation state: lazily advanced positions, velocities, clock and generator.
#[derive(Debug, Clone)]
pub struct SimState {
    pub index: MovingIndex,
    pub time: f64,
    pub event_count: u64,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct DirectEngine {
    state: SimState,
    sampler: RankSampler,
    rate: f64,
    clock: Option<Exp<f64>>,
    /// Time of the next event, drawn ahead so that pausing at snapshot times
    /// does not perturb the event sequence.
    next_event: f64,
}

impl DirectEngine {
    pub fn new(ensemble: &Ensemble, rule: &InteractionRule, mode: LambdaMode, rng: ChaCha8Rng) -> Result<Self> {
        let n = ensemble.len();
        let d = ensemble.domain().d();
        let sampler = RankSampler::new(rule, n)?;
        let rate = collision_rate(rule, n, d, mode)?;
        let index = MovingIndex::new(*ensemble.domain(), ensemble.positions(), ensemble.velocities(), 0.0)?;
        let clock = if rate > 0.0 {
            Some(Exp::new(rate).map_err(|e| Error::domain(format!("invalid rate {rate}: {e}")))?)
        } else {
            None
        };
        let mut engine = Self {
            state: SimState { index, time: 0.0, event_count: 0, rng },
            sampler,
            rate,
            clock,
            next_event: f64::INFINITY,
        };
        engine.next_event = engine.draw_wait();
        Ok(engine)
    }

    fn draw_wait(&mut self) -> f64 {
        match &self.clock {
            Some(c) => self.state.time + c.sample(&mut self.state.rng),
            None => f64::INFINITY,
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Total event rate `N λ(N)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Fires the pending event regardless of any horizon.
    pub fn step(&mut self, log: &mut EventLog) -> Result<()> {
        if !self.next_event.is_finite() {
            return Err(Error::domain("no event can occur at zero rate"));
        }
        self.fire(log)
    }

    fn fire(&mut self, log: &mut EventLog) -> Result<()> {
        let t = self.next_event;
        let st = &mut self.state;
        st.time = t;
        st.index.advance_to(t);
        let n = st.index.len();
        let i = st.rng.random_range(0..n);
        let k = self.sampler.sample(&mut st.rng);
        let j = st.index.kth_nearest(i, k, t)?;
        let vj = st.index.velocity(j).to_vec();
        st.index.set_velocity(i, &vj, t);
        st.event_count += 1;
        log.push(Event { time: t, follower: i, leader: j, rank: k });
        self.next_event = self.draw_wait();
        Ok(())
    }
}

impl Engine for DirectEngine {
    fn run_until(&mut self, t_end: f64, log: &mut EventLog) -> Result<()> {
        while self.next_event <= t_end {
            self.fire(log)?;
        }
        // no re-indexing here, so the event sequence is independent of pauses
        if t_end > self.state.time {
            self.state.time = t_end;
        }
        Ok(())
    }

    fn time(&self) -> f64 {
        self.state.time
    }

    fn event_count(&self) -> u64 {
        self.state.event_count
    }

    fn ensemble(&self) -> Ensemble {
        let idx = &self.state.index;
        Ensemble::new(*idx.domain(), idx.positions(self.state.time), idx.velocities().to_vec())
            .expect("engine state stays valid")
    }
}
