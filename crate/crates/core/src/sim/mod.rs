//! Stochastic particle dynamics: free flight plus rank-based velocity copying.

pub mod chain;
pub mod direct;
pub mod histogram;
pub mod rule;
pub mod run;
pub mod state;

pub use chain::ChainEngine;
pub use direct::{DirectEngine, SimState};
pub use histogram::{chaos_defect, empirical_phase_density, spatial_histogram, ChaosReport, PhaseHistogram};
pub use rule::{collision_rate, per_particle_rate, InteractionRule, LambdaMode, RankSampler};
pub use run::{replica_rng, run, run_replicas, sample_ensemble, EngineKind, RunOutput, SimParams, Stream};
pub use state::{Ensemble, Event, EventLog, Snapshot};

use crate::error::Result;

/// A simulation that can be advanced to a horizon and inspected.
pub trait Engine: Send {
    /// Fires every event up to and including `t_end`, then moves the clock to `t_end`.
    fn run_until(&mut self, t_end: f64, log: &mut EventLog) -> Result<()>;
    fn time(&self) -> f64;
    /// Number of collisions so far, including those that left the state unchanged.
    fn event_count(&self) -> u64;
    fn ensemble(&self) -> Ensemble;
}
