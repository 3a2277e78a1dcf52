use crate::error::{Error, Result};
use crate::geometry::Domain;

/// Positions and velocities of `N` particles, stored flat (`N * d` values each).
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    domain: Domain,
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

impl Ensemble {
    pub fn new(domain: Domain, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        let d = domain.d();
        if positions.len() != velocities.len() || !positions.len().is_multiple_of(d) {
            return Err(Error::domain("positions and velocities must both hold N * d values"));
        }
        if positions.len() / d < 2 {
            return Err(Error::domain("an ensemble needs at least two particles"));
        }
        if positions.iter().chain(&velocities).any(|x| !x.is_finite()) {
            return Err(Error::domain("positions and velocities must be finite"));
        }
        let positions = positions.into_iter().map(|x| domain.wrap(x)).collect();
        Ok(Self { domain, positions, velocities })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.domain.d()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }
}

/// Particle state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub ensemble: Ensemble,
}

/// One collision: `follower` copied the velocity of `leader`, which had rank `rank`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub follower: usize,
    pub leader: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Empirical frequencies of recorded ranks `1..=max_rank`.
    pub fn rank_frequencies(&self, max_rank: usize) -> Vec<f64> {
        let mut counts = vec![0usize; max_rank];
        for e in &self.events {
            if (1..=max_rank).contains(&e.rank) {
                counts[e.rank - 1] += 1;
            }
        }
        let total = self.events.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / total).collect()
    }
}
