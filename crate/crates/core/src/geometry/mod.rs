//! Periodic geometry of rank-based interactions: ranks, neighbor queries,
//! partial masses of a gridded density and the closed-form rank law.

mod density;
mod index;
mod law;
mod rank;

pub use density::SpatialDensity;
pub use index::MovingIndex;
pub use law::{empirical_rank_law, rank_pmf, total_variation};
pub use rank::{k_nearest, rank_of, ranked_neighbors};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    d: usize,
    side: f64,
}

impl Domain {
    pub fn new(d: usize, side: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::Unsupported(format!("geometry supports d in {{1, 2}}, got {d}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::domain(format!("box side must be positive, got {side}")));
        }
        Ok(Self { d, side })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    /// Reduces a coordinate to `[0, L)`.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let y = x.rem_euclid(self.side);
        // rem_euclid can round up to exactly L
        if y >= self.side {
            0.0
        } else {
            y
        }
    }

    /// Minimum-image displacement along one axis, in `[-L/2, L/2]`.
    #[inline]
    pub fn min_image(&self, dx: f64) -> f64 {
        dx - self.side * (dx / self.side).round()
    }

    /// Squared minimum-image distance between two points given as coordinate slices.
    #[inline]
    pub fn dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| {
                let t = self.min_image(q - p);
                t * t
            })
            .sum()
    }
}

/// Positions of `N >= 2` particles in a periodic box, stored flat (`N * d` values).
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfig {
    domain: Domain,
    positions: Vec<f64>,
}

impl ParticleConfig {
    pub fn new(domain: Domain, positions: Vec<f64>) -> Result<Self> {
        let d = domain.d();
        if !positions.len().is_multiple_of(d) {
            return Err(Error::domain(format!(
                "{} coordinates do not split into points of dimension {d}",
                positions.len()
            )));
        }
        if positions.len() / d < 2 {
            return Err(Error::domain("a configuration needs at least two particles"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("positions must be finite"));
        }
        let positions = positions.into_iter().map(|x| domain.wrap(x)).collect();
        Ok(Self { domain, positions })
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

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.domain.d();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        self.domain.dist2(self.point(i), self.point(j))
    }
}
