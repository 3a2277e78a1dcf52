//! Bucket-grid neighbor index over particles in free flight.
//!
//! Positions are stored as a reference snapshot plus velocity, so advancing time
//! costs nothing. Buckets hold the reference positions; a query widens its
//! acceptance radius by the worst-case drift since the snapshot. When that drift
//! exceeds half a bucket the snapshot is retaken.

use super::rank::by_distance_then_index;
use super::{Domain, ParticleConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MovingIndex {
    domain: Domain,
    cells: usize,
    width: f64,
    t_ref: f64,
    x_ref: Vec<f64>,
    vel: Vec<f64>,
    vmax: f64,
    cell_of: Vec<usize>,
    slot: Vec<usize>,
    buckets: Vec<Vec<usize>>,
    scratch: Vec<(f64, usize)>,
}

impl MovingIndex {
    /// Index for particles at `positions` at time `t`, moving with `velocities`.
    pub fn new(domain: Domain, positions: &[f64], velocities: &[f64], t: f64) -> Result<Self> {
        let d = domain.d();
        if positions.len() != velocities.len() || !positions.len().is_multiple_of(d) {
            return Err(Error::domain("positions and velocities must have matching N * d length"));
        }
        let n = positions.len() / d;
        if n < 2 {
            return Err(Error::domain("an index needs at least two particles"));
        }
        let per_axis = match d {
            1 => n / 2,
            _ => ((n as f64 / 2.0).sqrt()) as usize,
        }
        .max(1);
        let width = domain.side() / per_axis as f64;
        let mut idx = Self {
            domain,
            cells: per_axis,
            width,
            t_ref: t,
            x_ref: positions.iter().map(|&x| domain.wrap(x)).collect(),
            vel: velocities.to_vec(),
            vmax: 0.0,
            cell_of: vec![0; n],
            slot: vec![0; n],
            buckets: vec![Vec::new(); per_axis.pow(d as u32)],
            scratch: Vec::new(),
        };
        idx.refresh_vmax();
        idx.fill_buckets();
        Ok(idx)
    }

    /// Index for a static configuration.
    pub fn from_config(config: &ParticleConfig) -> Self {
        let zeros = vec![0.0; config.positions().len()];
        Self::new(*config.domain(), config.positions(), &zeros, 0.0).expect("configuration is valid")
    }

    pub fn len(&self) -> usize {
        self.cell_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_of.is_empty()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn refresh_vmax(&mut self) {
        let d = self.domain.d();
        self.vmax = self
            .vel
            .chunks(d)
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
    }

    fn cell_index(&self, p: &[f64]) -> usize {
        let mut c = 0;
        let mut stride = 1;
        for &x in p {
            let k = ((x / self.width) as usize).min(self.cells - 1);
            c += k * stride;
            stride *= self.cells;
        }
        c
    }

    fn fill_buckets(&mut self) {
        for b in &mut self.buckets {
            b.clear();
        }
        let d = self.domain.d();
        for i in 0..self.len() {
            let c = self.cell_index(&self.x_ref[i * d..(i + 1) * d]);
            self.cell_of[i] = c;
            self.slot[i] = self.buckets[c].len();
            self.buckets[c].push(i);
        }
    }

    /// Coordinates of particle `i` at time `t`, written to `out`.
    #[inline]
    pub fn position_into(&self, i: usize, t: f64, out: &mut [f64]) {
        let d = self.domain.d();
        let dt = t - self.t_ref;
        for a in 0..d {
            out[a] = self.domain.wrap(self.x_ref[i * d + a] + self.vel[i * d + a] * dt);
        }
    }

    pub fn position(&self, i: usize, t: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.domain.d()];
        self.position_into(i, t, &mut p);
        p
    }

    /// All positions at time `t`.
    pub fn positions(&self, t: f64) -> Vec<f64> {
        let d = self.domain.d();
        let mut out = vec![0.0; self.x_ref.len()];
        for i in 0..self.len() {
            self.position_into(i, t, &mut out[i * d..(i + 1) * d]);
        }
        out
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        let d = self.domain.d();
        &self.vel[i * d..(i + 1) * d]
    }

    pub fn velocities(&self) -> &[f64] {
        &self.vel
    }

    fn drift(&self, t: f64) -> f64 {
        self.vmax * (t - self.t_ref)
    }

    /// Retakes the reference snapshot at `t` if the drift bound has grown past half a bucket.
    pub fn advance_to(&mut self, t: f64) {
        if self.drift(t) > 0.5 * self.width {
            self.x_ref = self.positions(t);
            self.t_ref = t;
            self.fill_buckets();
        }
    }

    /// Changes the velocity of `i` at time `t` without moving it.
    pub fn set_velocity(&mut self, i: usize, v: &[f64], t: f64) {
        let d = self.domain.d();
        let mut here = vec![0.0; d];
        self.position_into(i, t, &mut here);
        let dt = t - self.t_ref;
        for a in 0..d {
            self.vel[i * d + a] = v[a];
            self.x_ref[i * d + a] = self.domain.wrap(here[a] - v[a] * dt);
        }
        let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        // copied velocities never exceed the initial maximum, so vmax only needs growing
        if speed > self.vmax {
            self.vmax = speed;
        }
        let c = self.cell_index(&self.x_ref[i * d..(i + 1) * d]);
        if c != self.cell_of[i] {
            let old = self.cell_of[i];
            let s = self.slot[i];
            self.buckets[old].swap_remove(s);
            if s < self.buckets[old].len() {
                let moved = self.buckets[old][s];
                self.slot[moved] = s;
            }
            self.cell_of[i] = c;
            self.slot[i] = self.buckets[c].len();
            self.buckets[c].push(i);
        }
    }

    /// The particle of rank `k` around `i` at time `t`.
    ///
    /// Call [`advance_to`](Self::advance_to) first so the drift stays bounded;
    /// the answer is exact either way.
    pub fn kth_nearest(&mut self, i: usize, k: usize, t: f64) -> Result<usize> {
        let n = self.len();
        if i >= n {
            return Err(Error::domain(format!("particle index {i} out of range (N = {n})")));
        }
        if k == 0 || k > n - 1 {
            return Err(Error::domain(format!("rank {k} outside 1..={}", n - 1)));
        }
        let d = self.domain.d();
        let mut xi = [0.0; 2];
        self.position_into(i, t, &mut xi[..d]);
        let drift = self.drift(t);
        let mut cand = std::mem::take(&mut self.scratch);
        cand.clear();
        let mut home = [0usize; 2];
        for a in 0..d {
            home[a] = ((xi[a] / self.width) as usize).min(self.cells - 1);
        }
        let cells = self.cells as isize;
        let mut q = 0isize;
        let found = loop {
            if 2 * q + 1 >= cells {
                break None;
            }
            self.visit_ring(&home[..d], q, i, t, &xi[..d], &mut cand);
            let reach = q as f64 * self.width - drift;
            if reach > 0.0 && cand.len() >= k {
                let (_, kth, _) = cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                if kth.0 <= reach * reach {
                    break Some(kth.1);
                }
            }
            q += 1;
        };
        let result = match found {
            Some(j) => j,
            None => {
                cand.clear();
                let mut p = [0.0; 2];
                for l in (0..n).filter(|&l| l != i) {
                    self.position_into(l, t, &mut p[..d]);
                    cand.push((self.domain.dist2(&xi[..d], &p[..d]), l));
                }
                cand.select_nth_unstable_by(k - 1, by_distance_then_index).1 .1
            }
        };
        self.scratch = cand;
        Ok(result)
    }

    fn visit_ring(&self, home: &[usize], q: isize, i: usize, t: f64, xi: &[f64], cand: &mut Vec<(f64, usize)>) {
        let cells = self.cells as isize;
        let wrapc = |c: isize| c.rem_euclid(cells) as usize;
        let mut p = [0.0; 2];
        let d = home.len();
        let mut push_cell = |c: usize, cand: &mut Vec<(f64, usize)>| {
            for &l in &self.buckets[c] {
                if l != i {
                    self.position_into(l, t, &mut p[..d]);
                    cand.push((self.domain.dist2(xi, &p[..d]), l));
                }
            }
        };
        let h0 = home[0] as isize;
        if d == 1 {
            if q == 0 {
                push_cell(wrapc(h0), cand);
            } else {
                push_cell(wrapc(h0 - q), cand);
                push_cell(wrapc(h0 + q), cand);
            }
            return;
        }
        let h1 = home[1] as isize;
        if q == 0 {
            push_cell(wrapc(h0) + self.cells * wrapc(h1), cand);
            return;
        }
        for a in -q..=q {
            push_cell(wrapc(h0 + a) + self.cells * wrapc(h1 - q), cand);
            push_cell(wrapc(h0 + a) + self.cells * wrapc(h1 + q), cand);
        }
        for b in (-q + 1)..q {
            push_cell(wrapc(h0 - q) + self.cells * wrapc(h1 + b), cand);
            push_cell(wrapc(h0 + q) + self.cells * wrapc(h1 + b), cand);
        }
    }
}
