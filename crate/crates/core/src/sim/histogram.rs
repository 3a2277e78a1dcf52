//! Phase-space histograms of particle ensembles and the two-particle chaos diagnostic.

use crate::error::{Error, Result};
use crate::kinetic::{PhaseField, PhaseGrid};

use super::state::Ensemble;

/// A histogram normalized by the total particle count, so it integrates to
/// the fraction of particles inside the velocity range.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistogram {
    pub field: PhaseField,
    /// Particles whose velocity lies outside the grid.
    pub guard: usize,
    pub total: usize,
}

/// Phase cell of particle `i`, or `None` when its velocity is out of range.
fn phase_cell(grid: &PhaseGrid, e: &Ensemble, i: usize) -> Option<usize> {
    let d = grid.d();
    let (nx, nv) = (grid.nx(), grid.nv());
    let (dx, dv, vmax) = (grid.dx(), grid.dv(), grid.vmax());
    let (mut xc, mut vc, mut stride) = (0, 0, 1);
    let mut vstride = 1;
    for a in 0..d {
        let x = e.positions()[i * d + a];
        xc += ((x / dx) as usize).min(nx - 1) * stride;
        stride *= nx;
        let u = (e.velocities()[i * d + a] + vmax) / dv;
        if !(0.0..=nv as f64).contains(&u) {
            return None;
        }
        vc += (u as usize).min(nv - 1) * vstride;
        vstride *= nv;
    }
    Some(grid.index(xc, vc))
}

/// Pooled histogram of one or more ensembles (e.g. replicas at a common time).
pub fn empirical_phase_density(ensembles: &[&Ensemble], grid: &PhaseGrid) -> Result<PhaseHistogram> {
    let mut counts = vec![0.0; grid.len()];
    let (mut guard, mut total) = (0, 0);
    for e in ensembles {
        if e.domain() != grid.domain() {
            return Err(Error::Consistency("ensemble and grid live on different domains".into()));
        }
        for i in 0..e.len() {
            total += 1;
            match phase_cell(grid, e, i) {
                Some(c) => counts[c] += 1.0,
                None => guard += 1,
            }
        }
    }
    if total == 0 {
        return Err(Error::domain("no particles to histogram"));
    }
    let scale = 1.0 / (total as f64 * grid.cell_volume());
    counts.iter_mut().for_each(|c| *c *= scale);
    Ok(PhaseHistogram { field: PhaseField::new(*grid, counts)?, guard, total })
}

/// Pooled position-only histogram on `nx` cells per axis, as a density.
pub fn spatial_histogram(ensembles: &[&Ensemble], nx: usize) -> Result<Vec<f64>> {
    let first = ensembles.first().ok_or_else(|| Error::domain("no ensembles to histogram"))?;
    let domain = *first.domain();
    let d = domain.d();
    let dx = domain.side() / nx as f64;
    let mut counts = vec![0.0; nx.pow(d as u32)];
    let mut total = 0usize;
    for e in ensembles {
        for p in e.positions().chunks(d) {
            let mut c = 0;
            let mut stride = 1;
            for x in p {
                c += ((x / dx) as usize).min(nx - 1) * stride;
                stride *= nx;
            }
            counts[c] += 1.0;
            total += 1;
        }
    }
    let scale = 1.0 / (total as f64 * dx.powi(d as i32));
    Ok(counts.into_iter().map(|c| c * scale).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosReport {
    /// L1 distance between the within-replica pair law and the product of one-particle laws.
    pub defect: f64,
    /// The same statistic computed from pairs drawn from different replicas, which are independent.
    pub noise_floor: f64,
    pub replicas: usize,
    pub warning: Option<String>,
}

/// Two-particle factorization defect on a coarse phase grid.
///
/// Every ordered pair of distinct particles in a replica contributes to the
/// pair law, which is exchangeable and so estimates the law of `(Z_1, Z_2)`.
pub fn chaos_defect(replicas: &[Ensemble], grid: &PhaseGrid) -> Result<ChaosReport> {
    let r = replicas.len();
    if r < 2 {
        return Err(Error::domain("the chaos defect needs at least two replicas"));
    }
    let cells = grid.len();
    let counts: Vec<Vec<f64>> = replicas
        .iter()
        .map(|e| {
            let mut c = vec![0.0; cells + 1];
            for i in 0..e.len() {
                c[phase_cell(grid, e, i).unwrap_or(cells)] += 1.0;
            }
            c
        })
        .collect();
    let m = cells + 1;
    let mut one = vec![0.0; m];
    let mut total = 0.0;
    for c in &counts {
        for (o, x) in one.iter_mut().zip(c) {
            *o += x;
        }
        total += c.iter().sum::<f64>();
    }
    one.iter_mut().for_each(|o| *o /= total);

    let mut within = vec![0.0; m * m];
    let mut across = vec![0.0; m * m];
    let (mut w_pairs, mut a_pairs) = (0.0, 0.0);
    for (k, c) in counts.iter().enumerate() {
        let next = &counts[(k + 1) % r];
        let n: f64 = c.iter().sum();
        let n_next: f64 = next.iter().sum();
        w_pairs += n * (n - 1.0);
        a_pairs += n * n_next;
        for a in 0..m {
            if c[a] == 0.0 {
                continue;
            }
            for b in 0..m {
                within[a * m + b] += c[a] * c[b] - if a == b { c[a] } else { 0.0 };
                across[a * m + b] += c[a] * next[b];
            }
        }
    }
    let l1 = |pair: &[f64], norm: f64| -> f64 {
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                s += (pair[a * m + b] / norm - one[a] * one[b]).abs();
            }
        }
        s
    };
    let warning = (r < 100).then(|| format!("only {r} replicas; the defect estimate has high variance"));
    Ok(ChaosReport { defect: l1(&within, w_pairs), noise_floor: l1(&across, a_pairs), replicas: r, warning })
}
