//! The nonlocal smooth-rank collision operator in one dimension:
//! gain `ρ(x) ∫ f(x', v) K(M_ρ(x, |x' - x|)) dx'` minus loss `f(x, v) ∫ ρ(x') K(M_ρ(x, |x' - x|)) dx'`.
//!
//! With `f` reconstructed from cell values by the piecewise-cubic Lagrange
//! interpolant, each cell has a row of weights `c_ij = ∫ K(M(x_i, |x' - x_i|)) φ_j(x') dx'`
//! and the operator becomes `ρ_i Σ_j c_ij f_j - f_i Σ_j c_ij ρ_j`. The velocity
//! sum of the two terms is the same number, so mass is conserved to rounding
//! and factorized states are fixed points.
//!
//! `M` is taken from the piecewise-constant density, which makes `K ∘ M`
//! piecewise linear between cell centers, cell faces and the radii of the
//! kernel breakpoints. Splitting there makes 4-point Gauss rules exact.

use super::field::{check_rho_floor, PhaseField};
use crate::error::{Error, Result};
use crate::geometry::SpatialDensity;
use crate::kernel::RankKernel;
use crate::quadrature::gl4;

/// Interaction weights on a periodic row of cells.
#[derive(Debug, Clone)]
struct Row {
    /// Cell index of `vals[0]`; entries wrap modulo `nx`.
    start: isize,
    vals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NonlocalWeights {
    nx: usize,
    rows: Vec<Row>,
}

/// Cubic Lagrange weights on nodes `-1, 0, 1, 2` at offset `t ∈ [0, 1]`.
#[inline]
fn cubic_lagrange(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl NonlocalWeights {
    pub fn new(density: &SpatialDensity, kernel: &RankKernel) -> Result<Self> {
        let domain = *density.domain();
        if domain.d() != 1 {
            return Err(Error::Unsupported("the nonlocal operator is implemented in one dimension".into()));
        }
        density.check_nondegenerate()?;
        let nx = density.cells_per_axis();
        let dx = density.cell_width();
        let half = 0.5 * domain.side();
        let rule = gl4();
        let mut rows = Vec::with_capacity(nx);
        for i in 0..nx {
            let xi = (i as f64 + 0.5) * dx;
            let at = [xi];
            let reach = if kernel.support() >= 1.0 { half } else { density.inverse_partial_mass(&at, kernel.support())? };
            let mut cuts: Vec<f64> = Vec::new();
            for b in kernel.breakpoints() {
                if b > 0.0 && b < 1.0 && b < kernel.support() {
                    cuts.push(density.inverse_partial_mass(&at, b)?);
                }
            }
            let mut k = 1;
            while 0.5 * k as f64 * dx < reach {
                cuts.push(0.5 * k as f64 * dx);
                k += 1;
            }
            cuts.push(0.0);
            cuts.push(reach);
            cuts.retain(|s| *s <= reach);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * half);

            let w = (reach / dx).ceil() as isize + 2;
            let len = (2 * w + 1) as usize;
            let dense = len >= nx;
            let start = if dense { 0 } else { i as isize - w };
            let mut vals = vec![0.0; if dense { nx } else { len }];
            for pair in cuts.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if b <= a {
                    continue;
                }
                for (s, ws) in rule.mapped(a, b) {
                    let m = density.partial_mass(&at, s)?;
                    if !(-1e-12..=1.0 + 1e-12).contains(&m) {
                        return Err(Error::Consistency(format!("partial mass {m} left [0, 1]")));
                    }
                    let kv = kernel.value(m);
                    if kv == 0.0 {
                        continue;
                    }
                    for side in [1.0, -1.0] {
                        // position in units of cell centers, unwrapped
                        let y = (xi + side * s) / dx - 0.5;
                        let base = y.floor();
                        let lw = cubic_lagrange(y - base);
                        for (o, l) in lw.iter().enumerate() {
                            let m_idx = base as isize - 1 + o as isize;
                            let slot = if dense { m_idx.rem_euclid(nx as isize) as usize } else { (m_idx - start) as usize };
                            vals[slot] += ws * kv * l;
                        }
                    }
                }
            }
            rows.push(Row { start, vals });
        }
        Ok(Self { nx, rows })
    }

    #[inline]
    fn row_sum(&self, i: usize, u: impl Fn(usize) -> f64) -> f64 {
        let r = &self.rows[i];
        let n = self.nx as isize;
        r.vals.iter().enumerate().map(|(k, c)| c * u((r.start + k as isize).rem_euclid(n) as usize)).sum()
    }

    /// Loss rate `Σ_j c_ij ρ_j` of each cell.
    pub fn loss_rates(&self, rho: &[f64]) -> Vec<f64> {
        (0..self.nx).map(|i| self.row_sum(i, |j| rho[j])).collect()
    }

    /// Gain and loss for a field on the same spatial grid.
    pub fn apply(&self, f: &PhaseField) -> Result<(PhaseField, PhaseField)> {
        let g = f.grid();
        if g.nx() != self.nx || g.d() != 1 {
            return Err(Error::Consistency("weights were built for a different grid".into()));
        }
        let rho = f.rho();
        check_rho_floor(&rho, g.domain())?;
        let rates = self.loss_rates(&rho);
        let nv = g.nv();
        let mut gain = PhaseField::zeros(*g);
        let mut loss = PhaseField::zeros(*g);
        for i in 0..self.nx {
            for j in 0..nv {
                let s = self.row_sum(i, |c| f.at(c, j));
                gain.values_mut()[g.index(i, j)] = rho[i] * s;
                loss.values_mut()[g.index(i, j)] = f.at(i, j) * rates[i];
            }
        }
        Ok((gain, loss))
    }
}

/// The nonlocal collision operator, gain minus loss, with weights built from `ρ` of `f`.
pub fn collision_nonlocal(f: &PhaseField, kernel: &RankKernel) -> Result<PhaseField> {
    f.check_vacuum()?;
    let weights = NonlocalWeights::new(&f.spatial_density()?, kernel)?;
    let (mut gain, loss) = weights.apply(f)?;
    gain.values_mut().iter_mut().zip(loss.values()).for_each(|(a, b)| *a -= b);
    Ok(gain)
}
