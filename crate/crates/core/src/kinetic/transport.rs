//! Free transport `∂_t f + v ∂_x f = 0` by conservative piecewise-linear remap.
//!
//! Each velocity slice moves rigidly by `v dt`: an integer rotation followed by a
//! fractional shift whose face fluxes use MC-limited slopes. The update is a
//! telescoping sum of fluxes, so mass is conserved to rounding, and with the
//! fractional part in `[0, 1)` the limited remap keeps cell values nonnegative.

use super::field::PhaseField;
use crate::error::{Error, Result};

fn mc_slope(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        let m = (2.0 * a.abs()).min(2.0 * b.abs()).min(0.5 * (a + b).abs());
        m.copysign(a)
    }
}

/// Shifts a periodic row of cell averages by `s` cells (positive to the right).
pub fn shift_row(u: &[f64], s: f64, out: &mut [f64], flux: &mut Vec<f64>) {
    let n = u.len();
    let k = s.floor();
    let theta = s - k;
    let k = (k as i64).rem_euclid(n as i64) as usize;
    if theta == 0.0 {
        for i in 0..n {
            out[(i + k) % n] = u[i];
        }
        return;
    }
    // flux through the right face of cell i
    flux.clear();
    flux.extend((0..n).map(|i| {
        let sigma = mc_slope(u[i] - u[(i + n - 1) % n], u[(i + 1) % n] - u[i]);
        theta * (u[i] + 0.5 * (1.0 - theta) * sigma)
    }));
    for i in 0..n {
        let prev = (i + n - 1) % n;
        out[(i + k) % n] = u[i] - flux[i] + flux[prev];
    }
}

/// Advances free transport by `dt` (one dimension only).
pub fn transport_step(f: &PhaseField, dt: f64) -> Result<PhaseField> {
    let g = *f.grid();
    if g.d() != 1 {
        return Err(Error::Unsupported("transport is implemented in one dimension".into()));
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("time step must be nonnegative, got {dt}")));
    }
    let (nx, nv) = (g.nx(), g.nv());
    let mut out = PhaseField::zeros(g);
    let mut row = vec![0.0; nx];
    let mut shifted = vec![0.0; nx];
    let mut flux = Vec::with_capacity(nx);
    for j in 0..nv {
        for i in 0..nx {
            row[i] = f.at(i, j);
        }
        let s = g.v_center(j) * dt / g.dx();
        shift_row(&row, s, &mut shifted, &mut flux);
        let vals = out.values_mut();
        for i in 0..nx {
            vals[g.index(i, j)] = shifted[i];
        }
    }
    Ok(out)
}
