//! The local collision operator `Q[f] = ρ̃^{-2/d} (Δ_x f - (f/ρ) Δ_x ρ)` on the grid.
//!
//! `ρ̃ = |S^{d-1}| ρ` is the density measured against the unit-ball volume
//! form, which is the normalization under which the rank-based limits hold.

use super::field::{check_rho_floor, PhaseField, PhaseGrid};
use crate::error::Result;
use crate::special::unit_sphere_measure;

/// Periodic second-order central Laplacian of a scalar field on `nx^d` cells.
pub fn laplacian_scalar(u: &[f64], nx: usize, d: usize, dx: f64) -> Vec<f64> {
    let inv = 1.0 / (dx * dx);
    let mut out = vec![0.0; u.len()];
    let mut stride = 1;
    for _ in 0..d {
        for (c, o) in out.iter_mut().enumerate() {
            let i = (c / stride) % nx;
            let base = c - i * stride;
            let lo = base + ((i + nx - 1) % nx) * stride;
            let hi = base + ((i + 1) % nx) * stride;
            *o += (u[lo] - 2.0 * u[c] + u[hi]) * inv;
        }
        stride *= nx;
    }
    out
}

/// Laplacian in `x` of every velocity slice.
pub fn laplacian_x(f: &PhaseField) -> PhaseField {
    let g = f.grid();
    let (nx, d, nvc) = (g.nx(), g.d(), g.v_cells());
    let inv = 1.0 / (g.dx() * g.dx());
    let vals = f.values();
    let mut out = vec![0.0; vals.len()];
    let mut stride = 1;
    for _ in 0..d {
        for c in 0..g.x_cells() {
            let i = (c / stride) % nx;
            let base = c - i * stride;
            let lo = base + ((i + nx - 1) % nx) * stride;
            let hi = base + ((i + 1) % nx) * stride;
            let (o, a, m, b) = (c * nvc, lo * nvc, c * nvc, hi * nvc);
            for j in 0..nvc {
                out[o + j] += (vals[a + j] - 2.0 * vals[m + j] + vals[b + j]) * inv;
            }
        }
        stride *= nx;
    }
    PhaseField::new(*g, out).expect("same grid")
}

/// `D[ρ, η] = Δ_x η - (η/ρ) Δ_x ρ`, with `ρ = Σ_v η Δv`.
pub fn d_operator(eta: &PhaseField) -> Result<PhaseField> {
    let g = eta.grid();
    let rho = eta.check_vacuum()?;
    let lap_rho = laplacian_scalar(&rho, g.nx(), g.d(), g.dx());
    let mut out = laplacian_x(eta);
    let nvc = g.v_cells();
    for (c, (r, lr)) in rho.iter().zip(&lap_rho).enumerate() {
        let ratio = lr / r;
        let (o, e) = (&mut out.values_mut()[c * nvc..(c + 1) * nvc], &eta.values()[c * nvc..(c + 1) * nvc]);
        for (ov, ev) in o.iter_mut().zip(e) {
            *ov -= ev * ratio;
        }
    }
    Ok(out)
}

/// `ρ̃^{-2/d}` per position cell.
pub fn diffusion_weight(rho: &[f64], d: usize) -> Vec<f64> {
    let s = unit_sphere_measure(d);
    let p = -2.0 / d as f64;
    rho.iter().map(|r| (s * r).powf(p)).collect()
}

/// The local collision operator.
pub fn collision_local(f: &PhaseField) -> Result<PhaseField> {
    let g = f.grid();
    let mut out = d_operator(f)?;
    let w = diffusion_weight(&f.rho(), g.d());
    let nvc = g.v_cells();
    for (chunk, wc) in out.values_mut().chunks_mut(nvc).zip(&w) {
        chunk.iter_mut().for_each(|q| *q *= wc);
    }
    Ok(out)
}

/// Largest stable explicit step for the local collision: `0.4 Δx² min ρ̃^{2/d}`.
pub fn local_dt_limit(grid: &PhaseGrid, rho: &[f64]) -> Result<f64> {
    check_rho_floor(rho, grid.domain())?;
    let min_rho = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let d = grid.d() as f64;
    Ok(0.4 * grid.dx().powi(2) * (unit_sphere_measure(grid.d()) * min_rho).powf(2.0 / d) / d)
}
