use crate::error::{Error, Result};
use crate::geometry::{Domain, SpatialDensity};

/// Spatial density floor `RHO_FLOOR / L^d` below which the collision operators refuse to run.
pub const RHO_FLOOR: f64 = 1e-8;

/// Tensor grid over `[0, L)^d × [-V, V]^d` with cell-centered nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    domain: Domain,
    nx: usize,
    nv: usize,
    vmax: f64,
}

impl PhaseGrid {
    pub fn new(domain: Domain, nx: usize, nv: usize, vmax: f64) -> Result<Self> {
        if nx < 3 {
            return Err(Error::domain(format!("need at least 3 position cells per axis, got {nx}")));
        }
        if nv == 0 {
            return Err(Error::domain("need at least one velocity cell"));
        }
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(Error::domain(format!("velocity bound must be positive, got {vmax}")));
        }
        Ok(Self { domain, nx, nv, vmax })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn d(&self) -> usize {
        self.domain.d()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn dx(&self) -> f64 {
        self.domain.side() / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    /// Number of position cells (`nx^d`).
    pub fn x_cells(&self) -> usize {
        self.nx.pow(self.d() as u32)
    }

    /// Number of velocity cells (`nv^d`).
    pub fn v_cells(&self) -> usize {
        self.nv.pow(self.d() as u32)
    }

    pub fn len(&self) -> usize {
        self.x_cells() * self.v_cells()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Phase-space cell volume `(Δx Δv)^d`.
    pub fn cell_volume(&self) -> f64 {
        (self.dx() * self.dv()).powi(self.d() as i32)
    }

    /// Velocity cell volume `Δv^d`.
    pub fn dv_volume(&self) -> f64 {
        self.dv().powi(self.d() as i32)
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn v_center(&self, j: usize) -> f64 {
        -self.vmax + (j as f64 + 0.5) * self.dv()
    }

    /// Coordinates of position cell `c` (flat index, axis 0 fastest).
    pub fn x_point(&self, c: usize) -> Vec<f64> {
        (0..self.d()).map(|a| self.x_center((c / self.nx.pow(a as u32)) % self.nx)).collect()
    }

    /// Coordinates of velocity cell `c` (flat index, axis 0 fastest).
    pub fn v_point(&self, c: usize) -> Vec<f64> {
        (0..self.d()).map(|a| self.v_center((c / self.nv.pow(a as u32)) % self.nv)).collect()
    }

    /// Flat index of `(position cell, velocity cell)`.
    #[inline]
    pub fn index(&self, xc: usize, vc: usize) -> usize {
        xc * self.v_cells() + vc
    }
}

/// Gridded phase-space distribution `f(x, v)`.
///
/// Values are laid out as `[x cell][v cell]`. The spatial density is always
/// recomputed from `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl PhaseField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("phase field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x, v)` at cell centers.
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for xc in 0..grid.x_cells() {
            let x = grid.x_point(xc);
            for vc in 0..grid.v_cells() {
                values.push(f(&x, &grid.v_point(vc)));
            }
        }
        Self::new(grid, values)
    }

    /// Product `ρ(x) g(v)` sampled at cell centers.
    pub fn product(grid: PhaseGrid, rho: impl Fn(&[f64]) -> f64, g: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x, v| rho(x) * g(v))
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, xc: usize, vc: usize) -> f64 {
        self.values[self.grid.index(xc, vc)]
    }

    /// Velocity profile at position cell `xc`.
    pub fn slice(&self, xc: usize) -> &[f64] {
        let nvc = self.grid.v_cells();
        &self.values[xc * nvc..(xc + 1) * nvc]
    }

    /// `ρ(x) = Σ_v f(x, v) Δv^d`.
    pub fn rho(&self) -> Vec<f64> {
        let dv = self.grid.dv_volume();
        self.values
            .chunks(self.grid.v_cells())
            .map(|s| s.iter().sum::<f64>() * dv)
            .collect()
    }

    /// `∫∫ f dx dv`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rescales to unit mass.
    pub fn normalize(&mut self) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::domain(format!("cannot normalize a field of mass {m}")));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(())
    }

    /// Piecewise-constant density built from `rho()`, rescaled to unit mass.
    pub fn spatial_density(&self) -> Result<SpatialDensity> {
        SpatialDensity::normalized(*self.grid.domain(), self.grid.nx(), self.rho())
    }

    /// `Σ |f - g| Δx^d Δv^d`.
    pub fn l1_distance(&self, other: &PhaseField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Consistency("fields live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.cell_volume())
    }

    /// Fails with a vacuum-singularity error naming every cell below the floor.
    pub fn check_vacuum(&self) -> Result<Vec<f64>> {
        let rho = self.rho();
        check_rho_floor(&rho, self.grid.domain())?;
        Ok(rho)
    }
}

pub(crate) fn check_rho_floor(rho: &[f64], domain: &Domain) -> Result<()> {
    let floor = RHO_FLOOR / domain.volume();
    let cells: Vec<usize> = rho.iter().enumerate().filter(|(_, r)| !(**r >= floor)).map(|(i, _)| i).collect();
    if cells.is_empty() {
        Ok(())
    } else {
        Err(Error::VacuumSingularity { cells, floor })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> PhaseGrid {
        PhaseGrid::new(Domain::new(1, 1.0).unwrap(), 8, 4, 2.0).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = grid1();
        assert_eq!(g.len(), 32);
        assert!((g.dx() - 0.125).abs() < 1e-15);
        assert!((g.v_center(0) + 1.5).abs() < 1e-15);
        assert!((g.v_center(3) - 1.5).abs() < 1e-15);
        let g2 = PhaseGrid::new(Domain::new(2, 1.0).unwrap(), 4, 3, 1.0).unwrap();
        assert_eq!(g2.x_point(5), vec![0.375, 0.375]);
        assert_eq!(g2.len(), 16 * 9);
        assert!(PhaseGrid::new(Domain::new(1, 1.0).unwrap(), 2, 3, 1.0).is_err());
    }

    #[test]
    fn density_and_mass() {
        let g = grid1();
        let f = PhaseField::product(g, |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[0]).sin(), |_| 0.25).unwrap();
        let rho = f.rho();
        assert!((rho[0] - (1.0 + 0.5 * (std::f64::consts::PI / 8.0).sin())).abs() < 1e-14);
        assert!((f.mass() - 1.0).abs() < 1e-14);
        assert!(f.check_vacuum().is_ok());
        let z = PhaseField::zeros(g);
        match z.check_vacuum() {
            Err(Error::VacuumSingularity { cells, .. }) => assert_eq!(cells.len(), 8),
            other => panic!("{other:?}"),
        }
    }
}
