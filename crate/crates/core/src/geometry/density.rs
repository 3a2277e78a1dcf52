//! Piecewise-constant spatial densities on a uniform periodic grid.

use super::Domain;
use crate::error::{Error, Result};

/// Cell values below `DEGENERATE_FLOOR / L^d` make `R_ρ` ill-defined.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

/// Density with `n` cells per axis, constant on each cell, unit total mass.
///
/// In d=2 the value of cell `(ix, iy)` is stored at `ix + n * iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDensity {
    domain: Domain,
    n: usize,
    h: f64,
    values: Vec<f64>,
    /// d=1 only: mass of cells `0..k`.
    prefix: Vec<f64>,
    min: f64,
}

impl SpatialDensity {
    /// Validates nonnegativity and unit mass (within 1e-10).
    pub fn new(domain: Domain, n: usize, values: Vec<f64>) -> Result<Self> {
        let cells = n.checked_pow(domain.d() as u32).unwrap_or(0);
        if n == 0 || values.len() != cells {
            return Err(Error::domain(format!(
                "expected {cells} cell values for {n} cells per axis, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain(format!("density values must be nonnegative, found {v}")));
        }
        let h = domain.side() / n as f64;
        let cell_volume = h.powi(domain.d() as i32);
        let mass: f64 = values.iter().sum::<f64>() * cell_volume;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("density must have unit mass, got {mass}")));
        }
        let prefix = if domain.d() == 1 {
            let mut p = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            p.push(0.0);
            for v in &values {
                acc += v * h;
                p.push(acc);
            }
            p
        } else {
            Vec::new()
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { domain, n, h, values, prefix, min })
    }

    /// Rescales nonnegative values to unit mass.
    pub fn normalized(domain: Domain, n: usize, mut values: Vec<f64>) -> Result<Self> {
        let h = domain.side() / n.max(1) as f64;
        let mass: f64 = values.iter().sum::<f64>() * h.powi(domain.d() as i32);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::domain(format!("cannot normalize a density of mass {mass}")));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Self::new(domain, n, values)
    }

    pub fn uniform(domain: Domain, n: usize) -> Result<Self> {
        let cells = n.pow(domain.d() as u32);
        Self::new(domain, n, vec![1.0 / domain.volume(); cells])
    }

    /// Cell averages of a function of position (`f(&[x])` or `f(&[x, y])`), normalized.
    pub fn from_fn(domain: Domain, n: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let h = domain.side() / n as f64;
        let rule = crate::quadrature::gl4();
        let values = match domain.d() {
            1 => (0..n)
                .map(|i| rule.integrate(i as f64 * h, (i + 1) as f64 * h, |x| f(&[x])) / h)
                .collect(),
            _ => {
                let mut vals = Vec::with_capacity(n * n);
                for iy in 0..n {
                    for ix in 0..n {
                        let (x0, y0) = (ix as f64 * h, iy as f64 * h);
                        let mut s = 0.0;
                        for (x, wx) in rule.mapped(x0, x0 + h) {
                            for (y, wy) in rule.mapped(y0, y0 + h) {
                                s += wx * wy * f(&[x, y]);
                            }
                        }
                        vals.push(s / (h * h));
                    }
                }
                vals
            }
        };
        Self::normalized(domain, n, values)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn cell_width(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Density at a point (the value of the containing cell).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let mut c = 0;
        let mut stride = 1;
        for &xa in x {
            let k = ((self.domain.wrap(xa) / self.h) as usize).min(self.n - 1);
            c += k * stride;
            stride *= self.n;
        }
        self.values[c]
    }

    pub fn min_value(&self) -> f64 {
        self.min
    }

    /// Mass of `[0, y]` along the unrolled periodic line (d=1), negative for `y < 0`.
    fn cumulative(&self, y: f64) -> f64 {
        let l = self.domain.side();
        let periods = (y / l).floor();
        let r = y - periods * l;
        let c = ((r / self.h) as usize).min(self.n - 1);
        periods * self.prefix[self.n] + self.prefix[c] + (r - c as f64 * self.h) * self.values[c]
    }

    /// Mass of the ball of radius `s` around `x`.
    ///
    /// For `s > L/2` the ball wraps onto itself; the result is 1 if the ball
    /// covers the whole box and an error otherwise.
    pub fn partial_mass(&self, x: &[f64], s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::domain(format!("radius must be nonnegative, got {s}")));
        }
        if x.len() != self.domain.d() {
            return Err(Error::domain("point dimension does not match the density"));
        }
        let l = self.domain.side();
        if s == 0.0 {
            return Ok(0.0);
        }
        match self.domain.d() {
            1 => {
                if 2.0 * s >= l {
                    return Ok(1.0);
                }
                let x0 = self.domain.wrap(x[0]);
                Ok((self.cumulative(x0 + s) - self.cumulative(x0 - s)).clamp(0.0, 1.0))
            }
            _ => {
                if s > 0.5 * l {
                    if s * s >= 0.5 * l * l {
                        return Ok(1.0);
                    }
                    return Err(Error::domain(format!(
                        "radius {s} exceeds L/2 without covering the box; the periodic ball overlaps itself"
                    )));
                }
                Ok(self.disk_mass(x, s).clamp(0.0, 1.0))
            }
        }
    }

    fn disk_mass(&self, x: &[f64], s: f64) -> f64 {
        let (cx, cy) = (self.domain.wrap(x[0]), self.domain.wrap(x[1]));
        let h = self.h;
        let n = self.n as isize;
        let i0 = ((cx - s) / h).floor() as isize;
        let i1 = ((cx + s) / h).floor() as isize;
        let j0 = ((cy - s) / h).floor() as isize;
        let j1 = ((cy + s) / h).floor() as isize;
        let mut mass = 0.0;
        for j in j0..=j1 {
            let y0 = j as f64 * h - cy;
            let row = j.rem_euclid(n) as usize * self.n;
            for i in i0..=i1 {
                let x0 = i as f64 * h - cx;
                let a = disk_rect_area(s, x0, x0 + h, y0, y0 + h);
                if a > 0.0 {
                    mass += a * self.values[row + i.rem_euclid(n) as usize];
                }
            }
        }
        mass
    }

    /// Radius `R` with `partial_mass(x, R) = m`, by bisection.
    pub fn inverse_partial_mass(&self, x: &[f64], m: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&m) {
            return Err(Error::domain(format!("mass fraction must lie in [0, 1), got {m}")));
        }
        self.check_nondegenerate()?;
        if m == 0.0 {
            return Ok(0.0);
        }
        let half = 0.5 * self.domain.side();
        let reachable = self.partial_mass(x, half)?;
        if m > reachable {
            return Err(Error::domain(format!(
                "mass {m} is not reachable within radius L/2 (max {reachable})"
            )));
        }
        let (mut lo, mut hi) = (0.0, half);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.partial_mass(x, mid)? < m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// Fails with a degenerate-density error if any cell is below the floor.
    pub fn check_nondegenerate(&self) -> Result<()> {
        let floor = DEGENERATE_FLOOR / self.domain.volume();
        if self.min >= floor {
            return Ok(());
        }
        let mut bad = self.values.iter().enumerate().filter(|(_, v)| **v < floor);
        if let Some((first, _)) = bad.next() {
            return Err(Error::DegenerateDensity { count: 1 + bad.count(), first, floor });
        }
        Ok(())
    }
}

/// Area of `{u^2 + v^2 <= r^2} ∩ [x0, x1] × [y0, y1]`.
pub(crate) fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let s = |x: f64, y: f64| quadrant_area(r, x, y);
    (s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0)).max(0.0)
}

/// Signed area of the disk inside the rectangle spanned by the origin and `(x, y)`.
fn quadrant_area(r: f64, x: f64, y: f64) -> f64 {
    let sign = x.signum() * y.signum();
    let (x, y) = (x.abs().min(r), y.abs().min(r));
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    // ∫_0^x min(y, sqrt(r^2 - u^2)) du
    let u_star = (r * r - y * y).max(0.0).sqrt();
    let split = x.min(u_star);
    let primitive = |u: f64| 0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin());
    sign * (y * split + primitive(x) - primitive(split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(x: f64) -> f64 {
        1.0 + 0.8 * (-(x - 0.4).powi(2) / 0.01).exp()
    }

    #[test]
    fn uniform_line_mass_is_linear() {
        let dom = Domain::new(1, 1.0).unwrap();
        let rho = SpatialDensity::uniform(dom, 64).unwrap();
        for &s in &[0.0, 0.013, 0.2, 0.49] {
            assert!((rho.partial_mass(&[0.37], s).unwrap() - 2.0 * s).abs() < 1e-14);
        }
        assert_eq!(rho.partial_mass(&[0.37], 0.7).unwrap(), 1.0);
        for &m in &[0.0, 0.1, 0.55, 0.999] {
            assert!((rho.inverse_partial_mass(&[0.9], m).unwrap() - m / 2.0).abs() < 1e-13);
        }
        assert!(rho.partial_mass(&[0.37], -0.1).is_err());
        assert!(rho.inverse_partial_mass(&[0.3], 1.0).is_err());
    }

    #[test]
    fn line_mass_matches_quadrature() {
        let dom = Domain::new(1, 1.0).unwrap();
        let n = 200;
        let rho = SpatialDensity::from_fn(dom, n, |x| bump(x[0])).unwrap();
        let vals = rho.values().to_vec();
        let h = 1.0 / n as f64;
        // brute-force integral of the piecewise-constant density
        let brute = |x: f64, s: f64| {
            let steps = 20_000;
            let du = 2.0 * s / steps as f64;
            (0..steps)
                .map(|k| {
                    let u = dom.wrap(x - s + (k as f64 + 0.5) * du);
                    vals[((u / h) as usize).min(n - 1)] * du
                })
                .sum::<f64>()
        };
        for &(x, s) in &[(0.4, 0.05), (0.01, 0.3), (0.97, 0.11)] {
            let got = rho.partial_mass(&[x], s).unwrap();
            assert!((got - brute(x, s)).abs() < 1e-4 * h.max(1e-3), "x={x} s={s}");
        }
        // against the continuous density
        let total: f64 = crate::quadrature::composite(crate::quadrature::gl16(), 0.0, 1.0, 64, bump);
        let cont = crate::quadrature::composite(crate::quadrature::gl16(), 0.35, 0.45, 16, bump) / total;
        assert!((rho.partial_mass(&[0.4], 0.05).unwrap() - cont).abs() < 1e-6);
    }

    #[test]
    fn mass_is_monotone_and_inverts() {
        let dom = Domain::new(1, 1.0).unwrap();
        let rho = SpatialDensity::from_fn(dom, 128, |x| bump(x[0])).unwrap();
        let mut prev = 0.0;
        for k in 0..=500 {
            let s = 0.5 * k as f64 / 500.0;
            let m = rho.partial_mass(&[0.21], s).unwrap();
            assert!(m >= prev);
            prev = m;
        }
        for k in 1..100 {
            let m = k as f64 / 100.0;
            let r = rho.inverse_partial_mass(&[0.21], m).unwrap();
            assert!((rho.partial_mass(&[0.21], r).unwrap() - m).abs() < 1e-10);
        }
    }

    #[test]
    fn disk_rectangle_area_cases() {
        let r = 1.0;
        assert!((disk_rect_area(r, -2.0, 2.0, -2.0, 2.0) - PI).abs() < 1e-14);
        assert!((disk_rect_area(r, 0.0, 2.0, 0.0, 2.0) - PI / 4.0).abs() < 1e-14);
        assert!((disk_rect_area(r, -0.1, 0.1, -0.1, 0.1) - 0.04).abs() < 1e-15);
        assert_eq!(disk_rect_area(r, 1.0, 2.0, 1.0, 2.0), 0.0);
        // half-disk strip
        assert!((disk_rect_area(r, -2.0, 2.0, 0.0, 3.0) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn plane_mass_uniform_and_limits() {
        let dom = Domain::new(2, 1.0).unwrap();
        let rho = SpatialDensity::uniform(dom, 16).unwrap();
        for &s in &[0.01, 0.1, 0.3, 0.5] {
            assert!((rho.partial_mass(&[0.93, 0.02], s).unwrap() - PI * s * s).abs() < 1e-13);
        }
        assert_eq!(rho.partial_mass(&[0.5, 0.5], 0.75).unwrap(), 1.0);
        assert!(rho.partial_mass(&[0.5, 0.5], 0.6).is_err());
        let r = rho.inverse_partial_mass(&[0.3, 0.3], 0.2).unwrap();
        assert!((r - (0.2 / PI).sqrt()).abs() < 1e-12);
        assert!(rho.inverse_partial_mass(&[0.3, 0.3], 0.9).is_err());
    }

    #[test]
    fn plane_mass_matches_fine_sampling() {
        let dom = Domain::new(2, 1.0).unwrap();
        let rho = SpatialDensity::from_fn(dom, 24, |p| 1.0 + 0.5 * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos()).unwrap();
        let (cx, cy, s) = (0.9, 0.15, 0.21);
        let steps = 1500;
        let du = 2.0 * s / steps as f64;
        let mut brute = 0.0;
        for a in 0..steps {
            for b in 0..steps {
                let (u, v) = (-s + (a as f64 + 0.5) * du, -s + (b as f64 + 0.5) * du);
                if u * u + v * v <= s * s {
                    brute += rho.value_at(&[cx + u, cy + v]) * du * du;
                }
            }
        }
        assert!((rho.partial_mass(&[cx, cy], s).unwrap() - brute).abs() < 2e-4);
    }

    #[test]
    fn degenerate_density_is_reported() {
        let dom = Domain::new(1, 1.0).unwrap();
        let mut vals = vec![1.0; 10];
        vals[3] = 0.0;
        vals[4] = 2.0;
        let rho = SpatialDensity::new(dom, 10, vals).unwrap();
        match rho.inverse_partial_mass(&[0.5], 0.3) {
            Err(Error::DegenerateDensity { count, first, .. }) => assert_eq!((count, first), (1, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SpatialDensity::new(dom, 10, vec![0.5; 10]).is_err());
    }
}
