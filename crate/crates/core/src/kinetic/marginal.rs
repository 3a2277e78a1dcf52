//! Sphere-averaged ratios `G_η(x, v, m)`, the weighted marginals `F^N_η`, and the
//! sphere-averaged form of the nonlocal operator.
//!
//! Off-grid values of `η` and `ρ_η` come from the trigonometric interpolant of
//! the cell values, which is exact for band-limited fields. Radii come from the
//! piecewise-constant density via `inverse_partial_mass`.

use std::f64::consts::TAU;

use super::field::{check_rho_floor, PhaseField};
use crate::error::{Error, Result};
use crate::geometry::SpatialDensity;
use crate::kernel::RankKernel;
use crate::quadrature::{gl16, integrate_toward_zero};

/// Trigonometric interpolant of several periodic grid functions sharing a grid.
#[derive(Debug, Clone)]
struct Fourier {
    n: usize,
    d: usize,
    side: f64,
    kmax: i64,
    channels: usize,
    /// `[mode][channel]`, modes enumerated with axis 0 fastest over `-kmax..=kmax`.
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Fourier {
    /// `values` is laid out `[cell][channel]`, cells axis 0 fastest, nodes at cell centers.
    fn new(n: usize, d: usize, side: f64, channels: usize, values: &[f64]) -> Self {
        let kmax = (n / 2) as i64;
        let nk = (2 * kmax + 1) as usize;
        let h = side / n as f64;
        // e^{-2πi k x_j / L} per axis
        let mut tab_re = vec![0.0; nk * n];
        let mut tab_im = vec![0.0; nk * n];
        for (ki, k) in (-kmax..=kmax).enumerate() {
            for j in 0..n {
                let ph = -TAU * k as f64 * (j as f64 + 0.5) * h / side;
                tab_re[ki * n + j] = ph.cos();
                tab_im[ki * n + j] = ph.sin();
            }
        }
        let scale = 1.0 / (n as f64).powi(d as i32);
        let (re, im) = if d == 1 {
            let mut re = vec![0.0; nk * channels];
            let mut im = vec![0.0; nk * channels];
            for ki in 0..nk {
                for j in 0..n {
                    let (cr, ci) = (tab_re[ki * n + j], tab_im[ki * n + j]);
                    for c in 0..channels {
                        let u = values[j * channels + c];
                        re[ki * channels + c] += cr * u;
                        im[ki * channels + c] += ci * u;
                    }
                }
            }
            (re, im)
        } else {
            // axis 0 first: [k0][j1][channel]
            let mut r1 = vec![0.0; nk * n * channels];
            let mut i1 = vec![0.0; nk * n * channels];
            for k0 in 0..nk {
                for j1 in 0..n {
                    for j0 in 0..n {
                        let (cr, ci) = (tab_re[k0 * n + j0], tab_im[k0 * n + j0]);
                        let src = (j1 * n + j0) * channels;
                        let dst = (k0 * n + j1) * channels;
                        for c in 0..channels {
                            r1[dst + c] += cr * values[src + c];
                            i1[dst + c] += ci * values[src + c];
                        }
                    }
                }
            }
            let mut re = vec![0.0; nk * nk * channels];
            let mut im = vec![0.0; nk * nk * channels];
            for k1 in 0..nk {
                for k0 in 0..nk {
                    let dst = (k1 * nk + k0) * channels;
                    for j1 in 0..n {
                        let (cr, ci) = (tab_re[k1 * n + j1], tab_im[k1 * n + j1]);
                        let src = (k0 * n + j1) * channels;
                        for c in 0..channels {
                            re[dst + c] += cr * r1[src + c] - ci * i1[src + c];
                            im[dst + c] += cr * i1[src + c] + ci * r1[src + c];
                        }
                    }
                }
            }
            (re, im)
        };
        let re = re.into_iter().map(|x| x * scale).collect();
        let im = im.into_iter().map(|x| x * scale).collect();
        Self { n, d, side, kmax, channels, re, im }
    }

    /// `w_k e^{2πi k x / L}` along one axis, halving the Nyquist pair for even `n`.
    fn axis_basis(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let nk = (2 * self.kmax + 1) as usize;
        let mut br = vec![0.0; nk];
        let mut bi = vec![0.0; nk];
        let nyquist = self.n.is_multiple_of(2);
        for (ki, k) in (-self.kmax..=self.kmax).enumerate() {
            let ph = TAU * k as f64 * x / self.side;
            let w = if nyquist && k.abs() == self.kmax { 0.5 } else { 1.0 };
            br[ki] = w * ph.cos();
            bi[ki] = w * ph.sin();
        }
        (br, bi)
    }

    /// Interpolated values of the listed channels at `x`.
    fn eval(&self, x: &[f64], chans: &[usize], out: &mut [f64]) {
        self.eval_scaled(x, chans, out, |_| 1.0);
    }

    /// Laplacian of the interpolant of the listed channels at `x`.
    fn laplacian(&self, x: &[f64], chans: &[usize], out: &mut [f64]) {
        let w = TAU / self.side;
        self.eval_scaled(x, chans, out, |k2| -w * w * k2);
    }

    /// Evaluation with each mode multiplied by `scale(|k|²)`.
    fn eval_scaled(&self, x: &[f64], chans: &[usize], out: &mut [f64], scale: impl Fn(f64) -> f64) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let (b0r, b0i) = self.axis_basis(x[0]);
        let nk = b0r.len();
        let kval = |ki: usize| (ki as i64 - self.kmax) as f64;
        let mut acc = |mode: usize, wr: f64, wi: f64| {
            let base = mode * self.channels;
            for (o, &c) in out.iter_mut().zip(chans) {
                *o += wr * self.re[base + c] - wi * self.im[base + c];
            }
        };
        if self.d == 1 {
            for k in 0..nk {
                let s = scale(kval(k).powi(2));
                acc(k, s * b0r[k], s * b0i[k]);
            }
        } else {
            let (b1r, b1i) = self.axis_basis(x[1]);
            for k1 in 0..nk {
                for k0 in 0..nk {
                    let s = scale(kval(k0).powi(2) + kval(k1).powi(2));
                    let wr = s * (b0r[k0] * b1r[k1] - b0i[k0] * b1i[k1]);
                    let wi = s * (b0r[k0] * b1i[k1] + b0i[k0] * b1r[k1]);
                    acc(k1 * nk + k0, wr, wi);
                }
            }
        }
    }
}

/// Number of equispaced directions used for circle averages in two dimensions.
pub const CIRCLE_POINTS: usize = 64;

/// Evaluator for `G_η(x, v, m)`, the ratio of sphere averages of `η(·, v)` and `ρ_η`
/// at radius `R_{ρ_η}(x, m)`.
#[derive(Debug, Clone)]
pub struct SphereAverages {
    eta: PhaseField,
    density: SpatialDensity,
    fourier: Fourier,
}

impl SphereAverages {
    pub fn new(eta: &PhaseField) -> Result<Self> {
        let g = eta.grid();
        let rho = eta.rho();
        check_rho_floor(&rho, g.domain())?;
        let nvc = g.v_cells();
        let channels = nvc + 1;
        let mut values = Vec::with_capacity(g.x_cells() * channels);
        for (c, r) in rho.iter().enumerate() {
            values.extend_from_slice(eta.slice(c));
            values.push(*r);
        }
        let fourier = Fourier::new(g.nx(), g.d(), g.domain().side(), channels, &values);
        Ok(Self { eta: eta.clone(), density: eta.spatial_density()?, fourier })
    }

    pub fn field(&self) -> &PhaseField {
        &self.eta
    }

    pub fn density(&self) -> &SpatialDensity {
        &self.density
    }

    fn rho_channel(&self) -> usize {
        self.eta.grid().v_cells()
    }

    /// Interpolated `(η(x, v_vc), ρ(x))`.
    pub fn point_values(&self, x: &[f64], vc: usize) -> (f64, f64) {
        let mut out = [0.0; 2];
        self.fourier.eval(x, &[vc, self.rho_channel()], &mut out);
        (out[0], out[1])
    }

    /// `D[ρ, η](x, v) = Δη - (η/ρ) Δρ` from derivatives of the interpolant.
    pub fn d_value(&self, x: &[f64], vc: usize) -> f64 {
        let chans = [vc, self.rho_channel()];
        let mut lap = [0.0; 2];
        self.fourier.laplacian(x, &chans, &mut lap);
        let (e, r) = self.point_values(x, vc);
        lap[0] - e / r * lap[1]
    }

    /// `G(x, v, 0) = η(x, v) / ρ(x)`.
    pub fn g_at_zero(&self, x: &[f64], vc: usize) -> f64 {
        let (e, r) = self.point_values(x, vc);
        e / r
    }

    /// Largest mass reachable inside radius `L/2` around `x`.
    pub fn reachable_mass(&self, x: &[f64]) -> Result<f64> {
        self.density.partial_mass(x, 0.5 * self.density.domain().side())
    }

    /// Sum of interpolated `(η, ρ)` over the sphere nodes of radius `r`, divided by their count.
    fn sphere_sums(&self, x: &[f64], r: f64, chans: &[usize], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; chans.len()];
        let pts: Vec<Vec<f64>> = if x.len() == 1 {
            vec![vec![x[0] + r], vec![x[0] - r]]
        } else {
            (0..CIRCLE_POINTS)
                .map(|k| {
                    let th = TAU * k as f64 / CIRCLE_POINTS as f64;
                    vec![x[0] + r * th.cos(), x[1] + r * th.sin()]
                })
                .collect()
        };
        for p in &pts {
            self.fourier.eval(p, chans, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += b;
            }
        }
        let inv = 1.0 / pts.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
    }

    /// `G_η(x, v, m)`.
    pub fn g_of_m(&self, x: &[f64], vc: usize, m: f64) -> Result<f64> {
        if m == 0.0 {
            return Ok(self.g_at_zero(x, vc));
        }
        let r = self.density.inverse_partial_mass(x, m)?;
        let mut out = [0.0; 2];
        self.sphere_sums(x, r, &[vc, self.rho_channel()], &mut out);
        Ok(out[0] / out[1])
    }

    /// `G_η(x, v, m)` for every velocity cell at once.
    pub fn g_all(&self, x: &[f64], m: f64) -> Result<Vec<f64>> {
        let nvc = self.rho_channel();
        let chans: Vec<usize> = (0..=nvc).collect();
        let mut out = vec![0.0; nvc + 1];
        if m == 0.0 {
            self.fourier.eval(x, &chans, &mut out);
        } else {
            let r = self.density.inverse_partial_mass(x, m)?;
            self.sphere_sums(x, r, &chans, &mut out);
        }
        let rho = out[nvc];
        out.truncate(nvc);
        Ok(out.into_iter().map(|e| e / rho).collect())
    }

    /// `∫_0^{m_max} w(m) [G(m) - G(0)] dm` with panels refined toward `m = 0`.
    pub fn weighted_increment(&self, x: &[f64], vc: usize, rel_tol: f64, w: impl Fn(f64) -> f64) -> Result<f64> {
        let upper = self.upper_mass(x)?;
        let g0 = self.g_at_zero(x, vc);
        let mut failure = None;
        let val = integrate_toward_zero(upper, rel_tol, 1e-300, |m| match self.g_of_m(x, vc, m) {
            Ok(g) => w(m) * (g - g0),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(val),
        }
    }

    /// Integration limit in `m`: 1 in one dimension, the mass inside radius `L/2` otherwise.
    fn upper_mass(&self, x: &[f64]) -> Result<f64> {
        if x.len() == 1 {
            // inverse_partial_mass needs m < 1; the last ulp carries no weight
            Ok(1.0 - f64::EPSILON)
        } else {
            self.reachable_mass(x)
        }
    }
}

/// `F^N_η(x, v) = λ (N-1) ∫_0^1 G_η(x, v, m) (1-m)^(N-2) dm` to relative accuracy 1e-6.
///
/// In two dimensions the integral stops at the mass reachable inside radius `L/2`;
/// the dropped tail has weight at most `(1 - m_max)^(N-1)`.
pub fn f_n(avg: &SphereAverages, x: &[f64], vc: usize, n: usize, lambda: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("F^N needs N >= 2"));
    }
    let upper = avg.upper_mass(x)?;
    let p = (n - 2) as f64;
    let mut failure = None;
    let integral = integrate_toward_zero(upper, 1e-6, 1e-300, |m| {
        let w = (p * (-m).ln_1p()).exp();
        match avg.g_of_m(x, vc, m) {
            Ok(g) => g * w,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(lambda * (n - 1) as f64 * integral)
}

/// Sphere-averaged nonlocal operator `ρ(x) ∫ K(m) [G(x, v, m) - G(x, v, 0)] dm` at the
/// position-cell centers, one Gauss panel per linear piece of `K` (one dimension).
pub fn collision_nonlocal_averaged(avg: &SphereAverages, kernel: &RankKernel) -> Result<PhaseField> {
    let g = *avg.field().grid();
    if g.d() != 1 {
        return Err(Error::Unsupported("the sphere-averaged operator is evaluated in one dimension".into()));
    }
    let bp = kernel.breakpoints();
    let top = kernel.support().min(1.0 - f64::EPSILON);
    let rule = gl16();
    let nvc = g.v_cells();
    let rho = avg.field().rho();
    let mut out = PhaseField::zeros(g);
    for c in 0..g.x_cells() {
        let x = g.x_point(c);
        let g0 = avg.g_all(&x, 0.0)?;
        let mut acc = vec![0.0; nvc];
        for w in bp.windows(2) {
            let (a, b) = (w[0], w[1].min(top));
            if b <= a {
                continue;
            }
            for (m, wm) in rule.mapped(a, b) {
                let kv = kernel.value(m);
                let gm = avg.g_all(&x, m)?;
                for j in 0..nvc {
                    acc[j] += wm * kv * (gm[j] - g0[j]);
                }
            }
        }
        let vals = out.values_mut();
        for j in 0..nvc {
            vals[g.index(c, j)] = rho[c] * acc[j];
        }
    }
    Ok(out)
}
