//! Gauss-Legendre rules and the geometrically refined panel integrator used for
//! integrands weighted by `(1 - m)^(N-2)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Shared 4-point rule.
pub fn gl4() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(4))
}

/// Integrates `f` over `[0, upper]` with 16-point panels whose widths halve toward 0.
///
/// The innermost panel starts at width `upper / 2^depth`. Depth grows until two
/// successive estimates agree to `rel_tol` (relative) or `abs_floor` (absolute).
pub fn integrate_toward_zero(
    upper: f64,
    rel_tol: f64,
    abs_floor: f64,
    mut f: impl FnMut(f64) -> f64,
) -> Result<f64> {
    let rule = gl16();
    // Panels [u/2^(k+1), u/2^k] for k < depth, plus [0, u/2^depth].
    let mut outer = 0.0;
    let mut prev = rule.integrate(0.0, upper, &mut f);
    let mut hi = upper;
    let mut last_diff = f64::INFINITY;
    for _ in 0..60 {
        let lo = 0.5 * hi;
        outer += rule.integrate(lo, hi, &mut f);
        let inner = rule.integrate(0.0, lo, &mut f);
        let est = outer + inner;
        last_diff = (est - prev).abs();
        if last_diff <= rel_tol * est.abs() || last_diff <= abs_floor {
            // one confirming level guards against accidental agreement
            let lo2 = 0.5 * lo;
            let confirm = outer + rule.integrate(lo2, lo, &mut f) + rule.integrate(0.0, lo2, &mut f);
            let d2 = (confirm - est).abs();
            if d2 <= rel_tol * confirm.abs() || d2 <= abs_floor {
                return Ok(confirm);
            }
        }
        prev = est;
        hi = lo;
    }
    Err(Error::Quadrature { achieved: last_diff, target: rel_tol })
}

/// Splits `[a, b]` into `panels` equal pieces and applies `rule` to each.
pub fn composite(rule: &GaussLegendre, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| rule.integrate(a + p as f64 * h, a + (p + 1) as f64 * h, &mut f))
        .sum()
}
