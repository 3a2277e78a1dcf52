//! Rank kernels `K : [0, 1] -> [0, inf)` and their concentrated rescalings.

use crate::error::{Error, Result};
use crate::quadrature::{gl16, integrate_toward_zero};
use crate::special::expansion_constant;

/// Shape of a kernel on its unit support.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `1` on `[0, 1]`.
    Constant,
    /// `1 - u` on `[0, 1]`.
    Tent,
    /// Piecewise-linear through equispaced values on `[0, 1]` (at least two).
    Tabulated(Vec<f64>),
}

impl Profile {
    fn validate(&self) -> Result<()> {
        if let Profile::Tabulated(v) = self {
            if v.len() < 2 {
                return Err(Error::DegenerateKernel("a tabulated profile needs at least two values".into()));
            }
            if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::DegenerateKernel("tabulated profile values must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Value at `u`; zero outside `[0, 1]`.
    pub fn value(&self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            Profile::Constant => 1.0,
            Profile::Tent => 1.0 - u,
            Profile::Tabulated(v) => {
                let segs = (v.len() - 1) as f64;
                let pos = u * segs;
                let k = (pos as usize).min(v.len() - 2);
                let t = pos - k as f64;
                v[k] * (1.0 - t) + v[k + 1] * t
            }
        }
    }

    /// Points in `[0, 1]` between which the profile is linear.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Constant | Profile::Tent => vec![0.0, 1.0],
            Profile::Tabulated(v) => {
                let segs = v.len() - 1;
                (0..=segs).map(|k| k as f64 / segs as f64).collect()
            }
        }
    }

    /// `∫_0^1 u^p profile(u) du`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        let bp = self.breakpoints();
        let rule = gl16();
        let mut total = 0.0;
        for w in bp.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == 0.0 && p.fract() != 0.0 {
                // u^p has a derivative singularity at 0 for fractional p
                total += integrate_toward_zero(b, 1e-14, 1e-300, |u| u.powf(p) * self.value(u))?;
            } else {
                total += rule.integrate(a, b, |u| u.powf(p) * self.value(u));
            }
        }
        Ok(total)
    }
}

/// `K(m) = scale * profile(m / support)` for `m` in `[0, support]`, zero beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct RankKernel {
    profile: Profile,
    scale: f64,
    support: f64,
}

impl RankKernel {
    /// Kernel with unit integral over `[0, 1]`.
    pub fn normalized(profile: Profile) -> Result<Self> {
        profile.validate()?;
        let mass = profile.moment(0.0)?;
        if !(mass > 0.0) {
            return Err(Error::DegenerateKernel("profile has zero integral".into()));
        }
        Ok(Self { profile, scale: 1.0 / mass, support: 1.0 })
    }

    /// The base kernel `K0 = c * profile` normalized by `c_d ∫ u^(2/d) K0(u) du = 1`,
    /// with `c_d = d^(2/d-1)/2`.
    pub fn base(profile: Profile, d: usize) -> Result<Self> {
        Self::concentrated(profile, d, 1.0)
    }

    /// `K^ε(m) = ε^-(1 + 2/d) K0(m / ε)`, supported on `[0, ε]`.
    pub fn concentrated(profile: Profile, d: usize, eps: f64) -> Result<Self> {
        profile.validate()?;
        if d == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::domain(format!("concentration scale must lie in (0, 1], got {eps}")));
        }
        let two_d = 2.0 / d as f64;
        let moment = profile.moment(two_d)?;
        if !(moment > 0.0) {
            return Err(Error::DegenerateKernel("profile has zero second moment".into()));
        }
        let c = 1.0 / (expansion_constant(d) * moment);
        Ok(Self { profile, scale: c * eps.powf(-(1.0 + two_d)), support: eps })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Right end of the support, `ε` for a concentrated kernel and 1 otherwise.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// Multiplier applied to the profile.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn value(&self, m: f64) -> f64 {
        if !(0.0..=self.support).contains(&m) {
            return 0.0;
        }
        self.scale * self.profile.value(m / self.support)
    }

    /// Points in `[0, support]` between which `K` is linear.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints().into_iter().map(|u| u * self.support).collect()
    }

    /// `∫ m^p K(m) dm`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        Ok(self.scale * self.support.powf(p + 1.0) * self.profile.moment(p)?)
    }

    pub fn integral(&self) -> f64 {
        self.moment(0.0).expect("integer moments do not need refinement")
    }

    /// Weights `K(k/(N-1))` for ranks `k = 1..=N-1`, normalized to sum 1.
    pub fn discrete_rank_law(&self, n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err(Error::domain("a rank law needs N >= 2"));
        }
        let denom = (n - 1) as f64;
        let w: Vec<f64> = (1..n).map(|k| self.value(k as f64 / denom)).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateKernel(format!("kernel vanishes on every rank for N = {n}")));
        }
        Ok(w.into_iter().map(|x| x / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_kernels_integrate_to_one() {
        for p in [Profile::Constant, Profile::Tent, Profile::Tabulated(vec![0.0, 3.0, 1.0, 0.5])] {
            let k = RankKernel::normalized(p).unwrap();
            assert!((k.integral() - 1.0).abs() < 1e-12);
            let q = crate::quadrature::composite(gl16(), 0.0, 1.0, 30, |m| k.value(m));
            assert!((q - 1.0).abs() < 1e-8);
        }
        assert!(RankKernel::normalized(Profile::Tabulated(vec![0.0, 0.0])).is_err());
        assert!(RankKernel::normalized(Profile::Tabulated(vec![1.0])).is_err());
    }

    #[test]
    fn constant_base_kernel_in_one_dimension_has_height_six() {
        let k = RankKernel::base(Profile::Constant, 1).unwrap();
        assert!((k.value(0.5) - 6.0).abs() < 1e-12);
        // d=2: (1/2) ∫ u c du = 1 → c = 4
        let k2 = RankKernel::base(Profile::Constant, 2).unwrap();
        assert!((k2.value(0.5) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn concentration_preserves_the_second_moment() {
        for d in [1usize, 2, 3] {
            for p in [Profile::Constant, Profile::Tent] {
                for eps in [1.0, 0.3, 0.01] {
                    let k = RankKernel::concentrated(p.clone(), d, eps).unwrap();
                    let two_d = 2.0 / d as f64;
                    let m = k.moment(two_d).unwrap();
                    assert!((expansion_constant(d) * m - 1.0).abs() < 1e-8, "d={d} eps={eps}");
                    // independent check by substitution u = m/eps on a fine composite rule
                    let direct = crate::quadrature::composite(gl16(), 0.0, eps, 200, |x| x.powf(two_d) * k.value(x));
                    assert!((expansion_constant(d) * direct - 1.0).abs() < 1e-6);
                    let k0 = RankKernel::base(p.clone(), d).unwrap();
                    assert!((k.integral() - eps.powf(-two_d) * k0.integral()).abs() < 1e-9 * k.integral());
                }
            }
        }
    }

    #[test]
    fn discrete_law() {
        let k = RankKernel::normalized(Profile::Constant).unwrap();
        let law = k.discrete_rank_law(11).unwrap();
        assert_eq!(law.len(), 10);
        assert!(law.iter().all(|w| (w - 0.1).abs() < 1e-15));
        let narrow = RankKernel::concentrated(Profile::Constant, 1, 0.01).unwrap();
        assert!(matches!(narrow.discrete_rank_law(20), Err(Error::DegenerateKernel(_))));
    }
}
