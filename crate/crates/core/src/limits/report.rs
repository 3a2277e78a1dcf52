//! Sweep reports with weighted log-log order fits, serialized as TOML summaries plus CSV tables.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Which end of a sweep is closest to the limit being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Asymptote {
    /// The limit is approached as the parameter shrinks (ε, m, Δx).
    Small,
    /// The limit is approached as the parameter grows (N, n_x).
    Large,
}

/// Least-squares slope of `ln error` against `ln parameter` with a 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Weighted log-log fit in which the two points nearest the asymptote count double.
///
/// Needs at least four points with positive parameter and error.
pub fn fit_order(params: &[f64], errors: &[f64], asymptote: Asymptote) -> Result<OrderFit> {
    if params.len() != errors.len() {
        return Err(Error::domain("parameters and errors differ in length"));
    }
    let mut pts: Vec<(f64, f64)> = params.iter().zip(errors).filter(|(p, e)| **p > 0.0 && **e > 0.0).map(|(p, e)| (p.ln(), e.ln())).collect();
    let n = pts.len();
    if n < 4 {
        return Err(Error::domain(format!("an order fit needs at least 4 positive points, got {n}")));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let near = match asymptote {
                Asymptote::Small => i < 2,
                Asymptote::Large => i >= n - 2,
            };
            if near { 2.0 } else { 1.0 }
        })
        .collect();
    let sw: f64 = w.iter().sum();
    let xm = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let ym = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - xm) * (p.1 - ym)).sum();
    if !(sxx > 0.0) {
        return Err(Error::domain("an order fit needs distinct parameter values"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = (n - 2) as f64;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::domain(format!("t distribution: {e}")))?.inverse_cdf(0.975);
    Ok(OrderFit { slope, intercept, ci_low: slope - t * se, ci_high: slope + t * se, points: n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of one verification: a parameter sweep, its errors, an optional order
/// fit and named pass/fail checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub name: String,
    pub parameter: String,
    pub asymptote: Asymptote,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// The measured quantity per sweep point, when it differs from the error.
    #[serde(default)]
    pub estimates: Vec<f64>,
    /// The limit the estimates should approach.
    pub target: Option<f64>,
    /// Sweep points left out of the fit, with the reason.
    pub excluded: Vec<Excluded>,
    pub fit: Option<OrderFit>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub value: f64,
    pub reason: String,
}

impl LimitReport {
    pub fn new(name: &str, parameter: &str, asymptote: Asymptote) -> Self {
        Self {
            name: name.into(),
            parameter: parameter.into(),
            asymptote,
            values: Vec::new(),
            errors: Vec::new(),
            estimates: Vec::new(),
            target: None,
            excluded: Vec::new(),
            fit: None,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, value: f64, error: f64) {
        self.values.push(value);
        self.errors.push(error);
    }

    pub fn exclude(&mut self, value: f64, reason: impl Into<String>) {
        self.excluded.push(Excluded { value, reason: reason.into() });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Fits the order on the recorded sweep; a failed fit becomes a failed check.
    pub fn fit(&mut self) -> Option<OrderFit> {
        match fit_order(&self.values, &self.errors, self.asymptote) {
            Ok(f) => self.fit = Some(f),
            Err(e) => {
                self.fit = None;
                self.check("order fit", false, e.to_string());
            }
        }
        self.fit.clone()
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// `parameter,error` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},error\n", self.parameter);
        for (v, e) in self.values.iter().zip(&self.errors) {
            s.push_str(&format!("{v:.16e},{e:.16e}\n"));
        }
        s
    }

    /// Key-value summary; the sweep itself lives in the CSV table.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("cannot serialize report: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("cannot read report: {e}")))
    }
}

/// Reads back a table written by [`LimitReport::to_csv`].
pub fn parse_sweep_csv(text: &str) -> Result<(String, Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty sweep table".into()))?;
    let parameter = header
        .strip_suffix(",error")
        .ok_or_else(|| Error::Parse(format!("unexpected sweep header {header:?}")))?
        .to_string();
    let (mut values, mut errors) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let mut next = || -> Result<f64> {
            parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad sweep row {}: {line:?}", k + 2)))
        };
        values.push(next()?);
        errors.push(next()?);
    }
    Ok((parameter, values, errors))
}
