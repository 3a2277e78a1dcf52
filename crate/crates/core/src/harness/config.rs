//! Experiment configuration: one TOML file per experiment, validated as a whole.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernel::{Profile, RankKernel};
use crate::kinetic::{Model, PhaseField, PhaseGrid};
use crate::limits::{MmsSetup, SimPdeSetup, Tolerances};
use crate::sim::{EngineKind, InteractionRule, LambdaMode, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Drives every random stream, including the stochastic verification suites.
    pub seed: u64,
    pub horizon: f64,
    /// Extra recording times; `0` and the horizon are always recorded.
    pub snapshot_times: Vec<f64>,
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub particles: ParticleSpec,
    pub solver: SolverSpec,
    pub verify: VerifySpec,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            horizon: 0.25,
            snapshot_times: Vec::new(),
            domain: DomainSpec::default(),
            grid: GridSpec::default(),
            initial: InitialSpec::default(),
            particles: ParticleSpec::default(),
            solver: SolverSpec::default(),
            verify: VerifySpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSpec {
    pub d: usize,
    pub side: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self { d: 1, side: 1.0 }
    }
}

/// Phase grid shared by the solver and by particle sampling and histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 128, nv: 16, vmax: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityProfile {
    /// `Π_a (1 - (v_a/V)²)`.
    Bump,
    /// `exp(-|v|² / (2 width²))`.
    Gaussian,
    Uniform,
}

/// One term `amplitude * sin(2π k x_axis / side + phase)` of the initial density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amplitude: f64,
    pub wavenumber: u32,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub axis: usize,
}

/// `f0 = ρ0(x) g0(v)` with `ρ0 = 1 + Σ modes`, or gridded values.
///
/// A gridded `file` holds one row per phase cell in grid order after a header;
/// the last column is the value, so a `solve` snapshot can be fed back in.
/// Loading replaces `file` by the inline `values`, which keeps manifests self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub modes: Vec<Mode>,
    pub velocity: VelocityProfile,
    pub width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            modes: vec![Mode { amplitude: 0.5, wavenumber: 1, phase: 0.0, axis: 0 }],
            velocity: VelocityProfile::Bump,
            width: 0.25,
            file: None,
            values: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Constant,
    Tent,
    Tabulated,
}

/// `K^ε` built from a profile; `table` holds the values of a tabulated profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub profile: ProfileName,
    pub table: Vec<f64>,
    pub eps: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { profile: ProfileName::Constant, table: Vec::new(), eps: 1.0 }
    }
}

impl KernelSpec {
    pub fn profile(&self) -> Profile {
        match self.profile {
            ProfileName::Constant => Profile::Constant,
            ProfileName::Tent => Profile::Tent,
            ProfileName::Tabulated => Profile::Tabulated(self.table.clone()),
        }
    }

    pub fn build(&self, d: usize) -> Result<RankKernel> {
        RankKernel::concentrated(self.profile(), d, self.eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Nearest,
    Knearest,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateName {
    Scaled,
    One,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineName {
    Auto,
    Direct,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleSpec {
    pub n: usize,
    pub replicas: u64,
    pub rule: RuleName,
    /// Rank weights of the K-nearest rule.
    pub alpha: Vec<f64>,
    /// Kernel of the smooth rank rule.
    pub kernel: KernelSpec,
    pub rate: RateName,
    /// Per-particle rate when `rate = "fixed"`.
    pub fixed_rate: f64,
    pub engine: EngineName,
    pub record_events: bool,
}

impl Default for ParticleSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            replicas: 1,
            rule: RuleName::Nearest,
            alpha: Vec::new(),
            kernel: KernelSpec::default(),
            rate: RateName::Scaled,
            fixed_rate: 1.0,
            engine: EngineName::Auto,
            record_events: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub model: ModelName,
    /// Kernel of the nonlocal model.
    pub kernel: KernelSpec,
    /// Fixed step; refused when it exceeds the stability bound. Without it the
    /// step is `dt_fraction` of the bound, shrunk to divide the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub dt_fraction: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { model: ModelName::Local, kernel: KernelSpec { eps: 0.05, ..KernelSpec::default() }, dt: None, dt_fraction: 0.5 }
    }
}

/// Parameters of the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub scalings_n: Vec<usize>,
    pub rank_law_cases: Vec<(usize, f64)>,
    pub rank_law_samples: usize,
    /// Grid of the sine test field used by the expansion and marginal-limit suites.
    pub field_nx: usize,
    pub field_nv: usize,
    pub probe_x: f64,
    /// Velocity cell at which `H` is evaluated.
    pub probe_v: usize,
    pub expansion_m: Vec<f64>,
    pub marginal_n: Vec<usize>,
    pub knearest_alpha: Vec<f64>,
    pub singular_nx: usize,
    pub singular_eps: Vec<f64>,
    pub singular_kernel: ProfileName,
    pub mass_fields: usize,
    pub mass_nx: usize,
    pub mass_nv: usize,
    pub event_n: usize,
    pub event_d: usize,
    pub event_horizon: f64,
    pub event_replicas: u64,
    /// Its `seed` is replaced by the experiment seed.
    pub sim_vs_pde: SimPdeSetup,
    pub manufactured: MmsSetup,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            scalings_n: vec![10, 100, 1000, 10_000],
            rank_law_cases: vec![(10, 0.1), (20, 0.3), (50, 0.7)],
            rank_law_samples: 100_000,
            field_nx: 512,
            field_nv: 16,
            probe_x: 0.3,
            probe_v: 14,
            expansion_m: (0..6).map(|k| 0.004 * 2f64.powi(k)).collect(),
            marginal_n: vec![8, 16, 32, 64, 128],
            knearest_alpha: vec![0.5, 0.5],
            singular_nx: 1024,
            singular_eps: vec![0.08, 0.04, 0.02, 0.01],
            singular_kernel: ProfileName::Constant,
            mass_fields: 50,
            mass_nx: 16,
            mass_nv: 16,
            event_n: 200,
            event_d: 2,
            event_horizon: 0.1,
            event_replicas: 200,
            sim_vs_pde: SimPdeSetup::default(),
            manufactured: MmsSetup::default(),
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(format!("cannot read configuration: {e}")))?;
        cfg.verify.sim_vs_pde.seed = cfg.seed;
        Ok(cfg)
    }

    /// Reads, resolves the gridded initial condition (relative to the file) and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(file) = cfg.initial.file.take() {
            let base = path.parent().unwrap_or(Path::new("."));
            let source = base.join(&file);
            let table = std::fs::read_to_string(&source).map_err(|e| Error::Parse(format!("cannot read initial field {}: {e}", source.display())))?;
            if cfg.initial.values.is_some() {
                return Err(Error::Config(vec!["initial: give either file or values, not both".into()]));
            }
            cfg.initial.values = Some(parse_field_table(&table)?);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("cannot serialize configuration: {e}")))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.verify.sim_vs_pde.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.violations();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Every problem with the configuration, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.domain.d;
        if !(1..=2).contains(&d) {
            out.push(format!("domain.d must be 1 or 2, got {d}"));
        }
        if !positive(self.domain.side) {
            out.push(format!("domain.side must be positive, got {}", self.domain.side));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            out.push(format!("horizon must be finite and nonnegative, got {}", self.horizon));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon)) {
            out.push("snapshot_times must lie in [0, horizon]".into());
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            out.push("snapshot_times must be nondecreasing".into());
        }
        if self.grid.nx < 4 {
            out.push(format!("grid.nx must be at least 4, got {}", self.grid.nx));
        }
        if self.grid.nv < 2 {
            out.push(format!("grid.nv must be at least 2, got {}", self.grid.nv));
        }
        if !positive(self.grid.vmax) {
            out.push(format!("grid.vmax must be positive, got {}", self.grid.vmax));
        }
        self.initial_violations(&mut out);
        self.particle_violations(&mut out);
        self.solver_violations(&mut out);
        self.verify_violations(&mut out);
        out
    }

    fn initial_violations(&self, out: &mut Vec<String>) {
        let init = &self.initial;
        if let Some(values) = &init.values {
            let cells = self.grid.nx.saturating_pow(self.domain.d as u32) * self.grid.nv.saturating_pow(self.domain.d as u32);
            if values.len() != cells {
                out.push(format!("initial.values holds {} entries, the grid has {cells} cells", values.len()));
            }
            if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                out.push("initial.values must be finite and nonnegative".into());
            }
            if !(values.iter().sum::<f64>() > 0.0) {
                out.push("initial.values must have positive mass".into());
            }
            return;
        }
        let total: f64 = init.modes.iter().map(|m| m.amplitude.abs()).sum();
        if !(total < 1.0) {
            out.push(format!("initial mode amplitudes sum to {total}; need < 1 for a positive density"));
        }
        for (k, m) in init.modes.iter().enumerate() {
            if m.axis >= self.domain.d {
                out.push(format!("initial.modes[{k}].axis = {} exceeds the dimension", m.axis));
            }
            if m.wavenumber == 0 {
                out.push(format!("initial.modes[{k}].wavenumber must be at least 1"));
            }
            if !m.phase.is_finite() {
                out.push(format!("initial.modes[{k}].phase must be finite"));
            }
        }
        if init.velocity == VelocityProfile::Gaussian && !positive(init.width) {
            out.push(format!("initial.width must be positive, got {}", init.width));
        }
    }

    fn particle_violations(&self, out: &mut Vec<String>) {
        let p = &self.particles;
        if p.replicas < 1 {
            out.push("particles.replicas must be at least 1".into());
        }
        if p.rate == RateName::Fixed && !(p.fixed_rate >= 0.0 && p.fixed_rate.is_finite()) {
            out.push(format!("particles.fixed_rate must be finite and nonnegative, got {}", p.fixed_rate));
        }
        if p.engine == EngineName::Chain && !(self.domain.d == 1 && p.rule == RuleName::Nearest && p.n >= 3) {
            out.push("particles.engine = chain needs d = 1, the nearest rule and n >= 3".into());
        }
        // horizon and recording times are checked once at the top level
        if let Err(e) = self.rule().and_then(|rule| rule.validate(p.n)) {
            out.push(format!("particles: {e}"));
        }
    }

    fn solver_violations(&self, out: &mut Vec<String>) {
        let s = &self.solver;
        if let Some(dt) = s.dt {
            if !positive(dt) {
                out.push(format!("solver.dt must be positive, got {dt}"));
            } else if self.horizon > 0.0 {
                let n = (self.horizon / dt).round();
                if n < 1.0 || (n * dt - self.horizon).abs() > 1e-9 * self.horizon {
                    out.push(format!("solver.dt = {dt} does not divide the horizon {}", self.horizon));
                }
            }
        }
        if !(s.dt_fraction > 0.0 && s.dt_fraction <= 1.0) {
            out.push(format!("solver.dt_fraction must lie in (0, 1], got {}", s.dt_fraction));
        }
        if s.model == ModelName::Nonlocal && (1..=2).contains(&self.domain.d) {
            if let Err(e) = s.kernel.build(self.domain.d) {
                out.push(format!("solver.kernel: {e}"));
            }
        }
    }

    fn verify_violations(&self, out: &mut Vec<String>) {
        let v = &self.verify;
        if v.scalings_n.iter().any(|n| *n < 2) {
            out.push("verify.scalings_n entries must be at least 2".into());
        }
        if v.rank_law_cases.iter().any(|(n, p)| *n < 2 || !(0.0..=1.0).contains(p)) {
            out.push("verify.rank_law_cases need N >= 2 and p in [0, 1]".into());
        }
        if v.rank_law_samples == 0 {
            out.push("verify.rank_law_samples must be positive".into());
        }
        if v.field_nx < 8 || v.field_nv < 2 {
            out.push("verify.field_nx must be at least 8 and verify.field_nv at least 2".into());
        }
        if v.probe_v >= v.field_nv {
            out.push(format!("verify.probe_v = {} is outside the {} velocity cells", v.probe_v, v.field_nv));
        }
        if !(0.0..1.0).contains(&v.probe_x) {
            out.push(format!("verify.probe_x must lie in [0, 1), got {}", v.probe_x));
        }
        if v.expansion_m.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            out.push("verify.expansion_m entries must lie in (0, 1)".into());
        }
        if v.marginal_n.is_empty() || v.marginal_n.iter().any(|n| *n < 3) {
            out.push("verify.marginal_n must be nonempty with entries at least 3".into());
        }
        if v.knearest_alpha.is_empty() || (v.knearest_alpha.iter().sum::<f64>() - 1.0).abs() > 1e-12 || v.knearest_alpha.iter().any(|a| *a < 0.0) {
            out.push("verify.knearest_alpha must be nonnegative weights summing to 1".into());
        }
        if v.singular_nx < 8 {
            out.push("verify.singular_nx must be at least 8".into());
        }
        if v.singular_eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            out.push("verify.singular_eps entries must lie in (0, 1]".into());
        }
        if v.singular_kernel == ProfileName::Tabulated {
            out.push("verify.singular_kernel must be constant or tent".into());
        }
        if v.mass_fields == 0 || v.mass_nx < 4 || v.mass_nv < 2 {
            out.push("verify.mass_fields must be positive, verify.mass_nx at least 4 and verify.mass_nv at least 2".into());
        }
        if v.event_n < 2 || !(1..=2).contains(&v.event_d) || !positive(v.event_horizon) || v.event_replicas < 2 {
            out.push("verify.event_* needs n >= 2, d in {1, 2}, a positive horizon and at least 2 replicas".into());
        }
        out.extend(v.sim_vs_pde.violations().into_iter().map(|e| format!("verify.sim_vs_pde: {e}")));
        let m = &v.manufactured;
        if m.nx.len() < 4 || m.nx.iter().any(|n| *n < 4) {
            out.push("verify.manufactured.nx needs at least 4 grids of at least 4 cells".into());
        }
        if m.nv < 2 || !positive(m.vmax) || !positive(m.horizon) || !(m.dt_fraction > 0.0 && m.dt_fraction <= 1.0) {
            out.push("verify.manufactured needs nv >= 2, positive vmax and horizon, dt_fraction in (0, 1]".into());
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.domain.d, self.domain.side)
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.domain()?, self.grid.nx, self.grid.nv, self.grid.vmax)
    }

    /// The normalized initial phase density on the configured grid.
    pub fn initial_field(&self) -> Result<PhaseField> {
        let grid = self.phase_grid()?;
        let init = &self.initial;
        let mut f = match &init.values {
            Some(values) => PhaseField::new(grid, values.clone())?,
            None => {
                let side = self.domain.side;
                let vmax = self.grid.vmax;
                let rho = |x: &[f64]| 1.0 + init.modes.iter().map(|m| m.amplitude * (TAU * m.wavenumber as f64 * x[m.axis] / side + m.phase).sin()).sum::<f64>();
                let g = |v: &[f64]| match init.velocity {
                    VelocityProfile::Bump => v.iter().map(|a| 1.0 - (a / vmax).powi(2)).product(),
                    VelocityProfile::Gaussian => (-v.iter().map(|a| a * a).sum::<f64>() / (2.0 * init.width * init.width)).exp(),
                    VelocityProfile::Uniform => 1.0,
                };
                PhaseField::product(grid, rho, g)?
            }
        };
        f.normalize()?;
        Ok(f)
    }

    pub fn rule(&self) -> Result<InteractionRule> {
        Ok(match self.particles.rule {
            RuleName::Nearest => InteractionRule::NearestNeighbor,
            RuleName::Knearest => InteractionRule::KNearest(self.particles.alpha.clone()),
            RuleName::Smooth => InteractionRule::SmoothRank(self.particles.kernel.build(self.domain.d.max(1))?),
        })
    }

    /// Recording times: `0`, the configured times and the horizon, sorted without repeats.
    pub fn recording_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        times.extend(self.snapshot_times.iter().copied());
        times.push(self.horizon);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn sim_params(&self) -> Result<SimParams> {
        let p = &self.particles;
        let mut params = SimParams::new(self.rule()?, self.horizon);
        params.mode = match p.rate {
            RateName::Scaled => LambdaMode::Scaled,
            RateName::One => LambdaMode::One,
            RateName::Fixed => LambdaMode::Fixed(p.fixed_rate),
        };
        params.engine = match p.engine {
            EngineName::Auto => EngineKind::Auto,
            EngineName::Direct => EngineKind::Direct,
            EngineName::Chain => EngineKind::Chain,
        };
        params.snapshot_times = self.recording_times();
        params.record_events = p.record_events;
        Ok(params)
    }

    pub fn model(&self) -> Result<Model> {
        Ok(match self.solver.model {
            ModelName::Local => Model::Local,
            ModelName::Nonlocal => Model::Nonlocal(self.solver.kernel.build(self.domain.d)?),
        })
    }
}

/// Values from a table with a header row; the last column of each row.
fn parse_field_table(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, line)| {
            line.rsplit(',')
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad initial-field row {}: {line:?}", k + 2)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_a_valid_default() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert!(cfg.violations().is_empty(), "{:?}", cfg.violations());
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = ExperimentConfig { snapshot_times: vec![0.1, 0.2], ..Default::default() };
        cfg.solver.dt = Some(0.01);
        cfg.particles.rule = RuleName::Knearest;
        cfg.particles.alpha = vec![0.25, 0.75];
        let back = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn every_violation_is_reported() {
        let text = "horizon = -1.0\n[domain]\nd = 3\n[grid]\nnv = 1\n[particles]\nn = 1\n";
        let problems = ExperimentConfig::parse(text).unwrap().violations();
        for needle in ["domain.d", "horizon", "grid.nv", "at least two particles"] {
            assert!(problems.iter().any(|p| p.contains(needle)), "{needle} missing from {problems:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::parse("[grid]\nnz = 3\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn recording_times_include_both_ends() {
        let cfg = ExperimentConfig { horizon: 0.0, ..ExperimentConfig::default() };
        assert_eq!(cfg.recording_times(), vec![0.0]);
        let cfg = ExperimentConfig { horizon: 1.0, snapshot_times: vec![0.5, 1.0], ..ExperimentConfig::default() };
        assert_eq!(cfg.recording_times(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn initial_field_is_normalized_and_positive() {
        let f = ExperimentConfig::default().initial_field().unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        assert!(f.min() >= 0.0);
    }
}
