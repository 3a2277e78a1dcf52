//! Command implementations behind the `topokin` binary: configuration, run
//! orchestration, the artifact layout and figure-data tables.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical-contract failure
//! (stability bound, vacuum), 3 verification failure.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

pub use config::ExperimentConfig;
pub use output::Manifest;

use crate::error::{Error, Result};
use crate::kernel::Profile;
use crate::kinetic::{evolve, stable_dt, PhaseField, SphereAverages};
use crate::limits::{self, LimitReport, Tolerances};
use crate::sim::{empirical_phase_density, run_replicas, sample_ensemble, spatial_histogram, Ensemble, EventLog, Snapshot};
use config::ProfileName;
use output::{event_table, field_table, num, particle_table, snapshot_name, RunDir, EVENTS, MANIFEST, REPORTS, SNAPSHOTS};

/// Result of a command that ran to completion.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    /// One line per step, for standard output.
    pub summary: Vec<String>,
    /// Failed verification checks; nonempty means exit code 3.
    pub failures: Vec<String>,
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.failures.is_empty() => 0,
        Ok(_) => 3,
        Err(e) if e.is_numerical_contract() => 2,
        Err(_) => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Scalings,
    Beta,
    RankLaw,
    MassIdentity,
    Expansion,
    MarginalLimit,
    SingularLimit,
    SolverOrder,
    SimVsPde,
    EventCounts,
    All,
}

impl Suite {
    /// Every suite in the order `all` runs them.
    pub const EACH: [Suite; 10] = [
        Suite::Scalings,
        Suite::Beta,
        Suite::RankLaw,
        Suite::MassIdentity,
        Suite::Expansion,
        Suite::MarginalLimit,
        Suite::SingularLimit,
        Suite::SolverOrder,
        Suite::SimVsPde,
        Suite::EventCounts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Scalings => "scalings",
            Suite::Beta => "beta",
            Suite::RankLaw => "rank-law",
            Suite::MassIdentity => "mass-identity",
            Suite::Expansion => "expansion",
            Suite::MarginalLimit => "marginal-limit",
            Suite::SingularLimit => "singular-limit",
            Suite::SolverOrder => "solver-order",
            Suite::SimVsPde => "sim-vs-pde",
            Suite::EventCounts => "event-counts",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        if self == Suite::All {
            Self::EACH.to_vec()
        } else {
            vec![self]
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::EACH.iter().map(|x| x.name()).chain(["all"]).collect();
                Error::Config(vec![format!("unknown suite {s:?}; expected one of {}", names.join(", "))])
            })
    }
}

/// Runs the particle system over all replicas and writes snapshots and events.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let f0 = cfg.initial_field()?;
    let params = cfg.sim_params()?;
    let dir = RunDir::create(out)?;
    dir.write(MANIFEST, &Manifest::new("simulate", None, cfg)?.to_toml()?)?;

    let n = cfg.particles.n;
    let runs = run_replicas(&params, cfg.seed, cfg.particles.replicas, |rng| sample_ensemble(&f0, n, rng))?;
    for k in 0..params.snapshot_times.len() {
        let snaps: Vec<&Snapshot> = runs.iter().map(|(_, o)| &o.snapshots[k]).collect();
        dir.write(&snapshot_name(k), &particle_table(&snaps, cfg.domain.d))?;
    }
    let logs: Vec<&EventLog> = runs.iter().map(|(_, o)| &o.log).collect();
    dir.write(EVENTS, &event_table(&logs))?;
    let mut counts = String::from("replica,events\n");
    for (r, (_, o)) in runs.iter().enumerate() {
        let _ = writeln!(counts, "{r},{}", o.event_count);
    }
    dir.write(&format!("{REPORTS}/event_counts.csv"), &counts)?;

    let total: u64 = runs.iter().map(|(_, o)| o.event_count).sum();
    Ok(Outcome {
        summary: vec![format!(
            "simulate: {} replica(s) of {n} particles to t = {}, {} snapshot(s), {total} collisions",
            cfg.particles.replicas,
            cfg.horizon,
            params.snapshot_times.len()
        )],
        failures: Vec::new(),
    })
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    model: &'a str,
    steps: usize,
    dt: f64,
    max_mass_drift: f64,
    min_f: f64,
}

/// Step for a run without a fixed `dt`: a fraction of the stability bound, shrunk to divide the horizon.
fn solver_step(cfg: &ExperimentConfig, f0: &PhaseField, model: &crate::kinetic::Model) -> Result<f64> {
    if let Some(dt) = cfg.solver.dt {
        return Ok(dt);
    }
    if cfg.horizon == 0.0 {
        return Ok(1.0);
    }
    let limit = cfg.solver.dt_fraction * stable_dt(f0, model)?;
    let steps = (cfg.horizon / limit).ceil().max(1.0);
    Ok(cfg.horizon / steps)
}

/// Evolves the kinetic equation and writes field snapshots plus mass and minimum-density logs.
pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let f0 = cfg.initial_field()?;
    let model = cfg.model()?;
    let dt = solver_step(cfg, &f0, &model)?;
    let dir = RunDir::create(out)?;
    dir.write(MANIFEST, &Manifest::new("solve", None, cfg)?.to_toml()?)?;

    let traj = evolve(&f0, &model, cfg.horizon, dt, &cfg.recording_times(), None)?;
    for (k, (t, f)) in traj.snapshots.iter().enumerate() {
        dir.write(&snapshot_name(k), &field_table(*t, f))?;
    }
    let m0 = traj.mass[0].1;
    let mut mass = String::from("time,mass,drift\n");
    for (t, m) in &traj.mass {
        let _ = writeln!(mass, "{},{},{}", num(*t), num(*m), num(m - m0));
    }
    dir.write(&format!("{REPORTS}/mass.csv"), &mass)?;
    let mut rho = String::from("time,min_rho\n");
    for (t, r) in &traj.min_rho {
        let _ = writeln!(rho, "{},{}", num(*t), num(*r));
    }
    dir.write(&format!("{REPORTS}/min_rho.csv"), &rho)?;
    let summary = SolveSummary { model: model.name(), steps: traj.steps, dt: traj.dt, max_mass_drift: traj.max_mass_drift(), min_f: traj.min_f };
    dir.write(&format!("{REPORTS}/solve.toml"), &toml::to_string(&summary).map_err(|e| Error::Parse(e.to_string()))?)?;

    Ok(Outcome {
        summary: vec![format!(
            "solve: {} model, {} steps of {:.6e}, {} snapshot(s), max mass drift {:.3e}",
            model.name(),
            traj.steps,
            traj.dt,
            traj.snapshots.len(),
            traj.max_mass_drift()
        )],
        failures: Vec::new(),
    })
}

fn suite_reports(cfg: &ExperimentConfig, suite: Suite, tol: &Tolerances) -> Result<Vec<LimitReport>> {
    let v = &cfg.verify;
    let seed = cfg.seed;
    Ok(match suite {
        Suite::Scalings => vec![limits::check_scalings(&v.scalings_n, tol)?],
        Suite::Beta => {
            // bounded, vanishing at 0, with a kink
            let h = |u: f64| (u / 0.1).min(1.0);
            vec![limits::check_beta_identities(tol)?, limits::check_beta_concentration(h, &[0.1], 2.0, &[1e2, 1e3, 1e4, 1e5], tol)?]
        }
        Suite::RankLaw => vec![limits::check_rank_law(&v.rank_law_cases, v.rank_law_samples, seed, tol)?],
        Suite::MassIdentity => vec![limits::check_mass_identity(v.mass_fields, v.mass_nx, v.mass_nv, seed, tol)?],
        Suite::Expansion => {
            let avg = SphereAverages::new(&limits::sine_test_field(v.field_nx, v.field_nv)?)?;
            vec![limits::check_expansion(&avg, &[v.probe_x], v.probe_v, &v.expansion_m, tol)?]
        }
        Suite::MarginalLimit => {
            let avg = SphereAverages::new(&limits::sine_test_field(v.field_nx, v.field_nv)?)?;
            vec![
                limits::check_marginal_limit_nearest(&avg, &[v.probe_x], v.probe_v, &v.marginal_n, tol)?,
                limits::check_marginal_limit_knearest(&avg, &[v.probe_x], v.probe_v, &v.knearest_alpha, &v.marginal_n, tol)?,
            ]
        }
        Suite::SingularLimit => {
            let profile = match v.singular_kernel {
                ProfileName::Tent => Profile::Tent,
                _ => Profile::Constant,
            };
            let f = limits::sine_test_field(v.singular_nx, v.field_nv)?;
            vec![limits::check_singular_limit(&f, &profile, &v.singular_eps, tol)?]
        }
        Suite::SolverOrder => vec![limits::check_manufactured_solution(&v.manufactured, tol)?],
        Suite::SimVsPde => {
            let setup = limits::SimPdeSetup { seed, ..v.sim_vs_pde.clone() };
            vec![limits::check_sampling_noise(&setup, tol)?, limits::compare_sim_to_pde(&setup, tol)?]
        }
        Suite::EventCounts => vec![limits::check_event_counts(v.event_n, v.event_d, v.event_horizon, v.event_replicas, seed, tol)?],
        Suite::All => unreachable!("expanded by the caller"),
    })
}

/// Runs the checks of `suite` and writes one TOML summary and one sweep CSV per report.
pub fn verify(cfg: &ExperimentConfig, suite: Suite, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let dir = RunDir::create(out)?;
    dir.write(MANIFEST, &Manifest::new("verify", Some(suite.name()), cfg)?.to_toml()?)?;
    let mut outcome = Outcome::default();
    for s in suite.expand() {
        for r in suite_reports(cfg, s, &cfg.tolerances)? {
            dir.write_report(&r)?;
            let status = if r.passed() { "PASS" } else { "FAIL" };
            outcome.summary.push(format!("{} / {}: {status}", s.name(), r.name));
            if r.checks.is_empty() {
                outcome.failures.push(format!("{} / {}: no checks ran", s.name(), r.name));
            }
            for c in r.failures() {
                outcome.failures.push(format!("{} / {}: {}: {}", s.name(), r.name, c.name, c.detail));
            }
        }
    }
    Ok(outcome)
}

/// Reruns the command recorded in a manifest into `out`.
pub fn replay(manifest: &Path, out: &Path) -> Result<Outcome> {
    let m = Manifest::read(manifest)?;
    let mut outcome = match m.command.as_str() {
        "simulate" => simulate(&m.config, out)?,
        "solve" => solve(&m.config, out)?,
        "verify" => {
            let suite = m.suite.as_deref().ok_or_else(|| Error::Parse("verify manifest without a suite".into()))?;
            verify(&m.config, suite.parse()?, out)?
        }
        other => return Err(Error::Parse(format!("manifest records unknown command {other:?}"))),
    };
    if m.version != env!("CARGO_PKG_VERSION") {
        outcome.summary.push(format!("note: manifest written by version {}, replayed with {}", m.version, env!("CARGO_PKG_VERSION")));
    }
    Ok(outcome)
}

/// Snapshot tables of a run directory in time order.
fn snapshot_files(run: &Path) -> Result<Vec<String>> {
    let dir = run.join(SNAPSHOTS);
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut names: Vec<String> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names.into_iter().map(|n| fs::read_to_string(dir.join(n)).map_err(Error::from)).collect()
}

fn parse_row(line: &str, row: usize) -> Result<Vec<f64>> {
    line.split(',').map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad snapshot row {row}: {line:?}")))).collect()
}

/// `(time, one ensemble per replica)` from a particle snapshot table.
fn read_particles(text: &str, cfg: &ExperimentConfig) -> Result<(f64, Vec<Ensemble>)> {
    let d = cfg.domain.d;
    let domain = cfg.domain()?;
    let mut by_replica: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut time = 0.0;
    for (k, line) in text.lines().enumerate().skip(1) {
        let row = parse_row(line, k + 1)?;
        if row.len() != 3 + 2 * d {
            return Err(Error::Parse(format!("snapshot row {} has {} columns, expected {}", k + 1, row.len(), 3 + 2 * d)));
        }
        time = row[2];
        let entry = by_replica.entry(row[0] as usize).or_default();
        entry.0.extend_from_slice(&row[3..3 + d]);
        entry.1.extend_from_slice(&row[3 + d..]);
    }
    let ensembles = by_replica.into_values().map(|(x, v)| Ensemble::new(domain, x, v)).collect::<Result<_>>()?;
    Ok((time, ensembles))
}

fn read_field(text: &str, cfg: &ExperimentConfig) -> Result<(f64, PhaseField)> {
    let grid = cfg.phase_grid()?;
    let mut time = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for (k, line) in text.lines().enumerate().skip(1) {
        let row = parse_row(line, k + 1)?;
        time = row[0];
        values.push(*row.last().expect("split yields at least one field"));
    }
    Ok((time, PhaseField::new(grid, values)?))
}

/// Tidy tables for external plotting from a completed run directory:
/// `density.csv` (ρ per time and cell), `phase.csv` (f per time and phase cell)
/// and `sweep_<report>.csv` per verification report.
pub fn figdata(run: &Path, out: &Path) -> Result<Outcome> {
    let manifest = Manifest::read(&run.join(MANIFEST))?;
    let cfg = &manifest.config;
    let grid = cfg.phase_grid()?;
    let d = grid.d();
    let axes = |p: &str| (1..=d).map(|a| format!("{p}{a}")).collect::<Vec<_>>().join(",");
    let mut density = format!("time,{},rho\n", axes("x"));
    let mut phase = format!("time,{},{},f\n", axes("x"), axes("v"));

    let tables = snapshot_files(run)?;
    for text in &tables {
        let (t, rho, f) = match manifest.command.as_str() {
            "simulate" => {
                let (t, ens) = read_particles(text, cfg)?;
                let refs: Vec<&Ensemble> = ens.iter().collect();
                (t, spatial_histogram(&refs, grid.nx())?, empirical_phase_density(&refs, &grid)?.field)
            }
            _ => {
                let (t, f) = read_field(text, cfg)?;
                (t, f.rho(), f)
            }
        };
        for (c, r) in rho.iter().enumerate() {
            let x: Vec<String> = grid.x_point(c).into_iter().map(num).collect();
            let _ = writeln!(density, "{},{},{}", num(t), x.join(","), num(*r));
        }
        phase.push_str(field_table(t, &f).split_once('\n').map(|(_, rows)| rows).unwrap_or(""));
    }

    let dir = RunDir::create(out)?;
    dir.write("density.csv", &density)?;
    dir.write("phase.csv", &phase)?;
    let mut sweeps = 0;
    let reports = run.join(REPORTS);
    if reports.exists() {
        let mut names: Vec<_> = fs::read_dir(&reports)?.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.extension().is_some_and(|x| x == "toml")).collect();
        names.sort();
        for path in names {
            if let Ok(r) = LimitReport::from_toml(&fs::read_to_string(&path)?) {
                dir.write(&format!("sweep_{}.csv", r.name), &r.to_csv())?;
                sweeps += 1;
            }
        }
    }
    Ok(Outcome { summary: vec![format!("figdata: {} snapshot(s), {sweeps} sweep table(s)", tables.len())], failures: Vec::new() })
}
