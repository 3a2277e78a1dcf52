//! Artifact layout: `manifest.toml`, `snapshots/`, `events.csv`, `reports/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::kinetic::PhaseField;
use crate::limits::LimitReport;
use crate::sim::{EventLog, Snapshot};

pub const MANIFEST: &str = "manifest.toml";
pub const SNAPSHOTS: &str = "snapshots";
pub const REPORTS: &str = "reports";
pub const EVENTS: &str = "events.csv";

/// Everything needed to reproduce a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the serialized `config` table.
    pub config_sha256: String,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(command: &str, suite: Option<&str>, config: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            suite: suite.map(str::to_string),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config_sha256: config_hash(config)?,
            config: config.clone(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read manifest {}: {e}", path.display())))?;
        let mut m: Self = toml::from_str(&text).map_err(|e| Error::Parse(format!("cannot read manifest {}: {e}", path.display())))?;
        m.config.verify.sim_vs_pde.seed = m.config.seed;
        let hash = config_hash(&m.config)?;
        if hash != m.config_sha256 {
            return Err(Error::Parse(format!("manifest {} does not match its config hash", path.display())));
        }
        if m.seed != m.config.seed {
            return Err(Error::Parse(format!("manifest {} records seed {} but its config uses {}", path.display(), m.seed, m.config.seed)));
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("cannot serialize manifest: {e}")))
    }
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let digest = Sha256::digest(config.to_toml()?.as_bytes());
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// A fresh run directory; an existing nonempty directory is refused rather than mixed into.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        if root.exists() && fs::read_dir(root)?.next().is_some() {
            return Err(Error::Config(vec![format!("output directory {} is not empty", root.display())]));
        }
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
        Ok(())
    }

    pub fn write_report(&self, r: &LimitReport) -> Result<()> {
        self.write(&format!("{REPORTS}/{}.toml", r.name), &r.to_toml()?)?;
        self.write(&format!("{REPORTS}/{}.csv", r.name), &r.to_csv())
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn axis_header(prefix: &str, d: usize) -> String {
    (1..=d).map(|a| format!("{prefix}{a}")).collect::<Vec<_>>().join(",")
}

/// `replica,particle,time,x1..,v1..` rows; `snapshots` holds one state per replica at a common time.
pub fn particle_table(snapshots: &[&Snapshot], d: usize) -> String {
    let mut s = format!("replica,particle,time,{},{}\n", axis_header("x", d), axis_header("v", d));
    for (r, snap) in snapshots.iter().enumerate() {
        let e = &snap.ensemble;
        for i in 0..e.len() {
            let _ = write!(s, "{r},{i},{}", num(snap.time));
            for x in &e.positions()[i * d..(i + 1) * d] {
                let _ = write!(s, ",{}", num(*x));
            }
            for v in &e.velocities()[i * d..(i + 1) * d] {
                let _ = write!(s, ",{}", num(*v));
            }
            s.push('\n');
        }
    }
    s
}

/// `time,x1..,v1..,f` rows in phase-cell order.
pub fn field_table(t: f64, f: &PhaseField) -> String {
    let g = f.grid();
    let d = g.d();
    let mut s = format!("time,{},{},f\n", axis_header("x", d), axis_header("v", d));
    for xc in 0..g.x_cells() {
        let x = g.x_point(xc);
        for vc in 0..g.v_cells() {
            let _ = write!(s, "{}", num(t));
            for c in x.iter().chain(&g.v_point(vc)) {
                let _ = write!(s, ",{}", num(*c));
            }
            let _ = writeln!(s, ",{}", num(f.at(xc, vc)));
        }
    }
    s
}

pub fn event_table(logs: &[&EventLog]) -> String {
    let mut s = String::from("replica,time,follower,leader,rank\n");
    for (r, log) in logs.iter().enumerate() {
        for e in &log.events {
            let _ = writeln!(s, "{r},{},{},{},{}", num(e.time), e.follower, e.leader, e.rank);
        }
    }
    s
}

pub fn snapshot_name(index: usize) -> String {
    format!("{SNAPSHOTS}/t{index:04}.csv")
}
