use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use topokin::limits::{fit_order, parse_sweep_csv, LimitReport};

fn topokin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topokin")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                found.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    found.sort();
    found
}

fn same_bytes(a: &str, b: &str) {
    let (a, b) = (Path::new(a), Path::new(b));
    assert_eq!(files(a), files(b));
    for f in files(a) {
        assert!(fs::read(a.join(&f)).unwrap() == fs::read(b.join(&f)).unwrap(), "{} differs", f.display());
    }
}

const SMALL: &str = "horizon = 0.02\nsnapshot_times = [0.01]\n[grid]\nnx = 32\nnv = 8\n[particles]\nn = 300\nreplicas = 3\n";

#[test]
fn minimal_run_writes_manifest_and_initial_snapshot_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "min.toml", "horizon = 0.0\n[particles]\nn = 2\n");
    let o = topokin(&["simulate", "--config", &cfg, "--out", &out(&dir, "run")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got: Vec<String> = files(&dir.path().join("run")).iter().map(|p| p.display().to_string()).collect();
    assert_eq!(got, ["events.csv", "manifest.toml", "reports/event_counts.csv", "snapshots/t0000.csv"]);
    let snap = fs::read_to_string(dir.path().join("run/snapshots/t0000.csv")).unwrap();
    assert_eq!(snap.lines().count(), 3);
    assert_eq!(fs::read_to_string(dir.path().join("run/events.csv")).unwrap(), "replica,time,follower,leader,rank\n");
}

#[test]
fn same_seed_gives_identical_bytes_at_any_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    for (name, threads) in [("a", "1"), ("b", "2")] {
        let o = topokin(&["--threads", threads, "simulate", "--config", &cfg, "--out", &out(&dir, name)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    same_bytes(&out(&dir, "a"), &out(&dir, "b"));
    let o = topokin(&["replay", "--manifest", &out(&dir, "a/manifest.toml"), "--out", &out(&dir, "c")]);
    assert!(o.status.success(), "{}", stderr(&o));
    same_bytes(&out(&dir, "a"), &out(&dir, "c"));
}

#[test]
fn seed_flag_overrides_the_configuration() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    assert!(topokin(&["simulate", "--config", &cfg, "--out", &out(&dir, "a")]).status.success());
    assert!(topokin(&["simulate", "--config", &cfg, "--seed", "7", "--out", &out(&dir, "b")]).status.success());
    let manifest = fs::read_to_string(dir.path().join("b/manifest.toml")).unwrap();
    assert!(manifest.contains("\nseed = 7\n"), "{manifest}");
    let snap = |run: &str| fs::read(dir.path().join(run).join("snapshots/t0000.csv")).unwrap();
    assert_ne!(snap("a"), snap("b"));
}

#[test]
fn invalid_configuration_lists_every_violation_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", "horizon = -1.0\n[domain]\nd = 4\n[grid]\nvmax = 0.0\n[particles]\nn = 1\n");
    let target = out(&dir, "run");
    let o = topokin(&["simulate", "--config", &cfg, "--out", &target]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for needle in ["horizon", "domain.d", "grid.vmax", "at least two particles"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
    assert!(!Path::new(&target).exists());
}

#[test]
fn unknown_keys_and_suites_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "typo.toml", "[grid]\nnxx = 3\n");
    assert_eq!(topokin(&["solve", "--config", &cfg, "--out", &out(&dir, "a")]).status.code(), Some(1));
    assert_eq!(topokin(&["verify", "--suite", "nope", "--out", &out(&dir, "b")]).status.code(), Some(1));
}

#[test]
fn nonempty_output_directory_is_refused() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("keep.txt"), "x").unwrap();
    let o = topokin(&["verify", "--suite", "scalings", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(dir.path().join("keep.txt")).unwrap(), "x");
}

#[test]
fn unstable_step_is_refused_with_the_required_step() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "cfl.toml", "horizon = 0.1\n[solver]\ndt = 0.05\n");
    let o = topokin(&["solve", "--config", &cfg, "--out", &out(&dir, "run")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("need dt <="), "{}", stderr(&o));
}

#[test]
fn zero_horizon_solve_echoes_the_initial_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "t0.toml", "horizon = 0.0\n[grid]\nnx = 16\nnv = 4\n");
    assert!(topokin(&["solve", "--config", &cfg, "--out", &out(&dir, "run")]).status.success());
    let snaps: Vec<PathBuf> = files(&dir.path().join("run")).into_iter().filter(|p| p.starts_with("snapshots")).collect();
    assert_eq!(snaps.len(), 1);
    // the snapshot is a valid gridded initial condition that reproduces itself
    let again = write_config(&dir, "again.toml", "horizon = 0.0\n[grid]\nnx = 16\nnv = 4\n[initial]\nfile = \"run/snapshots/t0000.csv\"\n");
    assert!(topokin(&["solve", "--config", &again, "--out", &out(&dir, "echo")]).status.success());
    let (a, b) = (final_field(&dir.path().join("run")), final_field(&dir.path().join("echo")));
    assert_eq!(a.len(), 16 * 4);
    // renormalizing the re-read values may move the last bit
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-15 * x.abs()));
}

#[test]
fn verify_passes_and_fails_with_the_right_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = topokin(&["verify", "--suite", "scalings", "--out", &out(&dir, "ok")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let beta = topokin(&["verify", "--suite", "beta", "--out", &out(&dir, "beta")]);
    assert!(beta.status.success(), "{}", stderr(&beta));

    let strict = write_config(&dir, "strict.toml", "[verify]\nrank_law_samples = 1000\n[tolerances]\nrank_law_tv = 1e-9\n");
    let o = topokin(&["verify", "--suite", "rank-law", "--config", &strict, "--out", &out(&dir, "strict")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("FAILED rank-law"), "{}", stderr(&o));
    assert!(dir.path().join("strict/reports/rank-law.toml").exists());
}

#[test]
fn manufactured_solution_config_recovers_second_order_and_its_table_refits() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mms.toml", "[verify.manufactured]\nnx = [16, 32, 64, 128]\nhorizon = 0.02\n");
    let o = topokin(&["verify", "--suite", "solver-order", "--config", &cfg, "--out", &out(&dir, "run")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = LimitReport::from_toml(&fs::read_to_string(dir.path().join("run/reports/manufactured-solution.toml")).unwrap()).unwrap();
    let fit = report.fit.clone().unwrap();
    assert!((1.7..=2.3).contains(&-fit.slope), "{fit:?}");

    assert!(topokin(&["figdata", "--run", &out(&dir, "run")]).status.success());
    // verify runs record no snapshots: header-only tables
    assert_eq!(fs::read_to_string(dir.path().join("run/figdata/density.csv")).unwrap(), "time,x1,rho\n");
    let table = fs::read_to_string(dir.path().join("run/figdata/sweep_manufactured-solution.csv")).unwrap();
    let (param, values, errors) = parse_sweep_csv(&table).unwrap();
    assert_eq!(param, "nx");
    let refit = fit_order(&values, &errors, report.asymptote).unwrap();
    for (a, b) in [(refit.slope, fit.slope), (refit.intercept, fit.intercept), (refit.ci_low, fit.ci_low), (refit.ci_high, fit.ci_high)] {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
}

fn density_mass(path: &Path, dx: f64) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut by_time: Vec<(String, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let rho: f64 = cols.last().unwrap().parse().unwrap();
        match by_time.last_mut() {
            Some((t, m)) if t == cols[0] => *m += rho * dx,
            _ => by_time.push((cols[0].to_string(), rho * dx)),
        }
    }
    by_time.into_iter().map(|(_, m)| m).collect()
}

#[test]
fn figdata_densities_integrate_to_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    assert!(topokin(&["simulate", "--config", &cfg, "--out", &out(&dir, "sim")]).status.success());
    assert!(topokin(&["solve", "--config", &cfg, "--out", &out(&dir, "pde")]).status.success());
    for run in ["sim", "pde"] {
        let o = topokin(&["figdata", "--run", &out(&dir, run)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let masses = density_mass(&dir.path().join(run).join("figdata/density.csv"), 1.0 / 32.0);
        assert_eq!(masses.len(), 3, "{run}");
        for m in masses {
            assert!((m - 1.0).abs() < 1e-12, "{run}: {m}");
        }
    }
}

#[test]
fn figdata_without_artifacts_fails() {
    let dir = TempDir::new().unwrap();
    let o = topokin(&["figdata", "--run", dir.path().to_str().unwrap(), "--out", &out(&dir, "fig")]);
    assert_ne!(o.status.code(), Some(0));
}

fn final_field(run: &Path) -> Vec<f64> {
    let mut snaps: Vec<PathBuf> = files(run).into_iter().filter(|p| p.starts_with("snapshots")).collect();
    snaps.sort();
    let text = fs::read_to_string(run.join(snaps.last().unwrap())).unwrap();
    text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
}

#[test]
fn local_and_nonlocal_solves_approach_each_other_as_the_kernel_concentrates() {
    let dir = TempDir::new().unwrap();
    let base = "horizon = 0.004\n[grid]\nnx = 128\nnv = 4\n[solver]\ndt_fraction = 0.25\n";
    let local = write_config(&dir, "local.toml", base);
    assert!(topokin(&["solve", "--config", &local, "--out", &out(&dir, "local")]).status.success());
    let reference = final_field(&dir.path().join("local"));
    let mut gaps = Vec::new();
    for eps in ["0.2", "0.1"] {
        let text = format!("{base}model = \"nonlocal\"\n[solver.kernel]\neps = {eps}\n");
        let cfg = write_config(&dir, &format!("nl{eps}.toml"), &text);
        let o = topokin(&["solve", "--config", &cfg, "--out", &out(&dir, &format!("nl{eps}"))]);
        assert!(o.status.success(), "{}", stderr(&o));
        let f = final_field(&dir.path().join(format!("nl{eps}")));
        gaps.push(f.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>());
    }
    assert!(gaps[1] < gaps[0], "{gaps:?}");
}
