use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topokin::harness::{self, ExperimentConfig, Outcome, Suite};
use topokin::{Error, Result};

/// Simulation, kinetic solver and verification suites for rank-based particle systems.
#[derive(Parser)]
#[command(name = "topokin", version)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle system over all replicas.
    Simulate(RunArgs),
    /// Evolve the kinetic equation from the configured initial field.
    Solve(RunArgs),
    /// Run a verification suite; exits 3 if any check fails.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// scalings, beta, rank-law, mass-identity, expansion, marginal-limit,
        /// singular-limit, solver-order, sim-vs-pde, event-counts or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Write plotting tables from a completed run directory.
    Figdata {
        /// Run directory holding a manifest.
        #[arg(long)]
        run: PathBuf,
        /// Output directory; defaults to `<run>/figdata`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML); defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; must be absent or empty.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        Ok(cfg)
    }
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Simulate(a) => harness::simulate(&a.config()?, &a.out),
        Command::Solve(a) => harness::solve(&a.config()?, &a.out),
        Command::Verify { run, suite } => {
            let suite: Suite = suite.parse()?;
            harness::verify(&run.config()?, suite, &run.out)
        }
        Command::Figdata { run, out } => {
            let out = out.clone().unwrap_or_else(|| run.join("figdata"));
            harness::figdata(run, &out)
        }
        Command::Replay { manifest, out } => harness::replay(manifest, out),
    }
}

fn configure_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(vec![format!("cannot start {threads} worker threads: {e}")]))
}

fn report(result: &Result<Outcome>, out: Option<&Path>) {
    match result {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            if let Some(dir) = out {
                println!("artifacts in {}", dir.display());
            }
            for f in &o.failures {
                eprintln!("FAILED {f}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|_| dispatch(&cli.command));
    let out = match &cli.command {
        Command::Simulate(a) | Command::Solve(a) | Command::Verify { run: a, .. } => Some(a.out.as_path()),
        Command::Replay { out, .. } => Some(out.as_path()),
        Command::Figdata { .. } => None,
    };
    report(&result, out);
    ExitCode::from(harness::exit_code(&result) as u8)
}
