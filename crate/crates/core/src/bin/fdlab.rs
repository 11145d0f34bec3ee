use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdlab::cli::{default_out_dir, run_command, Command, RunManifest};

#[derive(Parser)]
#[command(name = "fdlab", about = "Fast diffusion solver and inequality verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Barenblatt runs with snapshots and a convergence table.
    Solve(Common),
    /// Scaling profiles and their property report.
    Profile(Common),
    /// Level-set coverings over a λ sweep.
    Cover(Common),
    /// Selected suites as JSON lines plus a summary table.
    Verify(Common),
    /// Suites at several refinement levels and the stability table.
    Refine(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run manifest; defaults apply when omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory (default: manifest value, then FDLAB_OUT_DIR, then ./fdlab-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated suite names; an empty value selects none.
    #[arg(long, value_delimiter = ',')]
    suite: Option<Vec<String>>,
    #[arg(long)]
    levels: Option<usize>,
    /// Worker threads; results do not depend on this value.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(command: Command, c: Common) -> Result<bool, String> {
    let mut manifest = match &c.manifest {
        Some(p) => RunManifest::load(p).map_err(|e| e.to_string())?,
        None => RunManifest::default(),
    };
    manifest.command = Some(command);
    if let Some(s) = c.seed {
        manifest.seed = s;
    }
    if let Some(s) = c.suite {
        manifest.suites = s.into_iter().map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    }
    if let Some(l) = c.levels {
        manifest.levels = l;
    }
    manifest.validate().map_err(|e| e.to_string())?;
    let out = c.out.unwrap_or_else(|| default_out_dir(&manifest));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = c.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| e.to_string())?;
    let outcome = pool.install(|| run_command(command, &manifest, &out)).map_err(|e| e.to_string())?;
    for f in &outcome.failing {
        eprintln!("FAIL {f}");
    }
    println!("{} records, {} failing, output in {}", outcome.records, outcome.failing.len(), out.display());
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Solve(c) => (Command::Solve, c),
        Sub::Profile(c) => (Command::Profile, c),
        Sub::Cover(c) => (Command::Cover, c),
        Sub::Verify(c) => (Command::Verify, c),
        Sub::Refine(c) => (Command::Refine, c),
    };
    match run(command, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
