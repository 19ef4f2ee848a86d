//! Thin CLI over the library: tree generation, experiment runs, report
//! recomputation, and a determinism self-test.
//!
//! Exit codes: 0 success, 1 config/parameter validation error, 2 runtime
//! error, 3 self-test failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gwcover::config::{ExperimentConfig, ExperimentKind};
use gwcover::experiment::{determinism_check, report, run_experiment, REPORT_FILE, TREE_FILE};
use gwcover::rng::{tree_stream, trial_stream};
use gwcover::tree::sample_tree;
use gwcover::Error;

#[derive(Parser)]
#[command(name = "gwcover", version, about = "Cover-time experiments for biased walks on Galton-Watson trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the experiment's tree and store it in the output directory.
    GenTree {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured experiment and print its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the report of a completed run from its raw CSVs.
    Report {
        /// Directory holding the run's manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Determinism and stream-independence checks; exits 3 on failure.
    Selftest {
        /// Scratch directory (default: under the system temp dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Second worker count to compare against a single worker.
        #[arg(long, default_value_t = 8)]
        workers: usize,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::InvalidOffspring(_)
        | Error::InvalidParams(_)
        | Error::InvalidRegime(_)
        | Error::InvalidConfig(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn load(config: &PathBuf, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>)
    -> gwcover::Result<ExperimentConfig>
{
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn gen_tree(cfg: &ExperimentConfig) -> gwcover::Result<()> {
    let spec = cfg.validate()?;
    let tree = sample_tree(&spec, cfg.n, &mut tree_stream(cfg.master_seed))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(TREE_FILE);
    std::fs::write(&path, tree.to_text(cfg.lambda, cfg.master_seed))?;
    let st = tree.gen_stats(cfg.lambda, spec.mean());
    println!(
        "wrote {} ({} nodes): Z_n = {}, s_n = {:.6}, sigma_n_sq = {:.6}, w_hat = {:.6}",
        path.display(),
        tree.num_nodes(),
        st.z_n(),
        st.s_n,
        st.sigma_n_sq(),
        st.w_hat
    );
    Ok(())
}

/// Per-stream uniform means must hug 1/2: a cheap cross-stream
/// independence smoke test (10^3 streams × 10^3 draws).
fn stream_smoke() -> bool {
    use rand::Rng;
    for stream in 0..1000u64 {
        let mut rng = trial_stream(0xDECAF, stream);
        let mean = (0..1000).map(|_| rng.random::<f64>()).sum::<f64>() / 1000.0;
        if (mean - 0.5).abs() > 0.05 {
            return false;
        }
    }
    true
}

fn selftest(out: Option<PathBuf>, workers: usize) -> gwcover::Result<ExitCode> {
    let dir = out.unwrap_or_else(|| {
        std::env::temp_dir().join(format!("gwcover-selftest-{}", std::process::id()))
    });
    let mut ok = true;

    let mut check = |name: &str, pass: bool| {
        println!("{}: {name}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    check("per-trial streams independent (1000 x 1000 draws)", stream_smoke());

    let base = ExperimentConfig {
        experiment: ExperimentKind::Cover,
        offspring: vec![0.0, 0.0, 1.0],
        lambda: 2.0,
        n: 6,
        trials: 64,
        mu_grid: None,
        t_grid: None,
        master_seed: 0xC0FFEE,
        workers: 1,
        output_dir: dir.join("cover"),
        fresh_tree_per_trial: false,
        c_sep: 4.4,
        epsilon: 0.5,
        engine: Default::default(),
    };
    check(
        &format!("cover CSVs byte-identical across workers (1 vs {workers})"),
        determinism_check(&base, (1, workers))?,
    );

    let mut counts = base.clone();
    counts.experiment = ExperimentKind::UncoveredCount;
    counts.n = 8;
    counts.trials = 128;
    counts.mu_grid = Some(vec![0.0, 1.0]);
    counts.output_dir = dir.join("uncovered");
    check(
        &format!("uncovered-count CSVs byte-identical across workers (1 vs {workers})"),
        determinism_check(&counts, (1, workers))?,
    );

    let _ = std::fs::remove_dir_all(&dir);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn dispatch(cli: Cli) -> gwcover::Result<ExitCode> {
    match cli.command {
        Command::GenTree { config, seed, out } => {
            gen_tree(&load(&config, seed, None, out)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, seed, workers, out } => {
            let cfg = load(&config, seed, workers, out)?;
            run_experiment(&cfg)?;
            print!(
                "{}",
                std::fs::read_to_string(cfg.output_dir.join(REPORT_FILE))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { out } => {
            print!("{}", report(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { out, workers } => selftest(out, workers),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
