//! Experiment orchestration: a validated config in, a directory of raw
//! CSVs plus a manifest and a recomputable report out.
//!
//! Every trial runs on its own counter-derived stream, so the raw CSVs are
//! a pure function of (config, code version) no matter how many workers
//! execute them. Files are written to a staging name and renamed, and the
//! manifest — which echoes the config verbatim — is written last, so a
//! directory containing a manifest is always a complete run. Reports only
//! ever read.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EngineChoice, ExperimentConfig, ExperimentKind};
use crate::dgff::{
    gaussian_max_bound, max_eta_at_generation, max_limit_value, max_threshold,
    ray_knight_pair_samples,
};
use crate::pglocal::{
    count_uncovered_leaves, landscape_diagnostics, sample_field_exact_coupled, t_mu,
};
use crate::rng::{tree_stream, trial_stream};
use crate::stats::{
    gumbel_cdf, ks_statistic, ks_two_sample, mean_se, normalize_cover_time, tv_distance, Regime,
};
use crate::tree::{sample_tree, sigma_sq, OffspringSpec, TreeArena};
use crate::walk::{run_excursion_budget, run_to_cover};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TREE_FILE: &str = "tree.txt";
pub const REPORT_FILE: &str = "report.txt";

/// 17 significant decimal digits — enough to round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidConfig(format!("bad output path {}", path.display())))?;
    let staging = path.with_file_name(format!(".{name}.staging"));
    fs::write(&staging, contents)?;
    fs::rename(&staging, path)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tree_file: Option<String>,
    config: ExperimentConfig,
    outputs: Vec<OutputEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct OutputEntry {
    file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
}

struct FileSpec {
    name: String,
    mu: Option<f64>,
    t: Option<f64>,
    header: &'static str,
}

impl FileSpec {
    fn plain(name: &str, header: &'static str) -> Self {
        FileSpec { name: name.into(), mu: None, t: None, header }
    }

    fn with_mu(mu: f64, header: &'static str, prefix: &str) -> Self {
        FileSpec { name: format!("{prefix}_mu_{mu}.csv"), mu: Some(mu), t: None, header }
    }

    fn with_t(t: f64, header: &'static str, prefix: &str) -> Self {
        FileSpec { name: format!("{prefix}_t_{t}.csv"), mu: None, t: Some(t), header }
    }
}

/// Rows contributed by one trial, grouped by output file index.
type TrialRows = Vec<Vec<String>>;

/// Farms trials over a bounded pool; each trial derives its stream from
/// (master_seed, trial_id) and, in annealed mode, samples its own tree
/// from that stream before running, so outputs never depend on scheduling.
fn run_trials<F>(
    cfg: &ExperimentConfig,
    spec: &OffspringSpec,
    shared: Option<&TreeArena>,
    f: F,
) -> Result<Vec<TrialRows>>
where
    F: Fn(u64, &mut ChaCha8Rng, &TreeArena) -> Result<TrialRows> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_stream(cfg.master_seed, i);
                match shared {
                    Some(tree) => f(i, &mut rng, tree),
                    None => {
                        let tree = sample_tree(spec, cfg.n, &mut rng)?;
                        f(i, &mut rng, &tree)
                    }
                }
            })
            .collect()
    })
}

struct OutputFile {
    entry: OutputEntry,
    contents: String,
}

fn assemble(specs: Vec<FileSpec>, per_trial: Vec<TrialRows>) -> Vec<OutputFile> {
    specs
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let mut contents = String::from(s.header);
            contents.push('\n');
            for trial in &per_trial {
                for row in &trial[j] {
                    contents.push_str(row);
                    contents.push('\n');
                }
            }
            OutputFile {
                entry: OutputEntry { file: s.name, mu: s.mu, t: s.t },
                contents,
            }
        })
        .collect()
}

/// μ grid indices in ascending-μ order (the coupled sampler wants
/// increasing budgets; files keep the config's order).
fn ascending_order(grid: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    idx.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    idx
}

fn run_kind(
    cfg: &ExperimentConfig,
    spec: &OffspringSpec,
    shared: Option<&TreeArena>,
) -> Result<Vec<OutputFile>> {
    let lambda = cfg.lambda;
    let m = spec.mean();
    match cfg.experiment {
        ExperimentKind::Cover => {
            let specs = vec![FileSpec::plain(
                "cover.csv",
                "trial_id,tau,steps,t_excursion,x,x_regime",
            )];
            let rows = run_trials(cfg, spec, shared, |i, rng, tree| {
                let r = run_to_cover(tree, lambda, rng)?;
                let st = tree.gen_stats(lambda, m);
                let ns = normalize_cover_time(r.t_cover_real, &st, lambda, m)?;
                Ok(vec![vec![format!(
                    "{i},{},{},{},{},{}",
                    fmt_f64(r.t_cover_real),
                    r.steps,
                    fmt_f64(r.t_cover_excursion),
                    fmt_f64(ns.x),
                    fmt_f64(ns.regime_x)
                )]])
            })?;
            Ok(assemble(specs, rows))
        }
        ExperimentKind::Excursion => {
            let grid = cfg.t_grid.clone().expect("validated");
            let specs = grid
                .iter()
                .map(|&t| FileSpec::with_t(t, "trial_id,t_budget,tau", "excursion"))
                .collect();
            let rows = run_trials(cfg, spec, shared, |i, rng, tree| {
                grid.iter()
                    .map(|&t| {
                        let (_, tau) = run_excursion_budget(tree, lambda, t, rng)?;
                        Ok(vec![format!("{i},{},{}", fmt_f64(t), fmt_f64(tau))])
                    })
                    .collect()
            })?;
            Ok(assemble(specs, rows))
        }
        ExperimentKind::LocaltimeField => {
            let grid = cfg.mu_grid();
            let order = ascending_order(&grid);
            let header = "trial_id,budget,probe_mid,probe_leaf,max_ancestor_deviation,\
                          uncovered_leaves,distinct_ancestors,early_uncovered";
            let specs = grid
                .iter()
                .map(|&mu| FileSpec::with_mu(mu, header, "field"))
                .collect();
            let c_sep = cfg.c_sep;
            let engine = cfg.engine;
            let rows = run_trials(cfg, spec, shared, |i, rng, tree| {
                let st = tree.gen_stats(lambda, m);
                let budgets: Vec<f64> = order
                    .iter()
                    .map(|&j| t_mu(&st, grid[j]))
                    .collect::<Result<_>>()?;
                let fields = match engine {
                    EngineChoice::Exact => {
                        sample_field_exact_coupled(tree, lambda, &budgets, rng)?
                    }
                    EngineChoice::Walker => budgets
                        .iter()
                        .map(|&t| Ok(run_excursion_budget(tree, lambda, t, rng)?.0))
                        .collect::<Result<_>>()?,
                };
                let mid = tree.generation(tree.n().div_ceil(2)).start;
                let leaf = tree.generation(tree.n()).start;
                let mut out = vec![Vec::new(); grid.len()];
                for (k, field) in fields.iter().enumerate() {
                    let d = landscape_diagnostics(field, tree, lambda, c_sep)?;
                    let distinct = match d.distinct_ancestors {
                        None => -1i64,
                        Some(false) => 0,
                        Some(true) => 1,
                    };
                    out[order[k]] = vec![format!(
                        "{i},{},{},{},{},{},{distinct},{}",
                        fmt_f64(field.budget()),
                        fmt_f64(field.value(mid)),
                        fmt_f64(field.value(leaf)),
                        fmt_f64(d.max_ancestor_deviation),
                        d.uncovered_leaves.len(),
                        d.early_uncovered
                    )];
                }
                Ok(out)
            })?;
            Ok(assemble(specs, rows))
        }
        ExperimentKind::UncoveredCount => {
            let grid = cfg.mu_grid();
            let order = ascending_order(&grid);
            let specs = grid
                .iter()
                .map(|&mu| FileSpec::with_mu(mu, "trial_id,count", "uncovered"))
                .collect();
            let rows = run_trials(cfg, spec, shared, |i, rng, tree| {
                let st = tree.gen_stats(lambda, m);
                let budgets: Vec<f64> = order
                    .iter()
                    .map(|&j| t_mu(&st, grid[j]))
                    .collect::<Result<_>>()?;
                let fields = sample_field_exact_coupled(tree, lambda, &budgets, rng)?;
                let mut out = vec![Vec::new(); grid.len()];
                for (k, field) in fields.iter().enumerate() {
                    out[order[k]] = vec![format!("{i},{}", count_uncovered_leaves(tree, field))];
                }
                Ok(out)
            })?;
            Ok(assemble(specs, rows))
        }
        ExperimentKind::RayKnight => {
            let grid = cfg.t_grid.clone().expect("validated");
            let specs = grid
                .iter()
                .map(|&t| FileSpec::with_t(t, "trial_id,probe_depth,side_a,side_b", "rayknight"))
                .collect();
            let engine = cfg.engine;
            let rows = run_trials(cfg, spec, shared, |i, rng, tree| {
                let mut depths = vec![0usize, tree.n().div_ceil(2), tree.n()];
                depths.dedup();
                let probes: Vec<usize> =
                    depths.iter().map(|&d| tree.generation(d).start).collect();
                grid.iter()
                    .map(|&t| {
                        let s = ray_knight_pair_samples(
                            tree,
                            lambda,
                            t,
                            &probes,
                            1,
                            engine.into(),
                            rng,
                        )?;
                        Ok(depths
                            .iter()
                            .enumerate()
                            .map(|(p, &d)| {
                                format!(
                                    "{i},{d},{},{}",
                                    fmt_f64(s.side_a[p][0]),
                                    fmt_f64(s.side_b[p][0])
                                )
                            })
                            .collect())
                    })
                    .collect()
            })?;
            Ok(assemble(specs, rows))
        }
        ExperimentKind::DgffMax => {
            let specs = vec![FileSpec::plain("dgffmax.csv", "trial_id,max_eta")];
            let rows = run_trials(cfg, spec, shared, |i, rng, tree| {
                let max = max_eta_at_generation(tree, lambda, rng);
                Ok(vec![vec![format!("{i},{}", fmt_f64(max))]])
            })?;
            Ok(assemble(specs, rows))
        }
        ExperimentKind::Regularity => {
            let header = "trial_id,z_n,s_n,w_hat,mass_ratio,martingale_margin,\
                          subtree_sq_ratio,mass_ok,martingale_ok,subtree_ok";
            let specs = vec![FileSpec::plain("regularity.csv", header)];
            let (c_sep, eps) = (cfg.c_sep, cfg.epsilon);
            // Tree statistics only: always one fresh tree per trial.
            let rows = run_trials(cfg, spec, None, |i, rng, _| {
                let tree = sample_tree(spec, cfg.n, rng)?;
                let st = tree.gen_stats(lambda, m);
                let r = tree.regularity_report(m, c_sep, eps)?;
                Ok(vec![vec![format!(
                    "{i},{},{},{},{},{},{},{},{},{}",
                    st.z_n(),
                    fmt_f64(st.s_n),
                    fmt_f64(st.w_hat),
                    fmt_f64(r.mass_ratio),
                    fmt_f64(r.martingale_margin),
                    fmt_f64(r.subtree_sq_ratio),
                    r.mass_ok as u8,
                    r.martingale_ok as u8,
                    r.subtree_ok as u8
                )]])
            })?;
            Ok(assemble(specs, rows))
        }
    }
}

/// Runs the configured experiment: resolves the tree (loading a matching
/// serialized one if the output directory already has it), dispatches the
/// trials, and persists raw CSVs, the tree, and the manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<()> {
    let spec = cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;

    let quenched =
        cfg.experiment != ExperimentKind::Regularity && !cfg.fresh_tree_per_trial;
    let shared_tree = if quenched {
        let path = cfg.output_dir.join(TREE_FILE);
        let loaded = fs::read_to_string(&path)
            .ok()
            .and_then(|txt| TreeArena::from_text(&txt).ok())
            .and_then(|(t, l, s)| {
                (l == cfg.lambda && s == cfg.master_seed && t.n() == cfg.n).then_some(t)
            });
        Some(match loaded {
            Some(t) => t,
            None => sample_tree(&spec, cfg.n, &mut tree_stream(cfg.master_seed))?,
        })
    } else {
        None
    };

    let outputs = run_kind(cfg, &spec, shared_tree.as_ref())?;

    for out in &outputs {
        write_atomic(&cfg.output_dir.join(&out.entry.file), &out.contents)?;
    }
    if let Some(tree) = &shared_tree {
        write_atomic(
            &cfg.output_dir.join(TREE_FILE),
            &tree.to_text(cfg.lambda, cfg.master_seed),
        )?;
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        tree_file: shared_tree.is_some().then(|| TREE_FILE.to_string()),
        config: cfg.clone(),
        outputs: outputs.into_iter().map(|o| o.entry).collect(),
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidConfig(format!("manifest: {e}")))?;
    write_atomic(&cfg.output_dir.join(MANIFEST_FILE), &text)?;
    report(&cfg.output_dir)?;
    Ok(())
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::IncompleteExperiment(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let cols: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::IncompleteExperiment(format!("{}: empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::IncompleteExperiment(format!("{}: bad cell ({e})", path.display()))
            })?;
        if row.len() != cols.len() {
            return Err(Error::IncompleteExperiment(format!(
                "{}: ragged row",
                path.display()
            )));
        }
        rows.push(row);
    }
    Ok((cols, rows))
}

fn column(cols: &[String], rows: &[Vec<f64>], name: &str) -> Result<Vec<f64>> {
    let j = cols
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::IncompleteExperiment(format!("missing column {name}")))?;
    Ok(rows.iter().map(|r| r[j]).collect())
}

fn push_mean_line(out: &mut String, label: &str, xs: &[f64]) -> Result<(f64, f64)> {
    let (mean, se) = mean_se(xs)?;
    writeln!(out, "  {label}: mean = {mean:.6} ± {se:.6}").unwrap();
    Ok((mean, se))
}

/// Recomputes every summary statistic from the raw CSVs in `dir`, writes
/// `report.txt`, and returns the text. Raw data is never touched.
pub fn report(dir: &Path) -> Result<String> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::IncompleteExperiment(format!(
            "missing {MANIFEST_FILE} in {}",
            dir.display()
        )));
    }
    let manifest: Manifest = toml::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| Error::IncompleteExperiment(format!("unreadable manifest: {e}")))?;
    let missing: Vec<&str> = manifest
        .outputs
        .iter()
        .map(|o| o.file.as_str())
        .chain(manifest.tree_file.as_deref())
        .filter(|f| !dir.join(f).exists())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteExperiment(format!(
            "missing files: {}",
            missing.join(", ")
        )));
    }

    let cfg = &manifest.config;
    let spec = cfg.validate()?;
    let m = spec.mean();
    let lambda = cfg.lambda;
    let tree = manifest
        .tree_file
        .as_deref()
        .map(|f| -> Result<TreeArena> {
            Ok(TreeArena::from_text(&fs::read_to_string(dir.join(f))?)?.0)
        })
        .transpose()?;
    let stats = tree.as_ref().map(|t| t.gen_stats(lambda, m));

    let mut out = String::new();
    writeln!(out, "# gwcover report (v{})", manifest.version).unwrap();
    writeln!(
        out,
        "experiment = {}  lambda = {}  n = {}  trials = {}  master_seed = {}",
        cfg.experiment.label(),
        lambda,
        cfg.n,
        cfg.trials,
        cfg.master_seed
    )
    .unwrap();
    writeln!(
        out,
        "offspring = {:?}  (m = {m}, var = {})",
        cfg.offspring,
        spec.variance()
    )
    .unwrap();
    let regime = Regime::classify(lambda, m);
    writeln!(out, "regime = {}", regime.label()).unwrap();
    if let Some(st) = &stats {
        writeln!(
            out,
            "tree: Z_n = {}  log Z_n = {:.6}  s_n = {:.6}  sigma_n_sq = {:.6}  w_hat = {:.6}",
            st.z_n(),
            st.log_z_n(),
            st.s_n,
            st.sigma_n_sq(),
            st.w_hat
        )
        .unwrap();
        if regime == Regime::BiasAboveMean {
            // The infinite mass series is truncated at n; the tail is
            // geometric in m/λ.
            writeln!(out, "s_tail_bound = (m/lambda)^n = {:.3e}", (m / lambda).powi(cfg.n as i32))
                .unwrap();
        }
    } else {
        writeln!(out, "tree: fresh per trial (annealed); no shared constants").unwrap();
    }

    for entry in &manifest.outputs {
        let (cols, rows) = read_csv(&dir.join(&entry.file))?;
        writeln!(out, "\n[{}]", entry.file).unwrap();
        writeln!(out, "  samples = {}", rows.len()).unwrap();
        match cfg.experiment {
            ExperimentKind::Cover => {
                let xs = column(&cols, &rows, "x")?;
                let (d, p) = ks_statistic(&xs, gumbel_cdf)?;
                push_mean_line(&mut out, "x", &xs)?;
                writeln!(out, "  x: KS vs Gumbel D = {d:.6}, p = {p:.6}").unwrap();
                writeln!(out, "  gumbel mean = 0.577216").unwrap();
                let xr = column(&cols, &rows, "x_regime")?;
                let (dr, pr) = ks_statistic(&xr, gumbel_cdf)?;
                push_mean_line(&mut out, "x_regime", &xr)?;
                writeln!(out, "  x_regime: KS vs Gumbel D = {dr:.6}, p = {pr:.6}").unwrap();
                push_mean_line(&mut out, "tau", &column(&cols, &rows, "tau")?)?;
            }
            ExperimentKind::Excursion => {
                let t = entry.t.expect("tagged");
                let (mean, se) = push_mean_line(&mut out, "tau", &column(&cols, &rows, "tau")?)?;
                if let Some(st) = &stats {
                    let predicted = 2.0 * t * st.s_n;
                    writeln!(
                        out,
                        "  predicted 2·t·s_n = {predicted:.6}, |Δ|/SE = {:.3}",
                        (mean - predicted).abs() / se
                    )
                    .unwrap();
                }
            }
            ExperimentKind::LocaltimeField => {
                push_mean_line(&mut out, "budget", &column(&cols, &rows, "budget")?)?;
                push_mean_line(&mut out, "probe_mid", &column(&cols, &rows, "probe_mid")?)?;
                push_mean_line(&mut out, "probe_leaf", &column(&cols, &rows, "probe_leaf")?)?;
                push_mean_line(
                    &mut out,
                    "max_ancestor_deviation",
                    &column(&cols, &rows, "max_ancestor_deviation")?,
                )?;
                let unc = column(&cols, &rows, "uncovered_leaves")?;
                push_mean_line(&mut out, "uncovered_leaves", &unc)?;
                let distinct = column(&cols, &rows, "distinct_ancestors")?;
                let defined: Vec<f64> = distinct.iter().copied().filter(|&d| d >= 0.0).collect();
                if defined.is_empty() {
                    writeln!(out, "  distinct_ancestors: no trials with ≥ 2 uncovered").unwrap();
                } else {
                    let freq = defined.iter().sum::<f64>() / defined.len() as f64;
                    writeln!(
                        out,
                        "  distinct_ancestors: freq = {freq:.4} over {} defined trials",
                        defined.len()
                    )
                    .unwrap();
                }
                let early = column(&cols, &rows, "early_uncovered")?;
                let zero_early =
                    early.iter().filter(|&&e| e == 0.0).count() as f64 / rows.len() as f64;
                writeln!(out, "  early_uncovered = 0: freq = {zero_early:.4}").unwrap();
            }
            ExperimentKind::UncoveredCount => {
                let mu = entry.mu.expect("tagged");
                let rate = (-mu).exp();
                let counts_f = column(&cols, &rows, "count")?;
                let counts: Vec<u64> = counts_f.iter().map(|&c| c as u64).collect();
                let (mean, se) = push_mean_line(&mut out, "count", &counts_f)?;
                writeln!(
                    out,
                    "  poisson rate e^-mu = {rate:.6}, |Δ|/SE = {:.3}",
                    (mean - rate).abs() / se
                )
                .unwrap();
                let tv = tv_distance(&counts, rate)?;
                writeln!(out, "  TV vs Poisson({rate:.6}) = {tv:.6}").unwrap();
                let zero = counts.iter().filter(|&&c| c == 0).count() as f64
                    / counts.len().max(1) as f64;
                writeln!(
                    out,
                    "  zero-count freq = {zero:.6} (limit exp(-e^-mu) = {:.6})",
                    (-rate).exp()
                )
                .unwrap();
            }
            ExperimentKind::RayKnight => {
                let t = entry.t.expect("tagged");
                let depth_col = column(&cols, &rows, "probe_depth")?;
                let a = column(&cols, &rows, "side_a")?;
                let b = column(&cols, &rows, "side_b")?;
                let mut depths: Vec<i64> = depth_col.iter().map(|&d| d as i64).collect();
                depths.sort_unstable();
                depths.dedup();
                for d in depths {
                    let sel = |v: &[f64]| -> Vec<f64> {
                        v.iter()
                            .zip(depth_col.iter())
                            .filter(|(_, &dd)| dd as i64 == d)
                            .map(|(&x, _)| x)
                            .collect()
                    };
                    let (sa, sb) = (sel(&a), sel(&b));
                    let (ma, _) = mean_se(&sa)?;
                    let (mb, _) = mean_se(&sb)?;
                    let (ks, p) = ks_two_sample(&sa, &sb)?;
                    writeln!(
                        out,
                        "  depth {d}: mean A = {ma:.6}, mean B = {mb:.6}, \
                         expected t + sigma^2/2 = {:.6}, KS D = {ks:.6}, p = {p:.6}",
                        t + sigma_sq(lambda, d as usize) / 2.0
                    )
                    .unwrap();
                }
            }
            ExperimentKind::DgffMax => {
                let maxima = column(&cols, &rows, "max_eta")?;
                push_mean_line(&mut out, "max_eta", &maxima)?;
                if let Some(st) = &stats {
                    for &mu in &cfg.mu_grid() {
                        let thr = max_threshold(st, mu)?;
                        let p = maxima.iter().filter(|&&x| x <= thr).count() as f64
                            / maxima.len() as f64;
                        let se = (p * (1.0 - p) / maxima.len() as f64).sqrt();
                        writeln!(
                            out,
                            "  mu = {mu}: threshold = {thr:.6}, P(max ≤ thr) = {p:.6} ± {se:.6}, \
                             limit = {:.6}",
                            max_limit_value(mu)
                        )
                        .unwrap();
                        let bound_thr =
                            st.sigma_n_sq().sqrt() * (st.log_z_n() + mu).sqrt();
                        let exceed = maxima.iter().filter(|&&x| x > bound_thr).count() as f64
                            / maxima.len() as f64;
                        writeln!(
                            out,
                            "  mu = {mu}: exceedance over sigma_n*sqrt(log Z_n + mu) = {exceed:.6}, \
                             gaussian bound = {:.6}",
                            gaussian_max_bound(st.z_n(), mu)?
                        )
                        .unwrap();
                    }
                } else {
                    writeln!(out, "  thresholds need the shared tree; run quenched").unwrap();
                }
            }
            ExperimentKind::Regularity => {
                for flag in ["mass_ok", "martingale_ok", "subtree_ok"] {
                    let v = column(&cols, &rows, flag)?;
                    let freq = v.iter().sum::<f64>() / v.len().max(1) as f64;
                    writeln!(out, "  {flag}: freq = {freq:.4}").unwrap();
                }
                for col in ["mass_ratio", "martingale_margin", "subtree_sq_ratio", "w_hat"] {
                    push_mean_line(&mut out, col, &column(&cols, &rows, col)?)?;
                }
            }
        }
    }

    write_atomic(&dir.join(REPORT_FILE), &out)?;
    Ok(out)
}

/// Runs `cfg` twice, at two worker counts, into sibling subdirectories of
/// its output_dir and reports whether all raw CSVs are byte-identical.
pub fn determinism_check(cfg: &ExperimentConfig, workers: (usize, usize)) -> Result<bool> {
    let mut captured: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for (tag, w) in [("a", workers.0), ("b", workers.1)] {
        let mut c = cfg.clone();
        c.workers = w;
        c.output_dir = cfg.output_dir.join(format!("determinism-{tag}"));
        run_experiment(&c)?;
        let manifest: Manifest =
            toml::from_str(&fs::read_to_string(c.output_dir.join(MANIFEST_FILE))?)
                .map_err(|e| Error::IncompleteExperiment(format!("manifest: {e}")))?;
        let mut files: Vec<(String, Vec<u8>)> = manifest
            .outputs
            .iter()
            .map(|o| Ok((o.file.clone(), fs::read(c.output_dir.join(&o.file))?)))
            .collect::<Result<_>>()?;
        files.sort();
        captured.push(files);
    }
    Ok(captured[0] == captured[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn base_cfg(dir: &Path, kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: kind,
            offspring: vec![0.0, 0.0, 1.0],
            lambda: 2.0,
            n: 5,
            trials: 32,
            mu_grid: None,
            t_grid: None,
            master_seed: 11,
            workers: 2,
            output_dir: dir.to_path_buf(),
            fresh_tree_per_trial: false,
            c_sep: 4.4,
            epsilon: 0.5,
            engine: Default::default(),
        }
    }

    #[test]
    fn fmt_round_trips_exactly() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -2.5e17] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn cover_run_is_deterministic_and_reportable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_cfg(dir.path(), ExperimentKind::Cover);
        run_experiment(&cfg).unwrap();

        let csv = fs::read_to_string(dir.path().join("cover.csv")).unwrap();
        assert_eq!(csv.lines().count(), 33); // header + one row per trial
        assert!(csv.lines().nth(1).unwrap().contains('e'), "full-precision floats");
        assert!(dir.path().join(TREE_FILE).exists());
        // No staging leftovers.
        assert!(fs::read_dir(dir.path())
            .unwrap()
            .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".staging")));

        let text = report(dir.path()).unwrap();
        assert!(text.contains("KS vs Gumbel"));
        assert!(text.contains("regime = lambda=m"));
        assert!(dir.path().join(REPORT_FILE).exists());

        assert!(determinism_check(&cfg, (1, 8)).unwrap());
    }

    #[test]
    fn rerun_with_same_config_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_cfg(dir.path(), ExperimentKind::Cover);
        run_experiment(&cfg).unwrap();
        let first = fs::read(dir.path().join("cover.csv")).unwrap();
        run_experiment(&cfg).unwrap(); // second run loads the stored tree
        assert_eq!(first, fs::read(dir.path().join("cover.csv")).unwrap());
    }

    #[test]
    fn uncovered_counts_have_ordered_means() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir.path(), ExperimentKind::UncoveredCount);
        cfg.offspring = vec![0.0625, 0.375, 0.5625];
        cfg.n = 8;
        cfg.trials = 400;
        cfg.mu_grid = Some(vec![-1.0, 0.0, 1.0]);
        run_experiment(&cfg).unwrap();

        let mean_of = |name: &str| {
            let (cols, rows) = read_csv(&dir.path().join(name)).unwrap();
            let c = column(&cols, &rows, "count").unwrap();
            c.iter().sum::<f64>() / c.len() as f64
        };
        let (lo, mid, hi) = (
            mean_of("uncovered_mu_-1.csv"),
            mean_of("uncovered_mu_0.csv"),
            mean_of("uncovered_mu_1.csv"),
        );
        assert!(lo > mid && mid > hi, "means not ordered: {lo} {mid} {hi}");

        let text = report(dir.path()).unwrap();
        assert!(text.contains("TV vs Poisson"));
        assert!(text.contains("zero-count freq"));
    }

    #[test]
    fn excursion_mean_tracks_prediction() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir.path(), ExperimentKind::Excursion);
        cfg.n = 6;
        cfg.trials = 200;
        cfg.t_grid = Some(vec![10.0]);
        run_experiment(&cfg).unwrap();

        let (cols, rows) = read_csv(&dir.path().join("excursion_t_10.csv")).unwrap();
        let tau = column(&cols, &rows, "tau").unwrap();
        let (mean, se) = mean_se(&tau).unwrap();
        // Deterministic binary at n = 6: s_n = 7.
        let predicted = 2.0 * 10.0 * 7.0;
        assert!((mean - predicted).abs() <= 5.0 * se, "mean {mean} vs {predicted}");
        assert!(report(dir.path()).unwrap().contains("predicted 2·t·s_n = 140"));
    }

    #[test]
    fn localtime_field_and_ray_knight_produce_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir.path(), ExperimentKind::LocaltimeField);
        cfg.n = 6;
        cfg.trials = 40;
        cfg.mu_grid = Some(vec![0.0, 1.0]);
        run_experiment(&cfg).unwrap();
        let (cols, rows) = read_csv(&dir.path().join("field_mu_0.csv")).unwrap();
        assert_eq!(rows.len(), 40);
        let early = column(&cols, &rows, "early_uncovered").unwrap();
        assert!(early.iter().filter(|&&e| e == 0.0).count() >= 36);
        assert!(report(dir.path()).unwrap().contains("distinct_ancestors"));

        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir2.path(), ExperimentKind::RayKnight);
        cfg.n = 4;
        cfg.trials = 60;
        cfg.t_grid = Some(vec![4.0]);
        run_experiment(&cfg).unwrap();
        let (_, rows) = read_csv(&dir2.path().join("rayknight_t_4.csv")).unwrap();
        assert_eq!(rows.len(), 60 * 3); // three probe depths per trial
        assert!(report(dir2.path()).unwrap().contains("expected t + sigma^2/2"));
    }

    #[test]
    fn dgff_and_regularity_reports() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir.path(), ExperimentKind::DgffMax);
        cfg.n = 8;
        cfg.trials = 200;
        cfg.mu_grid = Some(vec![0.0, 2.0]);
        run_experiment(&cfg).unwrap();
        let text = report(dir.path()).unwrap();
        assert!(text.contains("P(max ≤ thr)"));
        assert!(text.contains("gaussian bound"));

        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir2.path(), ExperimentKind::Regularity);
        cfg.n = 4;
        cfg.trials = 8;
        run_experiment(&cfg).unwrap();
        // Deterministic binary trees: every margin is identically healthy.
        let text = report(dir2.path()).unwrap();
        assert!(text.contains("mass_ok: freq = 1.0000"));
        assert!(text.contains("martingale_ok: freq = 1.0000"));
        // No tree file in annealed mode.
        assert!(!dir2.path().join(TREE_FILE).exists());
    }

    #[test]
    fn report_names_missing_pieces() {
        let dir = tempfile::tempdir().unwrap();
        match report(dir.path()) {
            Err(Error::IncompleteExperiment(msg)) => assert!(msg.contains(MANIFEST_FILE)),
            other => panic!("expected incomplete-experiment error, got {other:?}"),
        }

        let cfg = base_cfg(dir.path(), ExperimentKind::Cover);
        run_experiment(&cfg).unwrap();
        fs::remove_file(dir.path().join("cover.csv")).unwrap();
        match report(dir.path()) {
            Err(Error::IncompleteExperiment(msg)) => assert!(msg.contains("cover.csv")),
            other => panic!("expected missing-file error, got {other:?}"),
        }
    }

    #[test]
    fn annealed_mode_samples_fresh_trees() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(dir.path(), ExperimentKind::Cover);
        cfg.offspring = vec![0.0625, 0.375, 0.5625];
        cfg.fresh_tree_per_trial = true;
        cfg.trials = 16;
        run_experiment(&cfg).unwrap();
        assert!(!dir.path().join(TREE_FILE).exists());
        // τ varies across tree sizes far more than within one tree; just
        // check rows parse and the manifest omits the tree.
        let manifest: Manifest =
            toml::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert!(manifest.tree_file.is_none());
        assert!(determinism_check(&cfg, (1, 4)).unwrap());
    }
}
