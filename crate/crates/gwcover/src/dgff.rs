//! Discrete Gaussian free field on the tree, the Ray-Knight coupling with
//! local times, and the law of the field maximum.
//!
//! The field attaches an independent N(0, λ^{|y|}/2) increment to every
//! vertex y and sums along root paths, so E(η_x − η_y)² is half the
//! effective resistance between x and y and Var η_x = σ_{|x|}²/2. The
//! second Ray-Knight identity says {L^x(t) + η_x²}_x has the law of
//! {(η_x + √t)²}_x with an independent copy of the field, which gives a
//! second, structurally unrelated route to the local-time law; the field
//! maximum over generation n obeys the same doubly-exponential limit that
//! governs the cover time.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::pglocal::sample_field_exact;
use crate::tree::{GenStats, TreeArena};
use crate::walk::run_excursion_budget;
use crate::{Error, Result};

/// One realization of the field; index 0 (the artificial root) is pinned
/// at zero.
#[derive(Clone, Debug)]
pub struct GaussianField {
    eta: Vec<f64>,
}

impl GaussianField {
    pub fn value(&self, x: usize) -> f64 {
        self.eta[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.eta
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

fn depth_scales(lambda: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|d| (lambda.powi(d as i32) / 2.0).sqrt())
        .collect()
}

/// Samples the field in one pass: arena order puts parents before
/// children, so a single forward sweep accumulates the path sums.
pub fn sample_dgff<R: Rng + ?Sized>(tree: &TreeArena, lambda: f64, rng: &mut R) -> GaussianField {
    let scales = depth_scales(lambda, tree.n());
    let mut eta = vec![0.0f64; tree.num_nodes()];
    for x in 1..tree.num_nodes() {
        let z: f64 = rng.sample(StandardNormal);
        eta[x] = eta[tree.parent(x)] + scales[tree.depth(x) as usize] * z;
    }
    GaussianField { eta }
}

/// Maximum of the field over generation n, keeping only one level in
/// memory at a time.
pub fn max_eta_at_generation<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    rng: &mut R,
) -> f64 {
    let n = tree.n();
    let scales = depth_scales(lambda, n);
    let mut prev = vec![0.0f64];
    let mut prev_start = 0usize;
    for k in 0..=n {
        let gen = tree.generation(k);
        let mut cur = Vec::with_capacity(gen.len());
        for x in gen.clone() {
            let z: f64 = rng.sample(StandardNormal);
            cur.push(prev[tree.parent(x) - prev_start] + scales[k] * z);
        }
        prev_start = gen.start;
        prev = cur;
    }
    prev.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Which sampler produces the local-time side of the Ray-Knight pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalTimeEngine {
    /// Hierarchical conditional-law sampler, no walk.
    Exact,
    /// The biased walk run to root budget t.
    Walker,
}

/// Paired samples of the two sides of the Ray-Knight identity, per probe
/// vertex, plus the stationary-weighted whole-field sums as a weak joint
/// statistic.
#[derive(Clone, Debug)]
pub struct RayKnightSamples {
    pub probes: Vec<usize>,
    /// `side_a[i][j]`: L^x(t) + η_x² at probe i, trial j.
    pub side_a: Vec<Vec<f64>>,
    /// `side_b[i][j]`: (η'_x + √t)² at probe i, trial j (independent η').
    pub side_b: Vec<Vec<f64>>,
    /// Σ_x π(x)·(L^x + η_x²) per trial.
    pub sum_a: Vec<f64>,
    /// Σ_x π(x)·(η'_x + √t)² per trial.
    pub sum_b: Vec<f64>,
}

pub fn ray_knight_pair_samples<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    t: f64,
    probes: &[usize],
    trials: usize,
    engine: LocalTimeEngine,
    rng: &mut R,
) -> Result<RayKnightSamples> {
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("budget t = {t} must be > 0")));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be ≥ 1".into()));
    }
    if let Some(&bad) = probes.iter().find(|&&x| x >= tree.num_nodes()) {
        return Err(Error::InvalidParams(format!("probe {bad} outside tree")));
    }
    let total = tree.num_nodes();
    let sqrt_t = t.sqrt();
    let pi: Vec<f64> = (0..total).map(|x| tree.stationary_weight(lambda, x)).collect();

    let mut side_a = vec![Vec::with_capacity(trials); probes.len()];
    let mut side_b = vec![Vec::with_capacity(trials); probes.len()];
    let mut sum_a = Vec::with_capacity(trials);
    let mut sum_b = Vec::with_capacity(trials);

    for _ in 0..trials {
        let local = match engine {
            LocalTimeEngine::Exact => sample_field_exact(tree, lambda, t, rng)?,
            LocalTimeEngine::Walker => run_excursion_budget(tree, lambda, t, rng)?.0,
        };
        let eta = sample_dgff(tree, lambda, rng);
        let eta2 = sample_dgff(tree, lambda, rng);
        for (i, &x) in probes.iter().enumerate() {
            side_a[i].push(local.value(x) + eta.value(x) * eta.value(x));
            let shifted = eta2.value(x) + sqrt_t;
            side_b[i].push(shifted * shifted);
        }
        let mut a = 0.0;
        let mut b = 0.0;
        for x in 0..total {
            a += pi[x] * (local.value(x) + eta.value(x) * eta.value(x));
            let shifted = eta2.value(x) + sqrt_t;
            b += pi[x] * shifted * shifted;
        }
        sum_a.push(a);
        sum_b.push(b);
    }

    Ok(RayKnightSamples {
        probes: probes.to_vec(),
        side_a,
        side_b,
        sum_a,
        sum_b,
    })
}

/// Threshold σ_n·√(log Z_n − ½·log log Z_n + μ) for the maximum law.
pub fn max_threshold(stats: &GenStats, mu: f64) -> Result<f64> {
    let log_z = stats.log_z_n();
    let arg = log_z - 0.5 * log_z.ln() + mu;
    if !arg.is_finite() || arg <= 0.0 {
        return Err(Error::InvalidRegime(format!(
            "log Z_n − ½·log log Z_n + μ = {arg} must be positive and finite"
        )));
    }
    Ok(stats.sigma_n_sq().sqrt() * arg.sqrt())
}

/// The limit exp(−e^{−μ}/(2√π)) of P(max η ≤ threshold(μ)).
pub fn max_limit_value(mu: f64) -> f64 {
    (-(-mu).exp() / (2.0 * std::f64::consts::PI.sqrt())).exp()
}

/// Monte Carlo estimate (with standard error) of
/// P(max_{|x|=n} η_x ≤ threshold(μ)).
pub fn max_limit_experiment<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    mu: f64,
    trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be ≥ 1".into()));
    }
    let stats = tree.gen_stats(lambda, f64::NAN); // w_hat unused here
    let thr = max_threshold(&stats, mu)?;
    let hits = (0..trials)
        .filter(|_| max_eta_at_generation(tree, lambda, rng) <= thr)
        .count();
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    Ok((p, se))
}

/// Union-plus-tail bound e^{−μ}/(2√(π(log Z_n + μ))) on the probability
/// that the generation-n maximum exceeds σ_n√(log Z_n + μ).
pub fn gaussian_max_bound(z_n: u64, mu: f64) -> Result<f64> {
    if z_n < 1 {
        return Err(Error::InvalidParams("Z_n must be ≥ 1".into()));
    }
    let arg = (z_n as f64).ln() + mu;
    if arg <= 0.0 {
        return Err(Error::InvalidRegime(format!(
            "log Z_n + μ = {arg} must be positive"
        )));
    }
    Ok((-mu).exp() / (2.0 * (std::f64::consts::PI * arg).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{tree_stream, trial_stream};
    use crate::stats::{ks_two_sample, mean_se, var_se};
    use crate::tree::{sample_tree, sigma_sq, OffspringSpec};

    #[test]
    fn root_pinned_and_depth_zero_variance() {
        let tree = sample_tree(&OffspringSpec::binary(), 3, &mut tree_stream(1)).unwrap();
        let mut rng = trial_stream(20, 0);
        let n = 100_000;
        let mut at_root = Vec::with_capacity(n);
        for _ in 0..n {
            let f = sample_dgff(&tree, 2.0, &mut rng);
            assert_eq!(f.value(tree.artificial_root()), 0.0);
            at_root.push(f.value(tree.root()));
        }
        let (var, se) = var_se(&at_root).unwrap();
        assert!((var - 0.5).abs() <= 5.0 * se, "Var η_∅ = {var}");
    }

    #[test]
    fn sibling_squared_difference_is_half_resistance() {
        let tree = sample_tree(&OffspringSpec::binary(), 2, &mut tree_stream(1)).unwrap();
        let d1 = tree.generation(1);
        let (u, v) = (d1.start, d1.start + 1);
        assert_eq!(tree.effective_resistance(2.0, u, v), 4.0);
        let mut rng = trial_stream(21, 0);
        let n = 100_000;
        let sq: Vec<f64> = (0..n)
            .map(|_| {
                let f = sample_dgff(&tree, 2.0, &mut rng);
                (f.value(u) - f.value(v)).powi(2)
            })
            .collect();
        let (mean, se) = mean_se(&sq).unwrap();
        assert!((mean - 2.0).abs() <= 5.0 * se, "E(η_u−η_v)² = {mean}");
    }

    #[test]
    fn covariance_structure_on_random_pairs() {
        // E(η_x − η_y)² = R_eff(x,y)/2 on ten random pairs of a GW tree.
        let spec = OffspringSpec::binomial2(0.75).unwrap();
        let tree = sample_tree(&spec, 6, &mut tree_stream(3)).unwrap();
        let mut rng = trial_stream(22, 0);
        let pairs: Vec<(usize, usize)> = (0..10)
            .map(|_| {
                (
                    rng.random_range(1..tree.num_nodes()),
                    rng.random_range(1..tree.num_nodes()),
                )
            })
            .collect();
        let n = 100_000;
        let mut sq = vec![Vec::with_capacity(n); pairs.len()];
        for _ in 0..n {
            let f = sample_dgff(&tree, 2.0, &mut rng);
            for (i, &(x, y)) in pairs.iter().enumerate() {
                sq[i].push((f.value(x) - f.value(y)).powi(2));
            }
        }
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let want = tree.effective_resistance(2.0, x, y) / 2.0;
            let (mean, se) = mean_se(&sq[i]).unwrap();
            if want == 0.0 {
                assert_eq!(mean, 0.0);
            } else {
                assert!(
                    (mean - want).abs() <= 5.0 * se,
                    "pair ({x},{y}): {mean} vs {want}"
                );
            }
        }
    }

    #[test]
    fn marginal_variance_matches_resistance_to_root() {
        let tree = sample_tree(&OffspringSpec::binary(), 5, &mut tree_stream(1)).unwrap();
        let mut rng = trial_stream(23, 0);
        let n = 100_000;
        for k in [2usize, 5] {
            let probe = tree.generation(k).start;
            let xs: Vec<f64> = (0..n)
                .map(|_| sample_dgff(&tree, 2.0, &mut rng).value(probe))
                .collect();
            let (var, se) = var_se(&xs).unwrap();
            let want = sigma_sq(2.0, k) / 2.0;
            assert!((var - want).abs() <= 5.0 * se, "depth {k}: {var} vs {want}");
        }
    }

    #[test]
    fn ray_knight_identity_both_engines() {
        let tree = sample_tree(&OffspringSpec::binary(), 4, &mut tree_stream(1)).unwrap();
        let (lambda, t) = (2.0, 4.0);
        let probes = [
            tree.root(),
            tree.generation(2).start,
            tree.generation(4).start,
        ];
        let mut rng = trial_stream(24, 0);
        for engine in [LocalTimeEngine::Exact, LocalTimeEngine::Walker] {
            let s =
                ray_knight_pair_samples(&tree, lambda, t, &probes, 10_000, engine, &mut rng)
                    .unwrap();
            for (i, &x) in probes.iter().enumerate() {
                let want = t + sigma_sq(lambda, tree.depth(x) as usize) / 2.0;
                for (label, side) in [("A", &s.side_a[i]), ("B", &s.side_b[i])] {
                    let (mean, se) = mean_se(side).unwrap();
                    assert!(
                        (mean - want).abs() <= 3.0 * se,
                        "{engine:?} side {label} probe {x}: mean {mean} vs {want}"
                    );
                }
                let (d, p) = ks_two_sample(&s.side_a[i], &s.side_b[i]).unwrap();
                assert!(p > 0.01, "{engine:?} probe {x}: KS D = {d}, p = {p}");
            }
            // Weak joint check: stationary-weighted field sums agree in mean.
            let (ma, sea) = mean_se(&s.sum_a).unwrap();
            let (mb, seb) = mean_se(&s.sum_b).unwrap();
            let se = sea.hypot(seb);
            assert!((ma - mb).abs() <= 3.0 * se, "{engine:?} sums: {ma} vs {mb}");
        }
    }

    #[test]
    fn ray_knight_degenerates_to_squared_field_at_tiny_t() {
        let tree = sample_tree(&OffspringSpec::binary(), 3, &mut tree_stream(1)).unwrap();
        let probe = tree.generation(2).start;
        let mut rng = trial_stream(25, 0);
        let s = ray_knight_pair_samples(
            &tree,
            2.0,
            1e-8,
            &[probe],
            4000,
            LocalTimeEngine::Exact,
            &mut rng,
        )
        .unwrap();
        let (d, p) = ks_two_sample(&s.side_a[0], &s.side_b[0]).unwrap();
        assert!(p > 0.01, "KS D = {d}, p = {p}");
        // Essentially every trial has zero local time at the probe.
        let zeros = s.side_a[0]
            .iter()
            .zip(s.side_b[0].iter())
            .filter(|(a, _)| a.is_finite())
            .count();
        assert_eq!(zeros, 4000);
    }

    #[test]
    fn pair_sampler_rejects_bad_input() {
        let tree = sample_tree(&OffspringSpec::binary(), 2, &mut tree_stream(1)).unwrap();
        let mut rng = trial_stream(26, 0);
        let e = LocalTimeEngine::Exact;
        assert!(ray_knight_pair_samples(&tree, 2.0, 0.0, &[1], 10, e, &mut rng).is_err());
        assert!(ray_knight_pair_samples(&tree, 2.0, 1.0, &[999], 10, e, &mut rng).is_err());
        assert!(ray_knight_pair_samples(&tree, 2.0, 1.0, &[1], 0, e, &mut rng).is_err());
    }

    #[test]
    fn threshold_and_bound_values() {
        let tree = sample_tree(&OffspringSpec::binary(), 10, &mut tree_stream(1)).unwrap();
        let stats = tree.gen_stats(2.0, 2.0);
        let log_z = 10.0 * 2.0f64.ln();
        let want = 2047.0f64.sqrt() * (log_z - 0.5 * log_z.ln()).sqrt();
        assert!((max_threshold(&stats, 0.0).unwrap() - want).abs() < 1e-9);
        // Argument driven nonpositive by a large negative μ.
        assert!(max_threshold(&stats, -6.0).is_err());

        let b = gaussian_max_bound(1, 1.0).unwrap();
        assert!((b - (-1.0f64).exp() / (2.0 * std::f64::consts::PI.sqrt())).abs() < 1e-12);
        assert!((b - 0.1038).abs() < 1e-4);
        assert!(gaussian_max_bound(1, 50.0).unwrap() < 1e-21);
        assert!(gaussian_max_bound(0, 1.0).is_err());
        assert!(gaussian_max_bound(1, 0.0).is_err());
        assert!(gaussian_max_bound(2, -0.7).is_err());

        assert!((max_limit_value(0.0) - 0.7542).abs() < 1e-4);
        assert!(max_limit_value(8.0) > 0.9999);
    }

    #[test]
    fn max_law_saturates_at_large_mu() {
        let tree = sample_tree(&OffspringSpec::binary(), 10, &mut tree_stream(1)).unwrap();
        let mut rng = trial_stream(27, 0);
        let (p, _) = max_limit_experiment(&tree, 2.0, 8.0, 2000, &mut rng).unwrap();
        assert!(p >= 0.99, "P = {p}");
    }

    #[test]
    fn max_law_monotone_in_mu_with_shared_streams() {
        let tree = sample_tree(&OffspringSpec::binary(), 8, &mut tree_stream(1)).unwrap();
        let mut last = -1.0;
        for (i, mu) in [-1.0, 0.0, 1.0, 2.0].into_iter().enumerate() {
            // Same stream per μ: identical fields, nested events.
            let mut rng = trial_stream(28, 0);
            let (p, _) = max_limit_experiment(&tree, 2.0, mu, 500, &mut rng).unwrap();
            assert!(p >= last, "μ step {i}: {p} < {last}");
            last = p;
        }
    }

    #[test]
    fn max_exceedance_respects_gaussian_bound() {
        // One-sided: empirical frequency of max > σ_n√(log Z_n + μ) stays
        // below the union bound (up to 3 SE).
        let tree = sample_tree(&OffspringSpec::binary(), 12, &mut tree_stream(1)).unwrap();
        let stats = tree.gen_stats(2.0, 2.0);
        let mu = 0.0;
        let thr = stats.sigma_n_sq().sqrt() * (stats.log_z_n() + mu).sqrt();
        let bound = gaussian_max_bound(stats.z_n(), mu).unwrap();
        let mut rng = trial_stream(29, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| max_eta_at_generation(&tree, 2.0, &mut rng) > thr)
            .count();
        let freq = hits as f64 / n as f64;
        let se = (freq * (1.0 - freq) / n as f64).sqrt();
        assert!(freq <= bound + 3.0 * se, "freq {freq} vs bound {bound}");
    }
}
