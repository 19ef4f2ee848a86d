//! The compound Poisson-exponential law PG(a,b) and the exact walk-free
//! sampler of local-time fields.
//!
//! PG(a,b) is the law of Σ_{i=1}^P E_i with P ~ Poisson(a) and E_i i.i.d.
//! Exp(b); it has mean a/b, variance 2a/b² and an atom e^{−a} at zero. The
//! local time of the walk at a depth-k vertex after root budget t is
//! PG(t/σ_k², 1/σ_k²), and conditionally on an ancestor's local time s the
//! law is PG(s/Δ, 1/Δ) with Δ the resistance gap between the two depths.
//! Chaining the one-level conditional from the root downward — children
//! independent given their parent — reproduces every marginal exactly,
//! because the conditional family composes: a PG(s/A,1/A) mixture of
//! PG(·/B,1/B) is PG(s/(A+B),1/(A+B)).

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::tree::{ancestor_generation, GenStats, TreeArena};
use crate::walk::LocalTimeField;
use crate::{Error, Result};

/// Parameters (a, b) of PG(a,b): Poisson intensity and exponential rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PGParams {
    pub a: f64,
    pub b: f64,
}

impl PGParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidParams(format!("PG intensity a = {a}")));
        }
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidParams(format!("PG rate b = {b}")));
        }
        Ok(PGParams { a, b })
    }

    /// Unconditional local-time law at resistance σ² from the root:
    /// PG(t/σ², 1/σ²).
    pub fn marginal(t: f64, sigma_sq: f64) -> Result<Self> {
        if sigma_sq <= 0.0 {
            return Err(Error::InvalidParams(format!("resistance {sigma_sq} ≤ 0")));
        }
        Self::new(t / sigma_sq, 1.0 / sigma_sq)
    }

    /// Conditional law across a resistance gap Δ given the ancestor value s:
    /// PG(s/Δ, 1/Δ).
    pub fn conditional(s: f64, gap: f64) -> Result<Self> {
        if gap <= 0.0 {
            return Err(Error::InvalidParams(format!("resistance gap {gap} ≤ 0")));
        }
        Self::new(s / gap, 1.0 / gap)
    }
}

/// One PG(a,b) draw: a Poisson(a) count of Exp(b) summands, realized as a
/// Gamma(count, 1/b) variate. Exactly zero when the count is zero.
pub fn pg_sample<R: Rng + ?Sized>(p: PGParams, rng: &mut R) -> f64 {
    if p.a == 0.0 {
        return 0.0;
    }
    let count = Poisson::new(p.a).expect("validated intensity").sample(rng);
    if count == 0.0 {
        return 0.0;
    }
    Gamma::new(count, 1.0 / p.b)
        .expect("positive shape and scale")
        .sample(rng)
}

/// P(X = 0) = e^{−a}; independent of b.
pub fn pg_zero_prob(a: f64) -> f64 {
    (-a).exp()
}

pub fn pg_mean(p: PGParams) -> f64 {
    p.a / p.b
}

pub fn pg_var(p: PGParams) -> f64 {
    2.0 * p.a / (p.b * p.b)
}

/// Chernoff bound e^{2√(ab) − a − b} on the lower tail P(X ≤ 1); vacuous
/// (= 1) at a = b and invalid below it.
pub fn pg_low_tail_bound(p: PGParams) -> Result<f64> {
    if p.a < p.b {
        return Err(Error::InvalidParams(format!(
            "low-tail bound needs a ≥ b, got a = {}, b = {}",
            p.a, p.b
        )));
    }
    Ok((2.0 * (p.a * p.b).sqrt() - p.a - p.b).exp())
}

/// The excursion budget t_n^μ = σ_n²·(log Z_n + μ) at which the number of
/// uncovered depth-n vertices becomes Poisson(e^{−μ}).
pub fn t_mu(stats: &GenStats, mu: f64) -> Result<f64> {
    let level = stats.log_z_n() + mu;
    if level <= 0.0 {
        return Err(Error::InvalidRegime(format!(
            "log Z_n + μ = {level} must be positive"
        )));
    }
    Ok(stats.sigma_n_sq() * level)
}

/// Exact field sample at budget `t`: the artificial root is pinned at t and
/// each vertex draws from the conditional PG law given its parent, children
/// independently. Marginals at every vertex match the walker's law.
pub fn sample_field_exact<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    t: f64,
    rng: &mut R,
) -> Result<LocalTimeField> {
    let fields = sample_field_exact_coupled(tree, lambda, &[t], rng)?;
    Ok(fields.into_iter().next().unwrap())
}

/// Coupled fields at several budgets from one stream, monotone by
/// construction: each vertex first draws its value at the smallest budget,
/// then adds independent PG increments for each successive budget (PG is
/// additive in its intensity), so larger budgets dominate pointwise and
/// their uncovered sets shrink.
pub fn sample_field_exact_coupled<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    budgets: &[f64],
    rng: &mut R,
) -> Result<Vec<LocalTimeField>> {
    if budgets.is_empty() {
        return Err(Error::InvalidParams("no budgets given".into()));
    }
    if budgets.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParams("budgets must be positive".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "budgets must be strictly increasing".into(),
        ));
    }
    if !(lambda > 1.0) {
        return Err(Error::InvalidParams(format!("bias λ = {lambda} must be > 1")));
    }

    let k = budgets.len();
    let total = tree.num_nodes();
    // values[j*total + x] is the field at budget j.
    let mut values = vec![0.0f64; k * total];
    for (j, &t) in budgets.iter().enumerate() {
        values[j * total] = t;
    }
    let gaps: Vec<f64> = (0..=tree.n()).map(|d| lambda.powi(d as i32)).collect();

    for x in 1..total {
        let p = tree.parent(x);
        let gap = gaps[tree.depth(x) as usize];
        let mut prev_parent = 0.0;
        let mut acc = 0.0;
        for j in 0..k {
            let parent_val = values[j * total + p];
            let delta = parent_val - prev_parent;
            if delta > 0.0 {
                acc += pg_sample(PGParams::conditional(delta, gap)?, rng);
            }
            prev_parent = parent_val;
            values[j * total + x] = acc;
        }
    }

    Ok(budgets
        .iter()
        .enumerate()
        .map(|(j, &t)| LocalTimeField::from_values(values[j * total..(j + 1) * total].to_vec(), t))
        .collect())
}

/// Counts of uncovered depth-n vertices over `trials` exact fields at
/// budget t_n^μ.
pub fn uncovered_count_experiment<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    m: f64,
    mu: f64,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let stats = tree.gen_stats(lambda, m);
    let t = t_mu(&stats, mu)?;
    let mut counts = Vec::with_capacity(trials);
    for _ in 0..trials {
        let field = sample_field_exact(tree, lambda, t, rng)?;
        counts.push(count_uncovered_leaves(tree, &field));
    }
    Ok(counts)
}

pub fn count_uncovered_leaves(tree: &TreeArena, field: &LocalTimeField) -> u64 {
    tree.generation(tree.n())
        .filter(|&x| field.value(x) == 0.0)
        .count() as u64
}

/// Extremal-landscape diagnostics of one frozen field.
#[derive(Clone, Debug)]
pub struct LandscapeReport {
    /// max |L^x − t|/σ_n² over the ancestor generation.
    pub max_ancestor_deviation: f64,
    /// Depth-n vertices with zero local time.
    pub uncovered_leaves: Vec<usize>,
    /// Whether the uncovered leaves have pairwise distinct ancestors at the
    /// ancestor generation; `None` with fewer than two uncovered leaves.
    pub distinct_ancestors: Option<bool>,
    /// Zero-local-time vertices at depths 0..n (the artificial root never
    /// counts: its value is the budget).
    pub early_uncovered: u64,
    /// r = n − ⌊c·ln n⌋.
    pub ancestor_generation: usize,
}

/// Landscape diagnostics at ancestor generation n − ⌊c·ln n⌋; requires the
/// separation c > 3/log λ.
pub fn landscape_diagnostics(
    field: &LocalTimeField,
    tree: &TreeArena,
    lambda: f64,
    c: f64,
) -> Result<LandscapeReport> {
    if !(lambda > 1.0) || c <= 3.0 / lambda.ln() {
        return Err(Error::InvalidParams(format!(
            "need c > 3/log λ, got c = {c} at λ = {lambda}"
        )));
    }
    let n = tree.n();
    let r = ancestor_generation(n, c);
    let t = field.budget();
    let sigma_n = crate::tree::sigma_sq(lambda, n);

    let max_ancestor_deviation = tree
        .generation(r)
        .map(|x| (field.value(x) - t).abs() / sigma_n)
        .fold(0.0, f64::max);

    let uncovered_leaves: Vec<usize> = tree
        .generation(n)
        .filter(|&x| field.value(x) == 0.0)
        .collect();

    let distinct_ancestors = if uncovered_leaves.len() >= 2 {
        let mut ancestors: Vec<usize> = uncovered_leaves
            .iter()
            .map(|&x| tree.ancestor_at(x, r as i32))
            .collect();
        ancestors.sort_unstable();
        let before = ancestors.len();
        ancestors.dedup();
        Some(ancestors.len() == before)
    } else {
        None
    };

    let early_uncovered = (1..tree.generation(n).start)
        .filter(|&x| field.value(x) == 0.0)
        .count() as u64;

    Ok(LandscapeReport {
        max_ancestor_deviation,
        uncovered_leaves,
        distinct_ancestors,
        early_uncovered,
        ancestor_generation: r,
    })
}
