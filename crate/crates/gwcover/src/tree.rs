//! Galton-Watson trees truncated at depth `n`, stored as flat arenas.
//!
//! A tree here always carries an artificial root at depth −1 (node 0) whose
//! only child is the true root ∅ (node 1); the walk uses it as the anchor
//! for excursion counting. Nodes are laid out breadth-first, one contiguous
//! block per generation, each vertex's children contiguous in planar order,
//! so generation scans and child lookups are plain range operations.

use std::fmt::Write as _;
use std::ops::Range;

use rand::Rng;

use crate::{Error, Result};

/// Offspring distribution with finite support `0..pmf.len()`.
///
/// Finite support keeps all moments finite; the mean must exceed 1 so the
/// process is supercritical and depth-`n` survival has positive probability.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringSpec {
    pmf: Vec<f64>,
    m: f64,
    var: f64,
}

impl OffspringSpec {
    pub fn new(pmf: &[f64]) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidOffspring("empty pmf".into()));
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidOffspring(
                "negative or non-finite mass".into(),
            ));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidOffspring(format!(
                "pmf sums to {total}, not 1"
            )));
        }
        let m: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if m <= 1.0 {
            return Err(Error::InvalidOffspring(format!(
                "mean offspring {m} is not supercritical (need m > 1)"
            )));
        }
        let m2: f64 = pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (k * k) as f64 * p)
            .sum();
        Ok(Self {
            pmf: pmf.to_vec(),
            m,
            var: m2 - m * m,
        })
    }

    /// Exactly two children per vertex.
    pub fn binary() -> Self {
        Self::new(&[0.0, 0.0, 1.0]).expect("binary pmf is valid")
    }

    /// Binomial(2, p) child counts; supercritical for p > 1/2.
    pub fn binomial2(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidOffspring(format!("p = {p} outside [0,1]")));
        }
        let q = 1.0 - p;
        Self::new(&[q * q, 2.0 * p * q, p * p])
    }

    pub fn mean(&self) -> f64 {
        self.m
    }

    pub fn variance(&self) -> f64 {
        self.var
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// One child count by cdf inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.pmf.len() - 1
    }

    /// Extinction probability: the smallest fixed point of the generating
    /// function, found by iterating f from 0.
    pub fn extinction_prob(&self) -> f64 {
        let f = |s: f64| -> f64 {
            self.pmf
                .iter()
                .enumerate()
                .map(|(k, p)| p * s.powi(k as i32))
                .sum()
        };
        let mut s = 0.0;
        for _ in 0..10_000 {
            let next = f(s);
            if (next - s).abs() < 1e-15 {
                return next;
            }
            s = next;
        }
        s
    }
}

/// Resistance from the artificial root to generation `k` under bias λ:
/// σ_k² = (λ^{k+1} − 1)/(λ − 1).
pub fn sigma_sq(lambda: f64, k: usize) -> f64 {
    (lambda.powi(k as i32 + 1) - 1.0) / (lambda - 1.0)
}

/// Ancestor generation `n − ⌊c·ln n⌋` (clamped at 0) used by the landscape
/// and regularity diagnostics.
pub fn ancestor_generation(n: usize, c: f64) -> usize {
    let drop = (c * (n as f64).ln()).floor();
    if drop <= 0.0 {
        return n;
    }
    n.saturating_sub(drop as usize)
}

/// Immutable truncated tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeArena {
    parent: Vec<u32>,
    depth: Vec<i32>,
    child_start: Vec<u32>,
    child_count: Vec<u32>,
    /// Generation k occupies node ids `gen_offsets[k]..gen_offsets[k+1]`.
    gen_offsets: Vec<u32>,
    n: usize,
}

const REJECTION_BUDGET: u32 = 4096;

/// Samples a GW tree truncated at depth `n`, conditioned on Z_n ≥ 1 by
/// rejection resampling. Depth-`n` vertices keep no children.
pub fn sample_tree<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    n: usize,
    rng: &mut R,
) -> Result<TreeArena> {
    sample_tree_with_budget(spec, n, rng, REJECTION_BUDGET)
}

pub(crate) fn sample_tree_with_budget<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    n: usize,
    rng: &mut R,
    budget: u32,
) -> Result<TreeArena> {
    for _ in 0..budget {
        if let Some(levels) = grow_levels(spec, n, rng) {
            return Ok(TreeArena::from_levels(&levels));
        }
    }
    Err(Error::RejectionBudget {
        attempts: budget,
        extinction: spec.extinction_prob(),
    })
}

/// One unconditioned growth attempt; `None` when the line dies before
/// depth n. `levels[k][j]` is the within-generation index of vertex j's
/// parent in generation k−1 (level 0 is the root alone).
fn grow_levels<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    n: usize,
    rng: &mut R,
) -> Option<Vec<Vec<u32>>> {
    let mut levels: Vec<Vec<u32>> = vec![vec![0]];
    for k in 1..=n {
        let z_prev = levels[k - 1].len();
        let mut level = Vec::with_capacity(z_prev * 2);
        for i in 0..z_prev {
            let nu = spec.sample(rng);
            for _ in 0..nu {
                level.push(i as u32);
            }
        }
        if level.is_empty() {
            return None;
        }
        levels.push(level);
    }
    Some(levels)
}

impl TreeArena {
    fn from_levels(levels: &[Vec<u32>]) -> Self {
        let n = levels.len() - 1;
        let total: usize = 1 + levels.iter().map(Vec::len).sum::<usize>();
        let mut gen_offsets = Vec::with_capacity(n + 2);
        gen_offsets.push(1u32);
        for level in levels {
            let last = *gen_offsets.last().unwrap();
            gen_offsets.push(last + level.len() as u32);
        }

        let mut parent = vec![0u32; total];
        let mut depth = vec![0i32; total];
        let mut child_start = vec![total as u32; total];
        let mut child_count = vec![0u32; total];

        depth[0] = -1;
        child_start[0] = 1;
        child_count[0] = 1;
        for (k, level) in levels.iter().enumerate() {
            let base = gen_offsets[k] as usize;
            let parent_base = if k == 0 { 0 } else { gen_offsets[k - 1] };
            for (j, &pj) in level.iter().enumerate() {
                let id = base + j;
                depth[id] = k as i32;
                parent[id] = if k == 0 { 0 } else { parent_base + pj };
                if k > 0 {
                    let p = parent[id] as usize;
                    if child_count[p] == 0 {
                        child_start[p] = id as u32;
                    }
                    child_count[p] += 1;
                }
            }
        }

        TreeArena {
            parent,
            depth,
            child_start,
            child_count,
            gen_offsets,
            n,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    /// Truncation depth.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn artificial_root(&self) -> usize {
        0
    }

    /// The true root ∅ at depth 0.
    pub fn root(&self) -> usize {
        1
    }

    pub fn parent(&self, x: usize) -> usize {
        self.parent[x] as usize
    }

    pub fn depth(&self, x: usize) -> i32 {
        self.depth[x]
    }

    /// ν_x; zero at depth n by truncation.
    pub fn num_children(&self, x: usize) -> usize {
        self.child_count[x] as usize
    }

    pub fn children(&self, x: usize) -> Range<usize> {
        let s = self.child_start[x] as usize;
        s..s + self.child_count[x] as usize
    }

    /// Node-id range of generation `k`, 0 ≤ k ≤ n.
    pub fn generation(&self, k: usize) -> Range<usize> {
        self.gen_offsets[k] as usize..self.gen_offsets[k + 1] as usize
    }

    pub fn z(&self, k: usize) -> u64 {
        (self.gen_offsets[k + 1] - self.gen_offsets[k]) as u64
    }

    /// Ancestor of `x` at depth `r` (possibly `x` itself).
    pub fn ancestor_at(&self, x: usize, r: i32) -> usize {
        let mut v = x;
        while self.depth[v] > r {
            v = self.parent(v);
        }
        v
    }

    /// Σ λ^{|z|} over vertices z whose parent edge lies on the x–y path.
    pub fn effective_resistance(&self, lambda: f64, x: usize, y: usize) -> f64 {
        let (mut a, mut b) = (x, y);
        let mut r = 0.0;
        while self.depth[a] > self.depth[b] {
            r += lambda.powi(self.depth[a]);
            a = self.parent(a);
        }
        while self.depth[b] > self.depth[a] {
            r += lambda.powi(self.depth[b]);
            b = self.parent(b);
        }
        while a != b {
            r += lambda.powi(self.depth[a]) + lambda.powi(self.depth[b]);
            a = self.parent(a);
            b = self.parent(b);
        }
        r
    }

    /// π_n(x) = (λ+ν_x)/λ^{|x|+1}; the artificial root carries weight 1.
    pub fn stationary_weight(&self, lambda: f64, x: usize) -> f64 {
        if x == 0 {
            return 1.0;
        }
        (lambda + self.child_count[x] as f64) / lambda.powi(self.depth[x] + 1)
    }

    pub fn gen_stats(&self, lambda: f64, m: f64) -> GenStats {
        let z: Vec<u64> = (0..=self.n).map(|k| self.z(k)).collect();
        let s_n = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| zi as f64 / lambda.powi(i as i32))
            .sum();
        let w_hat = *z.last().unwrap() as f64 / m.powi(self.n as i32);
        let sigma_sq = (0..=self.n).map(|k| sigma_sq(lambda, k)).collect();
        GenStats {
            z,
            s_n,
            w_hat,
            sigma_sq,
        }
    }

    /// Number of generation-`n` descendants of each generation-`r` vertex,
    /// in `generation(r)` order.
    pub fn subtree_gen_n_counts(&self, r: usize) -> Vec<u64> {
        let gen_r = self.generation(r);
        let base = gen_r.start;
        let mut counts = vec![0u64; gen_r.len()];
        for x in self.generation(self.n) {
            counts[self.ancestor_at(x, r as i32) - base] += 1;
        }
        counts
    }

    /// Margins for the three regularity properties of a healthy
    /// supercritical tree: total size comparable to the last generation,
    /// small martingale deviation of generation sizes, and diffuse depth-n
    /// subtrees at the ancestor generation `n − ⌊c·ln n⌋`.
    pub fn regularity_report(&self, m: f64, c: f64, eps: f64) -> Result<RegularityReport> {
        if self.n < 2 {
            return Err(Error::InvalidParams(
                "regularity report needs depth n ≥ 2".into(),
            ));
        }
        let zn = self.z(self.n) as f64;
        let total: u64 = (0..=self.n).map(|k| self.z(k)).sum();
        let mass_constant = 4.0 * m / (m - 1.0);
        let mass_ratio = total as f64 / zn;

        let w_hat = zn / m.powi(self.n as i32);
        let martingale_margin = (2..=self.n)
            .map(|k| {
                (self.z(k) as f64 - m.powi(k as i32) * w_hat).abs()
                    / (m.powf(k as f64 / 2.0) * (k as f64).ln())
            })
            .fold(0.0, f64::max);

        let ancestor_gen = ancestor_generation(self.n, c);
        let sq: f64 = self
            .subtree_gen_n_counts(ancestor_gen)
            .iter()
            .map(|&cnt| (cnt * cnt) as f64)
            .sum();
        let subtree_sq_ratio = sq / zn.powf(1.0 + eps);

        Ok(RegularityReport {
            mass_ratio,
            mass_constant,
            mass_ok: mass_ratio <= mass_constant,
            martingale_margin,
            martingale_ok: martingale_margin <= 1.0,
            ancestor_generation: ancestor_gen,
            subtree_sq_ratio,
            subtree_ok: subtree_sq_ratio <= 1.0,
        })
    }

    /// Line-oriented text form: a header, then one `id parent depth
    /// num_children` line per node in breadth-first order.
    pub fn to_text(&self, lambda: f64, seed: u64) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# gwcover-tree v1 lambda={lambda} n={} seed={seed}",
            self.n
        )
        .unwrap();
        for x in 0..self.num_nodes() {
            writeln!(
                out,
                "{x} {} {} {}",
                self.parent[x], self.depth[x], self.child_count[x]
            )
            .unwrap();
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output, re-validating every
    /// structural invariant. Returns the tree with the header's λ and seed.
    pub fn from_text(text: &str) -> Result<(TreeArena, f64, u64)> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedTree("empty input".into()))?;
        let (lambda, n, seed) = parse_header(header)?;

        let mut parent = Vec::new();
        let mut depth = Vec::new();
        let mut declared_children = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::MalformedTree(format!(
                    "node line {i}: expected 4 fields, got {}",
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::MalformedTree(format!("node line {i}: bad {what}"));
            let id: usize = fields[0].parse().map_err(|_| bad("id"))?;
            if id != i {
                return Err(Error::MalformedTree(format!(
                    "node line {i}: id {id} out of order"
                )));
            }
            parent.push(fields[1].parse::<u32>().map_err(|_| bad("parent"))?);
            depth.push(fields[2].parse::<i32>().map_err(|_| bad("depth"))?);
            declared_children.push(fields[3].parse::<u32>().map_err(|_| bad("num_children"))?);
        }
        let arena = Self::from_rows(parent, depth, &declared_children, n)?;
        Ok((arena, lambda, seed))
    }

    fn from_rows(
        parent: Vec<u32>,
        depth: Vec<i32>,
        declared_children: &[u32],
        n: usize,
    ) -> Result<TreeArena> {
        let total = parent.len();
        let fail = |msg: String| Err(Error::MalformedTree(msg));
        if total < 2 {
            return fail("need at least the artificial root and ∅".into());
        }
        if depth[0] != -1 || parent[0] != 0 {
            return fail("node 0 must be the artificial root at depth -1".into());
        }

        // Breadth-first layout: depths nondecreasing from -1 without gaps.
        let mut gen_offsets = Vec::new();
        for x in 1..total {
            let d = depth[x];
            let prev = depth[x - 1];
            if d != prev && d != prev + 1 {
                return fail(format!("node {x}: depth {d} breaks breadth-first order"));
            }
            if d == prev + 1 {
                gen_offsets.push(x as u32);
            }
            let p = parent[x] as usize;
            if p >= x {
                return fail(format!("node {x}: parent {p} not earlier in the file"));
            }
            if depth[p] != d - 1 {
                return fail(format!("node {x}: parent depth {} ≠ {d} - 1", depth[p]));
            }
        }
        gen_offsets.push(total as u32);
        if gen_offsets.len() != n + 2 {
            return fail(format!(
                "deepest generation {} does not match header n={n}",
                gen_offsets.len().saturating_sub(2)
            ));
        }
        if gen_offsets[1] != 2 {
            return fail("the artificial root must have exactly one child ∅".into());
        }

        // Planar order: within each generation, parents nondecreasing makes
        // every vertex's children one contiguous run.
        let mut child_start = vec![total as u32; total];
        let mut child_count = vec![0u32; total];
        child_start[0] = 1;
        child_count[0] = 1;
        for x in 1..total {
            let p = parent[x] as usize;
            if x > 1 && depth[x] == depth[x - 1] && parent[x] < parent[x - 1] {
                return fail(format!("node {x}: parents not in planar order"));
            }
            if p > 0 {
                if child_count[p] == 0 {
                    child_start[p] = x as u32;
                }
                child_count[p] += 1;
            }
        }
        if child_count[..total]
            .iter()
            .zip(declared_children)
            .any(|(a, b)| a != b)
        {
            return fail("num_children column disagrees with parent links".into());
        }

        Ok(TreeArena {
            parent,
            depth,
            child_start,
            child_count,
            gen_offsets,
            n,
        })
    }
}

fn parse_header(header: &str) -> Result<(f64, usize, u64)> {
    let bad = |msg: &str| Error::MalformedTree(format!("header: {msg}"));
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "#" || fields[1] != "gwcover-tree" || fields[2] != "v1" {
        return Err(bad("expected `# gwcover-tree v1 lambda=.. n=.. seed=..`"));
    }
    let value = |field: &str, key: &str| -> Result<String> {
        field
            .strip_prefix(&format!("{key}="))
            .map(str::to_owned)
            .ok_or_else(|| bad(&format!("missing {key}=")))
    };
    let lambda: f64 = value(fields[3], "lambda")?
        .parse()
        .map_err(|_| bad("unparseable lambda"))?;
    let n: usize = value(fields[4], "n")?
        .parse()
        .map_err(|_| bad("unparseable n"))?;
    let seed: u64 = value(fields[5], "seed")?
        .parse()
        .map_err(|_| bad("unparseable seed"))?;
    Ok((lambda, n, seed))
}

/// Generation sizes and the derived scalars every normalization needs.
#[derive(Clone, Debug)]
pub struct GenStats {
    /// Z_0..Z_n.
    pub z: Vec<u64>,
    /// s_n = Σ Z_i/λ^i.
    pub s_n: f64,
    /// Martingale plug-in ŵ = Z_n/m^n.
    pub w_hat: f64,
    /// σ_k² for k = 0..n.
    pub sigma_sq: Vec<f64>,
}

impl GenStats {
    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn z_n(&self) -> u64 {
        *self.z.last().unwrap()
    }

    pub fn log_z_n(&self) -> f64 {
        (self.z_n() as f64).ln()
    }

    pub fn sigma_n_sq(&self) -> f64 {
        *self.sigma_sq.last().unwrap()
    }
}

/// See [`TreeArena::regularity_report`].
#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub mass_ratio: f64,
    pub mass_constant: f64,
    pub mass_ok: bool,
    pub martingale_margin: f64,
    pub martingale_ok: bool,
    pub ancestor_generation: usize,
    pub subtree_sq_ratio: f64,
    pub subtree_ok: bool,
}
