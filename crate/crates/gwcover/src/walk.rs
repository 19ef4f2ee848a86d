//! Event-driven simulation of the continuous-time λ-biased walk on a
//! truncated tree.
//!
//! Every vertex has unit total exit rate, so the process is an Exp(1)
//! holding chain: from x the walk jumps to the parent with probability
//! λ/(λ+ν_x) and to each child with probability 1/(λ+ν_x); the artificial
//! root always steps to ∅ and consumes no randomness doing so. Both entry
//! points drive the identical event kernel, so a cover run and a
//! budget-stopped run given the same stream traverse the same trajectory —
//! which the tests exploit for an exact coupling between the cover time and
//! the smallest budget whose field has no unvisited vertex.

use rand::Rng;
use rand_distr::Exp1;

use crate::tree::TreeArena;
use crate::{Error, Result};

/// One full cover trial.
#[derive(Clone, Debug)]
pub struct TrialResult {
    /// Arrival instant at the last unvisited vertex.
    pub t_cover_real: f64,
    /// Jumps made up to that arrival.
    pub steps: u64,
    /// Root local time accumulated by then (the excursion-time cover time).
    pub t_cover_excursion: f64,
    /// The vertex covered last.
    pub last_vertex: usize,
}

/// Normalized local times frozen at an excursion budget: value(x) is the
/// occupation of x divided by π_n(x). The artificial root's value equals
/// the budget exactly.
#[derive(Clone, Debug)]
pub struct LocalTimeField {
    values: Vec<f64>,
    budget: f64,
}

impl LocalTimeField {
    pub fn from_values(values: Vec<f64>, budget: f64) -> Self {
        LocalTimeField { values, budget }
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct Engine<'a, 'r, R: Rng + ?Sized> {
    tree: &'a TreeArena,
    lambda: f64,
    rng: &'r mut R,
    pos: usize,
    time: f64,
    steps: u64,
    occ: Vec<f64>,
}

impl<'a, 'r, R: Rng + ?Sized> Engine<'a, 'r, R> {
    fn new(tree: &'a TreeArena, lambda: f64, rng: &'r mut R) -> Self {
        Engine {
            tree,
            lambda,
            rng,
            pos: tree.artificial_root(),
            time: 0.0,
            steps: 0,
            occ: vec![0.0; tree.num_nodes()],
        }
    }

    fn hold(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }

    /// One jump. The artificial root moves to ∅ deterministically; all
    /// other vertices consume exactly one uniform.
    fn jump(&mut self) {
        self.steps += 1;
        let x = self.pos;
        if x == self.tree.artificial_root() {
            self.pos = self.tree.root();
            return;
        }
        let nu = self.tree.num_children(x);
        let scaled = self.rng.random::<f64>() * (self.lambda + nu as f64);
        self.pos = if scaled < self.lambda {
            self.tree.parent(x)
        } else {
            let child = ((scaled - self.lambda) as usize).min(nu - 1);
            self.tree.children(x).start + child
        };
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 1.0) {
        return Err(Error::InvalidParams(format!("bias λ = {lambda} must be > 1")));
    }
    Ok(())
}

/// Runs from the artificial root until every vertex has been visited.
/// The cover time is the arrival instant at the last new vertex.
pub fn run_to_cover<R: Rng + ?Sized>(tree: &TreeArena, lambda: f64, rng: &mut R) -> Result<TrialResult> {
    check_lambda(lambda)?;
    let mut e = Engine::new(tree, lambda, rng);
    let mut visited = vec![false; tree.num_nodes()];
    visited[e.pos] = true;
    let mut unvisited = tree.num_nodes() - 1;
    loop {
        let h = e.hold();
        e.occ[e.pos] += h;
        e.time += h;
        e.jump();
        if !visited[e.pos] {
            visited[e.pos] = true;
            unvisited -= 1;
            if unvisited == 0 {
                return Ok(TrialResult {
                    t_cover_real: e.time,
                    steps: e.steps,
                    t_cover_excursion: e.occ[tree.artificial_root()],
                    last_vertex: e.pos,
                });
            }
        }
    }
}

/// Runs until the root local time strictly exceeds `t`, truncating the
/// in-progress holding at the threshold, and freezes the normalized field.
/// Returns the field and τ, the total real time elapsed; the identity
/// τ = Σ π_n(x)·L^x(t) is asserted to 1e-9 relative on every run.
pub fn run_excursion_budget<R: Rng + ?Sized>(
    tree: &TreeArena,
    lambda: f64,
    t: f64,
    rng: &mut R,
) -> Result<(LocalTimeField, f64)> {
    check_lambda(lambda)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("budget t = {t} must be > 0")));
    }
    let mut e = Engine::new(tree, lambda, rng);
    let root = tree.artificial_root();
    loop {
        let h = e.hold();
        if e.pos == root && e.occ[root] + h > t {
            e.time += t - e.occ[root];
            e.occ[root] = t;
            break;
        }
        e.occ[e.pos] += h;
        e.time += h;
        e.jump();
    }

    let values: Vec<f64> = (0..tree.num_nodes())
        .map(|x| e.occ[x] / tree.stationary_weight(lambda, x))
        .collect();
    let field = LocalTimeField::from_values(values, t);

    let weighted: f64 = (0..tree.num_nodes())
        .map(|x| tree.stationary_weight(lambda, x) * field.value(x))
        .sum();
    let scale = e.time.abs().max(1.0);
    assert!(
        (weighted - e.time).abs() <= 1e-9 * scale,
        "occupation identity violated: Σ π·L = {weighted} vs τ = {}",
        e.time
    );
    Ok((field, e.time))
}
