//! Run the walker to a fixed root-excursion budget t and freeze the
//! normalized local-time field. Checks the compound Poisson-exponential
//! marginal law PG(t/σ_k², 1/σ_k²) at a depth-3 vertex — mean t,
//! variance 2tσ², atom e^{−t/σ²} at zero — and the occupation identity
//! τ = Σ_x π(x) L^x(t) relating real and excursion clocks.

use gwcover::rng::{tree_stream, trial_stream};
use gwcover::stats::mean_se;
use gwcover::tree::{sample_tree, sigma_sq, OffspringSpec};
use gwcover::walk::run_excursion_budget;

fn main() -> gwcover::Result<()> {
    let (lambda, n, t) = (2.0, 6, 10.0);
    let tree = sample_tree(&OffspringSpec::binary(), n, &mut tree_stream(1))?;
    let probe = tree.generation(3).start;
    let s2 = sigma_sq(lambda, 3);
    println!("binary tree, n = {n}, lambda = {lambda}, budget t = {t}, probe at depth 3");

    let mut rng = trial_stream(9, 0);
    let (field, tau) = run_excursion_budget(&tree, lambda, t, &mut rng)?;
    println!("one run: tau = {tau:.2}, field at root = {} (pinned), at probe = {:.3}",
        field.value(tree.artificial_root()), field.value(probe));

    let trials = 5000;
    let mut vals = Vec::with_capacity(trials);
    let mut taus = Vec::with_capacity(trials);
    for i in 0..trials as u64 {
        let mut rng = trial_stream(10, i);
        let (field, tau) = run_excursion_budget(&tree, lambda, t, &mut rng)?;
        vals.push(field.value(probe));
        taus.push(tau);
    }

    let (mean, se) = mean_se(&vals)?;
    println!("\n{trials} runs, local time at the probe:");
    println!("  mean     = {mean:.3} ± {se:.3}      (law says {t})");
    let m2 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials as f64 - 1.0);
    println!("  variance = {m2:.1}            (law says 2 t sigma^2 = {:.1})", 2.0 * t * s2);
    let zero = vals.iter().filter(|&&v| v == 0.0).count() as f64 / trials as f64;
    println!("  P(never visited) = {zero:.4}   (law says e^(-t/sigma^2) = {:.4})", (-t / s2).exp());

    let (mt, set) = mean_se(&taus)?;
    let s_n = tree.gen_stats(lambda, 2.0).s_n;
    println!("\nreal time spent: mean tau = {mt:.2} ± {set:.2} (2 t s_n = {:.2})", 2.0 * t * s_n);
    Ok(())
}
