//! Reference distributions, empirical-distribution machinery, and the
//! cover-time normalizations.

use crate::tree::GenStats;
use crate::{Error, Result};

/// Gumbel law exp(−e^{−x}), the scaling limit of the normalized cover time.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Kolmogorov survival function Q(x) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²x²},
/// the asymptotic null law of √n·D.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov distance of `samples` from `cdf`, with the
/// asymptotic p-value.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok((d, kolmogorov_sf(n.sqrt() * d)))
}

/// Two-sample Kolmogorov-Smirnov distance with the asymptotic p-value at
/// effective size nm/(n+m).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let cut = xs[i].min(ys[j]);
        while i < n && xs[i] <= cut {
            i += 1;
        }
        while j < m && ys[j] <= cut {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let eff = ((n * m) as f64 / (n + m) as f64).sqrt();
    Ok((d, kolmogorov_sf(eff * d)))
}

/// Right-continuous empirical CDF. The returned closure owns a sorted copy.
pub fn empirical_cdf(samples: &[f64]) -> Result<impl Fn(f64) -> f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(move |t: f64| xs.partition_point(|&v| v <= t) as f64 / xs.len() as f64)
}

pub fn poisson_pmf(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln_k_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * rate.ln() - rate - ln_k_fact).exp()
}

/// Counts are compared on 0..=10 plus one lump for everything larger;
/// uncovered-leaf counts concentrate near e^{−μ}, so the lump carries
/// negligible reference mass.
pub const TV_COUNT_CUTOFF: u64 = 10;

/// Total-variation distance between the empirical distribution of observed
/// counts and Poisson(rate), coarse-grained per [`TV_COUNT_CUTOFF`].
pub fn tv_distance(counts: &[u64], rate: f64) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::EmptySample);
    }
    let cells = TV_COUNT_CUTOFF as usize + 2;
    let mut hist = vec![0.0f64; cells];
    let w = 1.0 / counts.len() as f64;
    for &c in counts {
        hist[(c.min(TV_COUNT_CUTOFF + 1)) as usize] += w;
    }
    tv_distance_hist(&hist, rate)
}

/// Same comparison, but against an already coarse-grained probability
/// histogram over {0..=10, >10}. Feeding the exact Poisson cell masses
/// returns 0.
pub fn tv_distance_hist(hist: &[f64], rate: f64) -> Result<f64> {
    if hist.len() != TV_COUNT_CUTOFF as usize + 2 {
        return Err(Error::InvalidParams(format!(
            "histogram must have {} cells",
            TV_COUNT_CUTOFF + 2
        )));
    }
    let mut tv = 0.0;
    let mut tail = 1.0;
    for k in 0..=TV_COUNT_CUTOFF {
        let p = poisson_pmf(k, rate);
        tail -= p;
        tv += (hist[k as usize] - p).abs();
    }
    tv += (hist[TV_COUNT_CUTOFF as usize + 1] - tail.max(0.0)).abs();
    Ok(0.5 * tv)
}

/// Sample mean and its standard error.
pub fn mean_se(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Unbiased sample variance and the standard error of that variance
/// estimate (via the fourth central moment).
pub fn var_se(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let m4 = samples
        .iter()
        .map(|x| {
            let d = x - mean;
            d * d * d * d
        })
        .sum::<f64>()
        / n;
    let se = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    Ok((var, se))
}

/// Which side of λ = m the pair sits on; decided with tolerance 1e-12.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    BiasAboveMean,
    BiasEqualsMean,
    BiasBelowMean,
}

impl Regime {
    pub fn classify(lambda: f64, m: f64) -> Regime {
        if (lambda - m).abs() <= 1e-12 {
            Regime::BiasEqualsMean
        } else if lambda > m {
            Regime::BiasAboveMean
        } else {
            Regime::BiasBelowMean
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::BiasAboveMean => "lambda>m",
            Regime::BiasEqualsMean => "lambda=m",
            Regime::BiasBelowMean => "lambda<m",
        }
    }
}

/// A cover time pushed through both normalizations.
#[derive(Clone, Debug)]
pub struct NormalizedSample {
    /// Canonical statistic T/(2 s_n σ_n²) − n·log m − log ŵ.
    pub x: f64,
    /// The regime-specific limit-law form (finite-n view of the same T).
    pub regime_x: f64,
    pub regime: Regime,
    /// The raw cover time the statistic was derived from.
    pub raw_t: f64,
}

/// Normalizes a real cover time `t`.
///
/// The canonical form divides by 2·s_n·σ_n² and recenters by
/// n·log m + log ŵ = log Z_n; it is the one code path every regime shares.
/// The regime view replaces σ_n² (and, below the mean, s_n) by the
/// asymptotic expressions of the limit law, with the infinite-series
/// s_∞ approximated by s_n above the mean and W replaced by ŵ below it;
/// the two agree up to o(1).
pub fn normalize_cover_time(
    t: f64,
    stats: &GenStats,
    lambda: f64,
    m: f64,
) -> Result<NormalizedSample> {
    if t <= 0.0 {
        return Err(Error::InvalidParams(format!("cover time {t} must be > 0")));
    }
    if stats.w_hat <= 0.0 {
        return Err(Error::InvalidParams(
            "w_hat must be positive (survival conditioning)".into(),
        ));
    }
    let n = stats.n() as f64;
    let center = n * m.ln() + stats.w_hat.ln();
    let x = t / (2.0 * stats.s_n * stats.sigma_n_sq()) - center;
    let np1 = stats.n() as i32 + 1;
    let coeff = match Regime::classify(lambda, m) {
        Regime::BiasAboveMean => (lambda - 1.0) / (2.0 * lambda.powi(np1) * stats.s_n),
        Regime::BiasEqualsMean => (m - 1.0) / (2.0 * m.powi(np1) * stats.s_n),
        Regime::BiasBelowMean => {
            (m / lambda - 1.0) * (lambda - 1.0) / (2.0 * stats.w_hat * m.powi(np1))
        }
    };
    Ok(NormalizedSample {
        x,
        regime_x: coeff * t - center,
        regime: Regime::classify(lambda, m),
        raw_t: t,
    })
}
