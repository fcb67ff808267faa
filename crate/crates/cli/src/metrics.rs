//! Distances between scaled laws: Kolmogorov, total variation on the integer
//! lattice, and first Wasserstein.

use twoq::mm1exact::DiscreteDist;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// A pmf argument does not sum to 1.
    Unnormalized { total: f64 },
}

impl std::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricsError::Unnormalized { total } => {
                write!(f, "pmf must sum to 1, got {total}")
            }
        }
    }
}

impl std::error::Error for MetricsError {}

/// Kolmogorov distance `sup |F_a - F_b|` over the given grid. Callers supply
/// a grid fine enough for the laws being compared (step at most `r/4` for
/// `r`-lattice laws).
pub fn ks_distance(cdf_a: impl Fn(f64) -> f64, cdf_b: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|x| (cdf_a(*x) - cdf_b(*x)).abs())
        .fold(0.0, f64::max)
}

/// Exact Kolmogorov distance between a lattice law and a continuous CDF: the
/// supremum is attained at an atom, approached from one side or the other.
pub fn ks_discrete_vs_cdf(dist: &DiscreteDist, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for (v, p) in dist.values().iter().zip(dist.probs()) {
        let f = cdf(*v);
        worst = worst.max((acc - f).abs());
        acc += p;
        worst = worst.max((acc - f).abs());
    }
    // Mass beyond the stored support counts against the tail.
    worst.max(1.0 - acc)
}

/// Total variation `½ Σ |p - q|`; both arguments must be normalized. Shorter
/// vectors are zero-padded.
pub fn tv_distance(pmf_a: &[f64], pmf_b: &[f64]) -> Result<f64, MetricsError> {
    for pmf in [pmf_a, pmf_b] {
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(MetricsError::Unnormalized { total });
        }
    }
    let n = pmf_a.len().max(pmf_b.len());
    let at = |p: &[f64], i: usize| p.get(i).copied().unwrap_or(0.0);
    Ok((0..n)
        .map(|i| (at(pmf_a, i) - at(pmf_b, i)).abs())
        .sum::<f64>()
        / 2.0)
}

/// First Wasserstein distance `∫ |F_a - F_b| dx` by the trapezoid rule over
/// the grid.
pub fn wasserstein1(cdf_a: impl Fn(f64) -> f64, cdf_b: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in grid.windows(2) {
        let g0 = (cdf_a(w[0]) - cdf_b(w[0])).abs();
        let g1 = (cdf_a(w[1]) - cdf_b(w[1])).abs();
        acc += 0.5 * (g0 + g1) * (w[1] - w[0]);
    }
    acc
}

/// Uniform grid on `[0, hi]` with the given step.
pub fn uniform_grid(hi: f64, step: f64) -> Vec<f64> {
    let n = (hi / step).ceil() as usize + 1;
    (0..=n).map(|i| i as f64 * step).collect()
}
