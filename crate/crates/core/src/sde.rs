//! Reflected Euler-Maruyama integration of the regime-switching diffusion.
//!
//! The process has drift `-b₁μ` and volatility `√(c₁μ)·σ₁` on `[0, ℓ₁]`,
//! drift `-b₂μ` and volatility `√(c₂μ)·σ₂` above, and reflects at the origin.
//! Reflection is realized by projection (`max(0, ·)`), which carries an
//! `O(√h)` weak bias concentrated near the boundary; coefficients are
//! evaluated at the left endpoint of each step.

use crate::limits::LimitDistribution;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub enum SdeError {
    BadParameter(String),
}

impl std::fmt::Display for SdeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SdeError::BadParameter(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for SdeError {}

/// Coefficients and step size of the reflected two-regime diffusion.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    pub ell1: f64,
    /// Downward drift magnitude on `[0, ℓ₁]` (may be any sign).
    pub drift_below: f64,
    /// Downward drift magnitude above `ℓ₁`; must be positive for a
    /// stationary law to exist.
    pub drift_above: f64,
    pub vol_below: f64,
    pub vol_above: f64,
    pub h: f64,
}

impl DiffusionSpec {
    pub fn new(
        ell1: f64,
        drift_below: f64,
        drift_above: f64,
        vol_below: f64,
        vol_above: f64,
        h: f64,
    ) -> Result<Self, SdeError> {
        if !(drift_above > 0.0) {
            return Err(SdeError::BadParameter(format!(
                "upper drift must be > 0 for stationarity, got {drift_above}"
            )));
        }
        if !(h > 0.0 && vol_below > 0.0 && vol_above > 0.0 && ell1 > 0.0) {
            return Err(SdeError::BadParameter(
                "need h, volatilities, ell1 > 0".to_string(),
            ));
        }
        Ok(DiffusionSpec {
            ell1,
            drift_below,
            drift_above,
            vol_below,
            vol_above,
            h,
        })
    }

    /// Coefficients matching a limit law: drift `b_i μ`, volatility
    /// `√(c_i μ)·σ_i`, so the stationary tail rates equal `β_i`.
    pub fn from_limit(ld: &LimitDistribution, h: f64) -> Result<Self, SdeError> {
        DiffusionSpec::new(
            ld.ell1,
            ld.b1 * ld.mu,
            ld.b2 * ld.mu,
            (ld.c1 * ld.mu * ld.sigma1_sq).sqrt(),
            (ld.c2 * ld.mu * ld.sigma2_sq).sqrt(),
            h,
        )
    }

    /// Exponential tail rate of the upper regime, `2 b₂μ / vol₂²`.
    pub fn tail_rate(&self) -> f64 {
        2.0 * self.drift_above / (self.vol_above * self.vol_above)
    }

    /// Default step `1e-3 · min(1, 1/β₂²)`, resolving the boundary layer.
    pub fn default_h(ell1: f64, drift_above: f64, vol_above: f64) -> f64 {
        let beta2 = 2.0 * drift_above / (vol_above * vol_above);
        let _ = ell1;
        1e-3 * (1.0f64).min(1.0 / (beta2 * beta2))
    }

    /// Relaxation-time proxy `max(1/β₂², ℓ₁²/vol₁²)` used for burn-in sizing.
    pub fn relaxation_proxy(&self) -> f64 {
        let beta2 = self.tail_rate();
        (1.0 / (beta2 * beta2)).max(self.ell1 * self.ell1 / (self.vol_below * self.vol_below))
    }
}

/// One projected Euler step: `z' = max(0, z + σ(z)√h N - b(z) h)`.
#[inline]
pub fn step(z: f64, spec: &DiffusionSpec, gaussian: f64) -> f64 {
    debug_assert!(z >= 0.0);
    let (b, v) = if z <= spec.ell1 {
        (spec.drift_below, spec.vol_below)
    } else {
        (spec.drift_above, spec.vol_above)
    };
    (z + v * spec.h.sqrt() * gaussian - b * spec.h).max(0.0)
}

/// Empirical CDF of thinned stationary samples.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(|a, b| a.total_cmp(b));
        EmpiricalCdf { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.sorted.partition_point(|v| *v <= x);
        idx as f64 / self.sorted.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Exact Kolmogorov distance to a continuous CDF, checking both sides of
    /// every jump.
    pub fn ks_distance_to(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        let mut worst: f64 = 0.0;
        for (i, x) in self.sorted.iter().enumerate() {
            let f = cdf(*x);
            worst = worst.max(((i + 1) as f64 / n - f).abs());
            worst = worst.max((i as f64 / n - f).abs());
        }
        worst
    }

    /// Dvoretzky-Kiefer-Wolfowitz band half-width at confidence `1 - alpha`
    /// (treats the thinned samples as independent, so it is a lower bound on
    /// the true uncertainty when they are correlated).
    pub fn dkw_band(&self, alpha: f64) -> f64 {
        ((2.0 / alpha).ln() / (2.0 * self.sorted.len() as f64)).sqrt()
    }
}

/// Integrates one trajectory and collects thinned post-burn-in samples.
///
/// `burn_in` is in time units (defaulting callers should use
/// `10 × relaxation_proxy()`), `thinning` in steps.
pub fn simulate_stationary(
    spec: &DiffusionSpec,
    seed: u64,
    burn_in: f64,
    n_samples: usize,
    thinning: usize,
) -> EmpiricalCdf {
    assert!(n_samples > 0 && thinning > 0);
    let mut stream = RngStream::new(seed, 0);
    let mut z = 0.0f64;
    let burn_steps = (burn_in / spec.h).ceil() as u64;
    for _ in 0..burn_steps {
        z = step(z, spec, stream.next_gaussian());
    }
    let mut samples = Vec::with_capacity(n_samples);
    while samples.len() < n_samples {
        for _ in 0..thinning {
            z = step(z, spec, stream.next_gaussian());
        }
        samples.push(z);
    }
    EmpiricalCdf::new(samples)
}
