//! The two-level queue model: one concrete parameterized system and the
//! heavy-traffic family that generates a sequence of systems indexed by
//! `r ∈ (0, 1]`.
//!
//! Under the family construction the arrival rates are exactly linear in `r`,
//! `λ_i(r) = c_i μ - r μ b_i`, the threshold is `round(ℓ₁/r)`, and the three
//! distribution shapes are rescaled to the target means with their squared
//! coefficients of variation held fixed. This makes `(1 - ρ_i(r))/r = b_i/c_i`
//! hold exactly for every instantiated system.

use crate::dists::{DistError, DistributionSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// The regime above the threshold must be stable: `ρ₂ < 1`.
    Unstable {
        rho2: f64,
    },
    /// Threshold must be a positive integer.
    BadThreshold(u64),
    /// Rate or drift constraints violated.
    BadParameter(String),
    Dist(DistError),
}

impl std::fmt::Display for ModelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelError::Unstable { rho2 } => {
                write!(f, "upper regime unstable: rho2 = {rho2} >= 1")
            }
            ModelError::BadThreshold(l) => write!(f, "threshold must be >= 1, got {l}"),
            ModelError::BadParameter(msg) => write!(f, "{msg}"),
            ModelError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<DistError> for ModelError {
    fn from(e: DistError) -> Self {
        ModelError::Dist(e)
    }
}

/// Traffic rates and intensities of one system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficQuantities {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
    pub rho1: f64,
    pub rho2: f64,
}

/// One concrete two-level queue.
///
/// Arrivals renew with `arrival_below` while the pre-arrival queue length is
/// `< threshold` and with `arrival_above` otherwise; the server works at speed
/// `speed_below` while `1 <= L <= threshold` and `speed_above` while
/// `L > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueParams {
    threshold: u64,
    arrival_below: DistributionSpec,
    arrival_above: DistributionSpec,
    workload: DistributionSpec,
    speed_below: f64,
    speed_above: f64,
}

impl QueueParams {
    pub fn new(
        threshold: u64,
        arrival_below: DistributionSpec,
        arrival_above: DistributionSpec,
        workload: DistributionSpec,
        speed_below: f64,
        speed_above: f64,
    ) -> Result<Self, ModelError> {
        if threshold < 1 {
            return Err(ModelError::BadThreshold(threshold));
        }
        if !(speed_below > 0.0 && speed_below.is_finite())
            || !(speed_above > 0.0 && speed_above.is_finite())
        {
            return Err(ModelError::BadParameter(format!(
                "service speeds must be positive, got {speed_below}, {speed_above}"
            )));
        }
        for spec in [&arrival_below, &arrival_above, &workload] {
            spec.validate()?;
        }
        let params = QueueParams {
            threshold,
            arrival_below,
            arrival_above,
            workload,
            speed_below,
            speed_above,
        };
        let tq = params.traffic_quantities();
        if tq.rho2 >= 1.0 {
            return Err(ModelError::Unstable { rho2: tq.rho2 });
        }
        Ok(params)
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn arrival_below(&self) -> &DistributionSpec {
        &self.arrival_below
    }

    pub fn arrival_above(&self) -> &DistributionSpec {
        &self.arrival_above
    }

    pub fn workload(&self) -> &DistributionSpec {
        &self.workload
    }

    pub fn speed_below(&self) -> f64 {
        self.speed_below
    }

    pub fn speed_above(&self) -> f64 {
        self.speed_above
    }

    /// Arrival/service rates as reciprocal means plus the two intensities
    /// `ρ_i = λ_i / (c_i μ)`.
    pub fn traffic_quantities(&self) -> TrafficQuantities {
        let lambda1 = 1.0 / self.arrival_below.mean();
        let lambda2 = 1.0 / self.arrival_above.mean();
        let mu = 1.0 / self.workload.mean();
        TrafficQuantities {
            lambda1,
            lambda2,
            mu,
            rho1: lambda1 / (self.speed_below * mu),
            rho2: lambda2 / (self.speed_above * mu),
        }
    }

    /// True when all three distributions are exponential, the case covered by
    /// the exact chain solver.
    pub fn is_exponential(&self) -> bool {
        [&self.arrival_below, &self.arrival_above, &self.workload]
            .iter()
            .all(|s| matches!(s, DistributionSpec::Exponential { .. }))
    }
}

/// Heavy-traffic family: limit rates `λ_i = c_i μ`, drifts `b₁ ∈ R`,
/// `b₂ > 0`, limit threshold `ℓ₁ > 0`, and shape templates for the three
/// distributions (family and SCV fixed along the sequence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTrafficFamily {
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
    pub b1: f64,
    pub b2: f64,
    pub ell1: f64,
    pub arrival_below_shape: DistributionSpec,
    pub arrival_above_shape: DistributionSpec,
    pub workload_shape: DistributionSpec,
}

impl HeavyTrafficFamily {
    /// Validates the family-level constraints. `b₂ > 0` and `ℓ₁ > 0` are
    /// errors when violated; the variance-matching condition (equal arrival
    /// SCVs when `c₁ = c₂`) is reported by [`Self::sigma_condition_holds`]
    /// instead so experiments can probe its necessity.
    pub fn validate(&self) -> Result<(), ModelError> {
        for v in [self.mu, self.c1, self.c2] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::BadParameter(format!(
                    "mu and speeds must be positive, got mu={}, c1={}, c2={}",
                    self.mu, self.c1, self.c2
                )));
            }
        }
        if !(self.b2 > 0.0 && self.b2.is_finite()) {
            return Err(ModelError::BadParameter(format!(
                "b2 must be > 0, got {}",
                self.b2
            )));
        }
        if !self.b1.is_finite() {
            return Err(ModelError::BadParameter("b1 must be finite".to_string()));
        }
        if !(self.ell1 > 0.0 && self.ell1.is_finite()) {
            return Err(ModelError::BadParameter(format!(
                "ell1 must be > 0, got {}",
                self.ell1
            )));
        }
        self.arrival_below_shape.validate()?;
        self.arrival_above_shape.validate()?;
        self.workload_shape.validate()?;
        Ok(())
    }

    /// Limit arrival rates `λ_i = c_i μ`.
    pub fn limit_rates(&self) -> (f64, f64) {
        (self.c1 * self.mu, self.c2 * self.mu)
    }

    /// Whether the arrival-variance matching condition holds: when the limit
    /// rates coincide (`c₁ = c₂`) the two limit arrival SCVs must agree.
    /// Violations are allowed but flagged so callers can warn.
    pub fn sigma_condition_holds(&self) -> bool {
        if (self.c1 - self.c2).abs() > 1e-12 * self.c1.max(self.c2) {
            return true;
        }
        let scv1 = self.arrival_below_shape.scv();
        let scv2 = self.arrival_above_shape.scv();
        (scv1 - scv2).abs() <= 1e-9 * (1.0 + scv1.max(scv2))
    }

    /// Builds the `r`-th system: `λ_i(r) = c_i μ - r μ b_i` exactly,
    /// `ℓ₁(r) = round(ℓ₁/r)`, shapes rescaled with SCV fixed.
    pub fn instantiate(&self, r: f64) -> Result<QueueParams, ModelError> {
        self.validate()?;
        if !(r > 0.0 && r <= 1.0) {
            return Err(ModelError::BadParameter(format!(
                "r must lie in (0, 1], got {r}"
            )));
        }
        let lambda1 = self.c1 * self.mu - r * self.mu * self.b1;
        let lambda2 = self.c2 * self.mu - r * self.mu * self.b2;
        if lambda1 <= 0.0 || lambda2 <= 0.0 {
            return Err(ModelError::BadParameter(format!(
                "r = {r} too large: arrival rates {lambda1}, {lambda2}"
            )));
        }
        let threshold = (self.ell1 / r).round() as u64;
        if threshold < 1 {
            return Err(ModelError::BadThreshold(threshold));
        }
        QueueParams::new(
            threshold,
            self.arrival_below_shape.scale_to_mean(1.0 / lambda1)?,
            self.arrival_above_shape.scale_to_mean(1.0 / lambda2)?,
            self.workload_shape.scale_to_mean(1.0 / self.mu)?,
            self.c1,
            self.c2,
        )
    }
}
