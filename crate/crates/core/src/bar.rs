//! Exponent solvers and test-function machinery for the stationary equation.
//!
//! For each `θ` the exponents `η_i(θ)` and `ζ(θ)` are the unique roots of
//!
//! ```text
//! e^{θ}  E[e^{-η_i (T_{e,i} ∧ cap)}] = 1,
//! e^{-θ} E[e^{-ζ   (T_s   ∧ cap)}] = 1,
//! ```
//!
//! found by bracketed bisection on the monotone capped transform followed by
//! one Newton polish. Their second-order expansions in `rθ` have coefficients
//! `λ` and `½λ³σ_e²` (arrivals) and `-μ`, `½μ³σ_s²` (service);
//! [`expansion_error`] measures the gap to the exact root.
//!
//! [`limit_bar_residual`] and [`rbm2_residual`] evaluate the two stationary
//! identities satisfied by the limit law: the two-argument equation holds for
//! every `(θ₁, θ₂)` with `θ₂ <= 0`, while the single-argument diffusion
//! equation agrees with it exactly when the two service speeds coincide.

use crate::dists::{DistError, DistributionSpec};
use crate::limits::LimitDistribution;
use crate::model::QueueParams;

#[derive(Debug, Clone, PartialEq)]
pub enum BarError {
    /// The root lies outside the transform's convergence region
    /// (infinite cap only).
    NoRoot {
        theta: f64,
    },
    Dist(DistError),
}

impl std::fmt::Display for BarError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BarError::NoRoot { theta } => {
                write!(
                    f,
                    "no exponent root in the convergence region at theta = {theta}"
                )
            }
            BarError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BarError {}

impl From<DistError> for BarError {
    fn from(e: DistError) -> Self {
        BarError::Dist(e)
    }
}

/// Solves `e^{θ} E[e^{-s (T ∧ cap)}] = 1` for `s`.
pub fn solve_eta(spec: &DistributionSpec, theta: f64, cap: f64) -> Result<f64, BarError> {
    solve_exponent(spec, theta, cap)
}

/// Solves `e^{-θ} E[e^{-s (T ∧ cap)}] = 1` for `s`.
pub fn solve_zeta(spec: &DistributionSpec, theta: f64, cap: f64) -> Result<f64, BarError> {
    solve_exponent(spec, -theta, cap)
}

/// Root of `F(s) = e^{a} E[e^{-s(T ∧ cap)}] - 1`, which is strictly
/// decreasing in `s`.
fn solve_exponent(spec: &DistributionSpec, a: f64, cap: f64) -> Result<f64, BarError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let eval = |s: f64| -> Option<f64> {
        match spec.truncated_laplace(s, cap) {
            Ok(v) => Some(a.exp() * v - 1.0),
            // Divergent side of the domain: treat as +infinity.
            Err(DistError::Divergent { .. }) => None,
            Err(_) => None,
        }
    };

    // Bracket [-s0, s0] scaled by |a|+1, expanded geometrically. With an
    // infinite cap the lower edge clamps just above the divergence point.
    let s0 = (a.abs() + 1.0) / spec.mean();
    let mut lo = -s0;
    let mut hi = s0;
    let floor = if cap.is_infinite() {
        lower_domain_edge(spec)
    } else {
        f64::NEG_INFINITY
    };

    let mut f_hi = eval(hi).unwrap_or(f64::INFINITY);
    let mut grow = 0;
    while f_hi > 0.0 {
        hi *= 2.0;
        f_hi = eval(hi).unwrap_or(f64::INFINITY);
        grow += 1;
        if grow > 200 {
            return Err(BarError::NoRoot { theta: a });
        }
    }
    let clamp = move |s: f64| {
        if s <= floor {
            floor + (s0 + 1.0) * 1e-14 + floor.abs() * 1e-13
        } else {
            s
        }
    };
    lo = clamp(lo);
    let mut f_lo = eval(lo).unwrap_or(f64::INFINITY);
    grow = 0;
    while f_lo < 0.0 {
        let next = if lo < 0.0 { lo * 2.0 } else { lo - s0 };
        let next = clamp(next);
        if next == lo {
            // Pinned at the domain edge and still negative: no root.
            return Err(BarError::NoRoot { theta: a });
        }
        lo = next;
        f_lo = eval(lo).unwrap_or(f64::INFINITY);
        grow += 1;
        if grow > 200 {
            return Err(BarError::NoRoot { theta: a });
        }
    }

    // Bisection to 1e-14 relative width.
    let mut width = hi - lo;
    while width > 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        match eval(mid) {
            Some(f_mid) if f_mid < 0.0 => hi = mid,
            _ => lo = mid,
        }
        width = hi - lo;
    }
    let mut root = 0.5 * (lo + hi);

    // One Newton polish with a central-difference derivative.
    if let Some(f0) = eval(root) {
        let h = 1e-7 * root.abs().max(1e-3);
        if let (Some(fp), Some(fm)) = (eval(root + h), eval(root - h)) {
            let deriv = (fp - fm) / (2.0 * h);
            if deriv.is_finite() && deriv != 0.0 {
                let polished = root - f0 / deriv;
                if let Some(fpol) = eval(polished) {
                    if fpol.abs() < f0.abs() {
                        root = polished;
                    }
                }
            }
        }
    }
    Ok(root)
}

/// Infimum of the convergence region of the untruncated transform.
fn lower_domain_edge(spec: &DistributionSpec) -> f64 {
    match spec {
        DistributionSpec::Exponential { rate } => -rate,
        DistributionSpec::Erlang { rate, .. } => -rate,
        DistributionSpec::Hyperexponential { rates, .. } => {
            -rates.iter().cloned().fold(f64::INFINITY, f64::min)
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Which of the three input distributions an exponent belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentRole {
    ArrivalBelow,
    ArrivalAbove,
    Service,
}

/// `|root(rθ, cap = 1/r) - second-order expansion|` for the given role.
pub fn expansion_error(
    spec: &DistributionSpec,
    role: ExponentRole,
    theta: f64,
    r: f64,
) -> Result<f64, BarError> {
    assert!(r > 0.0 && r <= 1.0);
    let cap = 1.0 / r;
    let x = r * theta;
    let m = spec.moments();
    let taylor = match role {
        ExponentRole::ArrivalBelow | ExponentRole::ArrivalAbove => {
            let lambda = 1.0 / m.mean;
            lambda * x + 0.5 * lambda.powi(3) * m.variance * x * x
        }
        ExponentRole::Service => {
            let mu = 1.0 / m.mean;
            -mu * x + 0.5 * mu.powi(3) * m.variance * x * x
        }
    };
    let root = match role {
        ExponentRole::ArrivalBelow | ExponentRole::ArrivalAbove => solve_eta(spec, x, cap)?,
        ExponentRole::Service => solve_zeta(spec, x, cap)?,
    };
    Ok((root - taylor).abs())
}

/// The solved exponents for one `θ` and one system.
#[derive(Debug, Clone, Copy)]
pub struct ExponentPair {
    pub theta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub zeta: f64,
    pub cap: f64,
}

impl ExponentPair {
    /// Solves all three defining equations at `θ` with cap `1/r`.
    pub fn solve(params: &QueueParams, theta: f64, r: f64) -> Result<Self, BarError> {
        let cap = 1.0 / r;
        Ok(ExponentPair {
            theta,
            eta1: solve_eta(params.arrival_below(), theta, cap)?,
            eta2: solve_eta(params.arrival_above(), theta, cap)?,
            zeta: solve_zeta(params.workload(), theta, cap)?,
            cap,
        })
    }

    /// Residuals of the three defining equations (all should be `<= 1e-12`).
    pub fn residuals(&self, params: &QueueParams) -> (f64, f64, f64) {
        let check = |spec: &DistributionSpec, sign: f64, s: f64| {
            (sign * self.theta).exp() * spec.truncated_laplace(s, self.cap).unwrap() - 1.0
        };
        (
            check(params.arrival_below(), 1.0, self.eta1).abs(),
            check(params.arrival_above(), 1.0, self.eta2).abs(),
            check(params.workload(), -1.0, self.zeta).abs(),
        )
    }
}

/// The exponential test function evaluated at a state `(z, x₁, x₂)`:
/// `e^{θ₁ z} e^{-η₁(x₁∧cap) - ζ(θ₁)(x₂∧cap)}` below the threshold and the
/// `θ₂` analog above it.
pub fn test_function(
    below: &ExponentPair,
    above: &ExponentPair,
    z: u64,
    x1: f64,
    x2: f64,
    ell1: u64,
) -> f64 {
    if z <= ell1 {
        (below.theta * z as f64).exp()
            * (-below.eta1 * x1.min(below.cap) - below.zeta * x2.min(below.cap)).exp()
    } else {
        (above.theta * z as f64).exp()
            * (-above.eta2 * x1.min(above.cap) - above.zeta * x2.min(above.cap)).exp()
    }
}

/// Left side of the two-argument stationary identity of the limit law,
/// evaluated with `φ̃_i(θ) = Ã_i φ̃_{i|cd}(θ)`. Vanishes identically for
/// `θ₁ ∈ R`, `θ₂ <= 0`.
///
/// The `b₁ = 0` case is obtained by the `b₁ ↓ 0` limit; here it is evaluated
/// at `b₁ = 1e-8`, which keeps the residual below about `1e-7`.
pub fn limit_bar_residual(ld: &LimitDistribution, theta1: f64, theta2: f64) -> f64 {
    debug_assert!(theta2 <= 0.0);
    let ld_eff;
    let ld = if ld.b1 == 0.0 {
        ld_eff = LimitDistribution::new(
            ld.ell1,
            1e-8,
            ld.b2,
            ld.c1,
            ld.c2,
            ld.mu,
            ld.sigma1_sq,
            ld.sigma2_sq,
        )
        .expect("perturbed limit law");
        &ld_eff
    } else {
        ld
    };
    let (a1, a2) = ld.weights();
    let phi1 = a1 * ld.mgf_cond(1, theta1).expect("component 1 MGF");
    let phi2 = a2 * ld.mgf_cond(2, theta2).expect("component 2 MGF");
    let (b1, b2) = (ld.b1, ld.b2);
    let (beta1, beta2) = (ld.beta1(), ld.beta2());
    let half_cs1 = 0.5 * ld.c1 * ld.sigma1_sq;
    let half_cs2 = 0.5 * ld.c2 * ld.sigma2_sq;
    let ebl = (beta1 * ld.ell1).exp();

    let gen1 = (-b1 * theta1 + half_cs1 * theta1 * theta1) * phi1;
    let gen2 = (-b2 * theta2 + half_cs2 * theta2 * theta2) * phi2;
    let boundary0 = beta1 * ebl / (ebl - 1.0) * theta1 * half_cs1 * a1;
    let boundary1 = -beta1 * (theta1 * ld.ell1).exp() / (ebl - 1.0) * theta1 * half_cs1 * a1;
    let boundary2 = beta2 * (theta2 * ld.ell1).exp() * theta2 * half_cs2 * a2;

    (gen1 + gen2 + boundary0 + boundary1 + boundary2).abs()
}

/// Left side of the single-argument diffusion stationary equation evaluated
/// with the limit law's MGF pieces; zero exactly when `c₁ = c₂`.
pub fn rbm2_residual(ld: &LimitDistribution, theta: f64) -> f64 {
    debug_assert!(theta <= 0.0);
    let ld_eff;
    let ld = if ld.b1 == 0.0 {
        ld_eff = LimitDistribution::new(
            ld.ell1,
            1e-8,
            ld.b2,
            ld.c1,
            ld.c2,
            ld.mu,
            ld.sigma1_sq,
            ld.sigma2_sq,
        )
        .expect("perturbed limit law");
        &ld_eff
    } else {
        ld
    };
    let (a1, a2) = ld.weights();
    let phi1 = a1 * ld.mgf_cond(1, theta).expect("component 1 MGF");
    let phi2 = a2 * ld.mgf_cond(2, theta).expect("component 2 MGF");
    let beta1 = ld.beta1();
    let half_cs1 = 0.5 * ld.c1 * ld.sigma1_sq;
    let half_cs2 = 0.5 * ld.c2 * ld.sigma2_sq;
    let ebl = (beta1 * ld.ell1).exp();

    let gen1 = (-ld.b1 * theta + half_cs1 * theta * theta) * phi1;
    let gen2 = (-ld.b2 * theta + half_cs2 * theta * theta) * phi2;
    let boundary = beta1 * ebl / (ebl - 1.0) * theta * half_cs1 * a1;

    (gen1 + gen2 + boundary).abs()
}
