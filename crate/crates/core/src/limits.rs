//! Closed-form heavy-traffic limit objects.
//!
//! The scaled queue length converges to a mixture `ν̃`: below the threshold
//! `ℓ₁` a truncated exponential with rate `β₁ = 2 b₁ / (c₁ σ₁²)` (uniform when
//! `b₁ = 0`), above it a shifted exponential with rate `β₂`, mixed with
//! weights `Ã₁`, `Ã₂`. The variance constants combine arrival and service
//! variability: `σ_i² = λ_i² σ_{e,i}² + μ² σ_s²`.

use crate::model::HeavyTrafficFamily;
use crate::rng::RngStream;

/// Switch to Taylor evaluation this close to a removable singularity.
const POLE_WINDOW: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum LimitError {
    /// MGF argument at or beyond the exponential tail rate.
    MgfDomain {
        theta: f64,
        beta2: f64,
    },
    BadParameter(String),
}

impl std::fmt::Display for LimitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LimitError::MgfDomain { theta, beta2 } => {
                write!(f, "MGF undefined: theta = {theta} >= beta2 = {beta2}")
            }
            LimitError::BadParameter(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for LimitError {}

/// `σ² = λ² σ_e² + μ² σ_s²` and `β = 2b / (c σ²)`.
pub fn sigma_beta(lambda: f64, sigma_e: f64, mu: f64, sigma_s: f64, c: f64, b: f64) -> (f64, f64) {
    let sigma_sq = lambda * lambda * sigma_e * sigma_e + mu * mu * sigma_s * sigma_s;
    (sigma_sq, 2.0 * b / (c * sigma_sq))
}

/// Mixture weight `Ã₁` (and `Ã₂ = 1 - Ã₁`) of the limit law.
///
/// The `b₁ = 0` branch is selected exactly on `b1 == 0.0`; the general branch
/// stays numerically stable for tiny `b₁` and matches the zero branch in the
/// limit.
pub fn weights(b1: f64, b2: f64, c1: f64, c2: f64, sigma1_sq: f64, ell1: f64) -> (f64, f64) {
    let a1 = if b1 == 0.0 {
        2.0 * b2 * ell1 / (c2 * sigma1_sq + 2.0 * b2 * ell1)
    } else {
        let beta1 = 2.0 * b1 / (c1 * sigma1_sq);
        let em = exp_m1_stable(beta1 * ell1);
        c1 * b2 * em / (c2 * b1 + c1 * b2 * em)
    };
    (a1, 1.0 - a1)
}

/// Mixture weights of the all-exponential specialization, written directly in
/// terms of `β₁`, `β₂`.
pub fn exp_weights(beta1: f64, beta2: f64, ell1: f64, b1_is_zero: bool) -> (f64, f64) {
    let a1 = if b1_is_zero {
        beta2 * ell1 / (1.0 + beta2 * ell1)
    } else {
        let em = exp_m1_stable(beta1 * ell1);
        beta2 * em / (beta1 + beta2 * em)
    };
    (a1, 1.0 - a1)
}

/// Event-rate limit `α̃_e = λ₁ Ã₁ + λ₂ Ã₂`.
pub fn alpha_limit(lambda1: f64, lambda2: f64, a1: f64, a2: f64) -> f64 {
    lambda1 * a1 + lambda2 * a2
}

/// Limit of `(1 - ρ) E[L]`, the scaled mean queue length: the product of the
/// `P(L = 0)/r` limit and the mixture mean.
pub fn mean_l_limit(
    b1: f64,
    b2: f64,
    c1: f64,
    c2: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
    ell1: f64,
) -> f64 {
    if b1 == 0.0 {
        sigma1_sq
            * (2.0 * b2 * ell1 * (b2 * ell1 + c2 * sigma1_sq) + c2 * c2 * sigma1_sq * sigma2_sq)
            / (2.0 * (2.0 * b2 * ell1 + c2 * sigma1_sq).powi(2))
    } else {
        let beta1 = 2.0 * b1 / (c1 * sigma1_sq);
        let em = exp_m1_stable(beta1 * ell1);
        let d0 = c2 * b1 + c1 * b2 * em;
        (c1 * c1 * b2 * b2 * sigma1_sq * em
            + 2.0 * b1 * b2 * ell1 * (c2 * b1 - c1 * b2)
            + c2 * c2 * b1 * b1 * sigma2_sq)
            * (beta1 * ell1).exp()
            / (2.0 * d0 * d0)
    }
}

/// The heavy-traffic mixture law of the scaled queue length.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDistribution {
    pub ell1: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    beta1: f64,
    beta2: f64,
    a1: f64,
    a2: f64,
}

impl LimitDistribution {
    pub fn new(
        ell1: f64,
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
        mu: f64,
        sigma1_sq: f64,
        sigma2_sq: f64,
    ) -> Result<Self, LimitError> {
        if !(ell1 > 0.0 && b2 > 0.0 && c1 > 0.0 && c2 > 0.0 && mu > 0.0) {
            return Err(LimitError::BadParameter(format!(
                "need ell1, b2, c1, c2, mu > 0; got {ell1}, {b2}, {c1}, {c2}, {mu}"
            )));
        }
        if !(sigma1_sq > 0.0 && sigma2_sq > 0.0) {
            return Err(LimitError::BadParameter(
                "variance constants must be positive".to_string(),
            ));
        }
        let beta1 = 2.0 * b1 / (c1 * sigma1_sq);
        let beta2 = 2.0 * b2 / (c2 * sigma2_sq);
        let (a1, a2) = weights(b1, b2, c1, c2, sigma1_sq, ell1);
        Ok(LimitDistribution {
            ell1,
            b1,
            b2,
            c1,
            c2,
            mu,
            sigma1_sq,
            sigma2_sq,
            beta1,
            beta2,
            a1,
            a2,
        })
    }

    /// Builds the limit law of a family, using the limit rates `λ_i = c_i μ`
    /// and the fixed SCVs of the shape templates:
    /// `σ_i² = scv_{e,i} + scv_s`.
    pub fn from_family(family: &HeavyTrafficFamily) -> Result<Self, LimitError> {
        let scv_s = family.workload_shape.scv();
        let sigma1_sq = family.arrival_below_shape.scv() + scv_s;
        let sigma2_sq = family.arrival_above_shape.scv() + scv_s;
        LimitDistribution::new(
            family.ell1,
            family.b1,
            family.b2,
            family.c1,
            family.c2,
            family.mu,
            sigma1_sq,
            sigma2_sq,
        )
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    /// Mixture weights `(Ã₁, Ã₂)`.
    pub fn weights(&self) -> (f64, f64) {
        (self.a1, self.a2)
    }

    /// Conditional density below the threshold (integrates to 1 on `[0, ℓ₁]`).
    pub fn density_below(&self, x: f64) -> f64 {
        if !(0.0..=self.ell1).contains(&x) {
            return 0.0;
        }
        if self.b1 == 0.0 {
            1.0 / self.ell1
        } else {
            let e = (self.beta1 * self.ell1).exp();
            e * self.beta1 * (-self.beta1 * x).exp() / (e - 1.0)
        }
    }

    /// Conditional density above the threshold (integrates to 1 on `(ℓ₁, ∞)`).
    pub fn density_above(&self, x: f64) -> f64 {
        if x <= self.ell1 {
            return 0.0;
        }
        self.beta2 * (-self.beta2 * (x - self.ell1)).exp()
    }

    /// Mixture density `Ã₁ h₁ + Ã₂ h₂`.
    pub fn density(&self, x: f64) -> f64 {
        self.a1 * self.density_below(x) + self.a2 * self.density_above(x)
    }

    /// Conditional CDF of the below-threshold part.
    fn cdf_below(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.ell1 {
            1.0
        } else if self.b1 == 0.0 {
            x / self.ell1
        } else {
            // C (1 - e^{-beta1 x}) with C = e^{b l}/(e^{b l} - 1)
            let num = -exp_m1_stable(-self.beta1 * x);
            let den = -exp_m1_stable(-self.beta1 * self.ell1);
            num / den
        }
    }

    /// Mixture CDF.
    pub fn mixture_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x <= self.ell1 {
            self.a1 * self.cdf_below(x)
        } else {
            self.a1 + self.a2 * (1.0 - (-self.beta2 * (x - self.ell1)).exp())
        }
    }

    /// Mean of the below-threshold conditional law.
    pub fn cond_mean_below(&self) -> f64 {
        if self.b1 == 0.0 {
            0.5 * self.ell1
        } else {
            1.0 / self.beta1 - self.ell1 / exp_m1_stable(self.beta1 * self.ell1)
        }
    }

    /// Mean of the above-threshold conditional law.
    pub fn cond_mean_above(&self) -> f64 {
        self.ell1 + 1.0 / self.beta2
    }

    /// Mixture mean.
    pub fn mixture_mean(&self) -> f64 {
        self.a1 * self.cond_mean_below() + self.a2 * self.cond_mean_above()
    }

    /// `α̃_e` with the limit rates `λ_i = c_i μ`.
    pub fn alpha_e(&self) -> f64 {
        alpha_limit(self.c1 * self.mu, self.c2 * self.mu, self.a1, self.a2)
    }

    /// Limit of `P(L = 0)/r`.
    pub fn p0_over_r_limit(&self) -> f64 {
        if self.b1 == 0.0 {
            self.sigma1_sq * self.b2 / (self.c2 * self.sigma1_sq + 2.0 * self.b2 * self.ell1)
        } else {
            let em = exp_m1_stable(self.beta1 * self.ell1);
            self.b1 * self.b2 * (self.beta1 * self.ell1).exp()
                / (self.c2 * self.b1 + self.c1 * self.b2 * em)
        }
    }

    /// Limit of the scaled boundary probability `p_{1,l1}/r` along the
    /// exponential-family sweep.
    pub fn p1_ell1_scaled_limit(&self) -> f64 {
        let (l1, l2) = (self.c1 * self.mu, self.c2 * self.mu);
        if self.b1 == 0.0 {
            l2 * self.beta2 / ((l1 + l2) * (1.0 + self.beta2 * self.ell1))
        } else {
            let em = exp_m1_stable(self.beta1 * self.ell1);
            l2 * self.beta1 * self.beta2 / ((l1 + l2) * (self.beta1 + self.beta2 * em))
        }
    }

    /// Limit of `(1 - ρ) E[L]`.
    pub fn mean_l_limit(&self) -> f64 {
        mean_l_limit(
            self.b1,
            self.b2,
            self.c1,
            self.c2,
            self.sigma1_sq,
            self.sigma2_sq,
            self.ell1,
        )
    }

    /// Conditional moment generating function `φ̃_{i|cd}(θ)` for `i ∈ {1, 2}`.
    ///
    /// `i = 1` is entire in `θ`; `i = 2` requires `θ < β₂`. Removable
    /// singularities (`θ = 0` in the uniform branch, `θ = β₁` otherwise) are
    /// evaluated by a three-term Taylor expansion inside a `1e-6` window.
    pub fn mgf_cond(&self, i: usize, theta: f64) -> Result<f64, LimitError> {
        match i {
            1 => {
                let l = self.ell1;
                if self.b1 == 0.0 {
                    if theta.abs() < POLE_WINDOW {
                        let u = theta * l;
                        Ok(1.0 + u / 2.0 + u * u / 6.0)
                    } else {
                        Ok(exp_m1_stable(theta * l) / (l * theta))
                    }
                } else {
                    let b = self.beta1;
                    let ebl = (b * l).exp();
                    if (theta - b).abs() < POLE_WINDOW {
                        let u = (theta - b) * l;
                        Ok(b / (ebl - 1.0) * ebl * l * (1.0 + u / 2.0 + u * u / 6.0))
                    } else {
                        Ok(b * (ebl - (theta * l).exp()) / ((ebl - 1.0) * (b - theta)))
                    }
                }
            }
            2 => {
                if theta >= self.beta2 {
                    return Err(LimitError::MgfDomain {
                        theta,
                        beta2: self.beta2,
                    });
                }
                Ok((theta * self.ell1).exp() * self.beta2 / (self.beta2 - theta))
            }
            _ => Err(LimitError::BadParameter(format!(
                "component index must be 1 or 2, got {i}"
            ))),
        }
    }

    /// Draws from the mixture: choose the component by weight, then invert the
    /// conditional CDF.
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        let pick = stream.next_f64();
        let u = stream.next_f64();
        if pick < self.a1 {
            if self.b1 == 0.0 {
                u * self.ell1
            } else {
                // invert C(1 - e^{-beta1 x}) = u
                let c = (self.beta1 * self.ell1).exp() / exp_m1_stable(self.beta1 * self.ell1);
                -(1.0 - u / c).ln() / self.beta1
            }
        } else {
            self.ell1 - (1.0 - u).ln() / self.beta2
        }
    }
}

/// `e^x - 1` via `exp_m1` (keeps precision for small `|x|`).
fn exp_m1_stable(x: f64) -> f64 {
    x.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::DistributionSpec;

    fn ld(b1: f64) -> LimitDistribution {
        // mu = 1, c = 1, sigma^2 = 2 (exponential case), b2 = 1, ell1 = 1
        LimitDistribution::new(1.0, b1, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0).unwrap()
    }

    /// Composite Simpson integration, test-only oracle.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn sigma_beta_closed_forms() {
        assert_eq!(sigma_beta(1.0, 1.0, 1.0, 1.0, 1.0, 0.5), (2.0, 0.5));
        let (_, beta) = sigma_beta(1.3, 0.4, 2.0, 0.7, 1.5, 0.0);
        assert_eq!(beta, 0.0);
        let (s, b) = sigma_beta(2.0, 0.5, 1.0, 1.0, 2.0, 1.0);
        assert!((s - 2.0).abs() < 1e-15);
        assert!((b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_spot_values() {
        let uniform = LimitDistribution::new(2.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0).unwrap();
        assert!((uniform.density_below(1.0) - 0.5).abs() < 1e-15);

        // beta1 = 1 via b1 = 1, c1 = 1, sigma1^2 = 2; ell1 = ln 2 -> h(0) = 2
        let l = LimitDistribution::new(2f64.ln(), 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0).unwrap();
        assert!((l.beta1() - 1.0).abs() < 1e-15);
        assert!((l.density_below(0.0) - 2.0).abs() < 1e-12);

        let tail = ld(0.5);
        assert!((tail.density_above(2.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(tail.density_above(0.5), 0.0);
        assert_eq!(tail.density_below(1.5), 0.0);
    }

    #[test]
    fn densities_normalize() {
        for b1 in [0.0, -0.7, 0.5, 2.0] {
            let l = ld(b1);
            let below = simpson(|x| l.density_below(x), 0.0, l.ell1, 20_000);
            assert!((below - 1.0).abs() < 1e-10, "b1={b1}: {below}");
            // Start a hair above the threshold: the density jumps there and
            // Simpson needs a continuous integrand.
            let lo = l.ell1 * (1.0 + 1e-13);
            let hi = l.ell1 + 40.0 / l.beta2();
            let above = simpson(|x| l.density_above(x), lo, hi, 40_000);
            let want = 1.0 - (-40.0f64).exp();
            assert!((above - want).abs() < 1e-10, "b1={b1}: {above}");
        }
    }

    #[test]
    fn weight_examples() {
        let (a1, a2) = weights(0.0, 1.0, 1.0, 1.0, 2.0, 1.0);
        assert!((a1 - 0.5).abs() < 1e-15 && (a2 - 0.5).abs() < 1e-15);

        // beta1 = 1 (b1 = 1, c1 = 1, sigma1^2 = 2), ell1 = ln 2
        let (a1, _) = weights(1.0, 1.0, 1.0, 1.0, 2.0, 2f64.ln());
        assert!((a1 - 0.5).abs() < 1e-15);

        // Continuity of the two branches at b1 -> 0.
        let (z, _) = weights(0.0, 1.0, 1.0, 1.0, 2.0, 1.0);
        let (t, _) = weights(1e-8, 1.0, 1.0, 1.0, 2.0, 1.0);
        assert!((z - t).abs() < 1e-6);
    }

    #[test]
    fn exp_weight_examples() {
        let (a1, a2) = exp_weights(0.0, 1.0, 1.0, true);
        assert!((a1 - 0.5).abs() < 1e-15 && (a2 - 0.5).abs() < 1e-15);
        let (a1, _) = exp_weights(1.0, 1.0, 2f64.ln(), false);
        assert!((a1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_specialization_matches_general_weights() {
        // With sigma_i^2 = 2 and beta_i = b_i/c_i the two weight formulas agree.
        for (b1, b2, c1, c2, l) in [
            (0.5, 1.0, 1.0, 1.0, 1.0),
            (0.0, 0.7, 1.0, 1.0, 2.0),
            (-0.4, 1.3, 1.0, 1.0, 0.8),
            (1.1, 0.6, 1.0, 1.0, 3.0),
        ] {
            let (g1, g2) = weights(b1, b2, c1, c2, 2.0, l);
            let (e1, e2) = exp_weights(b1 / c1, b2 / c2, l, b1 == 0.0);
            assert!((g1 - e1).abs() < 1e-15, "{b1} {b2}: {g1} vs {e1}");
            assert!((g2 - e2).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_cdf_and_alpha() {
        let l = ld(0.5);
        let (a1, _) = l.weights();
        assert!((l.mixture_cdf(l.ell1) - a1).abs() < 1e-14);
        assert!((l.mixture_cdf(200.0) - 1.0).abs() < 1e-14);
        assert_eq!(l.mixture_cdf(-1.0), 0.0);

        assert!((alpha_limit(1.0, 1.0, 0.3, 0.7) - 1.0).abs() < 1e-15);
        assert!((alpha_limit(2.0, 1.0, 0.5, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn mgf_normalization_and_spot_value() {
        for b1 in [0.0, 0.5, -0.3] {
            let l = ld(b1);
            assert!((l.mgf_cond(1, 0.0).unwrap() - 1.0).abs() < 1e-12);
            assert!((l.mgf_cond(2, 0.0).unwrap() - 1.0).abs() < 1e-12);
        }
        let l = ld(0.5);
        let got = l.mgf_cond(2, -1.0).unwrap();
        assert!((got - (-1.0f64).exp() / 2.0).abs() < 1e-14);
        assert!(l.mgf_cond(2, l.beta2()).is_err());
        assert!(l.mgf_cond(3, 0.0).is_err());
    }

    #[test]
    fn mgf_matches_quadrature() {
        for b1 in [0.0, 0.5, -0.6] {
            let l = ld(b1);
            for theta in [-1.0, -0.25, 0.5] {
                let want = simpson(
                    |x| (theta * x).exp() * l.density_below(x),
                    0.0,
                    l.ell1,
                    20_000,
                );
                let got = l.mgf_cond(1, theta).unwrap();
                assert!((got - want).abs() < 1e-10, "b1={b1} theta={theta}");
            }
            for theta in [-1.5, -0.5] {
                let lo = l.ell1 * (1.0 + 1e-13);
                let hi = l.ell1 + 60.0 / (l.beta2() - theta);
                let want = simpson(|x| (theta * x).exp() * l.density_above(x), lo, hi, 60_000);
                let got = l.mgf_cond(2, theta).unwrap();
                assert!((got - want).abs() < 1e-8, "b1={b1} theta={theta}");
            }
        }
    }

    #[test]
    fn mgf_pole_window_continuity() {
        // The Taylor branch and the direct formula meet smoothly at the
        // window edge: evaluate just inside and just outside.
        let l = ld(0.5);
        let b = l.beta1();
        let inside = l.mgf_cond(1, b + 0.999e-6).unwrap();
        let outside = l.mgf_cond(1, b + 1.001e-6).unwrap();
        assert!((inside - outside).abs() < 1e-7, "{:e}", inside - outside);
        let u = ld(0.0);
        let inside = u.mgf_cond(1, 0.999e-6).unwrap();
        let outside = u.mgf_cond(1, 1.001e-6).unwrap();
        assert!((inside - outside).abs() < 1e-7);
    }

    #[test]
    fn mean_l_limit_values() {
        // b1 = 0 reference point.
        let v = mean_l_limit(0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0);
        assert!((v - 0.625).abs() < 1e-15);

        // Continuity at b1 -> 0.
        let t = mean_l_limit(1e-8, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0);
        assert!((t - 0.625).abs() < 1e-5);

        // Composition: (1-rho)E[L] = lim P(L=0)/r * mixture mean.
        for b1 in [0.0, 0.5, 1.2, -0.3] {
            let l = ld(b1);
            let composed = l.p0_over_r_limit() * l.mixture_mean();
            assert!(
                (composed - l.mean_l_limit()).abs() < 1e-12,
                "b1={b1}: {composed} vs {}",
                l.mean_l_limit()
            );
        }
    }

    #[test]
    fn mixture_mean_matches_quadrature() {
        // Split at the threshold where the mixture density jumps.
        for b1 in [0.0, 0.7, -0.4] {
            let l = ld(b1);
            let hi = l.ell1 + 80.0 / l.beta2();
            let want = simpson(|x| x * l.density(x), 0.0, l.ell1, 40_000)
                + simpson(|x| x * l.density(x), l.ell1 * (1.0 + 1e-13), hi, 80_000);
            assert!((l.mixture_mean() - want).abs() < 1e-8, "b1={b1}");
        }
    }

    #[test]
    fn from_family_variances() {
        let fam = HeavyTrafficFamily {
            mu: 1.0,
            c1: 1.0,
            c2: 1.0,
            b1: 0.5,
            b2: 1.0,
            ell1: 1.0,
            arrival_below_shape: DistributionSpec::erlang(2, 2.0).unwrap(),
            arrival_above_shape: DistributionSpec::erlang(2, 2.0).unwrap(),
            workload_shape: DistributionSpec::exponential(1.0).unwrap(),
        };
        let l = LimitDistribution::from_family(&fam).unwrap();
        assert!((l.sigma1_sq - 1.5).abs() < 1e-15);
        assert!((l.beta1() - 2.0 * 0.5 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn scaled_boundary_probability_spot_value() {
        // Equal limit rates, beta1 = beta2 = 1, ell1 = ln 2:
        // limit = 1 / (2 (1 + (2 - 1))) = 1/4.
        let l = LimitDistribution::new(2f64.ln(), 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0).unwrap();
        assert!((l.p1_ell1_scaled_limit() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn sampling_matches_cdf() {
        let l = ld(0.5);
        let mut s = RngStream::new(5, 0);
        let n = 400_000;
        let mut below = 0usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = l.sample(&mut s);
            assert!(x >= 0.0);
            if x <= l.ell1 {
                below += 1;
            }
            sum += x;
        }
        let (a1, _) = l.weights();
        assert!((below as f64 / n as f64 - a1).abs() < 0.005);
        assert!((sum / n as f64 - l.mixture_mean()).abs() < 0.01);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        // Ranges keep beta1*ell1 moderate; for extreme exponents the strict
        // bounds saturate in f64 even though they hold mathematically.
        #[test]
        fn weights_partition_unity(
            b1 in -1.5f64..1.5,
            b2 in 0.05f64..3.0,
            c1 in 0.5f64..2.5,
            c2 in 0.5f64..2.5,
            s1 in 0.5f64..4.0,
            l in 0.05f64..2.0,
        ) {
            let (a1, a2) = weights(b1, b2, c1, c2, s1, l);
            prop_assert!((a1 + a2 - 1.0).abs() < 1e-15);
            prop_assert!(a1 > 0.0 && a1 < 1.0);
            prop_assert!(a2 > 0.0 && a2 < 1.0);
        }

        #[test]
        fn cdf_monotone(
            b1 in -2.0f64..2.0,
            x in 0.0f64..6.0,
            dx in 0.001f64..1.0,
        ) {
            let l = LimitDistribution::new(1.0, b1, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0).unwrap();
            let f0 = l.mixture_cdf(x);
            let f1 = l.mixture_cdf(x + dx);
            prop_assert!(f1 >= f0 - 1e-15);
            prop_assert!((0.0..=1.0).contains(&f0));
        }
    }
}
