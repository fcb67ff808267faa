//! Discrete-event simulation of the two-level GI/G/1 queue.
//!
//! The simulator advances the Markov state `(L, R_e, R_s)` event by event:
//! the next event is an arrival after `R_e` or a service completion after
//! `R_s / speed`. Simultaneous events are resolved arrival first. Regime
//! switching is deliberately asymmetric: the next inter-arrival is drawn from
//! the lower distribution when the pre-arrival queue length is `< l1` and
//! from the upper one when it is `>= l1`, while the service speed is `c1` for
//! `1 <= L <= l1` and `c2` for `L > l1`.
//!
//! When the system empties, a fresh workload is drawn immediately and frozen
//! at speed zero, so `R_s` is defined for all times and distributed like a
//! fresh workload whenever `L = 0`.
//!
//! Besides time averages the run collects event averages: the queue length
//! seen by arrivals (`L(0-)`) and left behind by departures (`L(0)`), and the
//! capped remaining-time moments at the threshold level that feed the
//! boundary diagnostics `Δ̂_i` and `ℰ̂_i`. Caps use `R ∧ cap` with the cap
//! chosen as `1/r` by the experiment layer.

use crate::mm1exact::DiscreteDist;
use crate::model::QueueParams;
use crate::rng::RngStream;

/// A time-average probe of the exponential test function: estimates
/// `E[e^{rθL} e^{-η(R_e∧cap) - ζ(R_s∧cap)} w_i(L)]` for one component.
///
/// The exponents are the solved boundary roots for `rθ`; callers obtain them
/// from the exponent solvers.
#[derive(Debug, Clone, Copy)]
pub struct PsiProbe {
    /// Component: 1 weights `L <= l1`, 2 weights `L > l1`.
    pub component: u8,
    /// The scaled argument `rθ` multiplying `L`.
    pub r_theta: f64,
    pub eta: f64,
    pub zeta: f64,
}

/// Run controls for one simulation.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Total number of events (arrivals + departures) to process.
    pub horizon_events: u64,
    /// Events discarded before accumulation starts.
    pub warmup_events: u64,
    pub seed: u64,
    /// Replication index; shifts the stream ids so replications are disjoint.
    pub replication: u64,
    /// Cap applied to remaining times in the event-average moments (`1/r`).
    pub palm_cap: f64,
    /// Optional test-function probes, integrated exactly along the path.
    pub psi_probes: Vec<PsiProbe>,
}

impl SimConfig {
    /// Defaults: 10% warm-up, replication 0, no probes.
    pub fn new(horizon_events: u64, seed: u64, palm_cap: f64) -> Self {
        SimConfig {
            horizon_events,
            warmup_events: horizon_events / 10,
            seed,
            replication: 0,
            palm_cap,
            psi_probes: Vec::new(),
        }
    }
}

/// Service speed as a function of the current queue length.
#[inline]
pub fn speed_for(l: u64, ell1: u64, c1: f64, c2: f64) -> f64 {
    if l == 0 {
        0.0
    } else if l <= ell1 {
        c1
    } else {
        c2
    }
}

/// Arrival regime from the pre-arrival queue length: `false` selects the
/// below-threshold distribution (`L(0-) < l1`), `true` the upper one.
#[inline]
pub fn arrival_is_above(l_pre: u64, ell1: u64) -> bool {
    l_pre >= ell1
}

/// Time-average and event-average estimates from one run.
#[derive(Debug, Clone)]
pub struct SimEstimates {
    ell1: u64,
    palm_cap: f64,
    total_time: f64,
    /// Occupation time of `L = l` for `l <= hist_max`.
    hist: Vec<f64>,
    overflow_time: f64,
    sum_l_dt: f64,
    /// Occupation times of the capped-remaining-time brackets.
    t_rs_lt_cap_mid: f64,
    t_rs_lt_cap_hi: f64,
    t_re_lt_cap_lo: f64,
    t_re_lt_cap_hi: f64,
    n_arrivals: u64,
    n_departures: u64,
    arr_counts: Vec<u64>,
    arr_overflow: u64,
    dep_counts: Vec<u64>,
    dep_overflow: u64,
    /// Sums of `(R_s(0-) ∧ cap)^k` over arrivals seeing `L(0-) = l1`, k=1,2,3.
    sum_rs_at_ell1: [f64; 3],
    /// Sums of `(R_e(0) ∧ cap)^k` over departures leaving `L(0) = l1`.
    sum_re_at_ell1: [f64; 3],
    psi_probes: Vec<PsiProbe>,
    /// Exact path integrals of the probe test functions.
    psi_sums: Vec<f64>,
    seed: u64,
    replication: u64,
}

impl SimEstimates {
    fn new(ell1: u64, palm_cap: f64, seed: u64, replication: u64, probes: Vec<PsiProbe>) -> Self {
        let n_probes = probes.len();
        let hist_max = (16 * ell1).max(64) as usize;
        SimEstimates {
            ell1,
            palm_cap,
            total_time: 0.0,
            hist: vec![0.0; hist_max + 1],
            overflow_time: 0.0,
            sum_l_dt: 0.0,
            t_rs_lt_cap_mid: 0.0,
            t_rs_lt_cap_hi: 0.0,
            t_re_lt_cap_lo: 0.0,
            t_re_lt_cap_hi: 0.0,
            n_arrivals: 0,
            n_departures: 0,
            arr_counts: vec![0; hist_max + 1],
            arr_overflow: 0,
            dep_counts: vec![0; hist_max + 1],
            dep_overflow: 0,
            sum_rs_at_ell1: [0.0; 3],
            sum_re_at_ell1: [0.0; 3],
            psi_probes: probes,
            psi_sums: vec![0.0; n_probes],
            seed,
            replication,
        }
    }

    fn reset(&mut self) {
        let hist_len = self.hist.len();
        self.total_time = 0.0;
        self.hist = vec![0.0; hist_len];
        self.overflow_time = 0.0;
        self.sum_l_dt = 0.0;
        self.t_rs_lt_cap_mid = 0.0;
        self.t_rs_lt_cap_hi = 0.0;
        self.t_re_lt_cap_lo = 0.0;
        self.t_re_lt_cap_hi = 0.0;
        self.n_arrivals = 0;
        self.n_departures = 0;
        self.arr_counts = vec![0; hist_len];
        self.arr_overflow = 0;
        self.dep_counts = vec![0; hist_len];
        self.dep_overflow = 0;
        self.sum_rs_at_ell1 = [0.0; 3];
        self.sum_re_at_ell1 = [0.0; 3];
        self.psi_sums = vec![0.0; self.psi_probes.len()];
    }

    pub fn ell1(&self) -> u64 {
        self.ell1
    }

    pub fn palm_cap(&self) -> f64 {
        self.palm_cap
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn n_arrivals(&self) -> u64 {
        self.n_arrivals
    }

    pub fn n_departures(&self) -> u64 {
        self.n_departures
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    /// Time-average probability of `L = l`.
    pub fn p_at(&self, l: u64) -> f64 {
        self.hist
            .get(l as usize)
            .map_or(0.0, |t| t / self.total_time)
    }

    pub fn p_zero(&self) -> f64 {
        self.p_at(0)
    }

    /// Fraction of time spent at or below the threshold.
    pub fn p_le_ell1(&self) -> f64 {
        let body: f64 = self.hist[..=self.ell1 as usize].iter().sum();
        body / self.total_time
    }

    pub fn p_gt_ell1(&self) -> f64 {
        let above: f64 =
            self.hist[self.ell1 as usize + 1..].iter().sum::<f64>() + self.overflow_time;
        above / self.total_time
    }

    pub fn mean_l(&self) -> f64 {
        self.sum_l_dt / self.total_time
    }

    /// Mass that fell above the histogram range; must stay tiny for a valid
    /// run (the scaled-law summaries ignore it).
    pub fn overflow_mass(&self) -> f64 {
        self.overflow_time / self.total_time
    }

    /// Arrival rate `α̂_e = N_e / T`.
    pub fn alpha_e(&self) -> f64 {
        self.n_arrivals as f64 / self.total_time
    }

    /// Departure rate `α̂_s = N_s / T`.
    pub fn alpha_s(&self) -> f64 {
        self.n_departures as f64 / self.total_time
    }

    /// Event-average law of the queue length seen by arrivals.
    pub fn palm_arrival_at(&self, l: u64) -> f64 {
        self.arr_counts
            .get(l as usize)
            .map_or(0.0, |c| *c as f64 / self.n_arrivals as f64)
    }

    /// Event-average law of the queue length left behind by departures.
    pub fn palm_departure_at(&self, l: u64) -> f64 {
        self.dep_counts
            .get(l as usize)
            .map_or(0.0, |c| *c as f64 / self.n_departures as f64)
    }

    /// `P̂_e[L(0-) < l1]`.
    pub fn palm_arrival_below_ell1(&self) -> f64 {
        let below: u64 = self.arr_counts[..self.ell1 as usize].iter().sum();
        below as f64 / self.n_arrivals as f64
    }

    /// `Ê_e[(R̂_{s-})^k 1(L(0-) = l1)]`, k = 1, 2, 3.
    pub fn palm_rs_moment(&self, k: usize) -> f64 {
        self.sum_rs_at_ell1[k - 1] / self.n_arrivals as f64
    }

    /// `Ê_s[(R̂_e)^k 1(L(0) = l1)]`, k = 1, 2, 3.
    pub fn palm_re_moment(&self, k: usize) -> f64 {
        self.sum_re_at_ell1[k - 1] / self.n_departures as f64
    }

    /// Time-average histogram as a probability vector (without overflow).
    pub fn marginal_pmf(&self) -> Vec<f64> {
        self.hist.iter().map(|t| t / self.total_time).collect()
    }

    /// The empirical law of `r·L`.
    pub fn scaled_distribution(&self, r: f64) -> DiscreteDist {
        let values = (0..self.hist.len()).map(|l| r * l as f64).collect();
        DiscreteDist::new(values, self.marginal_pmf())
    }

    /// Boundary diagnostics built from the capped event-average moments.
    pub fn delta_e_estimates(&self, params: &QueueParams, r: f64) -> DeltaEstimates {
        let tq = params.traffic_quantities();
        let mu = tq.mu;
        let sigma_s = params.workload().std_dev();
        let sigma_e1 = params.arrival_below().std_dev();
        let sigma_e2 = params.arrival_above().std_dev();
        let p_e_ell1 = self.palm_arrival_at(self.ell1);

        let rs1 = self.palm_rs_moment(1);
        let rs2 = self.palm_rs_moment(2);
        let re1 = self.palm_re_moment(1);
        let re2 = self.palm_re_moment(2);

        let delta1 = mu * rs1 + tq.lambda1 * re1 - p_e_ell1;
        let delta2 = mu * rs1 + tq.lambda2 * re1 - p_e_ell1;

        // E-terms: second-order coefficients of the boundary expansion.
        let s_part = (mu * sigma_s).powi(2) * (mu * rs1) - mu * mu * rs2;
        let e_part = |lambda: f64, sigma_e: f64| {
            ((lambda * sigma_e).powi(2) + 2.0) * (lambda * re1) - lambda * lambda * re2
        };
        let e1 = 0.5 * s_part - 0.5 * e_part(tq.lambda1, sigma_e1);
        let e2 = -0.5 * s_part + 0.5 * e_part(tq.lambda2, sigma_e2);

        // Drifts recovered from the exact linear construction.
        let b1 = (params.speed_below() * mu - tq.lambda1) / (r * mu);
        let b2 = (params.speed_above() * mu - tq.lambda2) / (r * mu);
        let alpha = self.alpha_e();

        let residual_r1 = (alpha * delta1
            - (-r * b1 * mu * self.p_le_ell1() + params.speed_below() * mu * self.p_zero()))
        .abs()
            / r;
        let residual_r2 = (alpha * delta2 - r * mu * b2 * self.p_gt_ell1()).abs() / r;

        DeltaEstimates {
            delta1,
            delta2,
            e1,
            e2,
            residual_r1,
            residual_r2,
        }
    }

    /// Left/right values of the stationary event-average identities.
    pub fn palm_identity_residuals(&self, params: &QueueParams) -> Vec<IdentityCheck> {
        let tq = params.traffic_quantities();
        let cap = self.palm_cap;
        let t = self.total_time;
        let alpha = self.alpha_e();
        let n_e = self.n_arrivals as f64;
        let n_s = self.n_departures as f64;

        let mut out = Vec::new();

        // Level crossing: arrivals into and departures out of each prefix.
        let mut worst = (0u64, 0.0f64, 0.0f64, 0.0f64);
        for l in 0..self.arr_counts.len() as u64 {
            let pe = self.palm_arrival_at(l);
            let ps = self.palm_departure_at(l);
            if pe == 0.0 && ps == 0.0 {
                continue;
            }
            let pooled = 0.5 * (pe + ps);
            let se = (pooled * (1.0 - pooled) * (1.0 / n_e + 1.0 / n_s)).sqrt();
            let stud = (pe - ps).abs() / se.max(1e-300);
            if stud > worst.3 {
                worst = (l, pe, ps, stud);
            }
        }
        out.push(IdentityCheck {
            name: format!("level_crossing_max(l={})", worst.0),
            lhs: worst.1,
            rhs: worst.2,
            studentized: worst.3,
        });

        // alpha via the Palm split of arrival regimes.
        let pe_below = self.palm_arrival_below_ell1();
        let rhs = tq.lambda1 * tq.lambda2 / (tq.lambda2 * pe_below + tq.lambda1 * (1.0 - pe_below));
        let se = (alpha / t).sqrt();
        out.push(IdentityCheck {
            name: "alpha_palm_split".to_string(),
            lhs: alpha,
            rhs,
            studentized: (alpha - rhs).abs() / se.max(1e-300),
        });

        // alpha via the service form.
        let rhs = params.speed_below() * tq.mu * (self.p_le_ell1() - self.p_zero())
            + params.speed_above() * tq.mu * self.p_gt_ell1();
        out.push(IdentityCheck {
            name: "alpha_service_form".to_string(),
            lhs: alpha,
            rhs,
            studentized: (alpha - rhs).abs() / se.max(1e-300),
        });

        // Capped remaining-time identities at k = 1. The right sides combine
        // event averages with the exact capped means of the input laws.
        let ts_cap = params.workload().truncated_mean(cap);
        let te1_cap = params.arrival_below().truncated_mean(cap);
        let te2_cap = params.arrival_above().truncated_mean(cap);
        let ps_le = 1.0 - self.palm_dep_above_ell1();
        let pe_ge = 1.0 - pe_below;

        let quad = |a: f64, b: f64| (a * a + b * b).sqrt();
        // Sample-variance proxies for the capped boundary moments.
        let m1 = self.palm_rs_moment(1);
        let rs_se = ((self.palm_rs_moment(2) - m1 * m1).max(0.0) / n_e).sqrt();
        let m1 = self.palm_re_moment(1);
        let re_se = ((self.palm_re_moment(2) - m1 * m1).max(0.0) / n_s).sqrt();

        let lhs = params.speed_below() * (self.t_rs_lt_cap_mid / t);
        let rhs = alpha * (-self.palm_rs_moment(1) + ts_cap * ps_le);
        let se = alpha * quad(rs_se, ts_cap * (ps_le * (1.0 - ps_le) / n_s).sqrt());
        out.push(IdentityCheck {
            name: "remaining_workload_low".to_string(),
            lhs,
            rhs,
            studentized: (lhs - rhs).abs() / se.max(1e-300),
        });

        let lhs = params.speed_above() * (self.t_rs_lt_cap_hi / t);
        let rhs = alpha * (self.palm_rs_moment(1) + ts_cap * (1.0 - ps_le));
        out.push(IdentityCheck {
            name: "remaining_workload_high".to_string(),
            lhs,
            rhs,
            studentized: (lhs - rhs).abs() / se.max(1e-300),
        });

        let lhs = self.t_re_lt_cap_lo / t;
        let rhs = alpha * (self.palm_re_moment(1) + te1_cap * pe_below);
        let se = alpha * quad(re_se, te1_cap * (pe_below * (1.0 - pe_below) / n_e).sqrt());
        out.push(IdentityCheck {
            name: "remaining_arrival_low".to_string(),
            lhs,
            rhs,
            studentized: (lhs - rhs).abs() / se.max(1e-300),
        });

        let lhs = self.t_re_lt_cap_hi / t;
        let rhs = alpha * (-self.palm_re_moment(1) + te2_cap * pe_ge);
        out.push(IdentityCheck {
            name: "remaining_arrival_high".to_string(),
            lhs,
            rhs,
            studentized: (lhs - rhs).abs() / se.max(1e-300),
        });

        out
    }

    /// Time-average value of probe `idx`, `ψ̂_i(θ)`.
    pub fn psi(&self, idx: usize) -> f64 {
        self.psi_sums[idx] / self.total_time
    }

    /// The matching plain transform `φ̂_i(θ) = Σ e^{rθl} ĥ(l) w_i(l)` from
    /// the occupation histogram (overflow mass ignored; keep `rθ <= 0` or
    /// the component bounded).
    pub fn phi_from_hist(&self, r_theta: f64, component: u8) -> f64 {
        let range: std::ops::Range<usize> = if component == 1 {
            0..(self.ell1 as usize + 1)
        } else {
            (self.ell1 as usize + 1)..self.hist.len()
        };
        range
            .map(|l| (r_theta * l as f64).exp() * self.hist[l])
            .sum::<f64>()
            / self.total_time
    }

    /// `P̂_s[L(0) > l1]`.
    pub fn palm_dep_above_ell1(&self) -> f64 {
        let above: u64 = self.dep_counts[self.ell1 as usize + 1..]
            .iter()
            .sum::<u64>()
            + self.dep_overflow;
        above as f64 / self.n_departures as f64
    }
}

/// Adds the exact integral of each probe's test function over one
/// inter-event interval. The exponent is piecewise linear in `t`: the capped
/// remaining times `R ∧ cap` switch from constant to linear decay when the
/// clocks cross the cap.
#[allow(clippy::too_many_arguments)]
fn accumulate_psi(
    probes: &[PsiProbe],
    sums: &mut [f64],
    l: u64,
    ell1: u64,
    re0: f64,
    rs0: f64,
    spd: f64,
    dt: f64,
    cap: f64,
) {
    // Segment breakpoints where a clock crosses the cap.
    let t_e = if re0 > cap { (re0 - cap).min(dt) } else { 0.0 };
    let t_s = if spd > 0.0 && rs0 > cap {
        ((rs0 - cap) / spd).min(dt)
    } else {
        0.0
    };
    let (b1, b2) = if t_e <= t_s { (t_e, t_s) } else { (t_s, t_e) };
    let below = l <= ell1;

    for (probe, sum) in probes.iter().zip(sums.iter_mut()) {
        if (probe.component == 1) != below {
            continue;
        }
        let prefactor = (probe.r_theta * l as f64).exp();
        let mut acc = 0.0;
        let mut t0 = 0.0;
        for t1 in [b1, b2, dt] {
            if t1 <= t0 {
                continue;
            }
            // Exponent a + b t on [t0, t1); at a cap crossing both branches
            // agree in value, so the strict comparison picks the decaying
            // slope from the breakpoint on.
            let (mut a, mut b) = (0.0, 0.0);
            if re0 - t0 > cap {
                a -= probe.eta * cap;
            } else {
                a -= probe.eta * re0;
                b += probe.eta;
            }
            let rs_here = if l >= 1 { rs0 - spd * t0 } else { rs0 };
            if rs_here > cap {
                a -= probe.zeta * cap;
            } else if l >= 1 {
                a -= probe.zeta * rs0;
                b += probe.zeta * spd;
            } else {
                a -= probe.zeta * rs0;
            }
            let len = t1 - t0;
            let start = a + b * t0;
            acc += if (b * len).abs() < 1e-12 {
                len * start.exp()
            } else {
                start.exp() * (b * len).exp_m1() / b
            };
            t0 = t1;
        }
        *sum += prefactor * acc;
    }
}

/// Boundary quantities `Δ̂_i`, `ℰ̂_i` and their identity residuals
/// (normalized by `r`).
#[derive(Debug, Clone, Copy)]
pub struct DeltaEstimates {
    pub delta1: f64,
    pub delta2: f64,
    pub e1: f64,
    pub e2: f64,
    pub residual_r1: f64,
    pub residual_r2: f64,
}

/// One stationary identity: left/right values and an approximately
/// studentized residual.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub studentized: f64,
}

/// Runs one simulation.
pub fn run(params: &QueueParams, cfg: &SimConfig) -> SimEstimates {
    assert!(cfg.horizon_events > cfg.warmup_events);
    let ell1 = params.threshold();
    let c1 = params.speed_below();
    let c2 = params.speed_above();
    let cap = cfg.palm_cap;

    let base = cfg.replication * 4;
    let mut stream_below = RngStream::new(cfg.seed, base);
    let mut stream_above = RngStream::new(cfg.seed, base + 1);
    let mut stream_work = RngStream::new(cfg.seed, base + 2);

    let arr_below = params.arrival_below().clone();
    let arr_above = params.arrival_above().clone();
    let workload = params.workload().clone();

    let mut est = SimEstimates::new(ell1, cap, cfg.seed, cfg.replication, cfg.psi_probes.clone());
    let hist_max = est.hist.len() - 1;

    let mut l: u64 = 0;
    // Frozen fresh workload while empty.
    let mut rs = workload.sample(&mut stream_work);
    let mut re = arr_below.sample(&mut stream_below);
    let mut events: u64 = 0;

    while events < cfg.horizon_events {
        let spd = speed_for(l, ell1, c1, c2);
        // rs can sit one ulp below zero right after a tie; clamp so the
        // pending completion fires with a zero-length interval.
        let dt_dep = if l >= 1 { (rs / spd).max(0.0) } else { f64::INFINITY };
        let is_arrival = re <= dt_dep;
        let dt = if is_arrival { re } else { dt_dep };

        // Time averages over [t, t+dt) with constant L.
        est.total_time += dt;
        if (l as usize) <= hist_max {
            est.hist[l as usize] += dt;
        } else {
            est.overflow_time += dt;
        }
        est.sum_l_dt += l as f64 * dt;
        // Exact occupation of {R < cap}: the clocks decay linearly.
        if l >= 1 {
            let t_rs = if rs <= cap {
                dt
            } else {
                (dt - (rs - cap) / spd).max(0.0)
            };
            if l <= ell1 {
                est.t_rs_lt_cap_mid += t_rs;
            } else {
                est.t_rs_lt_cap_hi += t_rs;
            }
        }
        let t_re = if re <= cap {
            dt
        } else {
            (dt - (re - cap)).max(0.0)
        };
        if l <= ell1 {
            est.t_re_lt_cap_lo += t_re;
        } else {
            est.t_re_lt_cap_hi += t_re;
        }

        if !cfg.psi_probes.is_empty() && dt > 0.0 {
            accumulate_psi(
                &cfg.psi_probes,
                &mut est.psi_sums,
                l,
                ell1,
                re,
                rs,
                spd,
                dt,
                cap,
            );
        }

        if l >= 1 {
            rs -= spd * dt;
        }
        re -= dt;

        if is_arrival {
            // Event-average sample at L(0-).
            let l_pre = l;
            if (l_pre as usize) <= hist_max {
                est.arr_counts[l_pre as usize] += 1;
            } else {
                est.arr_overflow += 1;
            }
            if l_pre == ell1 {
                let r_hat = rs.min(cap);
                est.sum_rs_at_ell1[0] += r_hat;
                est.sum_rs_at_ell1[1] += r_hat * r_hat;
                est.sum_rs_at_ell1[2] += r_hat * r_hat * r_hat;
            }
            l += 1;
            re = if arrival_is_above(l_pre, ell1) {
                arr_above.sample(&mut stream_above)
            } else {
                arr_below.sample(&mut stream_below)
            };
            est.n_arrivals += 1;
        } else {
            // Service completion; L(0) is the level left behind.
            let l_post = l - 1;
            if (l_post as usize) <= hist_max {
                est.dep_counts[l_post as usize] += 1;
            } else {
                est.dep_overflow += 1;
            }
            if l_post == ell1 {
                let r_hat = re.min(cap);
                est.sum_re_at_ell1[0] += r_hat;
                est.sum_re_at_ell1[1] += r_hat * r_hat;
                est.sum_re_at_ell1[2] += r_hat * r_hat * r_hat;
            }
            l = l_post;
            // Fresh workload: next customer's if busy, frozen if empty.
            rs = workload.sample(&mut stream_work);
            est.n_departures += 1;
        }

        events += 1;
        if events == cfg.warmup_events {
            est.reset();
        }
    }
    est
}

/// Independent replications with disjoint streams.
#[derive(Debug)]
pub struct Replicated {
    pub reps: Vec<SimEstimates>,
}

/// Runs `n_reps` independent replications of the same configuration.
pub fn replicate(params: &QueueParams, cfg: &SimConfig, n_reps: u64) -> Replicated {
    assert!(n_reps >= 2, "need at least two replications");
    let reps = (0..n_reps)
        .map(|rep| {
            let mut c = cfg.clone();
            c.replication = cfg.replication + rep;
            run(params, &c)
        })
        .collect();
    Replicated { reps }
}

impl Replicated {
    /// Pooled mean and confidence half-width (normal 1.96 quantile) of a
    /// scalar statistic across replications.
    pub fn mean_ci(&self, stat: impl Fn(&SimEstimates) -> f64) -> (f64, f64) {
        let n = self.reps.len() as f64;
        let xs: Vec<f64> = self.reps.iter().map(stat).collect();
        let mean = kahan_sum(xs.iter().copied()) / n;
        let var = kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
        (mean, 1.96 * (var / n).sqrt())
    }

    /// Time-weighted pooled histogram of the queue length.
    pub fn pooled_marginal(&self) -> Vec<f64> {
        let len = self.reps.iter().map(|r| r.hist.len()).max().unwrap();
        let mut mass = vec![0.0; len];
        for l in 0..len {
            mass[l] = kahan_sum(self.reps.iter().map(|r| *r.hist.get(l).unwrap_or(&0.0)));
        }
        let total = kahan_sum(self.reps.iter().map(|r| r.total_time));
        for m in &mut mass {
            *m /= total;
        }
        mass
    }

    /// Pooled law of `r·L`.
    pub fn pooled_scaled_distribution(&self, r: f64) -> DiscreteDist {
        let pmf = self.pooled_marginal();
        let values = (0..pmf.len()).map(|l| r * l as f64).collect();
        DiscreteDist::new(values, pmf)
    }
}

fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for x in xs {
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::DistributionSpec;
    use crate::mm1exact;

    fn exp_params(ell1: u64, l1: f64, l2: f64, c1: f64, c2: f64, mu: f64) -> QueueParams {
        QueueParams::new(
            ell1,
            DistributionSpec::exponential(l1).unwrap(),
            DistributionSpec::exponential(l2).unwrap(),
            DistributionSpec::exponential(mu).unwrap(),
            c1,
            c2,
        )
        .unwrap()
    }

    #[test]
    fn switching_inequalities_pinned() {
        // speed: c1 for 1 <= L <= l1, c2 strictly above, idle at zero
        assert_eq!(speed_for(0, 3, 1.0, 2.0), 0.0);
        assert_eq!(speed_for(1, 3, 1.0, 2.0), 1.0);
        assert_eq!(speed_for(3, 3, 1.0, 2.0), 1.0);
        assert_eq!(speed_for(4, 3, 1.0, 2.0), 2.0);
        // arrivals: upper regime from L(0-) >= l1
        assert!(!arrival_is_above(2, 3));
        assert!(arrival_is_above(3, 3));
        assert!(arrival_is_above(4, 3));
    }

    #[test]
    fn deterministic_tie_is_arrival_first() {
        // Workload strictly shorter than the deterministic interarrival gap:
        // every service completes before the next arrival, so arrivals always
        // find the system empty.
        let strict = QueueParams::new(
            1,
            DistributionSpec::deterministic(1.0).unwrap(),
            DistributionSpec::deterministic(1.0).unwrap(),
            DistributionSpec::deterministic(0.999).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let est = run(&strict, &SimConfig::new(2_000, 7, 10.0));
        assert!(est.palm_arrival_at(0) > 0.99, "{}", est.palm_arrival_at(0));

        // Exact tie: with unit interarrivals and workloads at speed one, every
        // other arrival coincides with a completion. Arrival first makes the
        // colliding arrivals see L(0-) = 1 (upper regime draw, interarrival
        // 2), giving the alternating 0/1 pattern; departure-first would make
        // every arrival see 0 and never touch the upper regime.
        let tie = QueueParams::new(
            1,
            DistributionSpec::deterministic(1.0).unwrap(),
            DistributionSpec::deterministic(2.0).unwrap(),
            DistributionSpec::deterministic(1.0).unwrap(),
            1.0,
            2.0,
        )
        .unwrap();
        let est = run(&tie, &SimConfig::new(4_000, 7, 10.0));
        assert!(
            (est.palm_arrival_at(1) - 0.5).abs() < 0.01,
            "{}",
            est.palm_arrival_at(1)
        );
        assert!((est.palm_departure_at(1) - 0.5).abs() < 0.01);
        assert!((est.palm_departure_at(0) - 0.5).abs() < 0.01);
    }

    #[test]
    fn single_regime_mm1_formulas() {
        // lambda = 0.5 on both levels with a huge threshold: plain M/M/1
        // with P(L=0) = 1 - rho = 0.5 and E[L] = rho/(1-rho) = 1.
        let params = exp_params(40, 0.5, 0.5, 1.0, 1.0, 1.0);
        let est = run(&params, &SimConfig::new(10_000_000, 11, 1e9));
        assert!((est.p_zero() - 0.5).abs() < 0.005, "{}", est.p_zero());
        assert!((est.mean_l() - 1.0).abs() < 0.02, "{}", est.mean_l());
        // Little's law bookkeeping: utilization equals P(L > 0) exactly in
        // the occupation histogram.
        let rho_hat = 1.0 - est.p_zero();
        let p_busy: f64 = est.marginal_pmf()[1..].iter().sum::<f64>() + est.overflow_mass();
        assert!((rho_hat - p_busy).abs() < 1e-12);
    }

    #[test]
    fn symmetric_regimes_cancel_e_terms_exactly() {
        // Identical arrival laws on both levels: E1 and E2 are the same
        // expression with opposite signs, so their sum is exactly zero.
        let params = exp_params(3, 0.9, 0.9, 1.0, 1.0, 1.0);
        let est = run(&params, &SimConfig::new(200_000, 13, 10.0));
        let de = est.delta_e_estimates(&params, 0.1);
        assert_eq!(de.e1 + de.e2, 0.0);
    }

    #[test]
    fn arrival_and_departure_rates_agree() {
        let params = exp_params(5, 0.9, 0.8, 1.0, 1.0, 1.0);
        let est = run(&params, &SimConfig::new(2_000_000, 3, 20.0));
        let diff = (est.alpha_e() - est.alpha_s()).abs();
        // Counts differ by at most the queue length over the window.
        assert!(diff * est.total_time() < 200.0, "{diff}");
        let tq = params.traffic_quantities();
        let lo = tq.lambda1.min(tq.lambda2) - 0.01;
        let hi = tq.lambda1.max(tq.lambda2) + 0.01;
        assert!(est.alpha_e() >= lo && est.alpha_e() <= hi);
    }

    #[test]
    fn histogram_conserves_mass() {
        let params = exp_params(4, 0.9, 0.8, 1.0, 1.0, 1.0);
        let est = run(&params, &SimConfig::new(500_000, 5, 10.0));
        let total: f64 = est.marginal_pmf().iter().sum::<f64>() + est.overflow_mass();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(est.overflow_mass() < 1e-6);
        assert!((est.n_arrivals() as i64 - est.n_departures() as i64).unsigned_abs() < 1000);
    }

    #[test]
    fn matches_exact_chain_marginal() {
        let params = exp_params(4, 0.9, 0.8, 1.0, 1.0, 1.0);
        let est = run(&params, &SimConfig::new(4_000_000, 17, 20.0));
        let sol = mm1exact::solve_recursive(&params).unwrap();
        let mut tv = 0.0;
        for l in 0..60u64 {
            tv += (est.p_at(l) - sol.marginal(l)).abs();
        }
        assert!(tv / 2.0 < 0.01, "tv = {}", tv / 2.0);
    }

    #[test]
    fn level_crossing_identity() {
        let params = exp_params(3, 0.9, 0.7, 1.0, 1.0, 1.0);
        let est = run(&params, &SimConfig::new(2_000_000, 23, 20.0));
        let checks = est.palm_identity_residuals(&params);
        let lc = &checks[0];
        assert!(lc.studentized < 4.0, "{}: {}", lc.name, lc.studentized);
    }

    #[test]
    fn reproducible_runs() {
        let params = exp_params(3, 0.9, 0.7, 1.0, 1.0, 1.0);
        let cfg = SimConfig::new(100_000, 99, 20.0);
        let a = run(&params, &cfg);
        let b = run(&params, &cfg);
        assert_eq!(a.total_time().to_bits(), b.total_time().to_bits());
        assert_eq!(a.n_arrivals(), b.n_arrivals());
        assert_eq!(a.p_zero().to_bits(), b.p_zero().to_bits());
    }

    #[test]
    fn replication_pooling() {
        let params = exp_params(3, 0.9, 0.7, 1.0, 1.0, 1.0);
        let cfg = SimConfig::new(200_000, 4, 20.0);
        let reps = replicate(&params, &cfg, 4);
        let (mean, hw) = reps.mean_ci(|e| e.p_zero());
        assert!(hw > 0.0);
        let single = run(&params, &SimConfig::new(800_000, 302, 20.0));
        assert!(
            (mean - single.p_zero()).abs() < 4.0 * hw + 0.01,
            "{mean} vs {}",
            single.p_zero()
        );
        let pooled = reps.pooled_marginal();
        assert!((pooled.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ci_shrinks_with_replications() {
        let params = exp_params(3, 0.9, 0.7, 1.0, 1.0, 1.0);
        let cfg = SimConfig::new(150_000, 8, 20.0);
        let small = replicate(&params, &cfg, 10);
        let mut big_cfg = cfg.clone();
        big_cfg.replication = 100;
        let large = replicate(&params, &big_cfg, 20);
        let (_, hw_small) = small.mean_ci(|e| e.mean_l());
        let (_, hw_large) = large.mean_ci(|e| e.mean_l());
        let ratio = hw_large / hw_small;
        // CLT scaling: doubling replications shrinks the half-width by
        // about 1/sqrt(2); allow generous sampling slack.
        assert!(ratio < 1.0, "ratio {ratio}");
        assert!((ratio - 0.707).abs() < 0.35, "ratio {ratio}");
    }
}
