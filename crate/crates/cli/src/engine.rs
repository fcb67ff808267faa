//! Experiment orchestration: an `r`-sweep across engines, distance metrics
//! against the limit law, and deterministic CSV reporting.

use crate::config::{Engine, ExperimentConfig};
use crate::metrics::{ks_discrete_vs_cdf, tv_distance, uniform_grid, wasserstein1};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;
use twoq::bar::{limit_bar_residual, rbm2_residual};
use twoq::des::{replicate, run, SimConfig};
use twoq::limits::LimitDistribution;
use twoq::mm1exact::{solve_recursive, DiscreteDist};
use twoq::sde::{simulate_stationary, DiffusionSpec, EmpiricalCdf};

pub const CSV_HEADER: &str = "r,engine,ks,tv,w1,p0_over_r,mean_scaled,A1_hat,alpha_e,runtime_s";

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub r: f64,
    pub engine: Engine,
    pub ks: f64,
    pub tv: f64,
    pub w1: f64,
    pub p0_over_r: f64,
    pub mean_scaled: f64,
    pub a1_hat: f64,
    pub alpha_e: f64,
    pub runtime_s: f64,
}

impl ComparisonRow {
    /// Engine-local sanity: probabilities bounded, distances in range, every
    /// field finite.
    pub fn check_invariants(&self) -> Result<(), String> {
        let fields = [
            ("ks", self.ks),
            ("tv", self.tv),
            ("w1", self.w1),
            ("p0_over_r", self.p0_over_r),
            ("mean_scaled", self.mean_scaled),
            ("A1_hat", self.a1_hat),
            ("alpha_e", self.alpha_e),
            ("runtime_s", self.runtime_s),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(format!("{name} not finite: {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.ks) || !(0.0..=1.0).contains(&self.tv) {
            return Err(format!(
                "distance out of range: ks={} tv={}",
                self.ks, self.tv
            ));
        }
        if self.w1 < 0.0 {
            return Err(format!("negative W1: {}", self.w1));
        }
        if !(0.0..=1.0 + 1e-9).contains(&self.a1_hat) {
            return Err(format!("A1_hat out of range: {}", self.a1_hat));
        }
        Ok(())
    }

    fn to_csv_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(self.r),
            self.engine,
            fmt_sig(self.ks),
            fmt_sig(self.tv),
            fmt_sig(self.w1),
            fmt_sig(self.p0_over_r),
            fmt_sig(self.mean_scaled),
            fmt_sig(self.a1_hat),
            fmt_sig(self.alpha_e),
            fmt_sig(self.runtime_s),
        )
        .unwrap();
        s
    }
}

/// 12 significant digits, scientific.
fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub rows: Vec<ComparisonRow>,
    /// Per-row engine failures: `(r, engine, message)`.
    pub failures: Vec<(f64, Engine, String)>,
    pub invariant_violations: Vec<String>,
    pub csv_path: std::path::PathBuf,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.invariant_violations.is_empty()
    }
}

/// The limit law binned to the `r`-lattice: cell `l` carries
/// `F(r(l+1/2)) - F(r(l-1/2))`, with the remainder in a final bucket.
fn lattice_pmf(ld: &LimitDistribution, r: f64, len: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(len + 1);
    let mut acc = 0.0;
    for l in 0..len {
        let hi = ld.mixture_cdf(r * (l as f64 + 0.5));
        pmf.push(hi - acc);
        acc = hi;
    }
    pmf.push(1.0 - acc);
    pmf
}

/// Pads a lattice pmf with a complementary tail bucket so TV comparisons see
/// two genuinely normalized vectors.
fn padded_pmf(probs: &[f64], len: usize) -> Vec<f64> {
    let mut pmf: Vec<f64> = (0..len)
        .map(|i| probs.get(i).copied().unwrap_or(0.0))
        .collect();
    let acc: f64 = pmf.iter().sum();
    pmf.push((1.0 - acc).max(0.0));
    pmf
}

/// Distances of a scaled lattice law against the limit law.
fn lattice_distances(dist: &DiscreteDist, ld: &LimitDistribution, r: f64) -> (f64, f64, f64) {
    let ks = ks_discrete_vs_cdf(dist, |x| ld.mixture_cdf(x));
    let len = dist.values().len();
    let target = lattice_pmf(ld, r, len);
    let tv = tv_distance(&padded_pmf(dist.probs(), len), &target).expect("normalized laws");
    let hi = (ld.ell1 + 20.0 / ld.beta2()).max(dist.values().last().copied().unwrap_or(1.0));
    let grid = uniform_grid(hi, (r / 4.0).min(ld.ell1 / 64.0));
    let w1 = wasserstein1(|x| dist.cdf(x), |x| ld.mixture_cdf(x), &grid);
    (ks, tv, w1)
}

fn exact_row(
    cfg: &ExperimentConfig,
    ld: &LimitDistribution,
    r: f64,
) -> Result<ComparisonRow, String> {
    let t0 = Instant::now();
    let params = cfg.family.instantiate(r).map_err(|e| e.to_string())?;
    let sol = solve_recursive(&params).map_err(|e| e.to_string())?;
    if sol.balance_residuals() > 1e-12 {
        return Err(format!("balance residual {}", sol.balance_residuals()));
    }
    let dist = sol.scaled_distribution(r);
    let (ks, tv, w1) = lattice_distances(&dist, ld, r);
    Ok(ComparisonRow {
        r,
        engine: Engine::Exact,
        ks,
        tv,
        w1,
        p0_over_r: sol.p_zero() / r,
        mean_scaled: sol.p_zero() * sol.mean_l(),
        a1_hat: sol.p_le_ell1(),
        alpha_e: sol.alpha_e(),
        runtime_s: t0.elapsed().as_secs_f64(),
    })
}

fn sim_row(
    cfg: &ExperimentConfig,
    ld: &LimitDistribution,
    r: f64,
) -> Result<ComparisonRow, String> {
    let t0 = Instant::now();
    let sim = cfg.sim.as_ref().ok_or("missing sim settings")?;
    let params = cfg.family.instantiate(r).map_err(|e| e.to_string())?;
    let run_cfg = SimConfig {
        horizon_events: sim.events / sim.reps,
        warmup_events: sim.warmup / sim.reps,
        seed: sim.seed,
        replication: 0,
        palm_cap: 1.0 / r,
        psi_probes: Vec::new(),
    };

    let (dist, p_zero, mean_l, a1_hat, alpha_e, overflow) = if sim.reps >= 2 {
        let pool = replicate(&params, &run_cfg, sim.reps);
        let d = pool.pooled_scaled_distribution(r);
        let (p0, _) = pool.mean_ci(|e| e.p_zero());
        let (ml, _) = pool.mean_ci(|e| e.mean_l());
        let (a1, _) = pool.mean_ci(|e| e.p_le_ell1());
        let (al, _) = pool.mean_ci(|e| e.alpha_e());
        let (of, _) = pool.mean_ci(|e| e.overflow_mass());
        (d, p0, ml, a1, al, of)
    } else {
        let est = run(&params, &run_cfg);
        (
            est.scaled_distribution(r),
            est.p_zero(),
            est.mean_l(),
            est.p_le_ell1(),
            est.alpha_e(),
            est.overflow_mass(),
        )
    };
    if overflow > 1e-6 {
        return Err(format!("histogram overflow mass {overflow}"));
    }
    let (ks, tv_limit, w1) = lattice_distances(&dist, ld, r);
    // Against an exponential family the TV column compares simulator and
    // exact chain on the integer lattice; otherwise it is the lattice TV to
    // the limit law.
    let tv = if params.is_exponential() {
        let sol = solve_recursive(&params).map_err(|e| e.to_string())?;
        let exact = sol.scaled_distribution(r);
        let len = dist.values().len().max(exact.values().len());
        tv_distance(
            &padded_pmf(dist.probs(), len),
            &padded_pmf(exact.probs(), len),
        )
        .map_err(|e| e.to_string())?
    } else {
        tv_limit
    };
    Ok(ComparisonRow {
        r,
        engine: Engine::Sim,
        ks,
        tv,
        w1,
        p0_over_r: p_zero / r,
        mean_scaled: p_zero * mean_l,
        a1_hat,
        alpha_e,
        runtime_s: t0.elapsed().as_secs_f64(),
    })
}

fn sde_row(ld: &LimitDistribution, ecdf: &EmpiricalCdf, r: f64, elapsed: f64) -> ComparisonRow {
    let t0 = Instant::now();
    let ks = ecdf.ks_distance_to(|x| ld.mixture_cdf(x));
    // Bin the samples onto the r-lattice for a comparable TV column.
    let len = ((ld.ell1 + 20.0 / ld.beta2()) / r).ceil() as usize;
    let mut pmf = vec![0.0; len];
    let mut below = 0usize;
    for z in ecdf.samples() {
        let cell = ((z / r).round() as usize).min(len - 1);
        pmf[cell] += 1.0;
        if *z <= ld.ell1 {
            below += 1;
        }
    }
    let n = ecdf.len() as f64;
    for p in &mut pmf {
        *p /= n;
    }
    let tv = tv_distance(&padded_pmf(&pmf, len), &lattice_pmf(ld, r, len)).expect("normalized");
    let hi = ld.ell1 + 20.0 / ld.beta2();
    let grid = uniform_grid(hi, (r / 4.0).min(ld.ell1 / 64.0));
    let w1 = wasserstein1(|x| ecdf.eval(x), |x| ld.mixture_cdf(x), &grid);

    // Boundary-density estimate: p0/r corresponds to (sigma1^2/2) f(0+).
    // The first cell is skipped because the projected scheme parks an
    // O(sqrt(h)) atom exactly at zero.
    let w = ld.ell1 / 20.0;
    let f0 = (ecdf.eval(2.0 * w) - ecdf.eval(w)) / w;
    let p0_over_r = 0.5 * ld.sigma1_sq * f0;
    let a1_hat = below as f64 / n;
    let (l1, l2) = (ld.c1 * ld.mu, ld.c2 * ld.mu);
    ComparisonRow {
        r,
        engine: Engine::Sde,
        ks,
        tv,
        w1,
        p0_over_r,
        mean_scaled: p0_over_r * ecdf.mean(),
        a1_hat,
        alpha_e: l1 * a1_hat + l2 * (1.0 - a1_hat),
        runtime_s: elapsed + t0.elapsed().as_secs_f64(),
    }
}

fn limits_row(ld: &LimitDistribution, r: f64) -> ComparisonRow {
    let t0 = Instant::now();
    let (a1, _) = ld.weights();
    ComparisonRow {
        r,
        engine: Engine::Limits,
        ks: 0.0,
        tv: 0.0,
        w1: 0.0,
        p0_over_r: ld.p0_over_r_limit(),
        mean_scaled: ld.mean_l_limit(),
        a1_hat: a1,
        alpha_e: ld.alpha_e(),
        runtime_s: t0.elapsed().as_secs_f64(),
    }
}

/// Residual table of the limit stationary identities. Returns the rows of
/// `<prefix>_bar_residuals.csv` and the largest two-argument residual.
fn bar_residual_table(ld: &LimitDistribution) -> (String, f64) {
    let mut out = String::from("theta1,theta2,residual_two_arg,residual_diffusion\n");
    let mut worst: f64 = 0.0;
    for t1 in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        for t2 in [-2.0, -1.0, 0.0] {
            let r1 = limit_bar_residual(ld, t1, t2);
            worst = worst.max(r1);
            let r2 = if t1 == t2 {
                rbm2_residual(ld, t1)
            } else {
                f64::NAN
            };
            if r2.is_nan() {
                writeln!(out, "{},{},{},", fmt_sig(t1), fmt_sig(t2), fmt_sig(r1)).unwrap();
            } else {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_sig(t1),
                    fmt_sig(t2),
                    fmt_sig(r1),
                    fmt_sig(r2)
                )
                .unwrap();
            }
        }
    }
    (out, worst)
}

fn bar_row(ld: &LimitDistribution, r: f64, worst: f64) -> ComparisonRow {
    let t0 = Instant::now();
    let (a1, _) = ld.weights();
    ComparisonRow {
        r,
        engine: Engine::Bar,
        // The ks column carries the sup-norm residual of the two-argument
        // identity over the standard grid; tv/w1 are not applicable.
        ks: worst,
        tv: 0.0,
        w1: 0.0,
        p0_over_r: ld.p0_over_r_limit(),
        mean_scaled: ld.mean_l_limit(),
        a1_hat: a1,
        alpha_e: ld.alpha_e(),
        runtime_s: t0.elapsed().as_secs_f64(),
    }
}

/// Runs the sweep, writes `<prefix>_comparison.csv` (plus optional engine
/// artifacts) into `out_dir`, and returns all rows with their check results.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &std::path::Path,
    verbose: bool,
) -> Result<ExperimentReport, std::io::Error> {
    let ld = LimitDistribution::from_family(&cfg.family).expect("validated family");
    if !cfg.family.sigma_condition_holds() && verbose {
        eprintln!(
            "warning: equal limit rates with unequal arrival SCVs; the limit \
             law is unsupported in this regime"
        );
    }

    // Engine inputs that do not vary with r are computed once.
    let sde_shared: Option<(EmpiricalCdf, f64)> = if cfg.engines.contains(&Engine::Sde) {
        let s = cfg.sde.as_ref().expect("validated");
        let spec = DiffusionSpec::from_limit(&ld, s.h).expect("valid diffusion");
        let t0 = Instant::now();
        let ecdf = simulate_stationary(
            &spec,
            cfg.sim.as_ref().map_or(1, |s| s.seed),
            s.burn_in,
            s.samples,
            s.thinning,
        );
        Some((ecdf, t0.elapsed().as_secs_f64()))
    } else {
        None
    };
    let bar_shared: Option<(String, f64)> = if cfg.engines.contains(&Engine::Bar) {
        Some(bar_residual_table(&ld))
    } else {
        None
    };

    // One job per (r, engine) cell, executed by a bounded worker pool; the
    // output order is fixed by the job index, so scheduling cannot reorder
    // the CSV.
    let jobs: Vec<(usize, f64, Engine)> = cfg
        .r_values
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            cfg.engines
                .iter()
                .enumerate()
                .map(move |(j, e)| (i * cfg.engines.len() + j, *r, *e))
        })
        .collect();
    let results: Mutex<Vec<Option<Result<ComparisonRow, String>>>> =
        Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(4)
        .min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= jobs.len() {
                    break;
                }
                let (idx, r, engine) = jobs[k];
                let row = match engine {
                    Engine::Exact => exact_row(cfg, &ld, r),
                    Engine::Sim => sim_row(cfg, &ld, r),
                    Engine::Limits => Ok(limits_row(&ld, r)),
                    Engine::Sde => {
                        let (ecdf, secs) = sde_shared.as_ref().expect("precomputed");
                        Ok(sde_row(&ld, ecdf, r, *secs))
                    }
                    Engine::Bar => {
                        let (_, worst) = bar_shared.as_ref().expect("precomputed");
                        Ok(bar_row(&ld, r, *worst))
                    }
                };
                results.lock().unwrap()[idx] = Some(row);
            });
        }
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut invariant_violations = Vec::new();
    for (slot, (_, r, engine)) in results.into_inner().unwrap().into_iter().zip(&jobs) {
        match slot.expect("every job ran") {
            Ok(row) => {
                if let Err(msg) = row.check_invariants() {
                    invariant_violations.push(format!("r={r} engine={engine}: {msg}"));
                }
                rows.push(row);
            }
            Err(msg) => {
                if verbose {
                    eprintln!("engine {engine} failed at r={r}: {msg}");
                }
                failures.push((*r, *engine, msg));
            }
        }
    }

    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{}_comparison.csv", cfg.out_prefix));
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv_line());
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv)?;

    if let Some((table, _)) = &bar_shared {
        std::fs::write(
            out_dir.join(format!("{}_bar_residuals.csv", cfg.out_prefix)),
            table,
        )?;
    }
    if cfg.dump_histograms {
        if let Some(sim) = &cfg.sim {
            if cfg.engines.contains(&Engine::Sim) {
                for r in &cfg.r_values {
                    if let Ok(params) = cfg.family.instantiate(*r) {
                        let run_cfg = SimConfig {
                            horizon_events: sim.events / sim.reps,
                            warmup_events: sim.warmup / sim.reps,
                            seed: sim.seed,
                            replication: 0,
                            palm_cap: 1.0 / r,
                            psi_probes: Vec::new(),
                        };
                        let est = run(&params, &run_cfg);
                        let hist = serde_json::json!({
                            "r": r,
                            "time_average": est.marginal_pmf(),
                            "palm_arrival": (0..est.marginal_pmf().len() as u64)
                                .map(|l| est.palm_arrival_at(l)).collect::<Vec<_>>(),
                            "palm_departure": (0..est.marginal_pmf().len() as u64)
                                .map(|l| est.palm_departure_at(l)).collect::<Vec<_>>(),
                        });
                        std::fs::write(
                            out_dir.join(format!("{}_hist_r{}.json", cfg.out_prefix, r)),
                            serde_json::to_string_pretty(&hist).unwrap(),
                        )?;
                    }
                }
            }
        }
    }

    Ok(ExperimentReport {
        rows,
        failures,
        invariant_violations,
        csv_path,
    })
}
