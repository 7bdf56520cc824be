//! Monte Carlo checks of the time-change results: convergence of `τ_N`, the
//! moment bounds on empirical kernel averages, the normalizer discrepancy,
//! and the strong order of the Euler–Maruyama scheme.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{log_log_slope, mean_and_stdev, replicate};
use crate::engine::{euler_maruyama_scalar, sample_iid_limit, simulate, SimulationConfig};
use crate::error::{Error, Result};
use crate::extremes::{normalizers, stochastic_normalizers};
use crate::limitlaw::{solve_limit_law, LimitLawPath};
use crate::models::{ClassTag, ModelSpec};
use crate::quadrature::{GaussHermite, DEFAULT_ORDER};
use crate::rng;

/// Shared parameters of the replicated studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub particle_counts: Vec<usize>,
    pub replications: usize,
    pub eval_time: f64,
    pub step: f64,
    pub law_step: f64,
    pub base_seed: u64,
    pub jobs: Option<usize>,
}

fn require_bounded(model: &ModelSpec) -> Result<()> {
    if model.class_tag() == ClassTag::Section2Class {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "study requires a bounded-volatility model, got `{}`",
            model.name()
        )))
    }
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.particle_counts.is_empty() {
            return Err(Error::InvalidConfig("at least one particle count is required".into()));
        }
        Ok(())
    }

    /// Terminal `τ_N(t*)` of every replication at particle count `n`.
    fn simulated_taus(&self, model: &ModelSpec, n: usize) -> Result<Vec<f64>> {
        replicate(self.jobs, self.replications, |j| {
            let seed = rng::replication_seed(self.base_seed, n, j);
            let config = SimulationConfig::new(n, self.step, self.eval_time, seed)?;
            simulate(model, &config)
                .map(|out| out.terminal.tau)
                .map_err(|e| Error::in_replication(n, j, e))
        })
    }

    /// The law is solved past `t*` so that `τ⁻¹(τ_N)` stays on the grid.
    fn law(&self, model: &ModelSpec) -> Result<LimitLawPath> {
        solve_limit_law(model, 2.0 * self.eval_time.max(self.step), self.law_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauRow {
    pub n: usize,
    pub mean_abs_error: f64,
    pub stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauStudy {
    pub tau_limit: f64,
    pub rows: Vec<TauRow>,
    /// Fitted slope of `ln E|τ_N − τ|` against `ln N`.
    pub slope: Option<f64>,
}

/// Monte Carlo estimate of `E|τ_N(t*) − τ(t*)|` for each particle count.
pub fn tau_convergence_study(model: &ModelSpec, config: &StudyConfig) -> Result<TauStudy> {
    require_bounded(model)?;
    config.validate()?;
    let law = config.law(model)?;
    let tau_limit = law.tau_of(config.eval_time)?;
    let mut rows = Vec::with_capacity(config.particle_counts.len());
    for &n in &config.particle_counts {
        let errors: Vec<f64> = config
            .simulated_taus(model, n)?
            .into_iter()
            .map(|tau| (tau - tau_limit).abs())
            .collect();
        let (mean_abs_error, stdev) = mean_and_stdev(&errors);
        rows.push(TauRow {
            n,
            mean_abs_error,
            stdev,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_abs_error)).collect();
    Ok(TauStudy {
        tau_limit,
        slope: log_log_slope(&points),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    /// Mean of `|a_stoch/a_det − 1|`.
    pub scale_discrepancy: f64,
    /// Mean of `|(b_stoch − b_det)/a_det|`.
    pub location_discrepancy: f64,
    /// Mean of `|τ_N − τ|`, which bounds the scale discrepancy.
    pub mean_tau_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStudy {
    pub rows: Vec<RatioRow>,
}

/// `(|a_stoch/a_det − 1|, |(b_stoch − b_det)/a_det|)` for one observed `τ_N(t)`.
pub fn ratio_discrepancies(tau_n: f64, law: &LimitLawPath, model: &ModelSpec, n: usize, t: f64) -> Result<(f64, f64)> {
    let det = normalizers(n, law.mean_at(t)?, law.variance_at(t)?.sqrt())?;
    let sto = stochastic_normalizers(tau_n, law, model, n)?;
    Ok(((sto.a / det.a - 1.0).abs(), ((sto.b - det.b) / det.a).abs()))
}

/// Discrepancy between the stochastic normalizers at `τ⁻¹(τ_N(t*))` and the
/// deterministic ones at `t*`.
pub fn proposition_ratio_study(model: &ModelSpec, config: &StudyConfig) -> Result<RatioStudy> {
    require_bounded(model)?;
    config.validate()?;
    let law = config.law(model)?;
    let tau_limit = law.tau_of(config.eval_time)?;
    let mut rows = Vec::new();
    for &n in &config.particle_counts {
        let taus = config.simulated_taus(model, n)?;
        let mut scale = Vec::with_capacity(taus.len());
        let mut location = Vec::with_capacity(taus.len());
        for &tau in &taus {
            let (a, b) = ratio_discrepancies(tau, &law, model, n, config.eval_time)?;
            scale.push(a);
            location.push(b);
        }
        let tau_errors: Vec<f64> = taus.iter().map(|t| (t - tau_limit).abs()).collect();
        rows.push(RatioRow {
            n,
            scale_discrepancy: mean_and_stdev(&scale).0,
            location_discrepancy: mean_and_stdev(&location).0,
            mean_tau_error: mean_and_stdev(&tau_errors).0,
        });
    }
    Ok(RatioStudy { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentStatus {
    Pass,
    Fail,
    InsufficientReplications,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub p: u32,
    /// Estimate of `E[(mean g^σ(Xⁱ) − E g^σ(X))^{2p}]`.
    pub moment: f64,
    pub std_error: f64,
    /// `p! K^p / N^p` with the reference `K`.
    pub bound: f64,
    /// Smallest `K` for which this row's bound holds: `N (moment/p!)^{1/p}`.
    pub fitted_k: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub n: usize,
    pub replications: usize,
    /// Smallest `K` with `E[g^σ(X)^{2p}] ≤ p! K^p` for all tabulated `p`,
    /// computed by quadrature on the limit law.
    pub reference_k: f64,
    /// Smallest `K` making every empirical row hold.
    pub fitted_k: Option<f64>,
    pub rows: Vec<MomentRow>,
    pub status: MomentStatus,
}

fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

/// Empirical check of the moment bounds on the centred empirical mean of
/// `g^σ` over i.i.d. samples of the limit law at `t*`.
///
/// The reference `K` is taken from the population bound, and the check fails
/// only when the `p = 1` row exceeds its bound by more than three Monte Carlo
/// standard errors.
#[allow(clippy::too_many_arguments)]
pub fn moment_bound_check(
    model: &ModelSpec,
    n: usize,
    replications: usize,
    eval_time: f64,
    p_max: u32,
    law_step: f64,
    base_seed: u64,
    jobs: Option<usize>,
) -> Result<MomentCheck> {
    require_bounded(model)?;
    if !(1..=3).contains(&p_max) {
        return Err(Error::InvalidConfig(format!("p_max must be in 1..=3, got {p_max}")));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("particle count must be at least 1".into()));
    }
    let law = solve_limit_law(model, eval_time, law_step)?;
    let (mean, variance) = (law.mean_at(eval_time)?, law.variance_at(eval_time)?);
    let gh = GaussHermite::new(DEFAULT_ORDER);
    let g = |x| model.kernel_diffusion(x);
    let centre = gh.expect_normal(mean, variance, g);
    let reference_k = (1..=p_max)
        .map(|p| {
            let raw = gh.expect_normal(mean, variance, |x| g(x).powi(2 * p as i32));
            (raw / factorial(p)).powf(1.0 / p as f64)
        })
        .fold(0.0, f64::max);

    let deviations = replicate(jobs, replications, |j| {
        let seed = rng::replication_seed(base_seed, n, j);
        let xs = sample_iid_limit(&law, eval_time, n, &mut rng::stream(seed))?;
        let avg = xs.iter().map(|&x| g(x)).sum::<f64>() / n as f64;
        Ok(avg - centre)
    })?;

    let nf = n as f64;
    let rows: Vec<MomentRow> = (1..=p_max)
        .map(|p| {
            let powers: Vec<f64> = deviations.iter().map(|d| d.powi(2 * p as i32)).collect();
            let (moment, sd) = mean_and_stdev(&powers);
            let std_error = sd / (replications as f64).sqrt();
            let bound = factorial(p) * (reference_k / nf).powi(p as i32);
            MomentRow {
                p,
                moment,
                std_error,
                bound,
                fitted_k: nf * (moment / factorial(p)).powf(1.0 / p as f64),
                satisfied: moment <= bound + 3.0 * std_error,
            }
        })
        .collect();

    let (status, fitted_k) = if replications < 2 {
        (MomentStatus::InsufficientReplications, None)
    } else {
        let fitted = rows.iter().map(|r| r.fitted_k).fold(0.0, f64::max);
        let status = if rows[0].satisfied {
            MomentStatus::Pass
        } else {
            MomentStatus::Fail
        };
        (status, Some(fitted))
    };
    Ok(MomentCheck {
        n,
        replications,
        reference_k,
        fitted_k,
        rows,
        status,
    })
}

/// Geometric Brownian motion `dX = μX dt + σX dW` used for the strong-order
/// check, with exact solution `X_T = X₀ exp((μ − σ²/2)T + σW_T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongOrderConfig {
    pub drift: f64,
    pub volatility: f64,
    pub x0: f64,
    pub horizon: f64,
    pub paths: usize,
    /// Step refinements: level `k` uses `Δt = T/2^k`.
    pub levels: std::ops::RangeInclusive<u32>,
    pub base_seed: u64,
    pub jobs: Option<usize>,
}

impl Default for StrongOrderConfig {
    fn default() -> Self {
        Self {
            drift: 1.0,
            volatility: 1.0,
            x0: 1.0,
            horizon: 1.0,
            paths: 1000,
            levels: 4..=10,
            base_seed: 0,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongOrderRow {
    pub step: f64,
    pub rms_error: f64,
    /// `rms(2Δt)/rms(Δt)`; absent on the coarsest level.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongOrderStudy {
    pub rows: Vec<StrongOrderRow>,
    /// Per-halving error ratio from the least-squares fit across all levels,
    /// `2^{slope}` with slope of `ln rms` against `ln(1/Δt)` negated.
    pub fitted_ratio: f64,
}

/// RMS terminal error of Euler–Maruyama against the exact GBM solution for
/// each step level. All levels reuse the same Brownian paths.
pub fn strong_order_study(config: &StrongOrderConfig) -> Result<StrongOrderStudy> {
    let (&coarse, &fine) = (config.levels.start(), config.levels.end());
    if coarse > fine || fine > 24 || config.paths == 0 {
        return Err(Error::InvalidConfig(
            "strong-order study needs paths > 0 and levels within 0..=24".into(),
        ));
    }
    let fine_steps = 1usize << fine;
    let fine_dt = config.horizon / fine_steps as f64;
    let levels: Vec<u32> = config.levels.clone().collect();
    let (mu, sigma) = (config.drift, config.volatility);

    let squared_errors = replicate(config.jobs, config.paths, |p| {
        let mut r = rng::stream(rng::replication_seed(config.base_seed, fine_steps, p));
        let fine_increments: Vec<f64> = (0..fine_steps)
            .map(|_| fine_dt.sqrt() * r.sample::<f64, _>(StandardNormal))
            .collect();
        let w_t: f64 = fine_increments.iter().sum();
        let exact = config.x0 * ((mu - 0.5 * sigma * sigma) * config.horizon + sigma * w_t).exp();
        Ok(levels
            .iter()
            .map(|&k| {
                let block = 1usize << (fine - k);
                let increments: Vec<f64> = fine_increments.chunks(block).map(|c| c.iter().sum()).collect();
                let dt = config.horizon / (1usize << k) as f64;
                let approx = euler_maruyama_scalar(config.x0, dt, &increments, |x| mu * x, |x| sigma * x);
                (approx - exact).powi(2)
            })
            .collect::<Vec<f64>>())
    })?;

    let mut rows: Vec<StrongOrderRow> = Vec::with_capacity(levels.len());
    for (i, &k) in levels.iter().enumerate() {
        let mse = squared_errors.iter().map(|e| e[i]).sum::<f64>() / config.paths as f64;
        let rms_error = mse.sqrt();
        let ratio = rows.last().map(|prev| prev.rms_error / rms_error);
        rows.push(StrongOrderRow {
            step: config.horizon / (1usize << k) as f64,
            rms_error,
            ratio,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (1.0 / r.step, r.rms_error)).collect();
    let fitted_ratio = log_log_slope(&points).map_or(f64::NAN, |s| 2f64.powf(-s));
    Ok(StrongOrderStudy { rows, fitted_ratio })
}
