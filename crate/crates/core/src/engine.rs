//! Euler–Maruyama time stepping of the N-particle system.
//!
//! Both empirical statistics are frozen at the left endpoint of every step
//! and shared by all particles in that step. The running time change
//! `τ_N(t) = ∫ σ²(z_σ(s)) ds` is accumulated with the same left-endpoint rule.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::limitlaw::LimitLawPath;
use crate::models::{check_finite, ModelSpec};
use crate::rng;
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub particle_count: usize,
    pub step: f64,
    pub horizon: f64,
    pub seed: u64,
    pub store_trajectory: bool,
}

impl SimulationConfig {
    pub fn new(particle_count: usize, step: f64, horizon: f64, seed: u64) -> Result<Self> {
        let config = Self {
            particle_count,
            step,
            horizon,
            seed,
            store_trajectory: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_trajectory(mut self, store: bool) -> Self {
        self.store_trajectory = store;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.particle_count == 0 {
            return Err(Error::InvalidConfig("particle count must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be nonnegative, got {}",
                self.horizon
            )));
        }
        let ratio = self.horizon / self.step;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.step
            )));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub time: f64,
    /// Running empirical time change `τ_N(time)`.
    pub tau: f64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.positions.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `n` i.i.d. draws from the initial law, `t = 0`, `τ_N = 0`.
pub fn initialize<R: Rng + ?Sized>(model: &ModelSpec, n: usize, rng: &mut R) -> ParticleEnsemble {
    let mean = model.initial_mean();
    let sd = model.initial_variance().sqrt();
    let positions = (0..n)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ParticleEnsemble {
        positions,
        time: 0.0,
        tau: 0.0,
    }
}

/// Advance the ensemble by one Euler–Maruyama step of size `dt`.
pub fn em_step<R: Rng + ?Sized>(
    ensemble: &mut ParticleEnsemble,
    model: &ModelSpec,
    dt: f64,
    rng: &mut R,
) -> Result<()> {
    let t = ensemble.time;
    let (zr, zs) = model.statistics(&ensemble.positions)?;
    check_finite(zr, t)?;
    check_finite(zs, t)?;
    let sqrt_dt = dt.sqrt();

    let tau_increment = if model.diffusion_depends_on_x() {
        let mut acc = CompensatedSum::new();
        for x in ensemble.positions.iter_mut() {
            let drift = check_finite(model.drift(*x, zr, t), t)?;
            let sigma = check_finite(model.diffusion(*x, zs, t), t)?;
            let z: f64 = rng.sample(StandardNormal);
            *x += drift * dt + sigma * sqrt_dt * z;
            check_finite(*x, t)?;
            acc.add(sigma * sigma);
        }
        acc.value() / ensemble.positions.len() as f64 * dt
    } else {
        let sigma = check_finite(model.diffusion(0.0, zs, t), t)?;
        let noise_scale = sigma * sqrt_dt;
        for x in ensemble.positions.iter_mut() {
            let drift = model.drift(*x, zr, t);
            let z: f64 = rng.sample(StandardNormal);
            *x += drift * dt + noise_scale * z;
            if !x.is_finite() {
                let value = if drift.is_finite() { *x } else { drift };
                return Err(Error::CoefficientBlowUp { t, value });
            }
        }
        sigma * sigma * dt
    };

    ensemble.time += dt;
    ensemble.tau += tau_increment;
    Ok(())
}

/// One stored row of a trajectory dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub tau: f64,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    fn push(&mut self, ensemble: &ParticleEnsemble) {
        self.rows.push(TrajectoryRow {
            time: ensemble.time,
            tau: ensemble.tau,
            positions: ensemble.positions.clone(),
        });
    }

    /// CSV with header `t,tau_N,x0,x1,…` and one row per stored step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.rows.first().map_or(0, |r| r.positions.len());
        write!(out, "t,tau_N")?;
        for i in 0..n {
            write!(out, ",x{i}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{},{}", row.time, row.tau)?;
            for x in &row.positions {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub terminal: ParticleEnsemble,
    pub trajectory: Option<Trajectory>,
}

/// Run `round(T/Δt)` Euler–Maruyama steps from a fresh initial ensemble.
/// The generator is seeded from `config.seed` alone.
pub fn simulate(model: &ModelSpec, config: &SimulationConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let mut rng = rng::stream(config.seed);
    let mut ensemble = initialize(model, config.particle_count, &mut rng);
    let mut trajectory = config.store_trajectory.then(|| {
        let mut t = Trajectory::default();
        t.push(&ensemble);
        t
    });
    for step in 0..config.step_count() {
        em_step(&mut ensemble, model, config.step, &mut rng).map_err(|e| Error::at_step(step, e))?;
        if let Some(t) = trajectory.as_mut() {
            t.push(&ensemble);
        }
    }
    Ok(SimulationOutput {
        terminal: ensemble,
        trajectory,
    })
}

/// `n` i.i.d. draws from the limit law at time `t`, bypassing time stepping.
pub fn sample_iid_limit<R: Rng + ?Sized>(law: &LimitLawPath, t: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mean = law.mean_at(t)?;
    let sd = law.variance_at(t)?.sqrt();
    Ok((0..n)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Euler–Maruyama terminal value of the scalar SDE `dX = a(X) dt + b(X) dW`
/// driven by the given Brownian increments.
pub fn euler_maruyama_scalar(
    x0: f64,
    dt: f64,
    increments: &[f64],
    drift: impl Fn(f64) -> f64,
    diffusion: impl Fn(f64) -> f64,
) -> f64 {
    increments
        .iter()
        .fold(x0, |x, &dw| x + drift(x) * dt + diffusion(x) * dw)
}
