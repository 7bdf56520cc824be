use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::engine::{sample_iid_limit, simulate, SimulationConfig};
use crate::error::{Error, Result};
use crate::extremes::{normalize_and_pit, normalizers, stochastic_normalizers};
use crate::limitlaw::{solve_limit_law, LimitLawPath};
use crate::models::{ClassTag, ModelSpec};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Simulate the particle system, normalize with the limit-law constants.
    Interacting,
    /// Draw i.i.d. copies of the limit law directly.
    IidLimit,
    /// Simulate the particle system, normalize at `τ⁻¹(τ_N(t*))`.
    StochasticNorm,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub model: ModelSpec,
    pub mode: Mode,
    pub particle_counts: Vec<usize>,
    pub replications: usize,
    /// Evaluation time `t*`.
    pub eval_time: f64,
    /// Euler–Maruyama step.
    pub step: f64,
    /// Horizon of the limit-law grid; must be at least `eval_time`.
    pub law_horizon: f64,
    pub law_step: f64,
    pub base_seed: u64,
    /// Worker count; `None` uses all available threads.
    pub jobs: Option<usize>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.particle_counts.is_empty() {
            return Err(Error::InvalidConfig("at least one particle count is required".into()));
        }
        if let Some(n) = self.particle_counts.iter().find(|&&n| n < 5) {
            return Err(Error::InvalidConfig(format!(
                "particle count {n} is below 5, where the normalizers are undefined"
            )));
        }
        if !(self.eval_time >= 0.0 && self.eval_time.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "evaluation time must be nonnegative, got {}",
                self.eval_time
            )));
        }
        if self.law_horizon.is_nan() || self.law_horizon < self.eval_time {
            return Err(Error::InvalidConfig(format!(
                "law horizon {} must cover the evaluation time {}",
                self.law_horizon, self.eval_time
            )));
        }
        if self.mode == Mode::StochasticNorm && self.model.class_tag() != ClassTag::Section2Class {
            return Err(Error::InvalidConfig(format!(
                "stochastic normalization needs a bounded-volatility model, got `{}`",
                self.model.name()
            )));
        }
        if self.mode != Mode::IidLimit {
            SimulationConfig::new(self.particle_counts[0], self.step, self.eval_time, 0)?;
        }
        Ok(())
    }
}

/// Normalized maxima of `R` independent replications at one particle count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaSample {
    pub n: usize,
    pub maxima: Vec<f64>,
    pub pit: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `τ_N(t*)` per replication, when the particle system was simulated.
    pub tau: Option<Vec<f64>>,
}

impl MaximaSample {
    pub fn len(&self) -> usize {
        self.pit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pit.is_empty()
    }

    /// CSV with columns `rep,seed,M,U` plus `tau_N` when available.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        match &self.tau {
            Some(_) => writeln!(out, "rep,seed,M,U,tau_N")?,
            None => writeln!(out, "rep,seed,M,U")?,
        }
        for j in 0..self.len() {
            write!(out, "{},{},{},{}", j, self.seeds[j], self.maxima[j], self.pit[j])?;
            if let Some(tau) = &self.tau {
                write!(out, ",{}", tau[j])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct Replicate {
    m: f64,
    u: f64,
    seed: u64,
    tau: Option<f64>,
}

/// Runs every replication of the plan. Replication `j` at particle count `N`
/// draws from the stream seeded by `(base_seed, N, j)` regardless of mode,
/// so simulated modes share paths and can be compared pairwise.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<BTreeMap<usize, MaximaSample>> {
    plan.validate()?;
    let law = solve_limit_law(&plan.model, plan.law_horizon, plan.law_step)?;
    let t = plan.eval_time;
    let mean = law.mean_at(t)?;
    let stdev = law.variance_at(t)?.sqrt();

    let mut samples = BTreeMap::new();
    for &n in &plan.particle_counts {
        let deterministic = normalizers(n, mean, stdev)?;
        let reps = super::replicate(plan.jobs, plan.replications, |j| {
            one_replication(plan, &law, n, j, &deterministic).map_err(|e| Error::in_replication(n, j, e))
        })?;
        let simulated = plan.mode != Mode::IidLimit;
        samples.insert(
            n,
            MaximaSample {
                n,
                maxima: reps.iter().map(|r| r.m).collect(),
                pit: reps.iter().map(|r| r.u).collect(),
                seeds: reps.iter().map(|r| r.seed).collect(),
                tau: simulated.then(|| reps.iter().map(|r| r.tau.unwrap_or(f64::NAN)).collect()),
            },
        );
    }
    Ok(samples)
}

fn one_replication(
    plan: &ExperimentPlan,
    law: &LimitLawPath,
    n: usize,
    j: usize,
    deterministic: &crate::extremes::NormalizingConstants,
) -> Result<Replicate> {
    let seed = rng::replication_seed(plan.base_seed, n, j);
    match plan.mode {
        Mode::IidLimit => {
            let xs = sample_iid_limit(law, plan.eval_time, n, &mut rng::stream(seed))?;
            let (m, u) = normalize_and_pit(&xs, deterministic)?;
            Ok(Replicate { m, u, seed, tau: None })
        }
        Mode::Interacting | Mode::StochasticNorm => {
            let config = SimulationConfig::new(n, plan.step, plan.eval_time, seed)?;
            let terminal = simulate(&plan.model, &config)?.terminal;
            let nc = if plan.mode == Mode::Interacting {
                *deterministic
            } else {
                stochastic_normalizers(terminal.tau, law, &plan.model, n)?
            };
            let (m, u) = normalize_and_pit(&terminal.positions, &nc)?;
            Ok(Replicate {
                m,
                u,
                seed,
                tau: Some(terminal.tau),
            })
        }
    }
}
