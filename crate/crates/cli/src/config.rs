use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use meanfield_core::diagnostics::{ExperimentPlan, Mode};
use meanfield_core::engine::SimulationConfig;
use meanfield_core::BuiltinModel;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Δt = 1e-4.
    Paper,
    /// Δt = 1e-3.
    Fast,
}

impl Profile {
    pub fn step(self) -> f64 {
        match self {
            Profile::Paper => 1e-4,
            Profile::Fast => 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeKey {
    Interacting,
    IidLimit,
    StochasticNorm,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    name: String,
    mode: ModeKey,
    n: OneOrMany,
    replications: usize,
    dt: Option<f64>,
    horizon: Option<f64>,
    #[serde(default = "default_eval_time")]
    t_eval: f64,
    #[serde(default = "default_bin_width")]
    bin_width: f64,
    #[serde(default)]
    base_seed: u64,
    output: PathBuf,
    profile: Option<Profile>,
    law_step: Option<f64>,
    #[serde(default = "default_replays")]
    replays: u64,
}

fn default_eval_time() -> f64 {
    1.0
}

fn default_bin_width() -> f64 {
    0.1
}

fn default_replays() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub id: String,
    pub drift: Option<f64>,
    pub sigma: Option<f64>,
    pub initial_mean: Option<f64>,
    pub initial_variance: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentSection,
    model: ModelSection,
}

/// Overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub profile: Option<Profile>,
    pub output: Option<PathBuf>,
    pub base_seed: Option<u64>,
    pub jobs: Option<usize>,
}

/// A validated experiment description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub model_id: String,
    pub model: BuiltinModel,
    pub mode: Mode,
    pub particle_counts: Vec<usize>,
    pub replications: usize,
    pub step: f64,
    pub horizon: f64,
    pub eval_time: f64,
    pub law_step: f64,
    pub bin_width: f64,
    pub base_seed: u64,
    pub replays: u64,
    pub output: PathBuf,
    pub profile: Option<Profile>,
    pub jobs: Option<usize>,
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {message}"))
}

impl ModelSection {
    /// Resolves the model block, rejecting keys that the model does not take.
    pub fn resolve(&self) -> Result<BuiltinModel, CliError> {
        let allowed: &[&str] = match self.id.as_str() {
            "bank" => &["kappa"],
            "hybrid_bank" => &[],
            "tanh_vol" => &["drift", "initial_mean", "initial_variance"],
            "gaussian_const_vol" => &["drift", "sigma", "initial_mean", "initial_variance"],
            other => {
                return Err(invalid(
                    "model.id",
                    format!(
                        "unknown model `{other}`, expected one of {}",
                        BuiltinModel::IDS.join(", ")
                    ),
                ))
            }
        };
        let present = [
            ("drift", self.drift.is_some()),
            ("sigma", self.sigma.is_some()),
            ("initial_mean", self.initial_mean.is_some()),
            ("initial_variance", self.initial_variance.is_some()),
            ("kappa", self.kappa.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(invalid(
                    &format!("model.{key}"),
                    format!("not a parameter of `{}`", self.id),
                ));
            }
        }
        let m0 = self.initial_mean.unwrap_or(0.0);
        let v0 = self.initial_variance.unwrap_or(1.0);
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(invalid("model.initial_variance", format!("must be positive, got {v0}")));
        }
        Ok(match self.id.as_str() {
            "bank" => BuiltinModel::Bank {
                kappa: self.kappa.unwrap_or(1.0),
            },
            "hybrid_bank" => BuiltinModel::HybridBank,
            "tanh_vol" => BuiltinModel::TanhVol {
                drift: self.drift.unwrap_or(0.0),
                initial_mean: m0,
                initial_variance: v0,
            },
            _ => {
                let c = self.sigma.unwrap_or(1.0);
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid("model.sigma", format!("must be positive, got {c}")));
                }
                BuiltinModel::GaussianConstVol {
                    drift: self.drift.unwrap_or(0.0),
                    sigma: Arc::new(move |_| c),
                    kernel: Arc::new(|x| x),
                    bounds: (c, c),
                    initial_mean: m0,
                    initial_variance: v0,
                }
            }
        })
    }
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let exp = raw.experiment;
        let model = raw.model.resolve()?;

        let particle_counts = match exp.n {
            OneOrMany::One(n) => vec![n],
            OneOrMany::Many(v) => v,
        };
        if particle_counts.is_empty() {
            return Err(invalid("experiment.n", "needs at least one particle count"));
        }
        if let Some(n) = particle_counts.iter().find(|&&n| n < 5) {
            return Err(invalid(
                "experiment.n",
                format!("{n} is below 5, where the normalizers are undefined"),
            ));
        }
        if exp.replications == 0 {
            return Err(invalid("experiment.replications", "must be at least 1"));
        }
        if exp.replays == 0 {
            return Err(invalid("experiment.replays", "must be at least 1"));
        }
        if !(exp.t_eval >= 0.0 && exp.t_eval.is_finite()) {
            return Err(invalid(
                "experiment.t_eval",
                format!("must be nonnegative, got {}", exp.t_eval),
            ));
        }

        let profile = overrides.profile.or(exp.profile);
        let step = match (overrides.profile, exp.dt, profile) {
            (Some(p), _, _) => p.step(),
            (None, Some(dt), _) => dt,
            (None, None, Some(p)) => p.step(),
            (None, None, None) => return Err(invalid("experiment.dt", "set `dt` or a `profile`")),
        };
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("experiment.dt", format!("must be positive, got {step}")));
        }
        let horizon = exp.horizon.unwrap_or(exp.t_eval);
        if !(horizon >= exp.t_eval && horizon.is_finite()) {
            return Err(invalid(
                "experiment.horizon",
                format!("must be finite and at least t_eval = {}, got {horizon}", exp.t_eval),
            ));
        }
        let law_step = exp.law_step.unwrap_or(step);
        if !(law_step > 0.0 && law_step.is_finite()) {
            return Err(invalid(
                "experiment.law_step",
                format!("must be positive, got {law_step}"),
            ));
        }

        let mode = match exp.mode {
            ModeKey::Interacting => Mode::Interacting,
            ModeKey::IidLimit => Mode::IidLimit,
            ModeKey::StochasticNorm => Mode::StochasticNorm,
        };

        let config = RunConfig {
            name: exp.name,
            model_id: model.id().to_string(),
            model,
            mode,
            particle_counts,
            replications: exp.replications,
            step,
            horizon,
            eval_time: exp.t_eval,
            law_step,
            bin_width: exp.bin_width,
            base_seed: overrides.base_seed.unwrap_or(exp.base_seed),
            replays: exp.replays,
            output: overrides.output.clone().unwrap_or(exp.output),
            profile,
            jobs: overrides.jobs,
        };
        config.check_against_core()?;
        Ok(config)
    }

    /// Runs the core validators so that no output is written for a plan the
    /// library would reject.
    fn check_against_core(&self) -> Result<(), CliError> {
        meanfield_core::diagnostics::histogram_counts(&[], self.bin_width).map_err(|_| {
            invalid(
                "experiment.bin_width",
                format!("{} does not divide [0, 1] evenly", self.bin_width),
            )
        })?;
        if self.mode != Mode::IidLimit {
            SimulationConfig::new(self.particle_counts[0], self.step, self.eval_time, 0)
                .map_err(|e| invalid("experiment.dt", e))?;
        }
        self.plan(0).validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Law horizon: stochastic normalization needs room past `t*` for `τ⁻¹(τ_N)`.
    pub fn law_horizon(&self) -> f64 {
        match self.mode {
            Mode::StochasticNorm => self.horizon.max(2.0 * self.eval_time),
            _ => self.horizon,
        }
    }

    pub fn replay_seed(&self, replay: u64) -> u64 {
        self.base_seed.wrapping_add(replay)
    }

    pub fn plan(&self, replay: u64) -> ExperimentPlan {
        ExperimentPlan {
            model: self.model.spec().expect("built-in models always construct"),
            mode: self.mode,
            particle_counts: self.particle_counts.clone(),
            replications: self.replications,
            eval_time: self.eval_time,
            step: self.step,
            law_horizon: self.law_horizon(),
            law_step: self.law_step,
            base_seed: self.replay_seed(replay),
            jobs: self.jobs,
        }
    }
}
