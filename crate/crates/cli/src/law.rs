use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use meanfield_core::solve_limit_law;

use crate::config::ModelSection;
use crate::error::CliError;

#[derive(Debug, clap::Args)]
pub struct LawArgs {
    /// Built-in model id.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Destination CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub drift: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub initial_mean: Option<f64>,
    #[arg(long)]
    pub initial_variance: Option<f64>,
}

/// Writes the limit-law path `t,m,sigma2,tau`.
pub fn cmd_law(args: &LawArgs) -> Result<(), CliError> {
    let section = ModelSection {
        id: args.model.clone(),
        drift: args.drift,
        sigma: args.sigma,
        initial_mean: args.initial_mean,
        initial_variance: args.initial_variance,
        kappa: args.kappa,
    };
    let model = section.resolve()?.spec()?;
    let law = solve_limit_law(&model, args.horizon, args.step).map_err(|e| match e {
        meanfield_core::Error::InvalidConfig(msg) => CliError::Config(msg),
        other => CliError::Runtime(other),
    })?;
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            let mut out = BufWriter::new(File::create(path)?);
            law.write_csv(&mut out)?;
            out.flush()?;
        }
        None => law.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}
