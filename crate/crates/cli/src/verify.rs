use meanfield_core::diagnostics::{
    moment_bound_check, proposition_ratio_study, strong_order_study, tau_convergence_study, MomentStatus,
    StrongOrderConfig, StudyConfig,
};
use meanfield_core::BuiltinModel;

use crate::config::Profile;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Tau,
    Moments,
    Ratio,
    StrongOrder,
}

pub const TAU_SLOPE_BAND: (f64, f64) = (-0.65, -0.35);
pub const RATIO_THRESHOLD: f64 = 0.02;
pub const STRONG_ORDER_BAND: (f64, f64) = (1.2, 1.7);

pub struct VerifyOptions {
    pub profile: Profile,
    pub base_seed: u64,
    pub jobs: Option<usize>,
}

fn study(options: &VerifyOptions) -> StudyConfig {
    let step = options.profile.step();
    StudyConfig {
        particle_counts: vec![50, 200, 800, 3200],
        replications: 200,
        eval_time: 1.0,
        step,
        law_step: step,
        base_seed: options.base_seed,
        jobs: options.jobs,
    }
}

fn verdict(pass: bool, what: String) -> Result<(), CliError> {
    println!("{}: {what}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(CliError::CriteriaFailed(what))
    }
}

pub fn cmd_verify(suite: Suite, options: &VerifyOptions) -> Result<(), CliError> {
    let tanh = BuiltinModel::tanh_vol(1.0).spec()?;
    match suite {
        Suite::Tau => {
            let s = tau_convergence_study(&tanh, &study(options))?;
            println!("tau(1) = {:.12}", s.tau_limit);
            println!("{:>6} {:>14} {:>14}", "N", "E|tau_N - tau|", "stdev");
            for r in &s.rows {
                println!("{:>6} {:>14.6e} {:>14.6e}", r.n, r.mean_abs_error, r.stdev);
            }
            let slope = s.slope.unwrap_or(f64::NAN);
            let (lo, hi) = TAU_SLOPE_BAND;
            verdict(
                (lo..=hi).contains(&slope),
                format!("log-log slope {slope:.4} in [{lo}, {hi}]"),
            )
        }
        Suite::Ratio => {
            let s = proposition_ratio_study(&tanh, &study(options))?;
            println!(
                "{:>6} {:>14} {:>14} {:>14}",
                "N", "|a/a_det - 1|", "|db|/a_det", "E|tau_N - tau|"
            );
            for r in &s.rows {
                println!(
                    "{:>6} {:>14.6e} {:>14.6e} {:>14.6e}",
                    r.n, r.scale_discrepancy, r.location_discrepancy, r.mean_tau_error
                );
            }
            let decreasing = s
                .rows
                .windows(2)
                .all(|w| w[1].scale_discrepancy < w[0].scale_discrepancy);
            let last = s.rows.last().map_or(f64::NAN, |r| r.scale_discrepancy);
            verdict(
                decreasing && last < RATIO_THRESHOLD,
                format!("scale discrepancy decreasing = {decreasing}, {last:.4e} < {RATIO_THRESHOLD} at N = 3200"),
            )
        }
        Suite::Moments => {
            let c = moment_bound_check(
                &tanh,
                200,
                2000,
                1.0,
                3,
                options.profile.step(),
                options.base_seed,
                options.jobs,
            )?;
            println!("reference K = {:.6}, fitted K = {:?}", c.reference_k, c.fitted_k);
            println!(
                "{:>2} {:>14} {:>14} {:>14} {:>10}",
                "p", "moment", "std error", "bound", "fitted K"
            );
            for r in &c.rows {
                println!(
                    "{:>2} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.5}",
                    r.p, r.moment, r.std_error, r.bound, r.fitted_k
                );
            }
            verdict(
                c.status == MomentStatus::Pass,
                format!("moment bound status {:?}", c.status),
            )
        }
        Suite::StrongOrder => {
            let s = strong_order_study(&StrongOrderConfig {
                base_seed: options.base_seed,
                jobs: options.jobs,
                ..Default::default()
            })?;
            println!("{:>12} {:>14} {:>8}", "dt", "rms error", "ratio");
            for r in &s.rows {
                let ratio = r.ratio.map_or(String::from("-"), |x| format!("{x:.4}"));
                println!("{:>12.6e} {:>14.6e} {:>8}", r.step, r.rms_error, ratio);
            }
            let (lo, hi) = STRONG_ORDER_BAND;
            verdict(
                (lo..=hi).contains(&s.fitted_ratio),
                format!("fitted halving ratio {:.4} in [{lo}, {hi}]", s.fitted_ratio),
            )
        }
    }
}
