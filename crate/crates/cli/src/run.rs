use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use meanfield_core::diagnostics::{
    run_experiment, uniformity_report, HistogramReport, MaximaSample, Mode, REPORT_SCHEMA_VERSION,
};
use meanfield_core::extremes::normalizers;
use meanfield_core::{rng, solve_limit_law};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::svg;

#[derive(Debug, Clone, Copy, Serialize)]
struct Normalizer {
    mean: f64,
    stdev: f64,
    a: f64,
    b: f64,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    schema_version: u32,
    experiment: &'a str,
    model: &'a str,
    mode: Mode,
    generator: &'static str,
    base_seed: u64,
    replay: u64,
    n: usize,
    replications: usize,
    profile: Option<crate::config::Profile>,
    step: Option<f64>,
    eval_time: f64,
    law_step: f64,
    /// Absent in stochastic mode, where each replication has its own.
    normalizer: Option<Normalizer>,
    histogram: &'a HistogramReport,
}

/// One `(replay, N)` cell of a run.
pub struct Cell {
    pub replay: u64,
    pub seed: u64,
    pub sample: MaximaSample,
    pub report: HistogramReport,
    normalizer: Option<Normalizer>,
}

pub struct RunOutcome {
    pub cells: Vec<Cell>,
}

/// Runs every replay and particle count, then writes the artifacts. Nothing
/// is written until all simulations have succeeded.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let step = (config.mode != Mode::IidLimit).then_some(config.step);
    let law = solve_limit_law(&config.model.spec()?, config.law_horizon(), config.law_step)?;
    let (mean, stdev) = (
        law.mean_at(config.eval_time)?,
        law.variance_at(config.eval_time)?.sqrt(),
    );

    let mut cells = Vec::new();
    for replay in 0..config.replays {
        let plan = config.plan(replay);
        for (n, sample) in run_experiment(&plan)? {
            let report = uniformity_report(&sample, config.bin_width, step)?;
            let normalizer = match config.mode {
                Mode::StochasticNorm => None,
                _ => {
                    let nc = normalizers(n, mean, stdev)?;
                    Some(Normalizer {
                        mean,
                        stdev,
                        a: nc.a,
                        b: nc.b,
                    })
                }
            };
            cells.push(Cell {
                replay,
                seed: plan.base_seed,
                sample,
                report,
                normalizer,
            });
        }
    }
    let outcome = RunOutcome { cells };
    write_outputs(config, &outcome)?;
    Ok(outcome)
}

fn cell_dir(config: &RunConfig, cell: &Cell) -> PathBuf {
    let mut dir = config.output.clone();
    if config.replays > 1 {
        dir.push(format!("replay_{}", cell.replay));
    }
    if config.particle_counts.len() > 1 {
        dir.push(format!("n_{}", cell.sample.n));
    }
    dir
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_outputs(config: &RunConfig, outcome: &RunOutcome) -> Result<(), CliError> {
    for cell in &outcome.cells {
        let dir = cell_dir(config, cell);
        fs::create_dir_all(&dir)?;

        let mut maxima = create(&dir.join("maxima.csv"))?;
        cell.sample.write_csv(&mut maxima)?;
        maxima.flush()?;

        let mut histogram = create(&dir.join("histogram.csv"))?;
        cell.report.write_csv(&mut histogram)?;
        histogram.flush()?;

        let report = RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: &config.name,
            model: &config.model_id,
            mode: config.mode,
            generator: rng::GENERATOR,
            base_seed: cell.seed,
            replay: cell.replay,
            n: cell.sample.n,
            replications: cell.report.replications,
            profile: config.profile,
            step: (config.mode != Mode::IidLimit).then_some(config.step),
            eval_time: config.eval_time,
            law_step: config.law_step,
            normalizer: cell.normalizer,
            histogram: &cell.report,
        };
        let mut json = create(&dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut json, &report).map_err(std::io::Error::other)?;
        writeln!(json)?;
        json.flush()?;

        let title = format!(
            "{}: N = {}, R = {}",
            config.name, cell.sample.n, cell.report.replications
        );
        let reference = cell.report.replications as f64 * config.bin_width;
        fs::write(
            dir.join("chart.svg"),
            svg::bar_chart(&title, &cell.report.counts, reference),
        )?;
    }

    if outcome.cells.len() > 1 {
        let mut summary = create(&config.output.join("summary.csv"))?;
        writeln!(
            summary,
            "replay,base_seed,n,replications,ks_statistic,ks_critical_5,ks_critical_1"
        )?;
        for cell in &outcome.cells {
            let r = &cell.report;
            writeln!(
                summary,
                "{},{},{},{},{},{},{}",
                cell.replay, cell.seed, r.n, r.replications, r.ks_statistic, r.ks_critical_5, r.ks_critical_1
            )?;
        }
        summary.flush()?;
    }
    Ok(())
}

/// Plain-text table of the run for the terminal.
pub fn print_summary(config: &RunConfig, outcome: &RunOutcome) {
    println!(
        "{} ({}, {:?}), output in {}",
        config.name,
        config.model_id,
        config.mode,
        config.output.display()
    );
    println!(
        "{:>6} {:>8} {:>7} {:>9} {:>9} {:>9}  counts",
        "replay", "N", "R", "KS", "KS 5%", "KS 1%"
    );
    for cell in &outcome.cells {
        let r = &cell.report;
        let counts: Vec<String> = r.counts.iter().map(usize::to_string).collect();
        println!(
            "{:>6} {:>8} {:>7} {:>9.5} {:>9.5} {:>9.5}  {}",
            cell.replay,
            r.n,
            r.replications,
            r.ks_statistic,
            r.ks_critical_5,
            r.ks_critical_1,
            counts.join(" ")
        );
    }
}
