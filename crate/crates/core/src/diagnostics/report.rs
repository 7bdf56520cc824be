use std::io::Write;

use serde::Serialize;

use super::experiment::MaximaSample;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Asymptotic Kolmogorov critical coefficients; critical value is `c/√R`.
pub const KS_COEFFICIENT_5: f64 = 1.358;
pub const KS_COEFFICIENT_1: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    /// Strong discretization error of the normalized maximum, `√Δt·√(2 ln N)`.
    pub discretization: f64,
    /// Worst-case sampling error of a bin frequency, `0.5/√R`.
    pub lln_per_bin: f64,
}

pub fn error_budget(step: f64, n: usize, replications: usize) -> ErrorBudget {
    ErrorBudget {
        discretization: step.sqrt() * (2.0 * (n as f64).ln()).sqrt(),
        lln_per_bin: 0.5 / (replications as f64).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramReport {
    pub schema_version: u32,
    pub n: usize,
    pub replications: usize,
    pub bin_width: f64,
    pub counts: Vec<usize>,
    pub ks_statistic: f64,
    pub ks_critical_5: f64,
    pub ks_critical_1: f64,
    pub error_budget: ErrorBudget,
}

fn bin_count(bin_width: f64) -> Result<usize> {
    let bins = (1.0 / bin_width).round();
    if !(bin_width > 0.0 && bin_width <= 1.0) || (bins * bin_width - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "bin width {bin_width} does not divide [0, 1] evenly"
        )));
    }
    Ok(bins as usize)
}

/// Counts over the half-open bins `[k/B, (k+1)/B)`, the last bin closed.
pub fn histogram_counts(values: &[f64], bin_width: f64) -> Result<Vec<usize>> {
    let bins = bin_count(bin_width)?;
    let edge = |k: usize| k as f64 / bins as f64;
    let mut counts = vec![0; bins];
    for &u in values {
        let mut k = ((u * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        if k > 0 && u < edge(k) {
            k -= 1;
        } else if k + 1 < bins && u >= edge(k + 1) {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(counts)
}

/// One-sample KS distance of `values` from Uniform(0, 1):
/// `max_i max(i/R − U_(i), U_(i) − (i−1)/R)` over the sorted sample.
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let i = i as f64;
            ((i + 1.0) / r - u).max(u - i / r)
        })
        .fold(0.0, f64::max)
}

/// Histogram, KS statistic and error budget of a PIT sample.
/// `step` is the Euler–Maruyama step, `None` for directly sampled maxima.
pub fn uniformity_report(sample: &MaximaSample, bin_width: f64, step: Option<f64>) -> Result<HistogramReport> {
    let r = sample.len();
    if r == 0 {
        return Err(Error::InvalidConfig("empty maxima sample".into()));
    }
    let counts = histogram_counts(&sample.pit, bin_width)?;
    let mut budget = error_budget(step.unwrap_or(0.0), sample.n, r);
    if step.is_none() {
        budget.discretization = 0.0;
    }
    let root = (r as f64).sqrt();
    Ok(HistogramReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: sample.n,
        replications: r,
        bin_width,
        counts,
        ks_statistic: ks_statistic(&sample.pit),
        ks_critical_5: KS_COEFFICIENT_5 / root,
        ks_critical_1: KS_COEFFICIENT_1 / root,
        error_budget: budget,
    })
}

impl HistogramReport {
    pub fn bin_edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let bins = self.counts.len();
        (0..bins).map(move |k| (k as f64 / bins as f64, (k + 1) as f64 / bins as f64))
    }

    /// CSV with columns `bin_lo,bin_hi,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for ((lo, hi), count) in self.bin_edges().zip(&self.counts) {
            writeln!(out, "{lo},{hi},{count}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn sample(pit: Vec<f64>) -> MaximaSample {
        let r = pit.len();
        MaximaSample {
            n: 200,
            maxima: vec![0.0; r],
            pit,
            seeds: vec![0; r],
            tau: None,
        }
    }

    #[test]
    fn stair_pattern() {
        let mids: Vec<f64> = (0..10).map(|k| 0.05 + 0.1 * k as f64).collect();
        let report = uniformity_report(&sample(mids), 0.1, None).unwrap();
        assert_eq!(report.counts, vec![1; 10]);
        assert!((report.ks_statistic - 0.05).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sample_at_zero() {
        let report = uniformity_report(&sample(vec![0.0; 25]), 0.1, None).unwrap();
        assert_eq!(report.counts[0], 25);
        assert_eq!(report.ks_statistic, 1.0);
    }

    #[test]
    fn single_replication_fills_one_bin() {
        let report = uniformity_report(&sample(vec![0.42]), 0.1, Some(1e-3)).unwrap();
        assert_eq!(report.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(report.counts[4], 1);
    }

    #[test]
    fn edges_fall_in_upper_bin_and_one_in_last() {
        let counts = histogram_counts(&[0.0, 0.1, 0.3, 0.7, 0.9, 1.0], 0.1).unwrap();
        assert_eq!(counts, vec![1, 1, 0, 1, 0, 0, 0, 1, 0, 2]);
        let quarter = histogram_counts(&[0.25, 0.5, 0.75, 0.999], 0.25).unwrap();
        assert_eq!(quarter, vec![0, 1, 1, 2]);
    }

    #[test]
    fn bin_width_must_divide_unit_interval() {
        assert!(histogram_counts(&[0.5], 0.3).is_err());
        assert!(histogram_counts(&[0.5], 0.0).is_err());
        assert!(histogram_counts(&[0.5], 0.05).is_ok());
    }

    #[test]
    fn error_budget_values() {
        let b = error_budget(1e-4, 200, 1000);
        assert!((b.discretization - 0.032_552_472_614_374_59).abs() < 1e-12);
        assert!((b.lln_per_bin - 0.015_811_388_300_841_897).abs() < 1e-15);
        assert!(error_budget(1e-12, 200, 1000).discretization < 1e-5);
        assert_eq!(error_budget(0.0, 200, 1000).discretization, 0.0);
    }

    #[test]
    fn critical_values_and_schema() {
        let report = uniformity_report(&sample(vec![0.5; 1000]), 0.1, Some(1e-4)).unwrap();
        assert!((report.ks_critical_1 - 0.051_481).abs() < 1e-5);
        assert!((report.ks_critical_5 - 0.042_944).abs() < 1e-5);
        assert_eq!(report.schema_version, REPORT_SCHEMA_VERSION);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(
            json["error_budget"]["lln_per_bin"].as_f64().unwrap(),
            report.error_budget.lln_per_bin
        );
    }

    #[test]
    fn uniform_draws_pass_ks_at_five_percent() {
        let trials = 100;
        let passing = (0..trials)
            .filter(|&t| {
                let mut r = rng::stream(rng::replication_seed(1234, 10_000, t));
                let u: Vec<f64> = (0..10_000).map(|_| r.random::<f64>()).collect();
                ks_statistic(&u) < KS_COEFFICIENT_5 / 100.0
            })
            .count();
        assert!(
            passing >= 95,
            "{passing} of {trials} trials below the 5% critical value"
        );
    }

    #[test]
    fn histogram_csv() {
        let report = uniformity_report(&sample(vec![0.05, 0.55]), 0.5, None).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "bin_lo,bin_hi,count\n0,0.5,1\n0.5,1,1\n"
        );
    }

    fn ks_brute_force(values: &[f64]) -> f64 {
        // sup over u of |F̂(u) − u|, probing each sample point from both sides
        let r = values.len() as f64;
        let mut d: f64 = 0.0;
        for &x in values {
            let below = values.iter().filter(|&&v| v < x).count() as f64 / r;
            let at_or_below = values.iter().filter(|&&v| v <= x).count() as f64 / r;
            d = d.max((at_or_below - x).abs()).max((x - below).abs());
        }
        d
    }

    proptest! {
        #[test]
        fn counts_sum_to_sample_size(values in proptest::collection::vec(0f64..=1.0, 1..300)) {
            let counts = histogram_counts(&values, 0.1).unwrap();
            prop_assert_eq!(counts.iter().sum::<usize>(), values.len());
        }

        #[test]
        fn ks_matches_brute_force(values in proptest::collection::vec(0f64..=1.0, 1..60)) {
            let fast = ks_statistic(&values);
            let slow = ks_brute_force(&values);
            prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
        }
    }
}
