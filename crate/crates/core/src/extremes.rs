//! Gumbel limit machinery for maxima of Gaussian particles.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limitlaw::LimitLawPath;
use crate::models::{ClassTag, ModelSpec};

/// Standard Gumbel distribution function `exp(−exp(−x))`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Inverse of [`gumbel_cdf`] by bisection, for `p` in `(0, 1)`.
pub fn gumbel_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "gumbel quantile needs p in (0, 1), got {p}");
    let (mut lo, mut hi) = (-1.0, 1.0);
    while gumbel_cdf(lo) > p {
        lo *= 2.0;
    }
    while gumbel_cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gumbel_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerSource {
    Deterministic,
    Stochastic,
}

/// Scale `a` and location `b` such that `(max − b)/a` is approximately
/// standard Gumbel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizingConstants {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub source: NormalizerSource,
}

/// `2 ln N − ln ln N − ln 4π`; positive only for `N ≥ 5`.
pub fn radicand(n: usize) -> f64 {
    let ln_n = (n as f64).ln();
    2.0 * ln_n - ln_n.ln() - (4.0 * PI).ln()
}

pub fn normalizers(n: usize, mean: f64, stdev: f64) -> Result<NormalizingConstants> {
    if n < 5 {
        return Err(Error::NormalizerUndefined(n));
    }
    if !(stdev > 0.0 && stdev.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "normalizer stdev must be positive, got {stdev}"
        )));
    }
    let root = radicand(n).sqrt();
    Ok(NormalizingConstants {
        a: stdev / root,
        b: stdev * root + mean,
        n,
        source: NormalizerSource::Deterministic,
    })
}

/// Normalizers evaluated at the random time `s = τ⁻¹(τ_N)`. The variance at
/// `s` is read off the identity `σ_s² = σ₀² + τ_N`.
pub fn stochastic_normalizers(
    tau_n: f64,
    law: &LimitLawPath,
    model: &ModelSpec,
    n: usize,
) -> Result<NormalizingConstants> {
    if model.class_tag() != ClassTag::Section2Class {
        return Err(Error::InvalidModel(format!(
            "stochastic normalizers require a bounded-volatility model, got `{}`",
            model.name()
        )));
    }
    let s = law.tau_inverse(tau_n)?;
    let mean = law.mean_at(s)?;
    let stdev = (model.initial_variance() + tau_n).sqrt();
    let mut nc = normalizers(n, mean, stdev)?;
    nc.source = NormalizerSource::Stochastic;
    Ok(nc)
}

/// Normalized maximum `M = (max − b)/a` and its Gumbel PIT `U = F(M)`.
pub fn normalize_and_pit(positions: &[f64], nc: &NormalizingConstants) -> Result<(f64, f64)> {
    if positions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let max = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = (max - nc.b) / nc.a;
    Ok((m, gumbel_cdf(m)))
}
