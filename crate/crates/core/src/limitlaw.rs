//! The Gaussian limit law of the McKean–Vlasov equation and its time change.
//!
//! For the bounded-volatility class the limit is `N(m_t, σ_t²)` with
//! `m_t = m₀ + r₀ t` and `σ_t² = σ₀² + τ(t)`, where
//! `τ(t) = ∫₀ᵗ σ²(E[g^σ(X_s)]) ds`. The ODE for `τ` is advanced by forward
//! Euler with the Gaussian expectation done by Gauss–Hermite quadrature.
//!
//! For the bank models the law is known in closed form: `m_t = 0` and
//! `σ_t² = e^{(2κ+1)t}`. Their `tau` column holds the variance increment
//! `σ_t² − σ₀²`, which keeps `σ² = σ₀² + τ` on every node; it is not the
//! integral of the squared diffusion for these models.

use std::io::Write;

use crate::error::{Error, Result};
use crate::models::{ModelClass, ModelSpec};
use crate::quadrature::{GaussHermite, DEFAULT_ORDER};
use crate::sum::CompensatedSum;

/// Agreement required between the default and doubled quadrature order on
/// the initial law.
const SELF_CHECK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawPath {
    grid: Vec<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
    tau: Vec<f64>,
}

pub fn solve_limit_law(model: &ModelSpec, horizon: f64, step: f64) -> Result<LimitLawPath> {
    solve_limit_law_with_order(model, horizon, step, DEFAULT_ORDER)
}

pub fn solve_limit_law_with_order(model: &ModelSpec, horizon: f64, step: f64, order: usize) -> Result<LimitLawPath> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "law horizon must be nonnegative, got {horizon}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!("law step must be positive, got {step}")));
    }
    let cells = if horizon == 0.0 {
        0
    } else {
        ((horizon / step) - 1e-9).ceil().max(1.0) as usize
    };
    let grid: Vec<f64> = (0..=cells)
        .map(|k| {
            if k == cells {
                horizon
            } else {
                horizon * k as f64 / cells as f64
            }
        })
        .collect();

    match model.class() {
        ModelClass::Section2 { drift, .. } => Ok(solve_bounded(model, drift, grid, order)?),
        ModelClass::Bank { kappa } => Ok(closed_form(grid, 2.0 * kappa + 1.0)),
        ModelClass::HybridBank => Ok(closed_form(grid, 3.0)),
        ModelClass::General => Err(Error::NoLimitLaw(model.name().to_string())),
    }
}

fn closed_form(grid: Vec<f64>, rate: f64) -> LimitLawPath {
    let variance: Vec<f64> = grid.iter().map(|&t| (rate * t).exp()).collect();
    let tau = variance.iter().map(|v| v - 1.0).collect();
    LimitLawPath {
        mean: vec![0.0; grid.len()],
        grid,
        variance,
        tau,
    }
}

fn solve_bounded(model: &ModelSpec, drift: f64, grid: Vec<f64>, order: usize) -> Result<LimitLawPath> {
    let m0 = model.initial_mean();
    let v0 = model.initial_variance();
    let gh = GaussHermite::new(order);

    let reference = GaussHermite::new(2 * order);
    let g = |x| model.kernel_diffusion(x);
    let (low, high) = (gh.expect_normal(m0, v0, g), reference.expect_normal(m0, v0, g));
    let difference = (low - high).abs();
    if difference.is_nan() || difference > SELF_CHECK_TOLERANCE {
        return Err(Error::QuadratureSelfCheck {
            low: order,
            high: 2 * order,
            difference,
        });
    }

    let mut mean = Vec::with_capacity(grid.len());
    let mut variance = Vec::with_capacity(grid.len());
    let mut tau = Vec::with_capacity(grid.len());
    // Uniform cell width, accumulated in step order like the particle engine's
    // `τ_N`, so a constant volatility gives bit-identical time changes.
    let h = grid.last().copied().unwrap_or(0.0) / (grid.len() - 1).max(1) as f64;
    let mut tk = 0.0;
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            let (m_prev, v_prev) = (mean[k - 1], variance[k - 1]);
            let z = gh.expect_normal(m_prev, v_prev, g);
            let sigma = model.sigma_of_statistic(z);
            tk += sigma * sigma * h;
        }
        if !tk.is_finite() {
            return Err(Error::CoefficientBlowUp { t, value: tk });
        }
        mean.push(m0 + drift * t);
        tau.push(tk);
        variance.push(v0 + tk);
    }
    Ok(LimitLawPath {
        grid,
        mean,
        variance,
        tau,
    })
}

enum Cell {
    Node(usize),
    Between(usize, f64),
}

impl LimitLawPath {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn variances(&self) -> &[f64] {
        &self.variance
    }

    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("law grid is never empty")
    }

    pub fn tau_max(&self) -> f64 {
        *self.tau.last().expect("law grid is never empty")
    }

    fn slack(&self) -> f64 {
        1e-12 * (1.0 + self.horizon())
    }

    fn locate(&self, t: f64) -> Result<Cell> {
        let hi = self.horizon();
        if !(t >= -self.slack() && t <= hi + self.slack()) {
            return Err(Error::TimeOutOfRange { value: t, lo: 0.0, hi });
        }
        let t = t.clamp(0.0, hi);
        let idx = self.grid.partition_point(|&g| g <= t);
        let k = idx - 1;
        if self.grid[k] == t || k + 1 == self.grid.len() {
            return Ok(Cell::Node(k));
        }
        let w = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        Ok(Cell::Between(k, w))
    }

    fn interpolate(&self, values: &[f64], t: f64) -> Result<f64> {
        Ok(match self.locate(t)? {
            Cell::Node(k) => values[k],
            Cell::Between(k, w) => values[k] + w * (values[k + 1] - values[k]),
        })
    }

    pub fn mean_at(&self, t: f64) -> Result<f64> {
        self.interpolate(&self.mean, t)
    }

    pub fn variance_at(&self, t: f64) -> Result<f64> {
        self.interpolate(&self.variance, t)
    }

    /// `τ(t)` by linear interpolation of the grid.
    pub fn tau_of(&self, t: f64) -> Result<f64> {
        self.interpolate(&self.tau, t)
    }

    /// Inverse of the piecewise-linear [`tau_of`](Self::tau_of); grid values
    /// of `τ` map back to their node exactly.
    pub fn tau_inverse(&self, u: f64) -> Result<f64> {
        let top = self.tau_max();
        if !(u >= -self.slack() && u <= top + self.slack()) {
            return Err(Error::TimeOutOfRange {
                value: u,
                lo: 0.0,
                hi: top,
            });
        }
        let u = u.clamp(0.0, top);
        let k = self.tau.partition_point(|&v| v < u);
        if k == 0 || self.tau[k] == u {
            return Ok(self.grid[k]);
        }
        let (t0, t1) = (self.grid[k - 1], self.grid[k]);
        let (v0, v1) = (self.tau[k - 1], self.tau[k]);
        Ok(t0 + (u - v0) / (v1 - v0) * (t1 - t0))
    }

    /// CSV with columns `t,m,sigma2,tau`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,m,sigma2,tau")?;
        for k in 0..self.grid.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.grid[k], self.mean[k], self.variance[k], self.tau[k]
            )?;
        }
        Ok(())
    }
}

/// Panels used for the drift integral of the time-changed law.
const Y_LAW_PANELS: usize = 2000;

/// Mean and variance of the time-changed limit `Y_t`, whose law equals that
/// of `X_{τ⁻¹(t)}`.
///
/// The variance is `σ₀² + t`. The mean is
/// `m₀ + r₀ ∫₀ᵗ σ⁻²(E[g^σ(Y_s)]) ds`, with the inner expectation taken under
/// `N(m₀ + r₀ τ⁻¹(s), σ₀² + s)` and the outer integral by composite Simpson.
pub fn y_law(law: &LimitLawPath, model: &ModelSpec, t: f64) -> Result<(f64, f64)> {
    let ModelClass::Section2 { drift, .. } = model.class() else {
        return Err(Error::InvalidModel(format!(
            "time-changed law requires a bounded-volatility model, got `{}`",
            model.name()
        )));
    };
    let top = law.tau_max();
    if !(t >= 0.0 && t <= top + law.slack()) {
        return Err(Error::TimeOutOfRange {
            value: t,
            lo: 0.0,
            hi: top,
        });
    }
    let m0 = model.initial_mean();
    let v0 = model.initial_variance();
    let variance = v0 + t;
    if drift == 0.0 || t == 0.0 {
        return Ok((m0, variance));
    }

    let gh = GaussHermite::new(DEFAULT_ORDER);
    let integrand = |s: f64| -> Result<f64> {
        let u = law.tau_inverse(s.min(top))?;
        let z = gh.expect_normal(m0 + drift * u, v0 + s, |x| model.kernel_diffusion(x));
        let sigma = model.sigma_of_statistic(z);
        Ok(1.0 / (sigma * sigma))
    };
    let panels = Y_LAW_PANELS;
    let h = t / panels as f64;
    let mut acc = CompensatedSum::new();
    acc.add(integrand(0.0)?);
    acc.add(integrand(t)?);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(weight * integrand(i as f64 * h)?);
    }
    let integral = acc.value() * h / 3.0;
    Ok((m0 + drift * integral, variance))
}
