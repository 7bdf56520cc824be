//! Mean-field model abstraction and the built-in models.
//!
//! A model is the quadruple of coefficients `r(x, z)`, `σ(x, z)` and kernels
//! `g^r`, `g^σ`, together with a Gaussian initial law `N(m₀, σ₀²)`. Each
//! particle feels the ensemble only through the two empirical averages
//! `z_r = mean(g^r(x_j))` and `z_σ = mean(g^σ(x_j))`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Empirical kernel `x ↦ g(x)`.
pub type Kernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficient `(x, z, t) ↦ value`. Time is only read by time-inhomogeneous
/// models such as [`BuiltinModel::HybridBank`].
pub type Coefficient = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    /// Constant drift, diffusion depending only on the empirical statistic,
    /// bounded away from zero and infinity.
    Section2Class,
    Bank,
    HybridBank,
    General,
}

/// Structural information a model carries beyond its coefficient closures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelClass {
    Section2 {
        drift: f64,
        sigma_lower: f64,
        sigma_upper: f64,
    },
    Bank {
        kappa: f64,
    },
    HybridBank,
    General,
}

impl ModelClass {
    pub fn tag(&self) -> ClassTag {
        match self {
            ModelClass::Section2 { .. } => ClassTag::Section2Class,
            ModelClass::Bank { .. } => ClassTag::Bank,
            ModelClass::HybridBank => ClassTag::HybridBank,
            ModelClass::General => ClassTag::General,
        }
    }
}

/// The four coefficient functions of a model.
#[derive(Clone)]
pub struct Coefficients {
    pub drift: Coefficient,
    pub diffusion: Coefficient,
    pub kernel_drift: Kernel,
    pub kernel_diffusion: Kernel,
}

#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    coefficients: Coefficients,
    initial_mean: f64,
    initial_variance: f64,
    class: ModelClass,
    diffusion_depends_on_x: bool,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("initial_mean", &self.initial_mean)
            .field("initial_variance", &self.initial_variance)
            .field("class", &self.class)
            .field("diffusion_depends_on_x", &self.diffusion_depends_on_x)
            .finish_non_exhaustive()
    }
}

/// Grid on which the bounds of a bounded-volatility model are spot-checked.
const BOUND_CHECK_GRID: (f64, f64, usize) = (-50.0, 50.0, 2001);

impl ModelSpec {
    /// A model with arbitrary coefficients. `diffusion_depends_on_x = false`
    /// lets the engine evaluate `σ` once per step instead of once per particle.
    pub fn general(
        name: impl Into<String>,
        coefficients: Coefficients,
        initial_mean: f64,
        initial_variance: f64,
        diffusion_depends_on_x: bool,
    ) -> Result<Self> {
        Self::build(
            name.into(),
            coefficients,
            initial_mean,
            initial_variance,
            ModelClass::General,
            diffusion_depends_on_x,
        )
    }

    /// Constant drift `r₀` and diffusion `σ(z)` bounded in `[lower, upper]`
    /// with `0 < lower ≤ upper`. The bounds are spot-checked on a grid of `z`.
    pub fn bounded_volatility(
        name: impl Into<String>,
        drift: f64,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kernel: impl Fn(f64) -> f64 + Send + Sync + 'static,
        initial_mean: f64,
        initial_variance: f64,
        (lower, upper): (f64, f64),
    ) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "volatility bounds must satisfy 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        if !drift.is_finite() {
            return Err(Error::InvalidModel(format!("drift must be finite, got {drift}")));
        }
        let (lo, hi, count) = BOUND_CHECK_GRID;
        for k in 0..count {
            let z = lo + (hi - lo) * k as f64 / (count - 1) as f64;
            let s = sigma(z);
            if !(lower..=upper).contains(&s) {
                return Err(Error::InvalidModel(format!(
                    "sigma({z}) = {s} violates declared bounds [{lower}, {upper}]"
                )));
            }
        }
        let sigma = Arc::new(sigma);
        let coefficients = Coefficients {
            drift: Arc::new(move |_, _, _| drift),
            diffusion: Arc::new(move |_, z, _| sigma(z)),
            kernel_drift: Arc::new(|_| 0.0),
            kernel_diffusion: Arc::new(kernel),
        };
        Self::build(
            name.into(),
            coefficients,
            initial_mean,
            initial_variance,
            ModelClass::Section2 {
                drift,
                sigma_lower: lower,
                sigma_upper: upper,
            },
            false,
        )
    }

    fn build(
        name: String,
        coefficients: Coefficients,
        initial_mean: f64,
        initial_variance: f64,
        class: ModelClass,
        diffusion_depends_on_x: bool,
    ) -> Result<Self> {
        if !(initial_variance > 0.0 && initial_variance.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "initial variance must be positive, got {initial_variance}"
            )));
        }
        if !initial_mean.is_finite() {
            return Err(Error::InvalidModel(format!(
                "initial mean must be finite, got {initial_mean}"
            )));
        }
        Ok(Self {
            name,
            coefficients,
            initial_mean,
            initial_variance,
            class,
            diffusion_depends_on_x,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn initial_mean(&self) -> f64 {
        self.initial_mean
    }

    pub fn initial_variance(&self) -> f64 {
        self.initial_variance
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn class_tag(&self) -> ClassTag {
        self.class.tag()
    }

    pub fn diffusion_depends_on_x(&self) -> bool {
        self.diffusion_depends_on_x
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    #[inline]
    pub fn drift(&self, x: f64, z: f64, t: f64) -> f64 {
        (self.coefficients.drift)(x, z, t)
    }

    #[inline]
    pub fn diffusion(&self, x: f64, z: f64, t: f64) -> f64 {
        (self.coefficients.diffusion)(x, z, t)
    }

    #[inline]
    pub fn kernel_drift(&self, x: f64) -> f64 {
        (self.coefficients.kernel_drift)(x)
    }

    #[inline]
    pub fn kernel_diffusion(&self, x: f64) -> f64 {
        (self.coefficients.kernel_diffusion)(x)
    }

    /// Diffusion as a function of the empirical statistic alone; meaningful
    /// for x-independent, time-homogeneous models.
    pub fn sigma_of_statistic(&self, z: f64) -> f64 {
        self.diffusion(0.0, z, 0.0)
    }

    /// Whether the model satisfies the boundedness and smoothness hypotheses
    /// under which the time-change results hold. The bank models do not: their
    /// diffusion grows without bound.
    pub fn satisfies_bounded_assumptions(&self) -> bool {
        matches!(self.class, ModelClass::Section2 { .. })
    }

    /// Both empirical statistics `(z_r, z_σ)` of `positions`.
    pub fn statistics(&self, positions: &[f64]) -> Result<(f64, f64)> {
        if positions.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let mut zr = CompensatedSum::new();
        let mut zs = CompensatedSum::new();
        for &x in positions {
            zr.add(self.kernel_drift(x));
            zs.add(self.kernel_diffusion(x));
        }
        let n = positions.len() as f64;
        Ok((zr.value() / n, zs.value() / n))
    }
}

/// `(1/N) Σ kernel(x_i)`, accumulated with compensated summation.
pub fn empirical_statistic(kernel: impl Fn(f64) -> f64, positions: &[f64]) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let sum: CompensatedSum = positions.iter().map(|&x| kernel(x)).collect();
    Ok(sum.value() / positions.len() as f64)
}

/// Drift and diffusion felt by a particle at `x` inside the ensemble
/// `positions` at time `t`.
pub fn evaluate_coefficients(model: &ModelSpec, x: f64, positions: &[f64], t: f64) -> Result<(f64, f64)> {
    let (zr, zs) = model.statistics(positions)?;
    for value in [zr, zs] {
        check_finite(value, t)?;
    }
    let drift = check_finite(model.drift(x, zr, t), t)?;
    let diffusion = check_finite(model.diffusion(x, zs, t), t)?;
    Ok((drift, diffusion))
}

#[inline]
pub(crate) fn check_finite(value: f64, t: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::CoefficientBlowUp { t, value })
    }
}

/// Models shipped with the library.
#[derive(Clone)]
pub enum BuiltinModel {
    /// Constant drift and bounded volatility `σ(z)` with `z = mean(g(x))`.
    GaussianConstVol {
        drift: f64,
        sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        kernel: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        bounds: (f64, f64),
        initial_mean: f64,
        initial_variance: f64,
    },
    /// `σ(z) = 1 + tanh(z)/2`, `g^σ(x) = x`, bounds `[1/2, 3/2]`.
    TanhVol {
        drift: f64,
        initial_mean: f64,
        initial_variance: f64,
    },
    /// Interbank reserves: `dX = κ(X − mean X) dt + sqrt(mean X²) dB`, `X₀ ~ N(0, 1)`.
    ///
    /// Borrowing behaviour is usually described with `κ < 0`, but the
    /// simulated system uses `κ = +1`, which is the default here.
    Bank { kappa: f64 },
    /// The bank model with the volatility replaced by its deterministic
    /// limit `e^{3t/2}`.
    HybridBank,
}

impl fmt::Debug for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinModel::GaussianConstVol {
                drift,
                bounds,
                initial_mean,
                initial_variance,
                ..
            } => f
                .debug_struct("GaussianConstVol")
                .field("drift", drift)
                .field("bounds", bounds)
                .field("initial_mean", initial_mean)
                .field("initial_variance", initial_variance)
                .finish_non_exhaustive(),
            BuiltinModel::TanhVol {
                drift,
                initial_mean,
                initial_variance,
            } => f
                .debug_struct("TanhVol")
                .field("drift", drift)
                .field("initial_mean", initial_mean)
                .field("initial_variance", initial_variance)
                .finish(),
            BuiltinModel::Bank { kappa } => f.debug_struct("Bank").field("kappa", kappa).finish(),
            BuiltinModel::HybridBank => f.write_str("HybridBank"),
        }
    }
}

impl BuiltinModel {
    pub const IDS: [&'static str; 4] = ["tanh_vol", "bank", "hybrid_bank", "gaussian_const_vol"];

    pub fn bank() -> Self {
        BuiltinModel::Bank { kappa: 1.0 }
    }

    pub fn tanh_vol(drift: f64) -> Self {
        BuiltinModel::TanhVol {
            drift,
            initial_mean: 0.0,
            initial_variance: 1.0,
        }
    }

    /// Constant volatility `σ ≡ c`; `g^σ` is the identity.
    pub fn constant_vol(drift: f64, c: f64, initial_mean: f64, initial_variance: f64) -> Self {
        BuiltinModel::GaussianConstVol {
            drift,
            sigma: Arc::new(move |_| c),
            kernel: Arc::new(|x| x),
            bounds: (c, c),
            initial_mean,
            initial_variance,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            BuiltinModel::GaussianConstVol { .. } => "gaussian_const_vol",
            BuiltinModel::TanhVol { .. } => "tanh_vol",
            BuiltinModel::Bank { .. } => "bank",
            BuiltinModel::HybridBank => "hybrid_bank",
        }
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        match self {
            BuiltinModel::GaussianConstVol {
                drift,
                sigma,
                kernel,
                bounds,
                initial_mean,
                initial_variance,
            } => {
                let (sigma, kernel) = (sigma.clone(), kernel.clone());
                ModelSpec::bounded_volatility(
                    self.id(),
                    *drift,
                    move |z| sigma(z),
                    move |x| kernel(x),
                    *initial_mean,
                    *initial_variance,
                    *bounds,
                )
            }
            BuiltinModel::TanhVol {
                drift,
                initial_mean,
                initial_variance,
            } => ModelSpec::bounded_volatility(
                self.id(),
                *drift,
                |z| 1.0 + 0.5 * z.tanh(),
                |x| x,
                *initial_mean,
                *initial_variance,
                (0.5, 1.5),
            ),
            BuiltinModel::Bank { kappa } => {
                let kappa = *kappa;
                if !kappa.is_finite() {
                    return Err(Error::InvalidModel(format!("kappa must be finite, got {kappa}")));
                }
                let coefficients = Coefficients {
                    drift: Arc::new(move |x, mean, _| kappa * (x - mean)),
                    diffusion: Arc::new(|_, second_moment: f64, _| second_moment.sqrt()),
                    kernel_drift: Arc::new(|x| x),
                    kernel_diffusion: Arc::new(|x| x * x),
                };
                ModelSpec::build(
                    self.id().into(),
                    coefficients,
                    0.0,
                    1.0,
                    ModelClass::Bank { kappa },
                    false,
                )
            }
            BuiltinModel::HybridBank => {
                let coefficients = Coefficients {
                    drift: Arc::new(|x, mean, _| x - mean),
                    diffusion: Arc::new(|_, _, t: f64| (1.5 * t).exp()),
                    kernel_drift: Arc::new(|x| x),
                    kernel_diffusion: Arc::new(|_| 0.0),
                };
                ModelSpec::build(self.id().into(), coefficients, 0.0, 1.0, ModelClass::HybridBank, false)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empirical_statistic_examples() {
        assert_eq!(empirical_statistic(|x| x, &[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(empirical_statistic(|x| x * x, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(empirical_statistic(|x| x * x, &[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn empirical_statistic_rejects_empty() {
        let err = empirical_statistic(|x| x, &[]).unwrap_err();
        assert_eq!(err.to_string(), "empty ensemble");
    }

    #[test]
    fn bank_coefficients_on_symmetric_ensemble() {
        let bank = BuiltinModel::bank().spec().unwrap();
        let (drift, diffusion) = evaluate_coefficients(&bank, 1.0, &[1.0, -1.0], 0.0).unwrap();
        assert_eq!(drift, 1.0);
        assert_eq!(diffusion, 1.0);
    }

    #[test]
    fn hybrid_diffusion_is_deterministic_in_time() {
        let hybrid = BuiltinModel::HybridBank.spec().unwrap();
        let (_, d0) = evaluate_coefficients(&hybrid, 3.0, &[5.0, -2.0, 7.0], 0.0).unwrap();
        assert_eq!(d0, 1.0);
        let (_, d1) = evaluate_coefficients(&hybrid, 3.0, &[100.0], 1.0).unwrap();
        assert_eq!(d1, 1.5f64.exp());
    }

    #[test]
    fn tanh_vol_at_origin() {
        let model = BuiltinModel::tanh_vol(1.0).spec().unwrap();
        let (drift, diffusion) = evaluate_coefficients(&model, 17.0, &[0.0; 8], 0.3).unwrap();
        assert_eq!(drift, 1.0);
        assert_eq!(diffusion, 1.0);
        assert_eq!(model.class_tag(), ClassTag::Section2Class);
        assert!(model.satisfies_bounded_assumptions());
    }

    #[test]
    fn bank_models_flagged_unbounded() {
        for m in [BuiltinModel::bank(), BuiltinModel::HybridBank] {
            assert!(!m.spec().unwrap().satisfies_bounded_assumptions());
        }
    }

    #[test]
    fn blow_up_reports_time_and_value() {
        let model = ModelSpec::general(
            "exploding",
            Coefficients {
                drift: Arc::new(|x, _, _| x * f64::MAX),
                diffusion: Arc::new(|_, _, _| 1.0),
                kernel_drift: Arc::new(|x| x),
                kernel_diffusion: Arc::new(|x| x),
            },
            0.0,
            1.0,
            false,
        )
        .unwrap();
        match evaluate_coefficients(&model, 10.0, &[1.0], 0.25) {
            Err(Error::CoefficientBlowUp { t, value }) => {
                assert_eq!(t, 0.25);
                assert!(value.is_infinite());
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_initial_variance_rejected() {
        let err = BuiltinModel::TanhVol {
            drift: 0.0,
            initial_mean: 0.0,
            initial_variance: 0.0,
        }
        .spec()
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn declared_bounds_are_spot_checked() {
        let err = ModelSpec::bounded_volatility("bad", 0.0, |z: f64| 1.0 + z.tanh(), |x| x, 0.0, 1.0, (0.5, 1.5))
            .unwrap_err();
        assert!(err.to_string().contains("violates declared bounds"));
    }

    proptest! {
        #[test]
        fn statistic_is_permutation_invariant(
            mut xs in proptest::collection::vec(-1e3f64..1e3, 1..64),
            seed in any::<u64>(),
        ) {
            let before = empirical_statistic(|x| x * x, &xs).unwrap();
            let len = xs.len();
            xs.rotate_left((seed as usize) % len);
            xs.reverse();
            let after = empirical_statistic(|x| x * x, &xs).unwrap();
            prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
        }

        #[test]
        fn bank_is_sign_symmetric(
            xs in proptest::collection::vec(-50f64..50.0, 1..32),
            x in -50f64..50.0,
            t in 0f64..2.0,
        ) {
            let bank = BuiltinModel::bank().spec().unwrap();
            let flipped: Vec<f64> = xs.iter().map(|v| -v).collect();
            let (d, s) = evaluate_coefficients(&bank, x, &xs, t).unwrap();
            let (df, sf) = evaluate_coefficients(&bank, -x, &flipped, t).unwrap();
            prop_assert!((d + df).abs() <= 1e-9 * d.abs().max(1.0));
            prop_assert_eq!(s, sf);
        }

        #[test]
        fn bounded_class_diffusion_within_bounds(
            xs in proptest::collection::vec(-1e4f64..1e4, 1..32),
            x in -1e4f64..1e4,
        ) {
            let model = BuiltinModel::tanh_vol(1.0).spec().unwrap();
            let (_, s) = evaluate_coefficients(&model, x, &xs, 0.0).unwrap();
            prop_assert!((0.5..=1.5).contains(&s));
        }
    }
}
