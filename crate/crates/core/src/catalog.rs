//! Deterministic generators for the reference systems used by the tests
//! and the command-line front end.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_growth_rate, GrowthRate, LinearSystem, ProjectorSequence, RateKind, VectorNorm};
use crate::scalar::Real;

/// A generated system with its splitting and the rates it is meant to be
/// analysed against.
#[derive(Debug, Clone)]
pub struct ExampleSystem<T> {
    pub name: &'static str,
    pub system: LinearSystem<T>,
    pub projectors: ProjectorSequence<T>,
    pub h: GrowthRate<T>,
    pub k: GrowthRate<T>,
    pub a: Option<GrowthRate<T>>,
    /// Measured `(||P_n||, ||Q_n||)` in the base norm.
    pub projector_norms: Vec<(T, T)>,
}

impl<T: Real> ExampleSystem<T> {
    fn new(
        name: &'static str,
        system: LinearSystem<T>,
        projectors: ProjectorSequence<T>,
        h: GrowthRate<T>,
        k: GrowthRate<T>,
        a: Option<GrowthRate<T>>,
    ) -> Self {
        let norm = system.norm();
        let projector_norms = (0..=projectors.window())
            .map(|n| (norm.operator(projectors.p(n)), norm.operator(projectors.q(n))))
            .collect();
        ExampleSystem { name, system, projectors, h, k, a, projector_norms }
    }
}

/// `P_n(x1, x2) = (x1 + a_n x2, 0)` and `Q_n(x1, x2) = (-a_n x2, x2)`.
fn skew_projectors<T: Real>(a: &GrowthRate<T>, window: usize) -> Result<ProjectorSequence<T>> {
    ProjectorSequence::from_fn(window, |n| {
        DMatrix::from_row_slice(2, 2, &[T::one(), a.value(n), T::zero(), T::zero()])
    })
}

fn check_windows<T: Real>(window: usize, rates: &[&GrowthRate<T>]) -> Result<()> {
    match rates.iter().find(|r| r.window() < window) {
        Some(r) => Err(Error::WindowMismatch { expected: window, found: r.window() }),
        None => Ok(()),
    }
}

/// `A_n = (1 + ln a_n)/(1 + ln a_{n+1}) ((h_n/h_{n+1}) P_n + (k_{n+1}/k_n) Q_{n+1})`
/// under the max norm.
pub fn make_example2<T: Real>(
    a: &GrowthRate<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
    window: usize,
) -> Result<ExampleSystem<T>> {
    check_windows(window, &[a, h, k])?;
    let p = skew_projectors(a, window)?;
    let sys = LinearSystem::from_fn(window, VectorNorm::Max, |n| {
        let c = (T::one() + a.ln_value(n)) / (T::one() + a.ln_value(n + 1));
        (p.p(n) * h.ratio(n, n + 1) + p.q(n + 1) * k.ratio(n + 1, n)) * c
    })?;
    Ok(ExampleSystem::new("example2", sys, p, h.clone(), k.clone(), Some(a.clone())))
}

/// `A_n = (1 + ln a_n)/(1 + ln a_{n+1}) ((h_{n+1}/h_n) P_n + (k_n/k_{n+1}) Q_{n+1})`
/// under the max norm: (h,k)-growth without (h,k)-dichotomy.
///
/// Requires `h_n^2 / (1 + ln a_n)` to be nondecreasing on the window and
/// not constant, the finite-window proxy for its divergence.
pub fn make_example6<T: Real>(
    a: &GrowthRate<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
    window: usize,
) -> Result<ExampleSystem<T>> {
    check_windows(window, &[a, h, k])?;
    let two = T::lit(2.0);
    let trend: Vec<T> = (0..=window).map(|n| two * h.ln_value(n) - (T::one() + a.ln_value(n)).ln()).collect();
    if let Some(i) = trend.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::HFamilyViolation { index: i + 1 });
    }
    if trend[window] <= trend[0] {
        return Err(Error::HFamilyViolation { index: window });
    }
    let p = skew_projectors(a, window)?;
    let sys = LinearSystem::from_fn(window, VectorNorm::Max, |n| {
        let c = (T::one() + a.ln_value(n)) / (T::one() + a.ln_value(n + 1));
        (p.p(n) * h.ratio(n + 1, n) + p.q(n + 1) * k.ratio(n, n + 1)) * c
    })?;
    Ok(ExampleSystem::new("example6", sys, p, h.clone(), k.clone(), Some(a.clone())))
}

fn diag2<T: Real>(a: T, b: T) -> DMatrix<T> {
    DMatrix::from_row_slice(2, 2, &[a, T::zero(), T::zero(), b])
}

/// `A_n = diag(e^{-alpha}, e^{beta})`, `P = diag(1, 0)`, analysed with
/// `h_n = e^{alpha n}` and `k_n = e^{beta n}`.
pub fn make_uniform_exponential<T: Real>(alpha: T, beta: T, window: usize) -> Result<ExampleSystem<T>> {
    let h = GrowthRate::exponential(alpha, window)?;
    let k = GrowthRate::exponential(beta, window)?;
    let a = diag2((-alpha).exp(), beta.exp());
    let sys = LinearSystem::from_fn(window, VectorNorm::Max, |_| a.clone())?;
    let p = ProjectorSequence::constant(diag2(T::one(), T::zero()), window)?;
    Ok(ExampleSystem::new("uniform-exponential", sys, p, h, k, None))
}

/// `A_n = diag(((n+1)/(n+2))^alpha, ((n+2)/(n+1))^beta)`, `P = diag(1, 0)`,
/// analysed with `h_n = (n+1)^alpha` and `k_n = (n+1)^beta`.
pub fn make_polynomial_diagonal<T: Real>(alpha: T, beta: T, window: usize) -> Result<ExampleSystem<T>> {
    let h = GrowthRate::polynomial(alpha, window)?;
    let k = GrowthRate::polynomial(beta, window)?;
    let sys = LinearSystem::from_fn(window, VectorNorm::Max, |n| diag2(h.ratio(n, n + 1), k.ratio(n + 1, n)))?;
    let p = ProjectorSequence::constant(diag2(T::one(), T::zero()), window)?;
    Ok(ExampleSystem::new("polynomial-diagonal", sys, p, h, k, None))
}

/// Uniform-exponential system conjugated by seeded changes of basis
/// `S_n = I + magnitude * E_n` (`E_n` off-diagonal, entries in `[-1, 1]`):
/// `A_n = S_{n+1} D S_n^{-1}` and `P_n = S_n diag(1, 0) S_n^{-1}`, so the
/// splitting stays invariant by construction.
pub fn make_perturbed_random<T: Real>(
    seed: u64,
    magnitude: T,
    alpha: T,
    beta: T,
    window: usize,
) -> Result<ExampleSystem<T>> {
    if !magnitude.is_finite() || magnitude < T::zero() {
        return Err(Error::InvalidParameter(format!("magnitude must be finite and >= 0, got {magnitude}")));
    }
    let base = make_uniform_exponential(alpha, beta, window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(window + 1);
    while frames.len() <= window {
        let u = T::lit(rng.random_range(-1.0..=1.0));
        let v = T::lit(rng.random_range(-1.0..=1.0));
        let s = DMatrix::from_row_slice(2, 2, &[T::one(), magnitude * u, magnitude * v, T::one()]);
        // Redraw (deterministically) frames that are numerically singular.
        if let Some(inv) = s.clone().try_inverse() {
            if (T::one() - magnitude * magnitude * u * v).abs() > T::lit(1e-6) {
                frames.push((s, inv));
            }
        }
    }
    let d = base.system.matrix(0).clone();
    let sys = LinearSystem::from_fn(window, VectorNorm::Max, |n| &frames[n + 1].0 * &d * &frames[n].1)?;
    let p0 = diag2(T::one(), T::zero());
    let p = ProjectorSequence::from_fn(window, |n| &frames[n].0 * &p0 * &frames[n].1)?;
    Ok(ExampleSystem::new("perturbed-random", sys, p, base.h, base.k, None))
}

/// Named generator with its parameters, as carried by spec files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExampleSpec {
    Example2 {
        #[serde(default = "ExampleSpec::default_a")]
        a: RateKind<f64>,
        #[serde(default = "ExampleSpec::default_h2")]
        h: RateKind<f64>,
        #[serde(default = "ExampleSpec::default_k2")]
        k: RateKind<f64>,
    },
    Example6 {
        #[serde(default = "ExampleSpec::default_a")]
        a: RateKind<f64>,
        #[serde(default = "ExampleSpec::default_h6")]
        h: RateKind<f64>,
        #[serde(default = "ExampleSpec::default_k6")]
        k: RateKind<f64>,
    },
    UniformExponential {
        #[serde(default = "ExampleSpec::ln2")]
        alpha: f64,
        #[serde(default = "ExampleSpec::ln2")]
        beta: f64,
    },
    PolynomialDiagonal {
        #[serde(default = "ExampleSpec::one")]
        alpha: f64,
        #[serde(default = "ExampleSpec::one")]
        beta: f64,
    },
    PerturbedRandom {
        #[serde(default)]
        seed: u64,
        #[serde(default = "ExampleSpec::tenth")]
        magnitude: f64,
        #[serde(default = "ExampleSpec::ln2")]
        alpha: f64,
        #[serde(default = "ExampleSpec::ln2")]
        beta: f64,
    },
}

impl ExampleSpec {
    pub const NAMES: [&'static str; 5] =
        ["example2", "example6", "uniform-exponential", "polynomial-diagonal", "perturbed-random"];

    fn default_a() -> RateKind<f64> {
        RateKind::Exponential { alpha: 1.0 }
    }
    fn default_h2() -> RateKind<f64> {
        RateKind::Exponential { alpha: 2f64.ln() }
    }
    fn default_k2() -> RateKind<f64> {
        RateKind::Exponential { alpha: 3f64.ln() }
    }
    fn default_h6() -> RateKind<f64> {
        RateKind::Polynomial { alpha: 1.0 }
    }
    fn default_k6() -> RateKind<f64> {
        RateKind::Exponential { alpha: 2f64.ln() }
    }
    fn ln2() -> f64 {
        2f64.ln()
    }
    fn one() -> f64 {
        1.0
    }
    fn tenth() -> f64 {
        0.1
    }

    /// Default parameters for a generator name.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "example2" => ExampleSpec::Example2 { a: Self::default_a(), h: Self::default_h2(), k: Self::default_k2() },
            "example6" => ExampleSpec::Example6 { a: Self::default_a(), h: Self::default_h6(), k: Self::default_k6() },
            "uniform-exponential" => ExampleSpec::UniformExponential { alpha: Self::ln2(), beta: Self::ln2() },
            "polynomial-diagonal" => ExampleSpec::PolynomialDiagonal { alpha: 1.0, beta: 1.0 },
            "perturbed-random" => {
                ExampleSpec::PerturbedRandom { seed: 0, magnitude: Self::tenth(), alpha: Self::ln2(), beta: Self::ln2() }
            }
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExampleSpec::Example2 { .. } => "example2",
            ExampleSpec::Example6 { .. } => "example6",
            ExampleSpec::UniformExponential { .. } => "uniform-exponential",
            ExampleSpec::PolynomialDiagonal { .. } => "polynomial-diagonal",
            ExampleSpec::PerturbedRandom { .. } => "perturbed-random",
        }
    }

    pub fn build<T: Real>(&self, window: usize) -> Result<ExampleSystem<T>> {
        let rate = |kind: &RateKind<f64>| validate_growth_rate(cast_kind(kind), window);
        match self {
            ExampleSpec::Example2 { a, h, k } => make_example2(&rate(a)?, &rate(h)?, &rate(k)?, window),
            ExampleSpec::Example6 { a, h, k } => make_example6(&rate(a)?, &rate(h)?, &rate(k)?, window),
            ExampleSpec::UniformExponential { alpha, beta } => {
                make_uniform_exponential(T::lit(*alpha), T::lit(*beta), window)
            }
            ExampleSpec::PolynomialDiagonal { alpha, beta } => {
                make_polynomial_diagonal(T::lit(*alpha), T::lit(*beta), window)
            }
            ExampleSpec::PerturbedRandom { seed, magnitude, alpha, beta } => {
                make_perturbed_random(*seed, T::lit(*magnitude), T::lit(*alpha), T::lit(*beta), window)
            }
        }
    }
}

/// Converts an `f64` rate description to another scalar type.
pub fn cast_kind<T: Real>(kind: &RateKind<f64>) -> RateKind<T> {
    match kind {
        RateKind::Exponential { alpha } => RateKind::Exponential { alpha: T::lit(*alpha) },
        RateKind::Polynomial { alpha } => RateKind::Polynomial { alpha: T::lit(*alpha) },
        RateKind::LogExponential { alpha } => RateKind::LogExponential { alpha: T::lit(*alpha) },
        RateKind::Table { values } => RateKind::Table { values: values.iter().map(|v| T::lit(*v)).collect() },
    }
}
