//! Growth rates: nondecreasing weights `h: N -> [1, inf)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parametric family or explicit table describing a growth rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateKind<T> {
    /// `e^{alpha n}`
    Exponential { alpha: T },
    /// `(n + 1)^alpha`
    Polynomial { alpha: T },
    /// `1 + ln e^{alpha n} = 1 + alpha n`, the coefficient family `1 + ln a_n`.
    LogExponential { alpha: T },
    Table { values: Vec<T> },
}

/// The limit `h_n -> inf` cannot be observed on a finite window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitCheck {
    Untested,
}

/// A growth rate whose monotonicity and lower bound were checked on `[0, window]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRate<T> {
    kind: RateKind<T>,
    window: usize,
    limit: LimitCheck,
}

impl<T: Real> GrowthRate<T> {
    pub fn exponential(alpha: T, window: usize) -> Result<Self> {
        validate_growth_rate(RateKind::Exponential { alpha }, window)
    }

    pub fn polynomial(alpha: T, window: usize) -> Result<Self> {
        validate_growth_rate(RateKind::Polynomial { alpha }, window)
    }

    pub fn log_exponential(alpha: T, window: usize) -> Result<Self> {
        validate_growth_rate(RateKind::LogExponential { alpha }, window)
    }

    pub fn table(values: Vec<T>, window: usize) -> Result<Self> {
        validate_growth_rate(RateKind::Table { values }, window)
    }

    pub fn kind(&self) -> &RateKind<T> {
        &self.kind
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn limit(&self) -> LimitCheck {
        self.limit
    }

    /// `ln h_n`, available without overflow for the parametric kinds.
    pub fn ln_value(&self, n: usize) -> T {
        let t = T::index(n);
        match &self.kind {
            RateKind::Exponential { alpha } => *alpha * t,
            RateKind::Polynomial { alpha } => *alpha * (t + T::one()).ln(),
            RateKind::LogExponential { alpha } => (T::one() + *alpha * t).ln(),
            RateKind::Table { values } => values[n].ln(),
        }
    }

    pub fn value(&self, n: usize) -> T {
        let t = T::index(n);
        match &self.kind {
            RateKind::Exponential { alpha } => (*alpha * t).exp(),
            RateKind::Polynomial { alpha } => (t + T::one()).powf(*alpha),
            RateKind::LogExponential { alpha } => T::one() + *alpha * t,
            RateKind::Table { values } => values[n],
        }
    }

    /// `h_m / h_n`, computed in log space when either value overflows.
    pub fn ratio(&self, m: usize, n: usize) -> T {
        let (hm, hn) = (self.value(m), self.value(n));
        if hm.is_finite() && hn.is_finite() {
            hm / hn
        } else {
            (self.ln_value(m) - self.ln_value(n)).exp()
        }
    }

    /// Same rate re-validated on another window (tables must be long enough).
    pub fn with_window(&self, window: usize) -> Result<Self> {
        validate_growth_rate(self.kind.clone(), window)
    }
}

/// Checks `h_n >= 1` and `h_{n+1} >= h_n` on `[0, window]`.
///
/// Tables that are constant on the window are rejected: such a sequence
/// cannot be the start of a rate tending to infinity in any useful sense.
/// Parametric kinds are checked in log space, so `e^{alpha n}` validates
/// even where the value itself overflows.
pub fn validate_growth_rate<T: Real>(kind: RateKind<T>, window: usize) -> Result<GrowthRate<T>> {
    if window < 1 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    match &kind {
        RateKind::Exponential { alpha }
        | RateKind::Polynomial { alpha }
        | RateKind::LogExponential { alpha } => {
            if !alpha.is_finite() || *alpha <= T::zero() {
                return Err(Error::InvalidParameter(format!("rate parameter must be finite and > 0, got {alpha}")));
            }
        }
        RateKind::Table { values } => {
            if values.len() < window + 1 {
                return Err(Error::TableTooShort { needed: window + 1, found: values.len() });
            }
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("rate table entry {index} is not finite")));
            }
        }
    }
    let rate = GrowthRate { kind, window, limit: LimitCheck::Untested };
    for n in 0..=window {
        let below = match &rate.kind {
            RateKind::Table { values } => values[n] < T::one(),
            _ => rate.ln_value(n) < T::zero(),
        };
        if below {
            return Err(Error::BelowOne { index: n });
        }
        if n > 0 {
            let dec = match &rate.kind {
                RateKind::Table { values } => values[n] < values[n - 1],
                _ => rate.ln_value(n) < rate.ln_value(n - 1),
            };
            if dec {
                return Err(Error::NonMonotone { index: n });
            }
        }
    }
    if let RateKind::Table { values } = &rate.kind {
        if values[window] == values[0] {
            return Err(Error::Stationary);
        }
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_half_at_two_is_e() {
        let h = GrowthRate::exponential(0.5f64, 10).unwrap();
        assert!((h.value(2) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn polynomial_unit_power_is_n_plus_one() {
        let h = GrowthRate::polynomial(1.0f64, 10).unwrap();
        for n in 0..=10 {
            assert!((h.value(n) - (n as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn decreasing_table_is_rejected() {
        let err = GrowthRate::table(vec![1.0f64, 2.0, 1.5], 2).unwrap_err();
        assert_eq!(err, Error::NonMonotone { index: 2 });
    }

    #[test]
    fn table_below_one_and_constant_are_rejected() {
        assert_eq!(GrowthRate::table(vec![0.5f64, 2.0], 1).unwrap_err(), Error::BelowOne { index: 0 });
        assert_eq!(GrowthRate::table(vec![1.0f64, 1.0, 1.0], 2).unwrap_err(), Error::Stationary);
        assert!(matches!(GrowthRate::table(vec![1.0f64, 2.0], 3), Err(Error::TableTooShort { .. })));
    }

    #[test]
    fn zero_parameter_is_rejected() {
        assert!(GrowthRate::exponential(0.0f64, 4).is_err());
        assert!(GrowthRate::polynomial(-1.0f64, 4).is_err());
    }

    #[test]
    fn ratio_survives_overflow() {
        let h = GrowthRate::exponential(1.0f64, 1024).unwrap();
        assert!(!h.value(1000).is_finite());
        assert!((h.ratio(1000, 999) - std::f64::consts::E).abs() < 1e-9);
        assert_eq!(h.limit(), LimitCheck::Untested);
    }

    #[test]
    fn log_exponential_is_affine() {
        let d = GrowthRate::log_exponential(1.0f64, 8).unwrap();
        assert_eq!(d.value(5), 6.0);
    }
}
