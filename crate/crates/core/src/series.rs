//! Summation criteria: the tilde-rate family, Barbashin-type sums over past
//! indices and Datko-type sums over future indices, measured in a norm
//! sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{envelope, ConditionEstimate, ConditionId, Divergence, IndexBy, PairTable, Verdict};
use crate::model::{GrowthRate, Method};
use crate::norms::{anchored_witness, combined_verdict, core_samples, NormSequence};
use crate::scalar::{fmax, Real};

/// How `h~` is chosen for a rate `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TildeStrategy<T> {
    /// `h~_n = h_n / (n+1)^2`, `H = pi^2/6`.
    Default,
    /// Explicit `h~_0, ..., h~_N` with a claimed bound `H`.
    Table { values: Vec<T>, bound: T },
}

/// A rate `h~ > 0` with `sum_n h~_n / h_n <= H`, checked on the window.
/// Values are kept as logarithms so exponential rates stay finite for long
/// windows.
#[derive(Debug, Clone, Serialize)]
pub struct TildeRate<T> {
    pub strategy: &'static str,
    ln_values: Vec<T>,
    /// `h~_n / h_n`.
    pub ratios: Vec<T>,
    /// `S_n = sum_{j <= n} h~_j / h_j`.
    pub partial_sums: Vec<T>,
    pub bound: T,
}

impl<T: Real> TildeRate<T> {
    pub fn window(&self) -> usize {
        self.ln_values.len() - 1
    }

    pub fn value(&self, n: usize) -> T {
        self.ln_values[n].exp()
    }

    /// `h~_j / h~_n`.
    pub fn ratio(&self, j: usize, n: usize) -> T {
        (self.ln_values[j] - self.ln_values[n]).exp()
    }
}

/// Builds `h~` for `h` on its window and checks the partial sums against `H`.
pub fn derive_tilde_rate<T: Real>(h: &GrowthRate<T>, strategy: &TildeStrategy<T>) -> Result<TildeRate<T>> {
    let window = h.window();
    let (name, ln_values, bound) = match strategy {
        TildeStrategy::Default => {
            let two = T::lit(2.0);
            let ln: Vec<T> = (0..=window).map(|n| h.ln_value(n) - two * (T::index(n) + T::one()).ln()).collect();
            ("default", ln, T::pi() * T::pi() / T::lit(6.0))
        }
        TildeStrategy::Table { values, bound } => {
            if values.len() < window + 1 {
                return Err(Error::TableTooShort { needed: window + 1, found: values.len() });
            }
            if let Some(i) = values.iter().take(window + 1).position(|v| !(v.is_finite() && *v > T::zero())) {
                return Err(Error::InvalidParameter(format!("tilde rate entry {i} must be finite and > 0")));
            }
            if !(bound.is_finite() && *bound >= T::one()) {
                return Err(Error::InvalidParameter(format!("tilde bound must be finite and >= 1, got {bound}")));
            }
            ("table", values.iter().take(window + 1).map(|v| v.ln()).collect(), *bound)
        }
    };
    let ratios: Vec<T> = (0..=window).map(|n| (ln_values[n] - h.ln_value(n)).exp()).collect();
    let partial_sums: Vec<T> = ratios
        .iter()
        .scan(T::zero(), |acc, r| {
            *acc += *r;
            Some(*acc)
        })
        .collect();
    let slack = T::lit(1e-12) * bound;
    if let Some(index) = partial_sums.iter().position(|s| *s > bound + slack) {
        return Err(Error::BoundViolated {
            index,
            partial_sum: partial_sums[index].as_f64(),
            bound: bound.as_f64(),
        });
    }
    Ok(TildeRate { strategy: name, ln_values, ratios, partial_sums, bound })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport<T> {
    /// Sum condition on the stable side (hd6 or hd7).
    pub stable: ConditionEstimate<T>,
    /// Sum condition on the unstable side (kd6 or kd7).
    pub unstable: ConditionEstimate<T>,
    /// Nondecreasing coefficients serving both sides.
    pub coefficients: Vec<T>,
    /// Datko only: the `j = m` single terms.
    pub single_term: Option<(ConditionEstimate<T>, ConditionEstimate<T>)>,
    pub witness_trend: Vec<(usize, T)>,
    pub witness_divergence: Option<Divergence>,
    pub verdict: Verdict,
}

fn ratio<T: Real>(lhs: T, rhs: T) -> Option<T> {
    if rhs > T::zero() {
        Some(lhs / rhs)
    } else if lhs > T::zero() {
        Some(T::infinity())
    } else {
        None
    }
}

fn assemble<T: Real>(
    norms: &NormSequence<'_, T>,
    stable: ConditionEstimate<T>,
    unstable: ConditionEstimate<T>,
    single_term: Option<(ConditionEstimate<T>, ConditionEstimate<T>)>,
) -> SeriesReport<T> {
    let coefficients = envelope(
        &stable.raw.iter().zip(&unstable.raw).map(|(a, b)| fmax(fmax(*a, *b), T::one())).collect::<Vec<_>>(),
    );
    let witness_trend = anchored_witness(norms, &[&stable, &unstable]);
    let (witness_divergence, verdict) = combined_verdict(&[&stable, &unstable], &witness_trend);
    SeriesReport { stable, unstable, coefficients, single_term, witness_trend, witness_divergence, verdict }
}

/// Barbashin-type sums, for `(m, n)` with `m >= n`:
///
/// - (hd6) `sum_{j <= n} h_m |||A_m^j P_j x|||_m <= b_n h_n |||x|||_n`
/// - (kd6) `sum_{j <= n} |||B_m^j Q_m x|||_j / k_j <= b_m |||x|||_m / k_m`
///
/// Both are evaluated with prefix sums in ascending `j` over the core
/// sample set.
pub fn barbashin_sums<T: Real>(norms: &NormSequence<'_, T>) -> SeriesReport<T> {
    let split = norms.split();
    let window = split.window();
    let (h, k) = (norms.h(), norms.k());
    let samples = core_samples::<T>(split.dim(), split.norm());
    let mut hd = PairTable::new(window);
    let mut kd = PairTable::new(window);
    for x in &samples {
        let rhs: Vec<T> = (0..=window).map(|n| norms.eval(n, x)).collect();
        for m in 0..=window {
            let mut hsum = T::zero();
            let mut ksum = T::zero();
            for n in 0..=m {
                hsum += norms.eval(m, &(split.forward(m, n) * x));
                if let Some(r) = ratio(h.ratio(m, n) * hsum, rhs[n]) {
                    hd.raise(m, n, r);
                }
                ksum += k.ratio(m, n) * norms.eval(n, &(split.backward(m, n) * x));
                if let Some(r) = ratio(ksum, rhs[m]) {
                    kd.raise(m, n, r);
                }
            }
        }
    }
    let stable = ConditionEstimate::from_pairs(ConditionId::Hd6, IndexBy::N, &hd, Method::Sampled, vec![]);
    let unstable = ConditionEstimate::from_pairs(ConditionId::Kd6, IndexBy::M, &kd, Method::Sampled, vec![]);
    assemble(norms, stable, unstable, None)
}

/// Datko-type sums, for `(m, n)` with `m >= n`:
///
/// - (h~d7) `sum_{j=n}^m h~_j |||A_j^n P_n x|||_j <= d_n h~_n |||x|||_n`
/// - (kd7) `sum_{j=n}^m k_j |||B_j^n Q_j x|||_n <= d_m k_n |||x|||_m`
///
/// The `j = m` single terms are reported alongside; the full sum dominates
/// each of them.
pub fn datko_sums<T: Real>(norms: &NormSequence<'_, T>, tilde: &TildeRate<T>) -> Result<SeriesReport<T>> {
    let split = norms.split();
    let window = split.window();
    if tilde.window() < window {
        return Err(Error::WindowMismatch { expected: window, found: tilde.window() });
    }
    let k = norms.k();
    let samples = core_samples::<T>(split.dim(), split.norm());
    let mut hd = PairTable::new(window);
    let mut kd = PairTable::new(window);
    let mut hd_single = PairTable::new(window);
    let mut kd_single = PairTable::new(window);
    for x in &samples {
        let rhs: Vec<T> = (0..=window).map(|n| norms.eval(n, x)).collect();
        for n in 0..=window {
            let mut sum = T::zero();
            for m in n..=window {
                let term = tilde.ratio(m, n) * norms.eval(m, &(split.forward(m, n) * x));
                sum += term;
                if let Some(r) = ratio(sum, rhs[n]) {
                    hd.raise(m, n, r);
                }
                if let Some(r) = ratio(term, rhs[n]) {
                    hd_single.raise(m, n, r);
                }
            }
        }
        for m in 0..=window {
            for n in 0..=m {
                let mut sum = T::zero();
                let mut last = T::zero();
                for j in n..=m {
                    last = k.ratio(j, n) * norms.eval(n, &(split.backward(j, n) * x));
                    sum += last;
                }
                if let Some(r) = ratio(sum, rhs[m]) {
                    kd.raise(m, n, r);
                }
                if let Some(r) = ratio(last, rhs[m]) {
                    kd_single.raise(m, n, r);
                }
            }
        }
    }
    let est = |id, by, t: &PairTable<T>| ConditionEstimate::from_pairs(id, by, t, Method::Sampled, vec![]);
    let single = (est(ConditionId::Hd7, IndexBy::N, &hd_single), est(ConditionId::Kd7, IndexBy::M, &kd_single));
    Ok(assemble(
        norms,
        est(ConditionId::Hd7, IndexBy::N, &hd),
        est(ConditionId::Kd7, IndexBy::M, &kd),
        Some(single),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::make_uniform_exponential;
    use crate::norms::build_dichotomy_norm;
    use crate::SplitSystem;

    #[test]
    fn default_tilde_values() {
        let h = GrowthRate::exponential(0.5, 64).unwrap();
        let t = derive_tilde_rate(&h, &TildeStrategy::Default).unwrap();
        assert!((t.value(2) - 1f64.exp() / 9.0).abs() < 1e-12);
        assert!((t.value(2) - 0.302031).abs() < 1e-6);
        assert!(t.partial_sums.windows(2).all(|w| w[0] <= w[1]));
        assert!(*t.partial_sums.last().unwrap() < std::f64::consts::PI.powi(2) / 6.0);
    }

    #[test]
    fn geometric_user_table() {
        let h = GrowthRate::exponential(0.5, 200).unwrap();
        let values: Vec<f64> = (0..=200).map(|n| (0.25 * n as f64).exp()).collect();
        let bound = 1.0 / (1.0 - (-0.25f64).exp());
        let t = derive_tilde_rate(&h, &TildeStrategy::Table { values, bound }).unwrap();
        assert!(*t.partial_sums.last().unwrap() <= bound);
    }

    #[test]
    fn tilde_equal_to_h_violates_bound() {
        let h = GrowthRate::exponential(0.5, 10).unwrap();
        let values: Vec<f64> = (0..=10).map(|n| h.value(n)).collect();
        let err = derive_tilde_rate(&h, &TildeStrategy::Table { values, bound: 5.0 }).unwrap_err();
        assert!(matches!(err, Error::BoundViolated { index: 5, .. }), "{err:?}");
    }

    fn diagonal(window: usize) -> (SplitSystem<f64>, GrowthRate<f64>, GrowthRate<f64>) {
        let l = 2f64.ln();
        let ex = make_uniform_exponential(l, l, window).unwrap();
        (SplitSystem::new(&ex.system, ex.projectors, 1e-10).unwrap(), ex.h, ex.k)
    }

    #[test]
    fn barbashin_geometric_sum_on_diagonal() {
        let (split, h, k) = diagonal(12);
        let norms = build_dichotomy_norm(&split, &h, &k).unwrap();
        let rep = barbashin_sums(&norms);
        for n in 0..=12 {
            let oracle = (2f64.powi(n as i32 + 1) - 1.0) / 2f64.powi(n as i32);
            assert!((rep.stable.raw[n] - oracle).abs() < 1e-9, "{n}");
            assert!((rep.unstable.raw[n] - (n as f64 + 1.0)).abs() < 1e-9, "{n}");
        }
        assert_eq!(rep.stable.verdict(), Verdict::HoldsOnWindow);
    }

    #[test]
    fn datko_arithmetic_sum_on_diagonal() {
        let (split, h, k) = diagonal(12);
        let norms = build_dichotomy_norm(&split, &h, &k).unwrap();
        let tilde = derive_tilde_rate(&h, &TildeStrategy::Default).unwrap();
        let rep = datko_sums(&norms, &tilde).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        for n in 0..=12 {
            assert!((rep.unstable.raw[n] - (n as f64 + 1.0)).abs() < 1e-9, "{n}");
            assert!(rep.stable.raw[n] <= zeta2 * ((n + 1) as f64).powi(2));
        }
        let (hs, ks) = rep.single_term.as_ref().unwrap();
        for n in 0..=12 {
            assert!(hs.raw[n] <= rep.stable.raw[n] + 1e-12);
            assert!(ks.raw[n] <= rep.unstable.raw[n] + 1e-12);
            assert!((hs.raw[n] - 1.0).abs() < 1e-12);
        }
    }
}
