//! Per-index minimal admissible sequences, their nondecreasing envelopes
//! and nested-window trends.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Method, TriTable};
use crate::scalar::{fmax, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionId {
    Hd1,
    Kd1,
    Hg1,
    Kg1,
    Hd2,
    Kd2,
    Hg2,
    Kg2,
    Hd3,
    Kd3,
    Hd4,
    Kd4,
    Hd5,
    Kd5,
    Hd6,
    Kd6,
    Hd7,
    Kd7,
}

impl ConditionId {
    pub const ALL: [ConditionId; 18] = [
        ConditionId::Hd1,
        ConditionId::Kd1,
        ConditionId::Hg1,
        ConditionId::Kg1,
        ConditionId::Hd2,
        ConditionId::Kd2,
        ConditionId::Hg2,
        ConditionId::Kg2,
        ConditionId::Hd3,
        ConditionId::Kd3,
        ConditionId::Hd4,
        ConditionId::Kd4,
        ConditionId::Hd5,
        ConditionId::Kd5,
        ConditionId::Hd6,
        ConditionId::Kd6,
        ConditionId::Hd7,
        ConditionId::Kd7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionId::Hd1 => "hd1",
            ConditionId::Kd1 => "kd1",
            ConditionId::Hg1 => "hg1",
            ConditionId::Kg1 => "kg1",
            ConditionId::Hd2 => "hd2",
            ConditionId::Kd2 => "kd2",
            ConditionId::Hg2 => "hg2",
            ConditionId::Kg2 => "kg2",
            ConditionId::Hd3 => "hd3",
            ConditionId::Kd3 => "kd3",
            ConditionId::Hd4 => "hd4",
            ConditionId::Kd4 => "kd4",
            ConditionId::Hd5 => "hd5",
            ConditionId::Kd5 => "kd5",
            ConditionId::Hd6 => "hd6",
            ConditionId::Kd6 => "kd6",
            ConditionId::Hd7 => "hd7",
            ConditionId::Kd7 => "kd7",
        }
    }
}

impl std::fmt::Display for ConditionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ConditionId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ConditionId::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown condition `{s}`"))
    }
}

/// Which index of a pair `(m, n)` the coefficient sequence is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexBy {
    /// `r_n = sup_{m >= n}`
    N,
    /// `r_m = sup_{n <= m}`
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "HOLDS-ON-WINDOW")]
    HoldsOnWindow,
    #[serde(rename = "FAILS")]
    Fails,
    #[serde(rename = "DIVERGING")]
    Diverging,
    #[serde(rename = "VACUOUS")]
    Vacuous,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        matches!(self, Verdict::Fails | Verdict::Diverging)
    }

    /// The more severe of two verdicts.
    pub fn worst(self, other: Verdict) -> Verdict {
        let rank = |v: Verdict| match v {
            Verdict::Vacuous => 0,
            Verdict::HoldsOnWindow => 1,
            Verdict::Diverging => 2,
            Verdict::Fails => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::HoldsOnWindow => "HOLDS-ON-WINDOW",
            Verdict::Fails => "FAILS",
            Verdict::Diverging => "DIVERGING",
            Verdict::Vacuous => "VACUOUS",
        }
    }
}

/// Ratio per pair `(m, n)`; `None` marks a vacuous pair (projected vector zero).
#[derive(Debug, Clone)]
pub struct PairTable<T> {
    table: TriTable<Option<T>>,
}

impl<T: Real> PairTable<T> {
    pub fn new(window: usize) -> Self {
        PairTable { table: TriTable::from_fn(window, |_, _| None) }
    }

    pub fn window(&self) -> usize {
        self.table.window()
    }

    /// Raises the entry at `(m, n)` to at least `value`.
    pub fn raise(&mut self, m: usize, n: usize, value: T) {
        let next = match self.table.get(m, n) {
            Some(old) => fmax(*old, value),
            None => value,
        };
        self.table.set(m, n, Some(next));
    }

    pub fn get(&self, m: usize, n: usize) -> Option<T> {
        *self.table.get(m, n)
    }

    /// Per-index suprema restricted to pairs with `m <= upto`; vacuous
    /// indices get 0. The boolean reports whether any pair was non-vacuous.
    pub fn reduce(&self, index_by: IndexBy, upto: usize) -> (Vec<T>, bool) {
        let mut raw = vec![T::zero(); upto + 1];
        let mut any = false;
        for m in 0..=upto {
            for n in 0..=m {
                if let Some(v) = self.get(m, n) {
                    any = true;
                    let i = match index_by {
                        IndexBy::N => n,
                        IndexBy::M => m,
                    };
                    raw[i] = fmax(raw[i], v);
                }
            }
        }
        (raw, any)
    }
}

/// Nested windows `N/4, N/2, N` (deduplicated, at least 1).
pub fn window_schedule(window: usize) -> Vec<usize> {
    let mut w: Vec<usize> = [window / 4, window / 2, window].into_iter().filter(|w| *w >= 1).collect();
    w.dedup();
    w
}

/// `e_n = max_{j <= n} r_j`.
pub fn envelope<T: Real>(raw: &[T]) -> Vec<T> {
    raw.iter()
        .scan(T::zero(), |acc, r| {
            *acc = fmax(*acc, *r);
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendPoint<T> {
    pub window: usize,
    /// `U = max_n e_n` on this window.
    pub uniform: T,
    /// `e_0` on this window: the coefficient at the fixed index 0.
    pub anchored: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionEstimate<T> {
    pub id: ConditionId,
    pub index_by: IndexBy,
    pub raw: Vec<T>,
    pub envelope: Vec<T>,
    pub uniform: T,
    pub trend: Vec<TrendPoint<T>>,
    pub method: Method,
    /// Pairs where a restricted map was not injective.
    pub failures: Vec<(usize, usize)>,
    pub vacuous: bool,
}

impl<T: Real> ConditionEstimate<T> {
    /// Estimate on the full window of `table`, with the trend over its
    /// nested sub-windows.
    pub fn from_pairs(
        id: ConditionId,
        index_by: IndexBy,
        table: &PairTable<T>,
        method: Method,
        failures: Vec<(usize, usize)>,
    ) -> Self {
        let windows = window_schedule(table.window())
            .into_iter()
            .map(|w| {
                let (raw, any) = table.reduce(index_by, w);
                (w, raw, any)
            })
            .collect();
        Self::from_windows(id, index_by, windows, method, failures)
    }

    /// Builds from raw sequences computed separately per nested window; the
    /// last entry is the full window.
    pub fn from_windows(
        id: ConditionId,
        index_by: IndexBy,
        windows: Vec<(usize, Vec<T>, bool)>,
        method: Method,
        failures: Vec<(usize, usize)>,
    ) -> Self {
        let trend = windows
            .iter()
            .map(|(w, raw, _)| {
                let env = envelope(raw);
                TrendPoint { window: *w, uniform: *env.last().unwrap_or(&T::zero()), anchored: env[0] }
            })
            .collect();
        let (_, raw, any) = windows.into_iter().last().expect("at least one window");
        let envelope = envelope(&raw);
        let uniform = *envelope.last().unwrap_or(&T::zero());
        ConditionEstimate { id, index_by, raw, envelope, uniform, trend, method, failures, vacuous: !any }
    }

    pub fn window(&self) -> usize {
        self.raw.len() - 1
    }

    /// FAILS on non-injective restrictions or non-finite minima, DIVERGING
    /// when the coefficient at index 0 diverges across nested windows,
    /// VACUOUS when every pair was skipped.
    pub fn verdict(&self) -> Verdict {
        if !self.failures.is_empty() || self.raw.iter().any(|v| !v.is_finite()) {
            return Verdict::Fails;
        }
        if self.vacuous {
            return Verdict::Vacuous;
        }
        match self.anchored_diagnostic() {
            Some(d) if d.trend == Trend::Diverging => Verdict::Diverging,
            _ => Verdict::HoldsOnWindow,
        }
    }

    /// Divergence of `e_0` across windows; `None` when the window is below 8.
    pub fn anchored_diagnostic(&self) -> Option<Divergence> {
        let points: Vec<(usize, T)> = self.trend.iter().map(|p| (p.window, p.anchored)).collect();
        divergence_diagnostic(&points).ok()
    }

    /// Divergence of the uniform constant `U` across windows.
    pub fn uniformity(&self) -> Option<Divergence> {
        let points: Vec<(usize, T)> = self.trend.iter().map(|p| (p.window, p.uniform)).collect();
        divergence_diagnostic(&points).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Stable,
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub trend: Trend,
    /// Least-squares slope of `ln U` against `ln(W + 1)`.
    pub slope: f64,
    /// `U(W_{i+1}) / U(W_i)` for successive windows.
    pub growth_factors: Vec<f64>,
}

/// Growth factor between successive windows above which a trend counts as diverging.
pub const DIVERGENCE_FACTOR: f64 = 1.5;

/// Classifies `(window, value)` points as diverging when the value grows by
/// more than [`DIVERGENCE_FACTOR`] at every successive window.
///
/// Window `W` covers `W + 1` indices; the slope is fitted against that
/// count, so a coefficient equal to `W + 1` has slope exactly 1.
pub fn divergence_diagnostic<T: Real>(points: &[(usize, T)]) -> Result<Divergence> {
    let last = points.last().map(|p| p.0).unwrap_or(0);
    if last < 8 || points.len() < 2 {
        return Err(Error::WindowTooSmall { window: last });
    }
    let values: Vec<f64> = points.iter().map(|p| p.1.as_f64()).collect();
    let growth_factors: Vec<f64> = values
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 1.0 })
        .collect();
    let diverging = values.iter().any(|v| !v.is_finite())
        || growth_factors.iter().all(|g| !(*g <= DIVERGENCE_FACTOR));
    let slope = if values.iter().all(|v| v.is_finite() && *v > 0.0) {
        let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64 + 1.0).ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    } else if values.iter().any(|v| !v.is_finite()) {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(Divergence { trend: if diverging { Trend::Diverging } else { Trend::Stable }, slope, growth_factors })
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateCheck<T> {
    pub pass: bool,
    /// `min_n (candidate_n - r_n)`.
    pub margin: T,
    pub margins: Vec<T>,
}

/// Compares a candidate coefficient sequence with the measured minima.
///
/// The candidate passes when `candidate_n >= r_n - tol * max(1, r_n)` for
/// every index; `tol` absorbs rounding in the measured ratios.
pub fn check_candidate<T: Real>(estimate: &ConditionEstimate<T>, candidate: &[T], tol: T) -> Result<CandidateCheck<T>> {
    if candidate.len() < estimate.raw.len() {
        return Err(Error::MalformedCandidate { index: candidate.len(), reason: "shorter than the window" });
    }
    for (index, c) in candidate.iter().enumerate().take(estimate.raw.len()) {
        if !(*c >= T::one()) {
            return Err(Error::MalformedCandidate { index, reason: "below 1" });
        }
        if index > 0 && *c < candidate[index - 1] {
            return Err(Error::MalformedCandidate { index, reason: "decreasing" });
        }
    }
    let margins: Vec<T> = estimate.raw.iter().zip(candidate).map(|(r, c)| *c - *r).collect();
    let pass = estimate
        .raw
        .iter()
        .zip(candidate)
        .all(|(r, c)| r.is_finite() && *c >= *r - tol * fmax(T::one(), *r));
    let margin = margins.iter().copied().fold(T::infinity(), |a, b| if b < a || b.is_nan() { b } else { a });
    Ok(CandidateCheck { pass, margin, margins })
}
