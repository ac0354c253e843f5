//! Lyapunov-type norm sequences built from a split system, their
//! compatibility with the splitting, and the norm characterizations of the
//! dichotomy conditions.
//!
//! The dichotomy norm is
//!
//! `|||x|||_n = max_{n <= m <= H} (h_m/h_n) ||A_m^n P_n x|| + max_{p <= n} (k_n/k_p) ||B_n^p Q_n x||`
//!
//! and the growth norm uses the inverted weights. `H` is the truncation
//! horizon, by default the end of the window.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{
    divergence_diagnostic, envelope, ConditionEstimate, ConditionId, Divergence, IndexBy, PairTable, Trend, Verdict,
};
use crate::model::gain::{halton, PRIMES};
use crate::model::{GrowthRate, Method, SplitSystem, TriTable, VectorNorm};
use crate::scalar::{fmax, Real};

/// Relative slack for the sandwich and "<=" checks.
pub const FACTOR_TOL: f64 = 1e-9;

/// Number of low-discrepancy directions in the sample set.
pub const HALTON_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// The base norm at every index.
    Base,
    /// Forward weights `h_m/h_n`, backward weights `k_n/k_p`.
    Dichotomy,
    /// Forward weights `h_n/h_m`, backward weights `k_p/k_n`.
    Growth,
}

/// A sequence of norms `|||.|||_n` on the window of a split system.
#[derive(Debug, Clone)]
pub struct NormSequence<'a, T> {
    kind: NormKind,
    split: &'a SplitSystem<T>,
    h: GrowthRate<T>,
    k: GrowthRate<T>,
    horizon: usize,
    /// Weight of the `A_m^n P_n` term at `(m, n)`.
    forward_weight: TriTable<T>,
    /// Weight of the `B_n^p Q_n` term at `(n, p)`.
    backward_weight: TriTable<T>,
}

impl<'a, T: Real> NormSequence<'a, T> {
    fn build(kind: NormKind, split: &'a SplitSystem<T>, h: &GrowthRate<T>, k: &GrowthRate<T>) -> Result<Self> {
        let window = split.window();
        if h.window() < window || k.window() < window {
            return Err(Error::WindowMismatch { expected: window, found: h.window().min(k.window()) });
        }
        let (forward_weight, backward_weight) = match kind {
            NormKind::Growth => (TriTable::from_fn(window, |m, n| h.ratio(n, m)), TriTable::from_fn(window, |n, p| k.ratio(p, n))),
            _ => (TriTable::from_fn(window, |m, n| h.ratio(m, n)), TriTable::from_fn(window, |n, p| k.ratio(n, p))),
        };
        Ok(NormSequence { kind, split, h: h.clone(), k: k.clone(), horizon: window, forward_weight, backward_weight })
    }

    /// The base norm at every index, for use with the theorem checks.
    pub fn base(split: &'a SplitSystem<T>, h: &GrowthRate<T>, k: &GrowthRate<T>) -> Result<Self> {
        Self::build(NormKind::Base, split, h, k)
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn split(&self) -> &'a SplitSystem<T> {
        self.split
    }

    pub fn h(&self) -> &GrowthRate<T> {
        &self.h
    }

    pub fn k(&self) -> &GrowthRate<T> {
        &self.k
    }

    pub fn window(&self) -> usize {
        self.split.window()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Same norms with the forward supremum truncated at `horizon` (clamped
    /// to the window).
    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon.min(self.split.window());
        self
    }

    pub fn base_norm(&self) -> VectorNorm {
        self.split.norm()
    }

    /// `|||x|||_n`.
    pub fn eval(&self, n: usize, x: &DVector<T>) -> T {
        let norm = self.split.norm();
        match self.kind {
            NormKind::Base => norm.of(x),
            NormKind::Dichotomy | NormKind::Growth => self.forward_term(n, x) + self.backward_term(n, x),
        }
    }

    /// `max_{n <= m <= H} w(m, n) ||A_m^n P_n x||`.
    pub fn forward_term(&self, n: usize, x: &DVector<T>) -> T {
        let norm = self.split.norm();
        (n..=self.horizon.max(n)).fold(T::zero(), |acc, m| {
            fmax(acc, *self.forward_weight.get(m, n) * norm.of(&(self.split.forward(m, n) * x)))
        })
    }

    /// `max_{p <= n} w(n, p) ||B_n^p Q_n x||`.
    pub fn backward_term(&self, n: usize, x: &DVector<T>) -> T {
        let norm = self.split.norm();
        (0..=n).fold(T::zero(), |acc, p| {
            fmax(acc, *self.backward_weight.get(n, p) * norm.of(&(self.split.backward(n, p) * x)))
        })
    }

    /// Checks that `m -> w(m, n) ||A_m^n P_n x||` is nonincreasing on the
    /// window for every sample; where it is, the truncated supremum is
    /// attained at `m = n` and equals the untruncated one.
    pub fn tail_nonincreasing(&self) -> TailCheck {
        let norm = self.split.norm();
        let mut check = TailCheck { nonincreasing: true, worst_increase: 0.0, at: None };
        if self.kind == NormKind::Base {
            return check;
        }
        let window = self.window();
        for n in 0..=window {
            for x in samples_at(self.split, n) {
                if projection_negligible(self.split, n, &x, Side::P) {
                    continue;
                }
                let mut prev = *self.forward_weight.get(n, n) * norm.of(&(self.split.forward(n, n) * &x));
                for m in n + 1..=window {
                    let cur = *self.forward_weight.get(m, n) * norm.of(&(self.split.forward(m, n) * &x));
                    let scale = prev.as_f64().max(f64::MIN_POSITIVE);
                    let rise = (cur - prev).as_f64() / scale;
                    if rise > FACTOR_TOL {
                        check.nonincreasing = false;
                        if rise > check.worst_increase {
                            check.worst_increase = rise;
                            check.at = Some((m, n));
                        }
                    }
                    prev = cur;
                }
            }
        }
        check
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub nonincreasing: bool,
    /// Largest relative increase between consecutive `m`.
    pub worst_increase: f64,
    pub at: Option<(usize, usize)>,
}

/// Dichotomy norms (forward weights `h_m/h_n`, backward `k_n/k_p`).
pub fn build_dichotomy_norm<'a, T: Real>(
    split: &'a SplitSystem<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
) -> Result<NormSequence<'a, T>> {
    NormSequence::build(NormKind::Dichotomy, split, h, k)
}

/// Growth norms (forward weights `h_n/h_m`, backward `k_p/k_n`).
pub fn build_growth_norm<'a, T: Real>(
    split: &'a SplitSystem<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
) -> Result<NormSequence<'a, T>> {
    NormSequence::build(NormKind::Growth, split, h, k)
}

/// Index-independent samples: the vertices of the max-norm unit ball (for
/// dimensions up to 10), `+-e_i`, and [`HALTON_SAMPLES`] Halton points in
/// `[-1, 1]^d`. Every sample has base norm 1.
pub fn core_samples<T: Real>(dim: usize, norm: VectorNorm) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> = Vec::new();
    if dim <= 10 {
        for bits in 0..(1u32 << dim) {
            out.push(DVector::from_fn(dim, |i, _| if bits >> i & 1 == 1 { -T::one() } else { T::one() }));
        }
    }
    for i in 0..dim {
        for s in [T::one(), -T::one()] {
            out.push(DVector::from_fn(dim, |j, _| if i == j { s } else { T::zero() }));
        }
    }
    let mut out = normalize_dedup(out, norm);
    let fixed = out.len();
    let mut index = 1;
    while out.len() < fixed + HALTON_SAMPLES {
        let v = DVector::from_fn(dim, |j, _| T::lit(2.0 * halton(index, PRIMES[j % PRIMES.len()]) - 1.0));
        index += 1;
        out = push_unique(out, v, norm);
    }
    out
}

/// [`core_samples`] together with their projections `P_n s` and `Q_n s`.
pub fn samples_at<T: Real>(split: &SplitSystem<T>, n: usize) -> Vec<DVector<T>> {
    let norm = split.norm();
    let core = core_samples::<T>(split.dim(), norm);
    let p = split.projectors();
    let mut out = core.clone();
    for s in &core {
        out.push(p.p(n) * s);
        out.push(p.q(n) * s);
    }
    normalize_dedup(out, norm)
}

fn normalize_dedup<T: Real>(vs: Vec<DVector<T>>, norm: VectorNorm) -> Vec<DVector<T>> {
    vs.into_iter().fold(Vec::new(), |out, v| push_unique(out, v, norm))
}

/// Appends `v / ||v||` unless it is zero, non-finite or already present.
fn push_unique<T: Real>(mut out: Vec<DVector<T>>, v: DVector<T>, norm: VectorNorm) -> Vec<DVector<T>> {
    let len = norm.of(&v);
    if !(len > T::lit(1e-300)) || !len.is_finite() {
        return out;
    }
    let v = v / len;
    if !out.iter().any(|w| (w - &v).amax() <= T::lit(1e-12)) {
        out.push(v);
    }
    out
}

/// Compatibility constants: `c_n` against `||P_n x|| + ||Q_n x||` and
/// `c1_n` against `||x||`, as raw maxima over samples and nondecreasing
/// envelopes (floored at 1).
#[derive(Debug, Clone, Serialize)]
pub struct Compatibility<T> {
    pub raw_c: Vec<T>,
    pub raw_c1: Vec<T>,
    pub c: Vec<T>,
    pub c1: Vec<T>,
    /// `min |||x|||_n / ||x||` over all samples; at least `1 - FACTOR_TOL`.
    pub lower_ratio: T,
    pub samples: usize,
}

/// Checks `||x|| <= |||x|||_n` on samples and estimates `c_n`, `c1_n`.
pub fn check_compatibility<T: Real>(norms: &NormSequence<'_, T>) -> Result<Compatibility<T>> {
    let split = norms.split();
    let base = split.norm();
    let window = split.window();
    let (mut raw_c, mut raw_c1) = (vec![T::zero(); window + 1], vec![T::zero(); window + 1]);
    let mut lower_ratio = T::infinity();
    let mut samples = 0;
    for n in 0..=window {
        for x in samples_at(split, n) {
            samples += 1;
            let value = norms.eval(n, &x);
            let bx = base.of(&x);
            let ratio = value / bx;
            if ratio < lower_ratio {
                lower_ratio = ratio;
            }
            if !(ratio >= T::one() - T::lit(FACTOR_TOL)) {
                return Err(Error::LowerBoundViolation { index: n, ratio: ratio.as_f64() });
            }
            let split_sum = base.of(&(split.projectors().p(n) * &x)) + base.of(&(split.projectors().q(n) * &x));
            raw_c[n] = fmax(raw_c[n], value / split_sum);
            raw_c1[n] = fmax(raw_c1[n], ratio);
        }
    }
    let floor = |raw: &[T]| envelope(&raw.iter().map(|v| fmax(*v, T::one())).collect::<Vec<_>>());
    Ok(Compatibility { c: floor(&raw_c), c1: floor(&raw_c1), raw_c, raw_c1, lower_ratio, samples })
}

/// Largest measured `lhs / rhs` for one inequality over all pairs and samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorCheck {
    pub id: ConditionId,
    pub max_factor: f64,
    pub worst: Option<(usize, usize)>,
    pub violations: usize,
    pub evaluations: usize,
}

impl FactorCheck {
    fn new(id: ConditionId) -> Self {
        FactorCheck { id, max_factor: 0.0, worst: None, violations: 0, evaluations: 0 }
    }

    fn record(&mut self, m: usize, n: usize, factor: f64) {
        self.evaluations += 1;
        if factor > 1.0 + FACTOR_TOL {
            self.violations += 1;
        }
        if factor > self.max_factor || factor.is_nan() {
            self.max_factor = factor;
            self.worst = Some((m, n));
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0 && !self.max_factor.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub hd: FactorCheck,
    pub kd: FactorCheck,
    /// `|||P_n x|||_n <= |||x|||_n` on samples (only checked for the
    /// full-vector form).
    pub projection_monotone: Option<bool>,
    pub pass: bool,
}

fn factor<T: Real>(lhs: T, rhs: T) -> Option<f64> {
    let (l, r) = (lhs.as_f64(), rhs.as_f64());
    if r > 0.0 {
        Some(l / r)
    } else if l > 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    }
}

/// Relative size below which a projected sample counts as zero.
const VACUOUS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq)]
enum Side {
    P,
    Q,
}

/// `||P_n x||` (or `||Q_n x||`) is at roundoff level relative to
/// `||P_n|| ||x||`: the direction is vacuous for that side.
fn projection_negligible<T: Real>(split: &SplitSystem<T>, n: usize, x: &DVector<T>, side: Side) -> bool {
    let norm = split.norm();
    let (pn, qn) = split.projector_norms(n);
    let (proj, op) = match side {
        Side::P => (split.projectors().p(n) * x, pn),
        Side::Q => (split.projectors().q(n) * x, qn),
    };
    norm.of(&proj) <= T::lit(VACUOUS_TOL) * op * norm.of(x)
}

#[derive(Clone, Copy, PartialEq)]
enum RightSide {
    Projected,
    Full,
}

/// Ratio tables for `h_m |||A_m^n P_n x|||_m / (h_n |||y|||_n)` indexed by
/// `(m, n)` and `k_m |||B_m^n Q_m x|||_n / (k_n |||y|||_m)`, with `y` the
/// projected or the full vector, maximised over samples.
fn ratio_tables<T: Real>(norms: &NormSequence<'_, T>, rhs: RightSide) -> (PairTable<T>, PairTable<T>) {
    let split = norms.split();
    let p = split.projectors();
    let window = split.window();
    let (h, k) = (norms.h(), norms.k());
    let mut hd = PairTable::new(window);
    let mut kd = PairTable::new(window);
    for n in 0..=window {
        for x in samples_at(split, n) {
            if rhs == RightSide::Projected && projection_negligible(split, n, &x, Side::P) {
                continue;
            }
            let px = p.p(n) * &x;
            let denom = match rhs {
                RightSide::Projected => norms.eval(n, &px),
                RightSide::Full => norms.eval(n, &x),
            };
            for m in n..=window {
                let lhs = norms.eval(m, &(split.forward(m, n) * &x));
                if let Some(f) = factor(h.ratio(m, n) * lhs, denom) {
                    hd.raise(m, n, T::lit(f));
                }
            }
        }
    }
    for m in 0..=window {
        for x in samples_at(split, m) {
            if rhs == RightSide::Projected && projection_negligible(split, m, &x, Side::Q) {
                continue;
            }
            let qx = p.q(m) * &x;
            let denom = match rhs {
                RightSide::Projected => norms.eval(m, &qx),
                RightSide::Full => norms.eval(m, &x),
            };
            for n in 0..=m {
                let lhs = norms.eval(n, &(split.backward(m, n) * &x));
                if let Some(f) = factor(k.ratio(m, n) * lhs, denom) {
                    kd.raise(m, n, T::lit(f));
                }
            }
        }
    }
    (hd, kd)
}

fn factor_check<T: Real>(id: ConditionId, table: &PairTable<T>) -> FactorCheck {
    let mut check = FactorCheck::new(id);
    for m in 0..=table.window() {
        for n in 0..=m {
            if let Some(v) = table.get(m, n) {
                check.record(m, n, v.as_f64());
            }
        }
    }
    check
}

/// `h_m |||A_m^n P_n x|||_m <= h_n |||P_n x|||_n` and
/// `k_m |||B_m^n Q_m x|||_n <= k_n |||Q_m x|||_m`, with factor at most
/// `1 + FACTOR_TOL`.
pub fn verify_theorem2<T: Real>(norms: &NormSequence<'_, T>) -> TheoremReport {
    let (hd, kd) = ratio_tables(norms, RightSide::Projected);
    let hd = factor_check(ConditionId::Hd3, &hd);
    let kd = factor_check(ConditionId::Kd3, &kd);
    let pass = hd.pass() && kd.pass();
    TheoremReport { hd, kd, projection_monotone: None, pass }
}

/// The full-vector form `h_m |||A_m^n P_n x|||_m <= h_n |||x|||_n` and
/// `k_m |||B_m^n Q_m x|||_n <= k_n |||x|||_m`, plus the monotonicity
/// `|||P_n x|||_n <= |||x|||_n` it follows from.
pub fn verify_theorem3<T: Real>(norms: &NormSequence<'_, T>) -> TheoremReport {
    let (hd, kd) = ratio_tables(norms, RightSide::Full);
    let hd = factor_check(ConditionId::Hd4, &hd);
    let kd = factor_check(ConditionId::Kd4, &kd);
    let split = norms.split();
    let monotone = (0..=split.window()).all(|n| {
        samples_at(split, n).iter().all(|x| {
            let px = split.projectors().p(n) * x;
            norms.eval(n, &px).as_f64() <= norms.eval(n, x).as_f64() * (1.0 + FACTOR_TOL)
        })
    });
    let pass = hd.pass() && kd.pass() && monotone;
    TheoremReport { hd, kd, projection_monotone: Some(monotone), pass }
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem5Report<T> {
    pub hd: ConditionEstimate<T>,
    pub kd: ConditionEstimate<T>,
    /// Nondecreasing `s_n` serving both inequalities.
    pub s: Vec<T>,
    /// `s_n c1_n`: coefficients of the resulting base-norm estimate.
    pub witness: Vec<T>,
    /// `s_0 c1_0` with the norms truncated at each nested window.
    pub witness_trend: Vec<(usize, T)>,
    pub witness_divergence: Option<Divergence>,
    pub verdict: Verdict,
}

/// `max(1, e_0) * c1_0` per nested window, where `e_0` is the anchored
/// coefficient of the given estimates and `c1_0` is measured with the norms
/// truncated at that window. Truncated norms can absorb a nonuniform system
/// into `c1`; this product exposes it.
pub(crate) fn anchored_witness<T: Real>(norms: &NormSequence<'_, T>, estimates: &[&ConditionEstimate<T>]) -> Vec<(usize, T)> {
    let base = norms.base_norm();
    let probes = samples_at(norms.split(), 0);
    let first = estimates[0];
    (0..first.trend.len())
        .map(|i| {
            let window = first.trend[i].window;
            let truncated = norms.clone().with_horizon(window);
            let c1 = probes.iter().fold(T::one(), |acc, x| fmax(acc, truncated.eval(0, x) / base.of(x)));
            let e0 = estimates.iter().fold(T::one(), |acc, e| fmax(acc, e.trend[i].anchored));
            (window, e0 * c1)
        })
        .collect()
}

/// Worst verdict of the estimates, raised to DIVERGING when the anchored
/// witness diverges.
pub(crate) fn combined_verdict<T: Real>(
    estimates: &[&ConditionEstimate<T>],
    witness_trend: &[(usize, T)],
) -> (Option<Divergence>, Verdict) {
    let divergence = divergence_diagnostic(witness_trend).ok();
    let mut verdict = estimates.iter().fold(Verdict::Vacuous, |v, e| v.worst(e.verdict()));
    if divergence.as_ref().is_some_and(|d| d.trend == Trend::Diverging) {
        verdict = verdict.worst(Verdict::Diverging);
    }
    (divergence, verdict)
}

/// Minimal `s_n` with `h_m |||A_m^n P_n x|||_m <= s_n h_n |||x|||_n` and
/// `k_m |||B_m^n Q_m x|||_n <= s_m k_n |||x|||_m` on the window, with trends
/// over nested windows.
pub fn verify_theorem5<T: Real>(norms: &NormSequence<'_, T>, compat: &Compatibility<T>) -> Theorem5Report<T> {
    let (hd_table, kd_table) = ratio_tables(norms, RightSide::Full);
    let hd = ConditionEstimate::from_pairs(ConditionId::Hd5, IndexBy::N, &hd_table, Method::Sampled, vec![]);
    let kd = ConditionEstimate::from_pairs(ConditionId::Kd5, IndexBy::M, &kd_table, Method::Sampled, vec![]);
    let s = envelope(&hd.raw.iter().zip(&kd.raw).map(|(a, b)| fmax(fmax(*a, *b), T::one())).collect::<Vec<_>>());
    let witness = envelope(&s.iter().zip(&compat.c1).map(|(a, b)| *a * *b).collect::<Vec<_>>());
    let witness_trend = anchored_witness(norms, &[&hd, &kd]);
    let (witness_divergence, verdict) = combined_verdict(&[&hd, &kd], &witness_trend);
    Theorem5Report { hd, kd, s, witness, witness_trend, witness_divergence, verdict }
}
