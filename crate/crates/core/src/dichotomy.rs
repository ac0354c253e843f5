//! Pointwise (h,k)-dichotomy and (h,k)-growth conditions, reduced to
//! minimal coefficient sequences on the window.
//!
//! | condition | inequality | ratio at `(m, n)` | indexed by |
//! |---|---|---|---|
//! | hd1 | `h_m ‖A_m^n P_n x‖ ≤ d_n h_n ‖P_n x‖` | `(h_m/h_n) sup-gain` on `range P_n` | n |
//! | kd1 | `k_m ‖Q_n x‖ ≤ d_m k_n ‖A_m^n Q_n x‖` | `(k_m/k_n) / inf-gain` on `range Q_n` | m |
//! | hg1 | `h_n ‖A_m^n P_n x‖ ≤ g_n h_m ‖P_n x‖` | `(h_n/h_m) sup-gain` | n |
//! | kg1 | `k_n ‖Q_n x‖ ≤ g_m k_m ‖A_m^n Q_n x‖` | `(k_n/k_m) / inf-gain` | m |
//! | hd2 | `h_m ‖A_m^n P_n x‖ ≤ s_n h_n ‖x‖` | `(h_m/h_n) ‖A_m^n P_n‖` | n |
//! | kd2 | `k_m ‖B_m^n Q_m x‖ ≤ s_m k_n ‖x‖` | `(k_m/k_n) ‖B_m^n Q_m‖` | m |
//! | hg2 | `h_n ‖A_m^n P_n x‖ ≤ g_n h_m ‖x‖` | `(h_n/h_m) ‖A_m^n P_n‖` | n |
//! | kg2 | `k_n ‖B_m^n Q_m x‖ ≤ g_m k_m ‖x‖` | `(k_n/k_m) ‖B_m^n Q_m‖` | m |

use nalgebra::DMatrix;

use crate::error::Result;
use crate::estimate::{ConditionEstimate, ConditionId, IndexBy, PairTable};
use crate::model::{
    range_basis, restricted_gain, EvolutionCache, GainMode, GrowthRate, Method, ProjectorSequence, SplitSystem,
};
use crate::scalar::Real;

#[derive(Clone, Copy)]
enum Weight {
    /// `rate_m / rate_n`
    Forward,
    /// `rate_n / rate_m`
    Backward,
}

fn weight<T: Real>(rate: &GrowthRate<T>, w: Weight, m: usize, n: usize) -> T {
    match w {
        Weight::Forward => rate.ratio(m, n),
        Weight::Backward => rate.ratio(n, m),
    }
}

fn projected_bases<T: Real>(p: &ProjectorSequence<T>, complement: bool) -> Vec<DMatrix<T>> {
    (0..=p.window())
        .map(|n| range_basis(if complement { p.q(n) } else { p.p(n) }, T::lit(crate::model::linalg::RANK_TOL)))
        .collect()
}

/// Conditions of the first kind: gains of `A_m^n` on `range P_n` (sup) or
/// `range Q_n` (inf).
fn first_kind<T: Real>(
    id: ConditionId,
    e: &EvolutionCache<T>,
    p: &ProjectorSequence<T>,
    rate: &GrowthRate<T>,
    w: Weight,
) -> Result<ConditionEstimate<T>> {
    p.ensure_window(e.window())?;
    let stable = matches!(id, ConditionId::Hd1 | ConditionId::Hg1);
    let bases = projected_bases(p, !stable);
    let window = e.window();
    let mut table = PairTable::new(window);
    let mut method = Method::Exact;
    let mut failures = Vec::new();
    // On range P_n, A_m^n = (A_{m-1} P_{m-1}) ... (A_n P_n); stepping
    // through the projected maps keeps contracting directions accurate next
    // to expanding ones.
    let steps: Vec<DMatrix<T>> = if stable { (0..window).map(|j| e.get(j + 1, j) * p.p(j)).collect() } else { Vec::new() };
    for n in 0..=window {
        let mut projected = p.p(n).clone();
        for m in n..=window {
            if m > n && stable {
                projected = &steps[m - 1] * &projected;
            }
            if bases[n].ncols() == 0 {
                continue;
            }
            let map = if stable { &projected } else { e.get(m, n) };
            let mode = if stable { GainMode::Sup } else { GainMode::Inf };
            let g = restricted_gain(map, &bases[n], e.norm(), mode)?;
            method = method.combine(g.method);
            let ratio = if stable {
                weight(rate, w, m, n) * g.value
            } else if g.value > T::zero() {
                weight(rate, w, m, n) / g.value
            } else {
                failures.push((m, n));
                T::infinity()
            };
            table.raise(m, n, ratio);
        }
    }
    let index_by = if stable { IndexBy::N } else { IndexBy::M };
    Ok(ConditionEstimate::from_pairs(id, index_by, &table, method, failures))
}

/// (hd1): `r_n = sup_{m >= n} (h_m/h_n) sup_{x in range P_n} ‖A_m^n x‖/‖x‖`.
/// Indices where `range P_n = {0}` are vacuous.
pub fn estimate_hd1<T: Real>(
    e: &EvolutionCache<T>,
    p: &ProjectorSequence<T>,
    h: &GrowthRate<T>,
) -> Result<ConditionEstimate<T>> {
    first_kind(ConditionId::Hd1, e, p, h, Weight::Forward)
}

/// (kd1): `r_m = sup_{n <= m} (k_m/k_n) / inf_{x in range Q_n} ‖A_m^n x‖/‖x‖`.
/// A zero infimum is recorded as an injectivity failure at that pair.
pub fn estimate_kd1<T: Real>(
    e: &EvolutionCache<T>,
    p: &ProjectorSequence<T>,
    k: &GrowthRate<T>,
) -> Result<ConditionEstimate<T>> {
    first_kind(ConditionId::Kd1, e, p, k, Weight::Forward)
}

/// (hg1) and (kg1): the growth counterparts with the rate weights inverted.
pub fn estimate_hg1_kg1<T: Real>(
    e: &EvolutionCache<T>,
    p: &ProjectorSequence<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
) -> Result<(ConditionEstimate<T>, ConditionEstimate<T>)> {
    Ok((
        first_kind(ConditionId::Hg1, e, p, h, Weight::Backward)?,
        first_kind(ConditionId::Kg1, e, p, k, Weight::Backward)?,
    ))
}

/// Conditions of the second kind: suprema over the whole space, i.e.
/// induced norms of `A_m^n P_n` and `B_m^n Q_m`.
fn second_kind<T: Real>(
    split: &SplitSystem<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
    w: Weight,
) -> (ConditionEstimate<T>, ConditionEstimate<T>) {
    let window = split.window();
    let norm = split.norm();
    let mut forward = PairTable::new(window);
    let mut backward = PairTable::new(window);
    for m in 0..=window {
        for n in 0..=m {
            forward.raise(m, n, weight(h, w, m, n) * norm.operator(split.forward(m, n)));
            backward.raise(m, n, weight(k, w, m, n) * norm.operator(split.backward(m, n)));
        }
    }
    let (hid, kid) = match w {
        Weight::Forward => (ConditionId::Hd2, ConditionId::Kd2),
        Weight::Backward => (ConditionId::Hg2, ConditionId::Kg2),
    };
    (
        ConditionEstimate::from_pairs(hid, IndexBy::N, &forward, Method::Exact, vec![]),
        ConditionEstimate::from_pairs(kid, IndexBy::M, &backward, Method::Exact, vec![]),
    )
}

/// (hd2) and (kd2).
pub fn estimate_hd2_kd2<T: Real>(
    split: &SplitSystem<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
) -> (ConditionEstimate<T>, ConditionEstimate<T>) {
    second_kind(split, h, k, Weight::Forward)
}

/// (hg2) and (kg2).
pub fn estimate_hg2_kg2<T: Real>(
    split: &SplitSystem<T>,
    h: &GrowthRate<T>,
    k: &GrowthRate<T>,
) -> (ConditionEstimate<T>, ConditionEstimate<T>) {
    second_kind(split, h, k, Weight::Backward)
}

/// Coefficients `s_n = sup_{j <= n} d_j (‖P_j‖ + ‖Q_j‖)` obtained from a
/// first-kind witness `d`; they satisfy the second-kind conditions whenever
/// `d` satisfies the first-kind ones.
pub fn second_kind_from_first<T: Real>(split: &SplitSystem<T>, d: &[T]) -> Vec<T> {
    let weighted: Vec<T> = d
        .iter()
        .enumerate()
        .map(|(j, dj)| {
            let (p, q) = split.projector_norms(j);
            *dj * (p + q)
        })
        .collect();
    crate::estimate::envelope(&weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{check_candidate, Verdict};
    use crate::model::{build_evolution, LinearSystem, VectorNorm};

    fn diag(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    fn diagonal(window: usize) -> (EvolutionCache<f64>, ProjectorSequence<f64>, GrowthRate<f64>) {
        let sys = LinearSystem::from_fn(window, VectorNorm::Max, |_| diag(0.5, 2.0)).unwrap();
        (
            build_evolution(&sys).unwrap(),
            ProjectorSequence::constant(diag(1.0, 0.0), window).unwrap(),
            GrowthRate::exponential(2f64.ln(), window).unwrap(),
        )
    }

    #[test]
    fn diagonal_first_kind_minima_are_one() {
        let (e, p, h) = diagonal(16);
        let hd1 = estimate_hd1(&e, &p, &h).unwrap();
        let kd1 = estimate_kd1(&e, &p, &h).unwrap();
        for r in hd1.raw.iter().chain(&kd1.raw) {
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert_eq!(hd1.verdict(), Verdict::HoldsOnWindow);
    }

    #[test]
    fn collapsed_window_gives_identity_ratio() {
        let (e, p, h) = diagonal(1);
        let hd1 = estimate_hd1(&e, &p, &h).unwrap();
        assert!((hd1.raw[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn annihilating_kernel_fails_injectivity() {
        let sys = LinearSystem::from_fn(4, VectorNorm::Max, |_| diag(0.5, 0.0)).unwrap();
        let e = build_evolution(&sys).unwrap();
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 4).unwrap();
        let k = GrowthRate::exponential(1.0, 4).unwrap();
        let kd1 = estimate_kd1(&e, &p, &k).unwrap();
        assert!(kd1.failures.contains(&(1, 0)));
        assert_eq!(kd1.verdict(), Verdict::Fails);
    }

    #[test]
    fn identity_system_diverges_against_growing_rate() {
        let sys = LinearSystem::from_fn(32, VectorNorm::Max, |_| DMatrix::identity(2, 2)).unwrap();
        let e = build_evolution(&sys).unwrap();
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 32).unwrap();
        let h = GrowthRate::polynomial(1.0, 32).unwrap();
        let hd1 = estimate_hd1(&e, &p, &h).unwrap();
        assert_eq!(hd1.verdict(), Verdict::Diverging);
        // Growth: (n+1)/(m+1) <= 1 with equality at m = n.
        let (hg1, kg1) = estimate_hg1_kg1(&e, &p, &h, &h).unwrap();
        assert!(hg1.raw.iter().chain(&kg1.raw).all(|r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_projector_is_vacuous_for_hd1() {
        let (e, _, h) = diagonal(4);
        let p = ProjectorSequence::constant(DMatrix::zeros(2, 2), 4).unwrap();
        let hd1 = estimate_hd1(&e, &p, &h).unwrap();
        assert_eq!(hd1.verdict(), Verdict::Vacuous);
    }

    #[test]
    fn second_kind_on_diagonal() {
        let (e, p, h) = diagonal(12);
        let split = SplitSystem::from_parts(e, p, 1e-10).unwrap();
        let (hd2, kd2) = estimate_hd2_kd2(&split, &h, &h);
        let (hg2, kg2) = estimate_hg2_kg2(&split, &h, &h);
        for est in [&hd2, &kd2, &hg2, &kg2] {
            assert!(est.raw.iter().all(|r| (r - 1.0).abs() < 1e-12), "{:?}", est.id);
        }
    }

    #[test]
    fn scaling_multiplies_gains_by_power() {
        let c = 1.7f64;
        let base = LinearSystem::from_fn(6, VectorNorm::Max, |_| diag(0.5, 2.0)).unwrap();
        let scaled = LinearSystem::from_fn(6, VectorNorm::Max, |_| diag(0.5 * c, 2.0 * c)).unwrap();
        let (e0, e1) = (build_evolution(&base).unwrap(), build_evolution(&scaled).unwrap());
        let basis = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        for m in 0..=6 {
            for n in 0..=m {
                let g0 = restricted_gain(e0.get(m, n), &basis, VectorNorm::Max, GainMode::Sup).unwrap().value;
                let g1 = restricted_gain(e1.get(m, n), &basis, VectorNorm::Max, GainMode::Sup).unwrap().value;
                assert!((g1 - g0 * c.powi((m - n) as i32)).abs() < 1e-12 * g1.max(1.0));
            }
        }
    }

    #[test]
    fn dichotomy_candidate_passes_growth() {
        let (e, p, h) = diagonal(10);
        let hd1 = estimate_hd1(&e, &p, &h).unwrap();
        let hg1 = estimate_hg1_kg1(&e, &p, &h, &h).unwrap().0;
        let d = vec![1.0; 11];
        assert!(check_candidate(&hd1, &d, 1e-9).unwrap().pass);
        assert!(check_candidate(&hg1, &d, 1e-9).unwrap().pass);
    }
}
