//! Sup/inf of `||M u||` over unit vectors `u` of a subspace.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::evolution::EvolutionCache;
use super::linalg::{range_basis, VectorNorm, RANK_TOL};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    Sup,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled,
}

impl Method {
    pub fn combine(self, other: Method) -> Method {
        self.max(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain<T> {
    pub value: T,
    pub method: Method,
    /// Final refinement step of the sampled search, `None` when exact.
    pub resolution: Option<T>,
}

/// Number of sphere directions used by the sampled path.
pub const SAMPLE_DIRECTIONS: usize = 512;

/// `sup` or `inf` of `||map u|| / ||u||` over nonzero `u` in the column
/// span of `basis`.
///
/// Exact for rank-one subspaces, for the euclidean norm (singular values of
/// `map` composed with an orthonormal basis) and for the whole space (induced
/// operator norm, or its inverse-based counterpart for `inf`). Other cases
/// use [`SAMPLE_DIRECTIONS`] deterministic directions followed by a
/// coordinate-wise local refinement.
pub fn restricted_gain<T: Real>(
    map: &DMatrix<T>,
    basis: &DMatrix<T>,
    norm: VectorNorm,
    mode: GainMode,
) -> Result<Gain<T>> {
    if basis.ncols() == 0 || basis.iter().all(|v| *v == T::zero()) {
        return Err(Error::DegenerateSubspace);
    }
    let exact = |value| Ok(Gain { value, method: Method::Exact, resolution: None });
    if basis.ncols() == 1 {
        let b = basis.column(0).into_owned();
        return exact(norm.of(&(map * &b)) / norm.of(&b));
    }
    let ortho = range_basis(basis, T::lit(RANK_TOL));
    if ortho.ncols() == 1 {
        return restricted_gain(map, &ortho, norm, mode);
    }
    if norm == VectorNorm::Euclidean {
        let s = (map * &ortho).singular_values();
        let value = match mode {
            GainMode::Sup => s.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a }),
            GainMode::Inf => s.iter().copied().fold(T::infinity(), |a, b| if b < a { b } else { a }),
        };
        return exact(value);
    }
    if ortho.ncols() == map.ncols() {
        return match mode {
            GainMode::Sup => exact(norm.operator(map)),
            GainMode::Inf => match map.clone().try_inverse() {
                Some(inv) => exact(T::one() / norm.operator(&inv)),
                None => exact(T::zero()),
            },
        };
    }
    Ok(sampled_gain(map, &ortho, norm, mode))
}

/// `restricted_gain` applied to `A_m^n`.
pub fn evolution_gain<T: Real>(
    e: &EvolutionCache<T>,
    basis: &DMatrix<T>,
    mode: GainMode,
    m: usize,
    n: usize,
) -> Result<Gain<T>> {
    restricted_gain(e.get(m, n), basis, e.norm(), mode)
}

fn sampled_gain<T: Real>(map: &DMatrix<T>, basis: &DMatrix<T>, norm: VectorNorm, mode: GainMode) -> Gain<T> {
    let r = basis.ncols();
    let ratio = |c: &DVector<T>| {
        let u = basis * c;
        norm.of(&(map * &u)) / norm.of(&u)
    };
    let better = |a: T, b: T| match mode {
        GainMode::Sup => a > b,
        GainMode::Inf => a < b,
    };
    let mut best_c = DVector::zeros(r);
    best_c[0] = T::one();
    let mut best = ratio(&best_c);
    for c in coordinate_directions::<T>(r, SAMPLE_DIRECTIONS) {
        let v = ratio(&c);
        if better(v, best) {
            best = v;
            best_c = c;
        }
    }
    let mut step = T::lit(2.0 / (SAMPLE_DIRECTIONS as f64).powf(1.0 / (r as f64 - 1.0)));
    let floor = T::lit(1e-12);
    let mut iterations = 0;
    while step > floor && iterations < 2000 {
        iterations += 1;
        let mut improved = false;
        for i in 0..r {
            for sign in [T::one(), -T::one()] {
                let mut c = best_c.clone();
                c[i] += sign * step;
                let v = ratio(&c);
                if better(v, best) {
                    best = v;
                    best_c = c.normalize();
                    improved = true;
                }
            }
        }
        if !improved {
            step *= T::lit(0.5);
        }
    }
    Gain { value: best, method: Method::Sampled, resolution: Some(step) }
}

/// Deterministic directions in `R^r`: a half circle for `r = 2`, otherwise
/// the coordinate axes followed by Halton points mapped to `[-1, 1]^r`.
pub(crate) fn coordinate_directions<T: Real>(r: usize, count: usize) -> Vec<DVector<T>> {
    if r == 2 {
        return (0..count)
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / count as f64;
                DVector::from_vec(vec![T::lit(theta.cos()), T::lit(theta.sin())])
            })
            .collect();
    }
    let mut out: Vec<DVector<T>> = (0..r)
        .map(|i| DVector::from_fn(r, |j, _| if i == j { T::one() } else { T::zero() }))
        .collect();
    let mut k = 1;
    while out.len() < count {
        let point: Vec<f64> = (0..r).map(|j| 2.0 * halton(k, PRIMES[j % PRIMES.len()]) - 1.0).collect();
        k += 1;
        let len = point.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 1e-9 {
            out.push(DVector::from_iterator(r, point.iter().map(|v| T::lit(v / len))));
        }
    }
    out
}

pub(crate) const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub(crate) fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evolution::{build_evolution, LinearSystem};
    use proptest::prelude::*;

    fn diag(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn identity_map_has_unit_gain() {
        let i = DMatrix::<f64>::identity(3, 3);
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        for norm in [VectorNorm::Max, VectorNorm::Sum, VectorNorm::Euclidean] {
            let g = restricted_gain(&i, &basis, norm, GainMode::Sup).unwrap();
            assert!((g.value - 1.0).abs() < 1e-9, "{norm:?} {g:?}");
        }
    }

    #[test]
    fn scalar_action_on_axis() {
        let basis = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let g = restricted_gain(&diag(0.5, 2.0), &basis, VectorNorm::Max, GainMode::Inf).unwrap();
        assert_eq!(g.value, 2.0);
        assert_eq!(g.method, Method::Exact);
    }

    #[test]
    fn zero_basis_is_degenerate() {
        let basis = DMatrix::<f64>::zeros(2, 1);
        assert_eq!(
            restricted_gain(&diag(1.0, 1.0), &basis, VectorNorm::Max, GainMode::Sup).unwrap_err(),
            Error::DegenerateSubspace
        );
    }

    #[test]
    fn full_space_gains_are_exact() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let basis = DMatrix::<f64>::identity(2, 2);
        let sup = restricted_gain(&m, &basis, VectorNorm::Max, GainMode::Sup).unwrap();
        assert_eq!(sup.value, 3.0);
        // m^{-1} = [[1, -2], [0, 1]] has max-norm 3.
        let inf = restricted_gain(&m, &basis, VectorNorm::Max, GainMode::Inf).unwrap();
        assert!((inf.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_path_matches_vertex_oracle() {
        // Plane x3 = 0 in R^3 under the max norm: the restricted unit ball is
        // the square with vertices (+-1, +-1, 0), where a convex function
        // attains its sup.
        let m = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, 0.5, 1.0, 7.0, 3.0, 0.0, 1.0]);
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let g = restricted_gain(&m, &basis, VectorNorm::Max, GainMode::Sup).unwrap();
        let oracle = [(1.0, 1.0), (1.0, -1.0)]
            .iter()
            .map(|(a, b)| VectorNorm::Max.of(&(&m * DVector::from_vec(vec![*a, *b, 0.0]))))
            .fold(0.0f64, f64::max);
        assert_eq!(g.method, Method::Sampled);
        assert!((g.value - oracle).abs() < 1e-9, "{} vs {}", g.value, oracle);
    }

    #[test]
    fn example_two_rank_one_ratio() {
        // A_m^n P_n = ((1+n)/(1+m)) (h_n/h_m) P_n with a_n = e^n, h_n = 2^n.
        let a = |n: usize| (n as f64).exp();
        let p = |n: usize| DMatrix::from_row_slice(2, 2, &[1.0, a(n), 0.0, 0.0]);
        let q = |n: usize| DMatrix::identity(2, 2) - p(n);
        let h = |n: usize| 2f64.powi(n as i32);
        let k = |n: usize| 3f64.powi(n as i32);
        let sys = LinearSystem::from_fn(4, VectorNorm::Max, |n| {
            (p(n) * (h(n) / h(n + 1)) + q(n + 1) * (k(n + 1) / k(n))) * ((1.0 + n as f64) / (2.0 + n as f64))
        })
        .unwrap();
        let e = build_evolution(&sys).unwrap();
        let basis = range_basis(&p(1), RANK_TOL);
        let g = evolution_gain(&e, &basis, GainMode::Sup, 3, 1).unwrap();
        assert!((g.value * h(3) / h(1) - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sup_dominates_inf_and_scales(entries in prop::collection::vec(-3.0f64..3.0, 9),
                                        b in prop::collection::vec(-1.0f64..1.0, 6),
                                        c in 0.1f64..10.0,
                                        which in 0usize..3) {
            let norm = [VectorNorm::Max, VectorNorm::Sum, VectorNorm::Euclidean][which];
            let m = DMatrix::from_row_slice(3, 3, &entries);
            let basis = DMatrix::from_row_slice(3, 2, &b);
            prop_assume!(range_basis(&basis, RANK_TOL).ncols() == 2);
            let sup = restricted_gain(&m, &basis, norm, GainMode::Sup).unwrap();
            let inf = restricted_gain(&m, &basis, norm, GainMode::Inf).unwrap();
            prop_assert!(sup.value >= inf.value - 1e-12);
            let scaled = &m * c;
            let sup_c = restricted_gain(&scaled, &basis, norm, GainMode::Sup).unwrap();
            prop_assert!((sup_c.value - c * sup.value).abs() <= 1e-9 * (1.0 + c * sup.value));
        }
    }
}
