//! Vector norms on the coordinate space and small dense helpers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::scalar::{fmax, Real};

/// Base norm on `R^d`. Operator norms are the induced ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorNorm {
    #[default]
    Max,
    Sum,
    #[serde(alias = "euclid")]
    Euclidean,
}

impl VectorNorm {
    pub fn of<T: Real>(self, x: &DVector<T>) -> T {
        match self {
            VectorNorm::Max => x.iter().fold(T::zero(), |acc, v| fmax(acc, v.abs())),
            VectorNorm::Sum => x.iter().fold(T::zero(), |acc, v| acc + v.abs()),
            VectorNorm::Euclidean => x.norm(),
        }
    }

    /// Induced operator norm: max row sum, max column sum, or spectral norm.
    pub fn operator<T: Real>(self, m: &DMatrix<T>) -> T {
        if m.is_empty() {
            return T::zero();
        }
        match self {
            VectorNorm::Max => m
                .row_iter()
                .map(|r| r.iter().fold(T::zero(), |acc, v| acc + v.abs()))
                .fold(T::zero(), fmax),
            VectorNorm::Sum => m
                .column_iter()
                .map(|c| c.iter().fold(T::zero(), |acc, v| acc + v.abs()))
                .fold(T::zero(), fmax),
            VectorNorm::Euclidean => {
                if m.iter().any(|v| !v.is_finite()) {
                    return T::infinity();
                }
                m.singular_values().iter().copied().fold(T::zero(), fmax)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VectorNorm::Max => "max",
            VectorNorm::Sum => "sum",
            VectorNorm::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for VectorNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(VectorNorm::Max),
            "sum" => Ok(VectorNorm::Sum),
            "euclid" | "euclidean" => Ok(VectorNorm::Euclidean),
            other => Err(format!("unknown norm `{other}` (expected max, sum or euclid)")),
        }
    }
}

/// Default relative threshold below which a column is treated as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis (euclidean) of the column space of `m`.
///
/// Modified Gram-Schmidt with column pivoting and one reorthogonalization
/// pass. Columns are picked by largest remaining norm, ties broken by lowest
/// index, and each basis vector is signed so that its largest-magnitude
/// entry is positive; the result is a deterministic function of `m`.
pub fn range_basis<T: Real>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let rows = m.nrows();
    let mut remaining: Vec<DVector<T>> = m.column_iter().map(|c| c.into_owned()).collect();
    let scale = remaining.iter().map(|c| c.norm()).fold(T::zero(), fmax);
    let mut basis: Vec<DVector<T>> = Vec::new();
    if scale == T::zero() || !scale.is_finite() {
        return DMatrix::zeros(rows, 0);
    }
    while !remaining.is_empty() && basis.len() < rows {
        let (pick, best) = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, T::zero()), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if best <= rel_tol * scale {
            break;
        }
        let mut q = remaining.swap_remove(pick);
        for b in &basis {
            let proj = b.dot(&q);
            q.axpy(-proj, b, T::one());
        }
        let norm = q.norm();
        if norm <= rel_tol * scale {
            continue;
        }
        q /= norm;
        let lead = q.iter().copied().fold(T::zero(), |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < T::zero() {
            q.neg_mut();
        }
        for c in remaining.iter_mut() {
            let proj = q.dot(c);
            c.axpy(-proj, &q, T::one());
        }
        basis.push(q);
    }
    if basis.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Dense lower-triangular table indexed by `(m, n)` with `0 <= n <= m <= window`.
#[derive(Debug, Clone)]
pub struct TriTable<V> {
    window: usize,
    data: Vec<V>,
}

impl<V> TriTable<V> {
    pub fn from_fn(window: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        let mut data = Vec::with_capacity((window + 1) * (window + 2) / 2);
        for m in 0..=window {
            for n in 0..=m {
                data.push(f(m, n));
            }
        }
        TriTable { window, data }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn index(&self, m: usize, n: usize) -> usize {
        assert!(n <= m && m <= self.window, "({m}, {n}) outside the window 0..={}", self.window);
        m * (m + 1) / 2 + n
    }

    pub fn get(&self, m: usize, n: usize) -> &V {
        &self.data[self.index(m, n)]
    }

    pub fn set(&mut self, m: usize, n: usize, v: V) {
        let i = self.index(m, n);
        self.data[i] = v;
    }

    /// Iterates `(m, n, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &V)> {
        (0..=self.window)
            .flat_map(|m| (0..=m).map(move |n| (m, n)))
            .zip(self.data.iter())
            .map(|((m, n), v)| (m, n, v))
    }
}
