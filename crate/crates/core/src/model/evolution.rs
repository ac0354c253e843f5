//! Linear systems `x_{n+1} = A_n x_n` on a finite window and their cocycle.

use nalgebra::DMatrix;
use serde::Serialize;

use super::linalg::{TriTable, VectorNorm};
use crate::error::{Error, Result};
use crate::scalar::{fmax, Real};

/// Matrices `A_0, ..., A_{N-1}` acting on `R^d`, with the base norm used by
/// every downstream estimate.
#[derive(Debug, Clone)]
pub struct LinearSystem<T> {
    dim: usize,
    matrices: Vec<DMatrix<T>>,
    norm: VectorNorm,
}

impl<T: Real> LinearSystem<T> {
    pub fn new(matrices: Vec<DMatrix<T>>, norm: VectorNorm) -> Result<Self> {
        let first = matrices.first().ok_or(Error::EmptySystem)?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::EmptySystem);
        }
        for (index, a) in matrices.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::DimensionMismatch { index, expected: dim, rows: a.nrows(), cols: a.ncols() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(LinearSystem { dim, matrices, norm })
    }

    /// `A_n` given by a closure on `0..window`.
    pub fn from_fn(window: usize, norm: VectorNorm, f: impl FnMut(usize) -> DMatrix<T>) -> Result<Self> {
        Self::new((0..window).map(f).collect(), norm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Window length `N`; the cocycle is defined on `0..=N`.
    pub fn window(&self) -> usize {
        self.matrices.len()
    }

    pub fn norm(&self) -> VectorNorm {
        self.norm
    }

    pub fn with_norm(mut self, norm: VectorNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn matrix(&self, n: usize) -> &DMatrix<T> {
        &self.matrices[n]
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.matrices
    }

    /// Keeps `A_0, ..., A_{window-1}`.
    pub fn truncated(&self, window: usize) -> Result<Self> {
        if window == 0 || window > self.window() {
            return Err(Error::WindowMismatch { expected: window, found: self.window() });
        }
        Ok(LinearSystem { dim: self.dim, matrices: self.matrices[..window].to_vec(), norm: self.norm })
    }
}

/// Triangular table `(m, n) -> A_m^n` for `0 <= n <= m <= N`.
#[derive(Debug, Clone)]
pub struct EvolutionCache<T> {
    dim: usize,
    norm: VectorNorm,
    table: TriTable<DMatrix<T>>,
}

impl<T: Real> EvolutionCache<T> {
    pub fn window(&self) -> usize {
        self.table.window()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> VectorNorm {
        self.norm
    }

    /// `A_m^n`; panics unless `n <= m <= N`.
    pub fn get(&self, m: usize, n: usize) -> &DMatrix<T> {
        self.table.get(m, n)
    }

    /// Worst relative cocycle defect over all `n <= k <= m`.
    pub fn cocycle_residual(&self) -> CocycleReport {
        let mut report = CocycleReport { max_relative: 0.0, worst: (0, 0, 0) };
        let window = self.window();
        for m in 0..=window {
            for k in 0..=m {
                for n in 0..=k {
                    let direct = self.get(m, n);
                    let composed = self.get(m, k) * self.get(k, n);
                    let scale = fmax(T::one(), self.norm.operator(direct));
                    let r = (self.norm.operator(&(composed - direct)) / scale).as_f64();
                    if r > report.max_relative || r.is_nan() {
                        report.max_relative = r;
                        report.worst = (m, k, n);
                    }
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocycleReport {
    /// `max ||A_m^k A_k^n - A_m^n|| / max(1, ||A_m^n||)`.
    pub max_relative: f64,
    pub worst: (usize, usize, usize),
}

/// Builds `A_n^n = I` and `A_m^n = A_{m-1} A_{m-1}^n`.
pub fn build_evolution<T: Real>(sys: &LinearSystem<T>) -> Result<EvolutionCache<T>> {
    let dim = sys.dim();
    let window = sys.window();
    let mut table = TriTable::from_fn(window, |_, _| DMatrix::<T>::identity(dim, dim));
    for m in 1..=window {
        for n in 0..m {
            let next = sys.matrix(m - 1) * table.get(m - 1, n);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow { m, n });
            }
            table.set(m, n, next);
        }
    }
    Ok(EvolutionCache { dim, norm: sys.norm(), table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_entries_are_identity() {
        let sys = LinearSystem::from_fn(6, VectorNorm::Max, |n| {
            DMatrix::from_row_slice(2, 2, &[1.0 + n as f64, 2.0, -1.0, 0.5])
        })
        .unwrap();
        let e = build_evolution(&sys).unwrap();
        assert_eq!(e.get(5, 5), &DMatrix::identity(2, 2));
    }

    #[test]
    fn cocycle_matches_repeated_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sys = LinearSystem::from_fn(8, VectorNorm::Max, |_| {
            DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))
        })
        .unwrap();
        let e = build_evolution(&sys).unwrap();
        // Oracle: multiply A_1 .. A_5 left to right by hand.
        let mut oracle = DMatrix::<f64>::identity(3, 3);
        for j in 1..6 {
            oracle = sys.matrix(j) * oracle;
        }
        let lhs = e.get(6, 3) * e.get(3, 1);
        for (a, b) in lhs.iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        assert!(e.cocycle_residual().max_relative <= 1e-12);
    }

    #[test]
    fn overflow_is_flagged() {
        let sys = LinearSystem::from_fn(4, VectorNorm::Max, |_| DMatrix::from_element(1, 1, 1e200)).unwrap();
        assert!(matches!(build_evolution(&sys), Err(Error::Overflow { m: 2, n: 0 })));
    }

    #[test]
    fn malformed_systems_are_rejected() {
        assert_eq!(LinearSystem::<f64>::new(vec![], VectorNorm::Max).unwrap_err(), Error::EmptySystem);
        let bad = vec![DMatrix::identity(2, 2), DMatrix::identity(3, 3)];
        assert!(matches!(LinearSystem::<f64>::new(bad, VectorNorm::Max), Err(Error::DimensionMismatch { index: 1, .. })));
        let nan = vec![DMatrix::from_element(1, 1, f64::NAN)];
        assert_eq!(LinearSystem::new(nan, VectorNorm::Max).unwrap_err(), Error::NonFinite { index: 0 });
    }
}
