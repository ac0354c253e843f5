//! A system together with a strongly invariant splitting, with the products
//! used by the norm constructions precomputed.

use nalgebra::DMatrix;

use super::evolution::{build_evolution, EvolutionCache, LinearSystem};
use super::linalg::{range_basis, TriTable, VectorNorm, RANK_TOL};
use super::projector::ProjectorSequence;
use super::skew::{build_skew_evolution, SkewEvolution};
use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct SplitSystem<T> {
    evolution: EvolutionCache<T>,
    projectors: ProjectorSequence<T>,
    skew: SkewEvolution<T>,
    forward: TriTable<DMatrix<T>>,
    backward: TriTable<DMatrix<T>>,
    range_p: Vec<DMatrix<T>>,
    range_q: Vec<DMatrix<T>>,
    projector_norms: Vec<(T, T)>,
}

impl<T: Real> SplitSystem<T> {
    /// Builds the cocycle and the skew-evolution; fails on rank changes or
    /// singular kernel restrictions.
    pub fn new(system: &LinearSystem<T>, projectors: ProjectorSequence<T>, sigma_tol: f64) -> Result<Self> {
        let evolution = build_evolution(system)?;
        Self::from_parts(evolution, projectors, sigma_tol)
    }

    pub fn from_parts(evolution: EvolutionCache<T>, projectors: ProjectorSequence<T>, sigma_tol: f64) -> Result<Self> {
        let skew = build_skew_evolution(&projectors, &evolution, sigma_tol)?;
        let window = evolution.window();
        let norm = evolution.norm();
        // A_m^n P_n = (A_{m-1} P_{m-1}) ... (A_n P_n): stepping inside the
        // stable subspace keeps contracting directions accurate next to
        // expanding ones.
        let steps: Vec<DMatrix<T>> = (0..window).map(|j| evolution.get(j + 1, j) * projectors.p(j)).collect();
        let mut forward = TriTable::from_fn(window, |m, n| if m == n { projectors.p(n).clone() } else { DMatrix::zeros(0, 0) });
        for n in 0..window {
            for m in n + 1..=window {
                let next = &steps[m - 1] * forward.get(m - 1, n);
                forward.set(m, n, next);
            }
        }
        let backward = TriTable::from_fn(window, |m, n| skew.get(m, n) * projectors.q(m));
        let tol = T::lit(RANK_TOL);
        let range_p = (0..=window).map(|n| range_basis(projectors.p(n), tol)).collect();
        let range_q = (0..=window).map(|n| range_basis(projectors.q(n), tol)).collect();
        let projector_norms =
            (0..=window).map(|n| (norm.operator(projectors.p(n)), norm.operator(projectors.q(n)))).collect();
        Ok(SplitSystem { evolution, projectors, skew, forward, backward, range_p, range_q, projector_norms })
    }

    pub fn window(&self) -> usize {
        self.evolution.window()
    }

    pub fn dim(&self) -> usize {
        self.evolution.dim()
    }

    pub fn norm(&self) -> VectorNorm {
        self.evolution.norm()
    }

    pub fn evolution(&self) -> &EvolutionCache<T> {
        &self.evolution
    }

    pub fn projectors(&self) -> &ProjectorSequence<T> {
        &self.projectors
    }

    pub fn skew(&self) -> &SkewEvolution<T> {
        &self.skew
    }

    /// `A_m^n P_n`.
    pub fn forward(&self, m: usize, n: usize) -> &DMatrix<T> {
        self.forward.get(m, n)
    }

    /// `B_m^n Q_m`.
    pub fn backward(&self, m: usize, n: usize) -> &DMatrix<T> {
        self.backward.get(m, n)
    }

    /// Orthonormal basis of `range P_n`.
    pub fn range_p(&self, n: usize) -> &DMatrix<T> {
        &self.range_p[n]
    }

    /// Orthonormal basis of `range Q_n`.
    pub fn range_q(&self, n: usize) -> &DMatrix<T> {
        &self.range_q[n]
    }

    /// `(||P_n||, ||Q_n||)` in the induced base norm.
    pub fn projector_norms(&self, n: usize) -> (T, T) {
        self.projector_norms[n]
    }
}
