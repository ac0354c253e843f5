//! Projector sequences `P_n`, their complements `Q_n = I - P_n`, and the
//! invariance checks against an evolution cache.

use nalgebra::DMatrix;
use serde::Serialize;

use super::evolution::EvolutionCache;
use super::linalg::{range_basis, VectorNorm, RANK_TOL};
use crate::error::{Error, Result};
use crate::scalar::{fmax, Real};

#[derive(Debug, Clone)]
pub struct ProjectorSequence<T> {
    dim: usize,
    projectors: Vec<DMatrix<T>>,
    complements: Vec<DMatrix<T>>,
}

impl<T: Real> ProjectorSequence<T> {
    /// `P_0, ..., P_N`. Idempotence is not enforced here, see [`check_projectors`].
    pub fn new(projectors: Vec<DMatrix<T>>) -> Result<Self> {
        let dim = projectors.first().ok_or(Error::EmptySystem)?.nrows();
        for (index, p) in projectors.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(Error::DimensionMismatch { index, expected: dim, rows: p.nrows(), cols: p.ncols() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        let complements = projectors.iter().map(|p| DMatrix::identity(dim, dim) - p).collect();
        Ok(ProjectorSequence { dim, projectors, complements })
    }

    pub fn constant(p: DMatrix<T>, window: usize) -> Result<Self> {
        Self::new(vec![p; window + 1])
    }

    pub fn from_fn(window: usize, f: impl FnMut(usize) -> DMatrix<T>) -> Result<Self> {
        Self::new((0..=window).map(f).collect())
    }

    pub fn window(&self) -> usize {
        self.projectors.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self, n: usize) -> &DMatrix<T> {
        &self.projectors[n]
    }

    pub fn q(&self, n: usize) -> &DMatrix<T> {
        &self.complements[n]
    }

    /// Sequence with `P` and `Q` exchanged.
    pub fn swapped(&self) -> Self {
        ProjectorSequence {
            dim: self.dim,
            projectors: self.complements.clone(),
            complements: self.projectors.clone(),
        }
    }

    pub fn truncated(&self, window: usize) -> Result<Self> {
        if window > self.window() {
            return Err(Error::WindowMismatch { expected: window, found: self.window() });
        }
        Self::new(self.projectors[..=window].to_vec())
    }

    pub(crate) fn ensure_window(&self, window: usize) -> Result<()> {
        if self.window() != window {
            return Err(Error::WindowMismatch { expected: window, found: self.window() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorReport {
    /// `||P_n^2 - P_n|| / max(1, ||P_n||)^2` per index.
    pub residuals: Vec<f64>,
    pub pass: Vec<bool>,
    pub all_pass: bool,
}

/// Idempotence residual of every `P_n`, in the induced base norm.
pub fn check_projectors<T: Real>(p: &ProjectorSequence<T>, norm: VectorNorm, tol: f64) -> ProjectorReport {
    let residuals: Vec<f64> = p
        .projectors
        .iter()
        .map(|pn| {
            let scale = fmax(T::one(), norm.operator(pn));
            (norm.operator(&(pn * pn - pn)) / (scale * scale)).as_f64()
        })
        .collect();
    let pass: Vec<bool> = residuals.iter().map(|r| *r <= tol).collect();
    let all_pass = pass.iter().all(|b| *b);
    ProjectorReport { residuals, pass, all_pass }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    /// `max_n ||A_n P_n - P_{n+1} A_n||`, relative.
    pub one_step_max: f64,
    /// `max_{m >= n} ||A_m^n P_n - P_m A_m^n||`, relative.
    pub cocycle_max: f64,
    pub worst_pair: (usize, usize),
    pub pass: bool,
}

/// Commutation defect of the cocycle with the projectors.
///
/// Residuals are divided by `max(1, ||A_m^n|| max(||P_n||, ||P_m||))`, the
/// size of the two products being compared.
pub fn check_invariance<T: Real>(p: &ProjectorSequence<T>, e: &EvolutionCache<T>, tol: f64) -> Result<InvarianceReport> {
    p.ensure_window(e.window())?;
    let norm = e.norm();
    let mut report = InvarianceReport { one_step_max: 0.0, cocycle_max: 0.0, worst_pair: (0, 0), pass: true };
    for m in 0..=e.window() {
        for n in 0..=m {
            let a = e.get(m, n);
            let defect = a * p.p(n) - p.p(m) * a;
            let scale = fmax(T::one(), norm.operator(a) * fmax(norm.operator(p.p(n)), norm.operator(p.p(m))));
            let r = (norm.operator(&defect) / scale).as_f64();
            if m == n + 1 && !(r <= report.one_step_max) {
                report.one_step_max = r;
            }
            if !(r <= report.cocycle_max) {
                report.cocycle_max = r;
                report.worst_pair = (m, n);
            }
        }
    }
    report.pass = report.cocycle_max <= tol;
    Ok(report)
}

/// Orthonormal bases of `range Q_n = Ker P_n`, rejecting rank changes.
pub fn kernel_bases<T: Real>(p: &ProjectorSequence<T>) -> Result<Vec<DMatrix<T>>> {
    let bases: Vec<DMatrix<T>> = (0..=p.window()).map(|n| range_basis(p.q(n), T::lit(RANK_TOL))).collect();
    let expected = bases[0].ncols();
    if let Some(index) = bases.iter().position(|b| b.ncols() != expected) {
        return Err(Error::RankMismatch { index, expected, found: bases[index].ncols() });
    }
    Ok(bases)
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictionEntry {
    pub m: usize,
    pub n: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongInvarianceReport {
    pub kernel_rank: usize,
    pub pairs: Vec<RestrictionEntry>,
    pub min_sigma: f64,
    pub all_pass: bool,
}

/// Smallest and largest singular value of a kernel-coordinate matrix.
pub(crate) fn sigma_range<T: Real>(c: &DMatrix<T>) -> (T, T) {
    if c.is_empty() {
        return (T::one(), T::one());
    }
    if c.iter().any(|v| !v.is_finite()) {
        return (T::zero(), T::infinity());
    }
    let s = c.singular_values();
    let lo = s.iter().copied().fold(T::infinity(), |a, b| if b < a { b } else { a });
    let hi = s.iter().copied().fold(T::zero(), fmax);
    (lo, hi)
}

/// Checks that `A_m^n` maps `Ker P_n` isomorphically onto `Ker P_m`.
///
/// The restriction is written in the orthonormal kernel bases,
/// `C = K_m^T A_m^n K_n`; a pair passes when `sigma_min > 0` and
/// `sigma_min >= sigma_tol * sigma_max`.
pub fn check_strong_invariance<T: Real>(
    p: &ProjectorSequence<T>,
    e: &EvolutionCache<T>,
    sigma_tol: f64,
) -> Result<StrongInvarianceReport> {
    p.ensure_window(e.window())?;
    let bases = kernel_bases(p)?;
    let mut pairs = Vec::new();
    let mut min_sigma = f64::INFINITY;
    for m in 0..=e.window() {
        for n in 0..=m {
            let c = bases[m].transpose() * e.get(m, n) * &bases[n];
            let (lo, hi) = sigma_range(&c);
            let pass = lo > T::zero() && lo >= T::lit(sigma_tol) * hi;
            min_sigma = min_sigma.min(lo.as_f64());
            pairs.push(RestrictionEntry { m, n, sigma_min: lo.as_f64(), sigma_max: hi.as_f64(), pass });
        }
    }
    let all_pass = pairs.iter().all(|r| r.pass);
    Ok(StrongInvarianceReport { kernel_rank: bases[0].ncols(), pairs, min_sigma, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evolution::{build_evolution, LinearSystem};

    fn diag(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn diagonal_projector_is_idempotent() {
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 4).unwrap();
        let r = check_projectors(&p, VectorNorm::Max, 1e-9);
        assert!(r.all_pass);
        assert_eq!(r.residuals[0], 0.0);
    }

    #[test]
    fn non_idempotent_matrix_fails() {
        let p = ProjectorSequence::constant(diag(1.0, 0.5), 1).unwrap();
        let r = check_projectors(&p, VectorNorm::Max, 1e-9);
        assert_eq!(r.residuals[0], 0.25);
        assert!(!r.all_pass);
    }

    #[test]
    fn commuting_diagonals_are_invariant() {
        let sys = LinearSystem::from_fn(6, VectorNorm::Max, |_| diag(0.5, 2.0)).unwrap();
        let e = build_evolution(&sys).unwrap();
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 6).unwrap();
        let r = check_invariance(&p, &e, 1e-10).unwrap();
        assert_eq!(r.cocycle_max, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn non_invariant_splitting_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        let sys = LinearSystem::from_fn(3, VectorNorm::Max, |_| a.clone()).unwrap();
        let e = build_evolution(&sys).unwrap();
        // range P = span e2 is not invariant under an upper triangular map.
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 3).unwrap().swapped();
        let r = check_invariance(&p, &e, 1e-10).unwrap();
        assert!(r.cocycle_max > 0.1);
        assert!(!r.pass);
    }

    #[test]
    fn scalar_restriction_on_kernel() {
        let sys = LinearSystem::from_fn(5, VectorNorm::Max, |_| diag(0.5, 2.0)).unwrap();
        let e = build_evolution(&sys).unwrap();
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 5).unwrap();
        let r = check_strong_invariance(&p, &e, 1e-10).unwrap();
        assert_eq!(r.kernel_rank, 1);
        for entry in &r.pairs {
            let expected = 2f64.powi((entry.m - entry.n) as i32);
            assert!((entry.sigma_min - expected).abs() < 1e-12 * expected);
            assert!(entry.pass);
        }
    }

    #[test]
    fn annihilated_kernel_fails_strong_invariance() {
        let sys = LinearSystem::from_fn(3, VectorNorm::Max, |_| diag(1.0, 0.0)).unwrap();
        let e = build_evolution(&sys).unwrap();
        let p = ProjectorSequence::constant(diag(1.0, 0.0), 3).unwrap();
        let r = check_strong_invariance(&p, &e, 1e-10).unwrap();
        assert!(!r.all_pass);
        assert!(!r.pairs.iter().find(|x| x.m == 1 && x.n == 0).unwrap().pass);
    }

    #[test]
    fn varying_kernel_rank_is_rejected() {
        let p = ProjectorSequence::new(vec![diag(1.0, 0.0), diag(1.0, 1.0)]).unwrap();
        assert!(matches!(kernel_bases(&p), Err(Error::RankMismatch { index: 1, expected: 1, found: 0 })));
    }
}
