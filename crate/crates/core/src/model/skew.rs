//! Skew-evolution operator: the inverse of the cocycle restricted to the
//! kernels of the projectors.
//!
//! With orthonormal kernel bases `K_n` the one-step restriction of `A_n`
//! has coordinates `C_n = K_{n+1}^T A_n K_n`. Composing the inverses gives
//! `(C_m^n)^{-1} = C_n^{-1} ... C_{m-1}^{-1}` and
//!
//! ```text
//! B_m^n = K_n (C_m^n)^{-1} K_m^T Q_m
//! ```
//!
//! which maps `range Q_m` onto `range Q_n` and annihilates `range P_m`.

use nalgebra::DMatrix;
use serde::Serialize;

use super::evolution::EvolutionCache;
use super::linalg::TriTable;
use super::projector::{kernel_bases, sigma_range, ProjectorSequence};
use crate::error::{Error, Result};
use crate::scalar::{fmax, Real};

#[derive(Debug, Clone)]
pub struct SkewEvolution<T> {
    rank: usize,
    bases: Vec<DMatrix<T>>,
    steps: Vec<DMatrix<T>>,
    inverse_coords: TriTable<DMatrix<T>>,
    operators: TriTable<DMatrix<T>>,
}

impl<T: Real> SkewEvolution<T> {
    pub fn window(&self) -> usize {
        self.operators.window()
    }

    pub fn kernel_rank(&self) -> usize {
        self.rank
    }

    /// Orthonormal basis `K_n` of `Ker P_n`.
    pub fn basis(&self, n: usize) -> &DMatrix<T> {
        &self.bases[n]
    }

    /// Coordinates `C_n` of the one-step restricted map.
    pub fn step(&self, n: usize) -> &DMatrix<T> {
        &self.steps[n]
    }

    /// `(C_m^n)^{-1}` in kernel coordinates.
    pub fn inverse_coords(&self, m: usize, n: usize) -> &DMatrix<T> {
        self.inverse_coords.get(m, n)
    }

    /// `B_m^n` as an operator on the whole space.
    pub fn get(&self, m: usize, n: usize) -> &DMatrix<T> {
        self.operators.get(m, n)
    }
}

/// Inverts the one-step kernel restrictions and composes them.
///
/// Fails with `SingularRestriction` when a one-step map has
/// `sigma_max / sigma_min > 1 / sigma_tol`.
pub fn build_skew_evolution<T: Real>(
    p: &ProjectorSequence<T>,
    e: &EvolutionCache<T>,
    sigma_tol: f64,
) -> Result<SkewEvolution<T>> {
    p.ensure_window(e.window())?;
    let window = e.window();
    let dim = e.dim();
    let bases = kernel_bases(p)?;
    let rank = bases[0].ncols();

    let mut steps = Vec::with_capacity(window);
    let mut step_inverses = Vec::with_capacity(window);
    for n in 0..window {
        let c = bases[n + 1].transpose() * e.get(n + 1, n) * &bases[n];
        let (lo, hi) = sigma_range(&c);
        if !(lo > T::zero()) || lo < T::lit(sigma_tol) * hi {
            let condition = if lo > T::zero() { (hi / lo).as_f64() } else { f64::INFINITY };
            return Err(Error::SingularRestriction { index: n, condition });
        }
        let inv = if rank == 0 {
            c.clone()
        } else {
            c.clone().try_inverse().ok_or(Error::SingularRestriction { index: n, condition: f64::INFINITY })?
        };
        steps.push(c);
        step_inverses.push(inv);
    }

    let mut inverse_coords = TriTable::from_fn(window, |_, _| DMatrix::<T>::identity(rank, rank));
    for m in 1..=window {
        for n in 0..m {
            let next = inverse_coords.get(m - 1, n) * &step_inverses[m - 1];
            inverse_coords.set(m, n, next);
        }
    }
    let operators = TriTable::from_fn(window, |m, n| {
        if rank == 0 {
            DMatrix::zeros(dim, dim)
        } else {
            &bases[n] * inverse_coords.get(m, n) * bases[m].transpose() * p.q(m)
        }
    });
    Ok(SkewEvolution { rank, bases, steps, inverse_coords, operators })
}

/// Largest relative defect of each of the five skew-evolution identities:
///
/// 1. `A_m^n B_m^n Q_m = Q_m`
/// 2. `B_m^n A_m^n Q_n = Q_n`
/// 3. `B_m^n Q_m = Q_n B_m^n Q_m`
/// 4. `B_m^m Q_m = Q_m = Q_m B_m^m Q_m`
/// 5. `B_m^{m0} Q_m = B_n^{m0} B_m^n Q_m` for `m >= n >= m0`
///
/// Each defect is divided by `max(1, product of the factor norms)`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub residuals: [f64; 5],
    pub worst: [(usize, usize, usize); 5],
    pub pass: bool,
}

pub fn check_skew_identities<T: Real>(
    b: &SkewEvolution<T>,
    e: &EvolutionCache<T>,
    p: &ProjectorSequence<T>,
    tol: f64,
) -> Result<IdentityReport> {
    p.ensure_window(e.window())?;
    let norm = e.norm();
    let op = |x: &DMatrix<T>| norm.operator(x);
    let mut residuals = [0.0f64; 5];
    let mut worst = [(0usize, 0usize, 0usize); 5];
    let mut record = |i: usize, defect: T, scale: T, at: (usize, usize, usize)| {
        let r = (defect / fmax(T::one(), scale)).as_f64();
        if !(r <= residuals[i]) {
            residuals[i] = r;
            worst[i] = at;
        }
    };
    let window = e.window();
    for m in 0..=window {
        let qm = p.q(m);
        for n in 0..=m {
            let bmn = b.get(m, n) * qm;
            let a = e.get(m, n);
            let qn = p.q(n);

            let one = a * &bmn;
            record(0, op(&(&one - qm)), fmax(op(a) * op(&bmn), op(qm)), (m, n, n));

            let two = b.get(m, n) * a * qn;
            record(1, op(&(&two - qn)), fmax(op(b.get(m, n)) * op(a) * op(qn), op(qn)), (m, n, n));

            let three = qn * &bmn;
            record(2, op(&(&three - &bmn)), fmax(op(qn) * op(&bmn), op(&bmn)), (m, n, n));

            if m == n {
                let four = &bmn;
                let four_b = qm * four;
                let scale = fmax(op(qm) * op(four), op(qm));
                record(3, fmax(op(&(four - qm)), op(&(&four_b - qm))), scale, (m, m, m));
            }

            for m0 in 0..=n {
                let lhs = b.get(m, m0) * qm;
                let rhs = b.get(n, m0) * &bmn;
                record(4, op(&(&lhs - &rhs)), fmax(op(b.get(n, m0)) * op(&bmn), op(&lhs)), (m, n, m0));
            }
        }
    }
    let pass = residuals.iter().all(|r| *r <= tol);
    Ok(IdentityReport { residuals, worst, pass })
}
