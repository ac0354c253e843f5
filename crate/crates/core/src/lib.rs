//! Nonuniform (h,k)-dichotomy and (h,k)-growth analysis for discrete-time
//! linear systems `x_{n+1} = A_n x_n` on a finite window.
//!
//! The numeric core is generic over [`Real`]; `*64` and `*32` aliases fix
//! the scalar type.

// Negated comparisons are deliberate: they treat NaN as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the (m, n) notation of the conditions.
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod dichotomy;
pub mod error;
pub mod estimate;
pub mod model;
pub mod norms;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use estimate::{ConditionEstimate, ConditionId, Verdict};
pub use model::{
    build_evolution, EvolutionCache, GrowthRate, LinearSystem, ProjectorSequence, RateKind, SplitSystem, VectorNorm,
};
pub use scalar::Real;

pub type LinearSystem64 = LinearSystem<f64>;
pub type LinearSystem32 = LinearSystem<f32>;
pub type ProjectorSequence64 = ProjectorSequence<f64>;
pub type ProjectorSequence32 = ProjectorSequence<f32>;
pub type GrowthRate64 = GrowthRate<f64>;
pub type GrowthRate32 = GrowthRate<f32>;
pub type SplitSystem64 = SplitSystem<f64>;
pub type SplitSystem32 = SplitSystem<f32>;
