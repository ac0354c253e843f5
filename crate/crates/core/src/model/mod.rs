//! System model: evolution cocycle, projector sequences and the
//! skew-evolution operator on their kernels.

pub mod evolution;
pub mod gain;
pub mod linalg;
pub mod projector;
pub mod rate;
pub mod skew;
pub mod split;

pub use evolution::{build_evolution, CocycleReport, EvolutionCache, LinearSystem};
pub use gain::{evolution_gain, restricted_gain, Gain, GainMode, Method};
pub use linalg::{range_basis, TriTable, VectorNorm};
pub use projector::{
    check_invariance, check_projectors, check_strong_invariance, InvarianceReport, ProjectorReport,
    ProjectorSequence, StrongInvarianceReport,
};
pub use rate::{validate_growth_rate, GrowthRate, LimitCheck, RateKind};
pub use skew::{build_skew_evolution, check_skew_identities, IdentityReport, SkewEvolution};
pub use split::SplitSystem;
