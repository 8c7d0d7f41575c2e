//! Periodic compound-Poisson driving noise.

mod jumps;
mod partition;
mod subordinator;

pub use jumps::{JumpLaw, JumpSampler};
pub use partition::PeriodicPartition;
pub use subordinator::{SubordinatorPath, SubordinatorSpec};
