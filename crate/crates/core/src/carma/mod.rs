//! CARMA(p, q) state-space model and path simulation.

mod expm;
mod model;
mod roots;
mod simulate;

pub use expm::matrix_exp;
pub use model::{CarmaModel, Stability, COMMON_ROOT_TOL};
pub use roots::{coefficients_from_roots, monic_roots};
pub use simulate::{
    sample_grid, simulate_euler, simulate_exact, DriftIntegral, Provenance, StateTrajectory,
};
