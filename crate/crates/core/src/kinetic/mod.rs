//! Phase-space densities and the kinetic equations they solve.

pub mod evolve;
pub mod field;
pub mod local;
pub mod marginal;
pub mod nonlocal;
pub mod transport;

pub use evolve::{evolve, stable_dt, Forcing, Model, Trajectory};
pub use field::{PhaseField, PhaseGrid, RHO_FLOOR};
pub use local::{collision_local, d_operator, diffusion_weight, laplacian_scalar, laplacian_x, local_dt_limit};
pub use marginal::{collision_nonlocal_averaged, f_n, SphereAverages, CIRCLE_POINTS};
pub use nonlocal::{collision_nonlocal, NonlocalWeights};
pub use transport::transport_step;
