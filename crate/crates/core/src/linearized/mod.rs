//! The linearized Boltzmann operator, its semigroup and deterministic
//! reference solvers.

mod kernel;
mod mc;
mod quadrature;
mod spectral;

pub use kernel::{
    apply_l, collision_rate, next_collision, rate_bound, sample_cosine_direction, sample_partner,
    Estimate, LQuadrature,
};
pub use mc::{semigroup_mc, BranchMode, SemigroupEstimate, SemigroupParams, DEFAULT_N_MAX};
pub use quadrature::{
    gauss_hermite, gauss_hermite_normal, gauss_laguerre, gauss_legendre, Rule, VelocityGrid,
    DEFAULT_GRID_NODES,
};
pub use spectral::{
    duhamel_series_oracle, fourier_mode_solver, OracleValue, SpectralBasis, DEFAULT_DEGREE,
    DEFAULT_SERIES_TOLERANCE,
};
