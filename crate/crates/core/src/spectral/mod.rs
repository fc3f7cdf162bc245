//! Spectrum of the 1D ECS Laplacian `-L_h`.
//!
//! * [`gershgorin_bounds`]: rectangle containing the h²-scaled eigenvalues.
//! * [`eigen_condition_f`] and [`newton_solve_eigs`]: the transcendental
//!   eigenvalue condition for a grid with a single right layer and its roots.
//! * [`pitchfork_model`]: the three-region approximation of the spectrum.
//! * [`fractional_map`]: image of an eigenvalue under CSL preconditioning.
//! * [`dense_eigensolve_oracle`]: Hessenberg + shifted QR, for validation.

mod bounds;
mod condition;
mod model;
mod oracle;

pub use bounds::{gershgorin_bounds, BoundsBox};
pub use condition::{
    default_seeds, eigen_condition_f, lattice_seeds, newton_solve_eigs, EigenConditionEval, NewtonRoots,
};
pub use model::{fractional_map, pitchfork_model, SpectrumModel, DEFAULT_RHO0};
pub use oracle::{dense_eigensolve_oracle, eigenpair_residual, ORACLE_MAX_DIM};
