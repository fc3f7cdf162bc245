//! Iterative solvers for the indefinite Helmholtz equation on domains with
//! exterior complex scaled (ECS) absorbing layers.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: 1D ECS grids (real interior plus a complex rotated layer),
//!   their tensor products and complex-stretched (CSG) variants.
//! - [`sparse`]: compressed-row complex operators and direct factorizations.
//! - [`discretize`]: Shortley-Weller assembly of `-(Δ + φ)` with Dirichlet,
//!   first-order Sommerfeld or ECS boundaries.
//! - [`spectral`]: eigenvalue bounds, the transcendental eigenvalue condition of
//!   the 1D ECS Laplacian, the pitchfork model and a dense QR oracle.
//! - [`precond`]: complex shifted Laplacian (CSL) and complex stretched grid
//!   (CSG) preconditioner operators.
//! - [`multigrid`]: cell-centered geometric multigrid with ILU(0) or Jacobi
//!   smoothing and Galerkin coarse operators.
//! - [`krylov`]: left-preconditioned Bi-CGSTAB, IDR(s) and GMRES.
//! - [`problems`]: the MP1/MP2/MP3 model problems and mesh width limits.
//! - [`harness`]: end-to-end runs, table reproduction and shift selection.

pub mod discretize;
pub mod error;
pub mod grid;
pub mod harness;
pub mod krylov;
pub mod multigrid;
pub mod precond;
pub mod problems;
pub mod sparse;
pub mod spectral;

pub use num_complex::Complex64 as C64;

pub use discretize::{BoundaryKind, ProblemOperator};
pub use error::{Error, Result};
pub use grid::{EcsGrid1D, Edge, EdgeSet, Grid2D, Topology};
pub use krylov::{PrecondSide, SolverMethod, SolverOptions, SolverReport};
pub use multigrid::{CycleSpec, MgHierarchy};
pub use precond::ShiftSpec;
pub use problems::{ProblemId, ProblemSpec};
pub use sparse::SparseOperator;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugated inner product `sum(conj(a_i) * b_i)`.
pub(crate) fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
