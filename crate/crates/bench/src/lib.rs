//! Fixtures shared by the criterion benches in `benches/`.

use ecs_helmholtz::harness::build_hierarchy;
use ecs_helmholtz::problems::{BcChoice, Discrete, ProblemSpec};
use ecs_helmholtz::{CycleSpec, MgHierarchy, ShiftSpec};

/// MP1 with ECS layers at `k = 0.625 n`, the finest wave number the grid
/// resolves.
pub fn mp1_ecs(n: usize) -> Discrete {
    ProblemSpec::mp1(0.625 * n as f64, BcChoice::Ecs)
        .discretize(n, n / 4)
        .expect("valid grid")
}

/// Hierarchy of the CSG preconditioner used in the MP1 tables.
pub fn csg_hierarchy(d: &Discrete) -> (MgHierarchy, ShiftSpec) {
    let shift = ShiftSpec::csg_from_denominator(28.0).expect("valid angle");
    let h = build_hierarchy(d, &shift, &CycleSpec::default()).expect("coarsenable grid");
    (h, shift)
}
