//! Reference values shared by the integration suites.
#![allow(dead_code)]

use ecs_helmholtz::discretize::{EdgeConditions, Source};
use ecs_helmholtz::grid::{build_ecs_grid_1d, tensorize};
use ecs_helmholtz::precond::{build_csg, build_csl};
use ecs_helmholtz::sparse::BandLu;
use ecs_helmholtz::{EdgeSet, Topology, C64};

/// Printed MP2 mesh width limits; rows ν = 0..=10, columns k = 1..=5.
pub const MP2_LIMITS: [[f64; 5]; 11] = [
    [0.625, 0.312, 0.208, 0.156, 0.125],
    [0.360, 0.255, 0.188, 0.147, 0.120],
    [0.279, 0.221, 0.173, 0.140, 0.116],
    [0.236, 0.197, 0.161, 0.133, 0.112],
    [0.208, 0.180, 0.151, 0.127, 0.109],
    [0.188, 0.167, 0.143, 0.122, 0.105],
    [0.173, 0.156, 0.136, 0.118, 0.102],
    [0.161, 0.147, 0.130, 0.114, 0.100],
    [0.151, 0.139, 0.125, 0.110, 0.097],
    [0.143, 0.133, 0.120, 0.107, 0.095],
    [0.136, 0.127, 0.116, 0.104, 0.093],
];

/// Printed MP3 mesh width limits for k = 1..=5.
pub const MP3_LIMITS: [f64; 5] = [0.095, 0.089, 0.082, 0.075, 0.068];

/// `(ν, k)` cells whose printed value no truncation rule reproduces.
pub const MP2_TRUNCATION_MISSES: [(usize, usize); 3] = [(2, 2), (2, 4), (4, 5)];

/// Relative distance between the solutions of the CSL system with
/// `β² = e^{2iθ}` and the CSG system with scaled right-hand side, both on an
/// `n²` uniform Dirichlet grid with a point source and constant `k`.
pub fn csl_csg_gap(n: usize, k: f64, theta: f64) -> f64 {
    let g = build_ecs_grid_1d(n, 0, 0.0, 1.0, 2.0, Topology::CellCentered).unwrap();
    let grid = tensorize(g.clone(), g, EdgeSet::NONE).unwrap();
    let phi = |_: C64, _: C64| Ok(C64::new(k * k, 0.0));
    let bcs = EdgeConditions::DIRICHLET;
    let csl = build_csl(&grid, &phi, Source::Dirac, bcs, C64::from_polar(1.0, 2.0 * theta)).unwrap();
    let (csg, _) = build_csg(&grid, &phi, Source::Dirac, bcs, theta).unwrap();
    let u1 = BandLu::factor(&csl.a).unwrap().solve(&csl.b);
    let u2 = BandLu::factor(&csg.a).unwrap().solve(&csg.b);
    let num: f64 = u1.iter().zip(&u2).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = u1.iter().map(|a| a.norm_sqr()).sum();
    (num / den).sqrt()
}
