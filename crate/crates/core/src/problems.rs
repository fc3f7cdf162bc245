//! The three model problems `-(Δ + φ) u = χ` on `(0, r)²`, their accuracy
//! driven mesh width limits, and grid size suggestions.
//!
//! | id  | φ                                   | χ                  | r        |
//! |-----|-------------------------------------|--------------------|----------|
//! | MP1 | `k²`                                | point source       | 1        |
//! | MP2 | `ν(e^{-x²} + e^{-y²}) + k²`         | `e^{-(x²+y²)}`     | 50       |
//! | MP3 | `1/x + 1/y + k²`                    | `e^{-(x²+y²)}`     | 50..200  |
//!
//! MP1 closes all four edges with the absorbing condition; MP2 and MP3 keep
//! homogeneous Dirichlet on the south and west edges.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_6;
use std::fmt;

use crate::discretize::{assemble_2d, EdgeConditions, Source};
use crate::grid::{build_ecs_grid_1d, tensorize, EdgeSet};
use crate::multigrid::check_coarsenable;
use crate::precond::build_preconditioner;
use crate::{Error, Grid2D, ProblemOperator, Result, ShiftSpec, Topology, C64};

/// `k h < 0.625` accuracy condition.
pub const KH_MAX: f64 = 0.625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Mp1,
    Mp2,
    Mp3,
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemId::Mp1 => "mp1",
            ProblemId::Mp2 => "mp2",
            ProblemId::Mp3 => "mp3",
        })
    }
}

impl std::str::FromStr for ProblemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mp1" => Ok(ProblemId::Mp1),
            "mp2" => Ok(ProblemId::Mp2),
            "mp3" => Ok(ProblemId::Mp3),
            _ => Err(Error::InvalidParameter(format!("unknown problem {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcChoice {
    Sommerfeld,
    Ecs,
}

impl fmt::Display for BcChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcChoice::Sommerfeld => "sommerfeld",
            BcChoice::Ecs => "ecs",
        })
    }
}

/// Parameters of [`make_problem`]. Unused ones are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Wave number; a small negative imaginary part damps it.
    pub k: C64,
    pub nu: f64,
    /// Domain edge for MP3.
    pub r: f64,
    pub bc: BcChoice,
    pub theta_gamma: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            k: C64::new(1.0, 0.0),
            nu: 0.0,
            r: 90.0,
            bc: BcChoice::Ecs,
            theta_gamma: FRAC_PI_6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub k: C64,
    pub nu: f64,
    pub r: f64,
    pub bc: BcChoice,
    pub theta_gamma: f64,
}

/// Builds a model problem. Parameters outside the documented ranges are
/// accepted with a warning.
pub fn make_problem(id: ProblemId, p: ProblemParams) -> Result<ProblemSpec> {
    if !(p.k.re.is_finite() && p.k.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("k = {}", p.k)));
    }
    let r = match id {
        ProblemId::Mp1 => 1.0,
        ProblemId::Mp2 => 50.0,
        ProblemId::Mp3 => p.r,
    };
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r = {r}")));
    }
    let k = p.k.re;
    match id {
        ProblemId::Mp2 if !(k > 0.0 && k < 5.0 && p.nu > 0.0 && p.nu < 10.0) => {
            log::warn!("MP2 parameters k = {k}, nu = {} outside 0<k<5, 0<nu<10", p.nu)
        }
        ProblemId::Mp3 if !(k > 0.0 && k < 5.0 && r > 50.0 && r < 200.0) => {
            log::warn!("MP3 parameters k = {k}, r = {r} outside 0<k<5, 50<r<200")
        }
        _ => {}
    }
    Ok(ProblemSpec {
        id,
        k: p.k,
        nu: p.nu,
        r,
        bc: p.bc,
        theta_gamma: p.theta_gamma,
    })
}

/// A discretized model problem.
#[derive(Debug, Clone)]
pub struct Discrete {
    pub spec: ProblemSpec,
    pub grid: Grid2D,
    pub bcs: EdgeConditions,
    pub op: ProblemOperator,
}

impl ProblemSpec {
    pub fn mp1(k: f64, bc: BcChoice) -> Self {
        make_problem(
            ProblemId::Mp1,
            ProblemParams {
                k: C64::new(k, 0.0),
                bc,
                ..ProblemParams::default()
            },
        )
        .expect("finite k")
    }

    pub fn mp2(nu: f64, k: f64, bc: BcChoice) -> Self {
        make_problem(
            ProblemId::Mp2,
            ProblemParams {
                k: C64::new(k, 0.0),
                nu,
                bc,
                ..ProblemParams::default()
            },
        )
        .expect("finite k")
    }

    pub fn mp3(r: f64, k: f64, bc: BcChoice) -> Self {
        make_problem(
            ProblemId::Mp3,
            ProblemParams {
                k: C64::new(k, 0.0),
                r,
                bc,
                ..ProblemParams::default()
            },
        )
        .expect("finite k")
    }

    pub fn phi(&self, x: C64, y: C64) -> Result<C64> {
        let k2 = self.k * self.k;
        match self.id {
            ProblemId::Mp1 => Ok(k2),
            ProblemId::Mp2 => Ok(self.nu * ((-x * x).exp() + (-y * y).exp()) + k2),
            ProblemId::Mp3 => {
                if x.re == 0.0 || y.re == 0.0 {
                    let z = if x.re == 0.0 { x } else { y };
                    return Err(Error::SingularField { re: z.re, im: z.im });
                }
                Ok(1.0 / x + 1.0 / y + k2)
            }
        }
    }

    /// Source term; MP1 has a point source and returns `None`.
    pub fn chi(&self, x: C64, y: C64) -> Option<C64> {
        match self.id {
            ProblemId::Mp1 => None,
            ProblemId::Mp2 | ProblemId::Mp3 => Some((-(x * x + y * y)).exp()),
        }
    }

    /// Edges that carry a layer in the ECS formulation.
    pub fn layer_edges(&self) -> EdgeSet {
        match (self.bc, self.id) {
            (BcChoice::Sommerfeld, _) => EdgeSet::NONE,
            (BcChoice::Ecs, ProblemId::Mp1) => EdgeSet::ALL,
            (BcChoice::Ecs, _) => EdgeSet::NORTH_EAST,
        }
    }

    /// Closures on the edges without a layer.
    pub fn edge_conditions(&self) -> EdgeConditions {
        match self.id {
            ProblemId::Mp1 => EdgeConditions::SOMMERFELD,
            _ => EdgeConditions::RADIAL_SOMMERFELD,
        }
    }

    /// Interior cells and layer cells per absorbing edge used in the tables.
    pub fn table_grid(&self) -> (usize, usize) {
        match self.id {
            ProblemId::Mp1 => (256, 64),
            ProblemId::Mp2 => (384, 128),
            ProblemId::Mp3 => match suggest_grid(self) {
                Ok(s) => (s.n, s.layer),
                Err(_) => (1024, 256),
            },
        }
    }

    /// Cell-centered grid with `n` interior cells and `layer` cells of the
    /// interior width on each absorbing edge (ignored for Sommerfeld).
    pub fn grid(&self, n: usize, layer: usize) -> Result<Grid2D> {
        let h = self.r / n as f64;
        let m = if self.bc == BcChoice::Ecs { layer } else { 0 };
        let theta = if m > 0 { self.theta_gamma } else { 0.0 };
        let g = build_ecs_grid_1d(
            n,
            m,
            theta,
            self.r,
            self.r + m.max(1) as f64 * h,
            Topology::CellCentered,
        )?;
        tensorize(g.clone(), g, self.layer_edges())
    }

    pub fn discretize(&self, n: usize, layer: usize) -> Result<Discrete> {
        let grid = self.grid(n, layer)?;
        let bcs = self.edge_conditions();
        let phi = |x: C64, y: C64| self.phi(x, y);
        let chi = |x: C64, y: C64| Ok(self.chi(x, y).unwrap_or_default());
        let source = match self.id {
            ProblemId::Mp1 => Source::Dirac,
            _ => Source::Field(&chi),
        };
        let op = assemble_2d(&grid, &phi, source, bcs)?;
        Ok(Discrete {
            spec: *self,
            grid,
            bcs,
            op,
        })
    }
}

impl Discrete {
    /// Preconditioner operator on the same grid and boundary closures.
    pub fn preconditioner(&self, shift: &ShiftSpec) -> Result<ProblemOperator> {
        self.preconditioner_on(&self.grid, shift)
    }

    /// As [`Discrete::preconditioner`] on another (e.g. coarsened) grid.
    pub fn preconditioner_on(&self, grid: &Grid2D, shift: &ShiftSpec) -> Result<ProblemOperator> {
        let phi = |x: C64, y: C64| self.spec.phi(x, y);
        build_preconditioner(grid, &phi, Source::Zero, self.bcs, shift)
    }
}

/// Largest mesh width for MP2: `0.625 / sqrt(2ν + k²)`, the supremum of `φ`
/// being attained at the origin.
pub fn mesh_limit_mp2(nu: f64, k: f64) -> f64 {
    KH_MAX / (2.0 * nu + k * k).sqrt()
}

/// Largest mesh width for MP3: `φ` at the first cell centre `(h/2, h/2)`
/// gives `k²h² + 4h = 0.625²`.
pub fn mesh_limit_mp3(k: f64) -> f64 {
    let c = KH_MAX * KH_MAX;
    if k == 0.0 {
        return c / 4.0;
    }
    (-4.0 + (16.0 + 4.0 * c * k * k).sqrt()) / (2.0 * k * k)
}

/// Truncation to three decimals, the printing rule of the limit tables.
pub fn truncate_3(x: f64) -> f64 {
    (x * 1000.0 + 1e-9).floor() / 1000.0
}

/// Mesh width limit of a problem, truncated to three decimals.
pub fn mesh_limit(spec: &ProblemSpec) -> f64 {
    let k = spec.k.re;
    match spec.id {
        ProblemId::Mp1 => truncate_3(KH_MAX / k),
        ProblemId::Mp2 => truncate_3(mesh_limit_mp2(spec.nu, k)),
        ProblemId::Mp3 => truncate_3(mesh_limit_mp3(k)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSuggestion {
    pub h_max: f64,
    /// `ceil(r / h_max)`.
    pub minimum: usize,
    /// Interior cells per axis.
    pub n: usize,
    /// Layer cells per absorbing edge.
    pub layer: usize,
}

fn is_mg_size(n: usize) -> bool {
    check_coarsenable(n).is_ok()
}

/// Smallest `L 2^p` (`L ∈ {1,3,5,7}`) at or above `n`.
pub fn next_mg_size(n: usize) -> usize {
    (n.max(1)..).find(|&s| is_mg_size(s)).expect("sizes are unbounded")
}

/// Smallest multigrid size resolving the mesh limit, and the smallest layer
/// of at least a quarter of it that keeps the full axis coarsenable.
pub fn suggest_grid(spec: &ProblemSpec) -> Result<GridSuggestion> {
    let h_max = mesh_limit(spec);
    if !(h_max > 0.0) {
        return Err(Error::InvalidParameter(format!("mesh limit {h_max}")));
    }
    let minimum = (spec.r / h_max - 1e-9).ceil() as usize;
    let n = next_mg_size(minimum);
    let sides = match spec.id {
        ProblemId::Mp1 => 2,
        _ => 1,
    };
    let mut layer = n.div_ceil(4);
    while !is_mg_size(n + sides * layer) {
        layer += 1;
    }
    Ok(GridSuggestion {
        h_max,
        minimum,
        n,
        layer,
    })
}
