//! Shortley-Weller assembly of the Helmholtz operator `-(Δ + φ)`.
//!
//! Boundaries are eliminated: Dirichlet values are not stored, and a
//! first-order Sommerfeld edge is closed through a mirrored ghost cell. On ECS
//! layers `φ` and `χ` are evaluated at the complex node coordinates by direct
//! substitution into their formulas.

use serde::{Deserialize, Serialize};

use crate::grid::{Axis, EcsGrid1D, Grid2D, Topology};
use crate::{Error, Result, SparseOperator, C64, I};

/// Closure applied on an edge without an ECS layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeBc {
    Dirichlet,
    Sommerfeld,
}

/// Summary of how the outer boundary is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Dirichlet,
    Sommerfeld,
    EcsLayers,
}

/// Per-edge closures for the edges that carry no layer. Layer edges always
/// end in a homogeneous Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeConditions {
    pub north: EdgeBc,
    pub east: EdgeBc,
    pub south: EdgeBc,
    pub west: EdgeBc,
}

impl EdgeConditions {
    pub const DIRICHLET: EdgeConditions = EdgeConditions {
        north: EdgeBc::Dirichlet,
        east: EdgeBc::Dirichlet,
        south: EdgeBc::Dirichlet,
        west: EdgeBc::Dirichlet,
    };

    pub const SOMMERFELD: EdgeConditions = EdgeConditions {
        north: EdgeBc::Sommerfeld,
        east: EdgeBc::Sommerfeld,
        south: EdgeBc::Sommerfeld,
        west: EdgeBc::Sommerfeld,
    };

    /// Dirichlet south/west, Sommerfeld north/east.
    pub const RADIAL_SOMMERFELD: EdgeConditions = EdgeConditions {
        north: EdgeBc::Sommerfeld,
        east: EdgeBc::Sommerfeld,
        south: EdgeBc::Dirichlet,
        west: EdgeBc::Dirichlet,
    };
}

#[derive(Debug, Clone)]
pub enum GridRef {
    OneD(EcsGrid1D),
    TwoD(Grid2D),
}

/// A discrete Helmholtz system `A u = b`.
#[derive(Debug, Clone)]
pub struct ProblemOperator {
    /// Discrete `-(Δ + φ)`.
    pub a: SparseOperator,
    pub b: Vec<C64>,
    pub grid: GridRef,
    pub bc_kind: BoundaryKind,
}

/// Field evaluated at complex coordinates `(x, y)`.
pub type Field<'a> = &'a dyn Fn(C64, C64) -> Result<C64>;

/// Right-hand side of a 2D assembly.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    Zero,
    /// Value 1 at the unknown nearest to the centre of the interior region.
    Dirac,
    Field(Field<'a>),
}

/// Shortley-Weller weights for `d²u/dz²` at a node with left width `h_left`
/// and right width `h_right`.
pub fn shortley_weller_coeffs(h_left: C64, h_right: C64) -> Result<(C64, C64, C64)> {
    let zero = C64::new(0.0, 0.0);
    if h_left == zero || h_right == zero || h_left + h_right == zero {
        return Err(Error::ZeroMeshWidth);
    }
    let sum = h_left + h_right;
    let cl = 2.0 / (h_left * sum);
    let cr = 2.0 / (h_right * sum);
    Ok((cl, -(cl + cr), cr))
}

/// Ghost elimination for `∂u/∂n = -i k u` on a cell-centered edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SommerfeldClosure {
    /// `u_ghost = ghost_factor * u_last`.
    pub ghost_factor: C64,
}

impl SommerfeldClosure {
    /// Term added to the diagonal of `d²/dz²` when the ghost neighbour has
    /// weight `ghost_weight`.
    pub fn diagonal_correction(&self, ghost_weight: C64) -> C64 {
        ghost_weight * self.ghost_factor
    }
}

/// Solves `(u_g - u_l)/h = -i k (u_g + u_l)/2` for the ghost value.
pub fn sommerfeld_closure(h_edge: C64, k_local: C64) -> Result<SommerfeldClosure> {
    let half = I * k_local * h_edge * 0.5;
    let den = C64::new(1.0, 0.0) + half;
    if den.norm() < 1e-300 {
        return Err(Error::InvalidParameter("Sommerfeld closure: 1 + ikh/2 vanishes".into()));
    }
    Ok(SommerfeldClosure {
        ghost_factor: (C64::new(1.0, 0.0) - half) / den,
    })
}

/// Boundary neighbour of the first or last unknown along an axis.
#[derive(Debug, Clone, Copy)]
enum EndClosure {
    Dirichlet,
    /// Ghost cell with the given weight in the stencil and distance to the
    /// last unknown.
    Ghost {
        weight: C64,
        distance: C64,
    },
}

/// Tridiagonal `d²/dz²` weights along one axis after boundary elimination.
struct AxisStencil {
    coeffs: Vec<(C64, C64, C64)>,
    low: EndClosure,
    high: EndClosure,
    points: Vec<C64>,
    /// Boundary face coordinates.
    low_face: C64,
    high_face: C64,
}

fn axis_stencil(nodes: &[C64], topology: Topology, low: EdgeBc, high: EdgeBc) -> Result<AxisStencil> {
    let cells = nodes.len() - 1;
    // coordinates of the stencil points including the two boundary points
    let (points, lo_pt, hi_pt) = match topology {
        Topology::VertexCentered => {
            if low == EdgeBc::Sommerfeld || high == EdgeBc::Sommerfeld {
                return Err(Error::InvalidParameter(
                    "Sommerfeld closure needs a cell-centered grid".into(),
                ));
            }
            (nodes[1..cells].to_vec(), nodes[0], nodes[cells])
        }
        Topology::CellCentered => {
            let centers: Vec<C64> = nodes.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
            let w0 = nodes[1] - nodes[0];
            let wn = nodes[cells] - nodes[cells - 1];
            let lo = match low {
                EdgeBc::Dirichlet => nodes[0],
                EdgeBc::Sommerfeld => centers[0] - w0,
            };
            let hi = match high {
                EdgeBc::Dirichlet => nodes[cells],
                EdgeBc::Sommerfeld => centers[cells - 1] + wn,
            };
            (centers, lo, hi)
        }
    };
    let n = points.len();
    let mut coeffs = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { lo_pt } else { points[i - 1] };
        let right = if i + 1 == n { hi_pt } else { points[i + 1] };
        coeffs.push(shortley_weller_coeffs(points[i] - left, right - points[i])?);
    }
    let low_c = match low {
        EdgeBc::Dirichlet => EndClosure::Dirichlet,
        EdgeBc::Sommerfeld => EndClosure::Ghost {
            weight: coeffs[0].0,
            distance: points[0] - lo_pt,
        },
    };
    let high_c = match high {
        EdgeBc::Dirichlet => EndClosure::Dirichlet,
        EdgeBc::Sommerfeld => EndClosure::Ghost {
            weight: coeffs[n - 1].2,
            distance: hi_pt - points[n - 1],
        },
    };
    Ok(AxisStencil {
        coeffs,
        low: low_c,
        high: high_c,
        points,
        low_face: nodes[0],
        high_face: nodes[cells],
    })
}

fn eval(phi: Field<'_>, x: C64, y: C64) -> Result<C64> {
    let v = phi(x, y)?;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::SingularField { re: x.re, im: x.im });
    }
    Ok(v)
}

fn ghost_term(end: EndClosure, phi: Field<'_>, x: C64, y: C64) -> Result<C64> {
    match end {
        EndClosure::Dirichlet => Ok(C64::new(0.0, 0.0)),
        EndClosure::Ghost { weight, distance } => {
            let k = eval(phi, x, y)?.sqrt();
            Ok(sommerfeld_closure(distance, k)?.diagonal_correction(weight))
        }
    }
}

/// Assembles `-(d²/dz² + k²)` on a vertex-centered 1D grid with Dirichlet
/// ends. The right-hand side is zero.
pub fn assemble_1d(grid: &EcsGrid1D, k: f64) -> Result<ProblemOperator> {
    if grid.topology != Topology::VertexCentered {
        return Err(Error::InvalidGrid("1D assembly expects a vertex-centered grid".into()));
    }
    let st = axis_stencil(&grid.nodes, grid.topology, EdgeBc::Dirichlet, EdgeBc::Dirichlet)?;
    let n = st.coeffs.len();
    let k2 = C64::new(k * k, 0.0);
    let mut t = Vec::with_capacity(3 * n);
    for (i, &(cl, cc, cr)) in st.coeffs.iter().enumerate() {
        if i > 0 {
            t.push((i, i - 1, -cl));
        }
        t.push((i, i, -cc - k2));
        if i + 1 < n {
            t.push((i, i + 1, -cr));
        }
    }
    Ok(ProblemOperator {
        a: SparseOperator::from_triplets(n, n, &t),
        b: vec![C64::new(0.0, 0.0); n],
        grid: GridRef::OneD(grid.clone()),
        bc_kind: if grid.m > 0 {
            BoundaryKind::EcsLayers
        } else {
            BoundaryKind::Dirichlet
        },
    })
}

/// Assembles `-(Δ + φ) u = χ` on a 2D grid, unknowns ordered x fastest.
pub fn assemble_2d(grid: &Grid2D, phi: Field<'_>, source: Source<'_>, bcs: EdgeConditions) -> Result<ProblemOperator> {
    let edges = grid.layer_edges;
    let pick = |layer: bool, bc: EdgeBc| if layer { EdgeBc::Dirichlet } else { bc };
    let west = pick(edges.west, bcs.west);
    let east = pick(edges.east, bcs.east);
    let south = pick(edges.south, bcs.south);
    let north = pick(edges.north, bcs.north);
    let topo = grid.topology();
    let sx = axis_stencil(&grid.axis_nodes(Axis::X), topo, west, east)?;
    let sy = axis_stencil(&grid.axis_nodes(Axis::Y), topo, south, north)?;
    let nx = sx.points.len();
    let ny = sy.points.len();
    let dim = nx * ny;

    let mut t = Vec::with_capacity(5 * dim);
    for iy in 0..ny {
        let y = sy.points[iy];
        let (yl, yc, yr) = sy.coeffs[iy];
        for ix in 0..nx {
            let x = sx.points[ix];
            let (xl, xc, xr) = sx.coeffs[ix];
            let row = iy * nx + ix;
            let mut diag = xc + yc + eval(phi, x, y)?;
            if ix == 0 {
                diag += ghost_term(sx.low, phi, sx.low_face, y)?;
            } else {
                t.push((row, row - 1, -xl));
            }
            if ix + 1 == nx {
                diag += ghost_term(sx.high, phi, sx.high_face, y)?;
            } else {
                t.push((row, row + 1, -xr));
            }
            if iy == 0 {
                diag += ghost_term(sy.low, phi, x, sy.low_face)?;
            } else {
                t.push((row, row - nx, -yl));
            }
            if iy + 1 == ny {
                diag += ghost_term(sy.high, phi, x, sy.high_face)?;
            } else {
                t.push((row, row + nx, -yr));
            }
            t.push((row, row, -diag));
        }
    }
    let mut a = SparseOperator::from_triplets(dim, dim, &t);
    a.symmetry_hint = crate::sparse::SymmetryHint::Structural;

    let mut b = vec![C64::new(0.0, 0.0); dim];
    match source {
        Source::Zero => {}
        Source::Dirac => {
            let ix = center_index(grid.interior_range(Axis::X), topo);
            let iy = center_index(grid.interior_range(Axis::Y), topo);
            b[iy * nx + ix] = C64::new(1.0, 0.0);
        }
        Source::Field(chi) => {
            for iy in 0..ny {
                for ix in 0..nx {
                    b[iy * nx + ix] = eval(chi, sx.points[ix], sy.points[iy])?;
                }
            }
        }
    }

    let bc_kind = if !edges.is_empty() {
        BoundaryKind::EcsLayers
    } else if [north, east, south, west].contains(&EdgeBc::Sommerfeld) {
        BoundaryKind::Sommerfeld
    } else {
        BoundaryKind::Dirichlet
    };
    Ok(ProblemOperator {
        a,
        b,
        grid: GridRef::TwoD(grid.clone()),
        bc_kind,
    })
}

/// Unknown nearest to the middle of the interior, ties to the lower index.
fn center_index(interior: std::ops::Range<usize>, topology: Topology) -> usize {
    let n = interior.end - interior.start;
    match topology {
        Topology::CellCentered => interior.start + (n - 1) / 2,
        // interior node j sits at unknown j - 1
        Topology::VertexCentered => interior.start + n / 2 - 1,
    }
}
