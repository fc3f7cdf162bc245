//! One-dimensional ECS grids and their tensor products.
//!
//! A 1D grid covers the real interior `[0, r_interior]` with `n` cells of
//! width `h` and continues along a complex rotated segment `[r_interior, R_z]`
//! with `m` cells of width `h_gamma = (R - r_interior) e^{i theta} / m`.
//! Nodes are stored as complex coordinates; the interior ones are real.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::{Error, Result, C64};

/// Where the unknowns of a grid live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Unknowns on the interior nodes, Dirichlet values on the end nodes.
    VertexCentered,
    /// Unknowns at cell midpoints, boundaries on the end nodes.
    CellCentered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcsGrid1D {
    /// Interior cells on `[0, r_interior]`.
    pub n: usize,
    /// Layer cells.
    pub m: usize,
    /// Real interior mesh width `r_interior / n`.
    pub h: f64,
    /// Complex layer mesh width (the last one for smoothly rotated layers).
    pub h_gamma: C64,
    /// ECS angle of the layer mesh width.
    pub theta_gamma: f64,
    pub r_interior: f64,
    /// Real endpoint of the unstretched layer.
    pub r_layer: f64,
    /// Complex endpoint `z(R)`.
    pub r_z: C64,
    pub nodes: Vec<C64>,
    pub topology: Topology,
    /// Whole-domain complex scaling applied by [`csg_rescale`] (1 otherwise).
    pub scale: C64,
}

fn check_domain(n: usize, theta: f64, r_interior: f64, r_layer: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need n >= 2 interior cells, got {n}")));
    }
    if !(0.0..FRAC_PI_4).contains(&theta) {
        return Err(Error::UnsupportedAngle {
            theta,
            range: "[0, pi/4)",
        });
    }
    if !(r_interior > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "interior length must be positive, got {r_interior}"
        )));
    }
    if !(r_layer > r_interior) {
        return Err(Error::InvalidGrid(format!(
            "layer endpoint R = {r_layer} must exceed r_interior = {r_interior}"
        )));
    }
    Ok(())
}

/// Builds a grid with a linear ECS layer on the right end.
///
/// `m = 0` gives a purely real grid on `[0, r_interior]`; `R` is then only
/// validated, not used.
pub fn build_ecs_grid_1d(
    n: usize,
    m: usize,
    theta: f64,
    r_interior: f64,
    r_layer: f64,
    topology: Topology,
) -> Result<EcsGrid1D> {
    build_smooth_ecs_grid_1d(n, m, theta, r_interior, r_layer, 1, topology)
}

/// Builds a grid whose layer rotates to `theta_final` in `steps` equal angle
/// increments. Cell `j` of the layer gets angle `theta_final * s_j / steps`
/// with `s_j = floor(j * steps / m) + 1`, so the first layer cells are rotated
/// by `theta_final / steps` and the last ones by `theta_final`.
pub fn build_smooth_ecs_grid_1d(
    n: usize,
    m: usize,
    theta_final: f64,
    r_interior: f64,
    r_layer: f64,
    steps: usize,
    topology: Topology,
) -> Result<EcsGrid1D> {
    check_domain(n, theta_final, r_interior, r_layer)?;
    if steps == 0 {
        return Err(Error::InvalidGrid("need at least one rotation step".into()));
    }
    if m > 0 && steps > m {
        return Err(Error::InvalidGrid(format!(
            "{steps} rotation steps cannot be resolved by {m} layer cells"
        )));
    }
    let h = r_interior / n as f64;
    let mut nodes = Vec::with_capacity(n + m + 1);
    for j in 0..=n {
        nodes.push(C64::new(j as f64 * h, 0.0));
    }
    let layer_len = if m > 0 { (r_layer - r_interior) / m as f64 } else { 0.0 };
    let mut z = C64::new(r_interior, 0.0);
    let mut last_width = C64::new(h, 0.0);
    for j in 0..m {
        let s = (j * steps / m + 1).min(steps);
        let angle = theta_final * s as f64 / steps as f64;
        let w = C64::from_polar(layer_len, angle);
        if steps == 1 {
            // exact linear map z = r + (x - r) e^{i theta}
            z = C64::new(r_interior, 0.0) + C64::from_polar(layer_len * (j + 1) as f64, angle);
        } else {
            z += w;
        }
        nodes.push(z);
        last_width = w;
    }
    let h_gamma = if m > 0 { last_width } else { C64::new(h, 0.0) };
    let r_z = *nodes.last().expect("grid has nodes");
    Ok(EcsGrid1D {
        n,
        m,
        h,
        h_gamma,
        theta_gamma: if m > 0 { theta_final } else { 0.0 },
        r_interior,
        r_layer,
        r_z,
        nodes,
        topology,
        scale: C64::new(1.0, 0.0),
    })
}

impl EcsGrid1D {
    /// Ratio `h_gamma / h` of the layer and interior widths.
    pub fn gamma(&self) -> C64 {
        self.h_gamma / self.h
    }

    /// Cell widths `z_{j+1} - z_j`, `n + m` of them.
    pub fn widths(&self) -> Vec<C64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn cells(&self) -> usize {
        self.n + self.m
    }

    /// Unknowns along this axis when both ends are closed by boundary nodes.
    pub fn unknowns(&self) -> usize {
        match self.topology {
            Topology::VertexCentered => self.cells() - 1,
            Topology::CellCentered => self.cells(),
        }
    }

    /// Drops every other node. Requires even `n` and `m` so that the turning
    /// point stays a node.
    pub fn coarsen(&self) -> Result<EcsGrid1D> {
        if self.n % 2 != 0 || self.m % 2 != 0 || self.n < 4 {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen grid with n = {}, m = {}",
                self.n, self.m
            )));
        }
        let nodes: Vec<C64> = self.nodes.iter().step_by(2).copied().collect();
        let h_gamma = if self.m > 0 {
            nodes[nodes.len() - 1] - nodes[nodes.len() - 2]
        } else {
            C64::new(2.0 * self.h, 0.0)
        };
        Ok(EcsGrid1D {
            n: self.n / 2,
            m: self.m / 2,
            h: 2.0 * self.h,
            h_gamma: h_gamma / self.scale,
            nodes,
            ..self.clone()
        })
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            n: self.n,
            m: self.m,
            theta_gamma: self.theta_gamma,
            r_z: [self.r_z.re, self.r_z.im],
            topology: self.topology,
        }
    }
}

/// JSON-friendly description of a 1D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub m: usize,
    pub theta_gamma: f64,
    /// `[re, im]` of the complex endpoint.
    pub r_z: [f64; 2],
    pub topology: Topology,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    North,
    East,
    South,
    West,
}

/// Edges of a rectangle that carry an ECS layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    pub north: bool,
    pub east: bool,
    pub south: bool,
    pub west: bool,
}

impl EdgeSet {
    pub const NONE: EdgeSet = EdgeSet {
        north: false,
        east: false,
        south: false,
        west: false,
    };
    pub const ALL: EdgeSet = EdgeSet {
        north: true,
        east: true,
        south: true,
        west: true,
    };
    pub const NORTH_EAST: EdgeSet = EdgeSet {
        north: true,
        east: true,
        south: false,
        west: false,
    };

    pub fn contains(&self, edge: Edge) -> bool {
        match edge {
            Edge::North => self.north,
            Edge::East => self.east,
            Edge::South => self.south,
            Edge::West => self.west,
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Tensor product of two 1D grids. Layers are attached per edge; a layer on
/// the west (south) edge mirrors the layer of `gx` (`gy`).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub gx: EcsGrid1D,
    pub gy: EcsGrid1D,
    pub layer_edges: EdgeSet,
}

pub fn tensorize(gx: EcsGrid1D, gy: EcsGrid1D, layer_edges: EdgeSet) -> Result<Grid2D> {
    if gx.topology != gy.topology {
        return Err(Error::TopologyMismatch {
            x: gx.topology,
            y: gy.topology,
        });
    }
    Ok(Grid2D { gx, gy, layer_edges })
}

impl Grid2D {
    pub fn topology(&self) -> Topology {
        self.gx.topology
    }

    fn axis_parts(&self, axis: Axis) -> (&EcsGrid1D, bool, bool) {
        match axis {
            Axis::X => (&self.gx, self.layer_edges.west, self.layer_edges.east),
            Axis::Y => (&self.gy, self.layer_edges.south, self.layer_edges.north),
        }
    }

    /// Cell widths along one axis, low edge first.
    pub fn axis_widths(&self, axis: Axis) -> Vec<C64> {
        let (g, low, high) = self.axis_parts(axis);
        let w = g.widths();
        let (interior, layer) = w.split_at(g.n);
        let mut out = Vec::with_capacity(g.n + 2 * g.m);
        if low {
            out.extend(layer.iter().rev());
        }
        out.extend_from_slice(interior);
        if high {
            out.extend_from_slice(layer);
        }
        out
    }

    /// Node coordinates along one axis. The interior starts at `z = 0`; a low
    /// layer extends to negative (complex) coordinates.
    pub fn axis_nodes(&self, axis: Axis) -> Vec<C64> {
        let (g, low, _) = self.axis_parts(axis);
        let widths = self.axis_widths(axis);
        let start: C64 = if low {
            -widths[..g.m].iter().sum::<C64>()
        } else {
            C64::new(0.0, 0.0)
        };
        let mut nodes = Vec::with_capacity(widths.len() + 1);
        let mut z = start;
        nodes.push(z);
        for w in &widths {
            z += w;
            nodes.push(z);
        }
        nodes
    }

    /// Cells along one axis.
    pub fn axis_cells(&self, axis: Axis) -> usize {
        let (g, low, high) = self.axis_parts(axis);
        g.n + g.m * (low as usize + high as usize)
    }

    /// Unknowns along one axis.
    pub fn axis_unknowns(&self, axis: Axis) -> usize {
        match self.topology() {
            Topology::CellCentered => self.axis_cells(axis),
            Topology::VertexCentered => self.axis_cells(axis) - 1,
        }
    }

    /// Coordinates of the unknowns along one axis.
    pub fn axis_points(&self, axis: Axis) -> Vec<C64> {
        let nodes = self.axis_nodes(axis);
        match self.topology() {
            Topology::CellCentered => nodes.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect(),
            Topology::VertexCentered => nodes[1..nodes.len() - 1].to_vec(),
        }
    }

    pub fn unknowns(&self) -> usize {
        self.axis_unknowns(Axis::X) * self.axis_unknowns(Axis::Y)
    }

    /// Lexicographic index, x fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.axis_unknowns(Axis::X) + ix
    }

    /// Index range of the interior (non-layer) cells along one axis.
    pub fn interior_range(&self, axis: Axis) -> std::ops::Range<usize> {
        let (g, low, _) = self.axis_parts(axis);
        let start = if low { g.m } else { 0 };
        start..start + g.n
    }

    pub fn coarsen(&self) -> Result<Grid2D> {
        tensorize(self.gx.coarsen()?, self.gy.coarsen()?, self.layer_edges)
    }
}

/// Types that can be complex stretched as a whole.
pub trait CsgRescale: Sized {
    fn rescaled(&self, beta: C64) -> Self;
}

impl CsgRescale for EcsGrid1D {
    fn rescaled(&self, beta: C64) -> Self {
        EcsGrid1D {
            nodes: self.nodes.iter().map(|z| z * beta).collect(),
            r_z: self.r_z * beta,
            h_gamma: self.h_gamma,
            scale: self.scale * beta,
            ..self.clone()
        }
    }
}

impl CsgRescale for Grid2D {
    fn rescaled(&self, beta: C64) -> Self {
        Grid2D {
            gx: self.gx.rescaled(beta),
            gy: self.gy.rescaled(beta),
            layer_edges: self.layer_edges,
        }
    }
}

/// Multiplies every mesh width, interior and layer, by `e^{i theta_beta}`.
pub fn csg_rescale<G: CsgRescale>(grid: &G, theta_beta: f64) -> Result<G> {
    if !(theta_beta.abs() < FRAC_PI_4) {
        return Err(Error::UnsupportedAngle {
            theta: theta_beta,
            range: "(-pi/4, pi/4)",
        });
    }
    Ok(grid.rescaled(C64::from_polar(1.0, theta_beta)))
}
