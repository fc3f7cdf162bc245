//! Geometric multigrid on cell-centered 2D grids.
//!
//! Levels coarsen 2:1 per axis until an axis is odd or both have at most 8
//! cells; the coarsest level is solved by a banded LU. Coarse operators are
//! Galerkin products `R A P` by default, or rediscretizations on the
//! coarsened composite grid (ECS layer cells coarsen like interior ones).

mod smoother;
mod transfer;

pub use smoother::{ilu0_factor, ilu0_sweep, inverse_diagonal, jacobi_sweep, Ilu0};
pub use transfer::{
    bilinear_prolongation, fourpoint_restriction, fw_restriction, prolong_bilinear, restrict_fourpoint, restrict_fw,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::sparse::BandLu;
use crate::{norm2, Error, Grid2D, Result, SparseOperator, C64};

/// Largest per-axis size solved directly.
pub const COARSEST_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleKind {
    V,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherKind {
    Ilu0,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestrictionKind {
    Fw,
    FourPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseOperator {
    /// Galerkin `R A P`.
    Galerkin,
    /// Rediscretization on the coarse grid.
    Direct,
}

/// Cycle configuration, written as e.g. `V(0,1)-ilu0-fw-bilin-gcg` or
/// `F(1,2)-ilu0(0.3)-fw-bilin-gcg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub kind: CycleKind,
    pub nu1: usize,
    pub nu2: usize,
    pub smoother: SmootherKind,
    pub omega: f64,
    pub restriction: RestrictionKind,
    pub coarse: CoarseOperator,
    /// Cap on the number of levels; `None` coarsens down to `COARSEST_MAX`.
    #[serde(default)]
    pub max_levels: Option<usize>,
}

impl Default for CycleSpec {
    fn default() -> Self {
        CycleSpec {
            kind: CycleKind::V,
            nu1: 0,
            nu2: 1,
            smoother: SmootherKind::Ilu0,
            omega: 1.0,
            restriction: RestrictionKind::Fw,
            coarse: CoarseOperator::Galerkin,
            max_levels: None,
        }
    }
}

impl SmootherKind {
    fn default_omega(self) -> f64 {
        match self {
            SmootherKind::Ilu0 => 1.0,
            SmootherKind::Jacobi => 0.5,
        }
    }
}

impl fmt::Display for CycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            CycleKind::V => "V",
            CycleKind::F => "F",
        };
        let sm = match self.smoother {
            SmootherKind::Ilu0 => "ilu0",
            SmootherKind::Jacobi => "jac",
        };
        write!(f, "{kind}({},{})-{sm}", self.nu1, self.nu2)?;
        if self.omega != self.smoother.default_omega() {
            write!(f, "({})", self.omega)?;
        }
        let r = match self.restriction {
            RestrictionKind::Fw => "fw",
            RestrictionKind::FourPoint => "fp",
        };
        let c = match self.coarse {
            CoarseOperator::Galerkin => "gcg",
            CoarseOperator::Direct => "dcg",
        };
        write!(f, "-{r}-bilin-{c}")?;
        if let Some(l) = self.max_levels {
            write!(f, "-lv({l})")?;
        }
        Ok(())
    }
}

impl FromStr for CycleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::CycleSpec(s.to_string());
        let mut parts = s.split('-');
        let head = parts.next().ok_or_else(bad)?.trim();
        let kind = match head.chars().next() {
            Some('V') | Some('v') => CycleKind::V,
            Some('F') | Some('f') => CycleKind::F,
            _ => return Err(bad()),
        };
        let inner = head[1..]
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let nu1 = a.trim().parse().map_err(|_| bad())?;
        let nu2 = b.trim().parse().map_err(|_| bad())?;
        let mut spec = CycleSpec {
            kind,
            nu1,
            nu2,
            ..CycleSpec::default()
        };
        let mut omega = None;
        for part in parts {
            let (name, arg) = match part.split_once('(') {
                Some((n, rest)) => (n, Some(rest.strip_suffix(')').ok_or_else(bad)?)),
                None => (part, None),
            };
            match name {
                "ilu0" | "ilu" => spec.smoother = SmootherKind::Ilu0,
                "jac" | "jacobi" => spec.smoother = SmootherKind::Jacobi,
                "fw" => spec.restriction = RestrictionKind::Fw,
                "fp" | "4p" => spec.restriction = RestrictionKind::FourPoint,
                "bilin" => {}
                "gcg" => spec.coarse = CoarseOperator::Galerkin,
                "dcg" => spec.coarse = CoarseOperator::Direct,
                "lv" => {
                    let l: usize = arg.ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    if l == 0 {
                        return Err(bad());
                    }
                    spec.max_levels = Some(l);
                    continue;
                }
                _ => return Err(bad()),
            }
            if let Some(arg) = arg {
                if !matches!(name, "ilu0" | "ilu" | "jac" | "jacobi") {
                    return Err(bad());
                }
                omega = Some(arg.parse::<f64>().map_err(|_| bad())?);
            }
        }
        spec.omega = omega.unwrap_or(spec.smoother.default_omega());
        if spec.nu1 + spec.nu2 == 0 {
            return Err(bad());
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
enum SmootherState {
    Ilu(Ilu0),
    Jacobi(Vec<C64>),
    None,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub a: SparseOperator,
    pub nx: usize,
    pub ny: usize,
    /// Restriction to the next coarser level.
    pub r: Option<SparseOperator>,
    /// Prolongation from the next coarser level.
    pub p: Option<SparseOperator>,
    smoother: SmootherState,
}

/// Rediscretizes the operator on a coarse grid.
pub type Rediscretize<'a> = &'a dyn Fn(&Grid2D) -> Result<SparseOperator>;

#[derive(Debug, Clone)]
pub struct MgHierarchy {
    pub levels: Vec<Level>,
    coarsest: BandLu,
    pub spec: CycleSpec,
}

/// Per-axis sizes from fine to coarse.
pub fn level_sizes(nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(nx, ny)];
    let (mut x, mut y) = (nx, ny);
    while x.max(y) > COARSEST_MAX && x % 2 == 0 && y % 2 == 0 {
        x /= 2;
        y /= 2;
        out.push((x, y));
    }
    out
}

/// Checks that `n = L 2^p` with `L ∈ {1, 3, 5, 7}`, so that 2:1 coarsening
/// reaches at most 8 cells.
pub fn check_coarsenable(n: usize) -> Result<()> {
    let mut l = n;
    while l % 2 == 0 && l > 0 {
        l /= 2;
    }
    if n == 0 || !matches!(l, 1 | 3 | 5 | 7) {
        return Err(Error::UncoarsenableSize(n));
    }
    Ok(())
}

impl MgHierarchy {
    /// Builds the hierarchy for the operator `a` on `grid`. `rediscretize`
    /// is required when `spec.coarse` is [`CoarseOperator::Direct`].
    pub fn build(
        a: &SparseOperator,
        grid: &Grid2D,
        spec: &CycleSpec,
        rediscretize: Option<Rediscretize<'_>>,
    ) -> Result<Self> {
        use crate::grid::Axis;
        let nx = grid.axis_unknowns(Axis::X);
        let ny = grid.axis_unknowns(Axis::Y);
        Self::build_sized(a, nx, ny, Some(grid), spec, rediscretize)
    }

    /// As [`MgHierarchy::build`] for a bare `nx × ny` operator (Galerkin only
    /// unless a grid is given).
    pub fn build_sized(
        a: &SparseOperator,
        nx: usize,
        ny: usize,
        grid: Option<&Grid2D>,
        spec: &CycleSpec,
        rediscretize: Option<Rediscretize<'_>>,
    ) -> Result<Self> {
        if a.dim() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                got: a.dim(),
            });
        }
        check_coarsenable(nx)?;
        check_coarsenable(ny)?;
        if spec.coarse == CoarseOperator::Direct && (rediscretize.is_none() || grid.is_none()) {
            return Err(Error::InvalidParameter(
                "direct coarse operators need a grid and a rediscretization".into(),
            ));
        }
        let mut sizes = level_sizes(nx, ny);
        if let Some(l) = spec.max_levels {
            sizes.truncate(l);
        }
        let mut levels = Vec::with_capacity(sizes.len());
        let mut op = a.clone();
        let mut g = grid.cloned();
        for (l, &(lx, ly)) in sizes.iter().enumerate() {
            let last = l + 1 == sizes.len();
            let (r, p, next) = if last {
                (None, None, None)
            } else {
                let p = bilinear_prolongation(lx, ly)?;
                let r = match spec.restriction {
                    RestrictionKind::Fw => fw_restriction(lx, ly)?,
                    RestrictionKind::FourPoint => fourpoint_restriction(lx, ly)?,
                };
                let next = match spec.coarse {
                    CoarseOperator::Galerkin => r.matmul(&op).matmul(&p),
                    CoarseOperator::Direct => {
                        let cg = g.as_ref().expect("checked above").coarsen()?;
                        let a_c = rediscretize.expect("checked above")(&cg)?;
                        g = Some(cg);
                        a_c
                    }
                };
                (Some(r), Some(p), Some(next))
            };
            let smoother = if last {
                SmootherState::None
            } else {
                match spec.smoother {
                    SmootherKind::Ilu0 => SmootherState::Ilu(ilu0_factor(&op, l)?),
                    SmootherKind::Jacobi => SmootherState::Jacobi(inverse_diagonal(&op)?),
                }
            };
            let level = Level {
                a: op,
                nx: lx,
                ny: ly,
                r,
                p,
                smoother,
            };
            levels.push(level);
            match next {
                Some(n) => op = n,
                None => break,
            }
        }
        let coarsest = BandLu::factor(&levels.last().expect("at least one level").a).map_err(|e| match e {
            Error::ZeroPivot { row, .. } => Error::ZeroPivot {
                level: sizes.len() - 1,
                row,
            },
            e => e,
        })?;
        Ok(MgHierarchy {
            levels,
            coarsest,
            spec: *spec,
        })
    }

    pub fn dim(&self) -> usize {
        self.levels[0].a.dim()
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    fn smooth(&self, l: usize, x: &mut [C64], b: &[C64], sweeps: usize, work: &mut Vec<C64>) {
        let lev = &self.levels[l];
        for _ in 0..sweeps {
            match &lev.smoother {
                SmootherState::Ilu(f) => ilu0_sweep(f, &lev.a, x, b, self.spec.omega, work),
                SmootherState::Jacobi(d) => smoother::jacobi_sweep_with(d, &lev.a, x, b, self.spec.omega, work),
                SmootherState::None => {}
            }
        }
    }

    fn level_cycle(&self, l: usize, kind: CycleKind, x: &mut [C64], b: &[C64]) {
        if l + 1 == self.levels.len() {
            x.copy_from_slice(b);
            self.coarsest.solve_in_place(x);
            return;
        }
        let lev = &self.levels[l];
        let mut work = Vec::with_capacity(x.len());
        self.smooth(l, x, b, self.spec.nu1, &mut work);
        let mut r = vec![C64::new(0.0, 0.0); x.len()];
        lev.a.residual_into(b, x, &mut r);
        let rc = lev.r.as_ref().expect("non-coarsest level").matvec(&r);
        let mut ec = vec![C64::new(0.0, 0.0); rc.len()];
        match kind {
            CycleKind::V => self.level_cycle(l + 1, CycleKind::V, &mut ec, &rc),
            CycleKind::F => {
                self.level_cycle(l + 1, CycleKind::F, &mut ec, &rc);
                self.level_cycle(l + 1, CycleKind::V, &mut ec, &rc);
            }
        }
        let e = lev.p.as_ref().expect("non-coarsest level").matvec(&ec);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        self.smooth(l, x, b, self.spec.nu2, &mut work);
    }

    /// One cycle starting from `x`.
    pub fn cycle(&self, b: &[C64], x: &mut [C64]) -> Result<()> {
        let n = self.dim();
        if b.len() != n || x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if b.len() != n { b.len() } else { x.len() },
            });
        }
        self.level_cycle(0, self.spec.kind, x, b);
        Ok(())
    }

    /// One cycle from a zero initial guess, the preconditioner action.
    pub fn apply(&self, b: &[C64]) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); b.len()];
        self.level_cycle(0, self.spec.kind, &mut x, b);
        x
    }
}

/// Standalone multigrid convergence from a zero initial guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgMeasure {
    /// Geometric mean of the per-cycle residual reduction.
    pub conv_factor: f64,
    /// Cycles performed.
    pub iters: usize,
    pub converged: bool,
    /// Residual grew in three consecutive cycles.
    pub diverged: bool,
    /// Relative residual after each cycle, starting with 1.
    pub history: Vec<f64>,
}

pub const MG_TOL: f64 = 1e-7;
pub const MG_MAX_CYCLES: usize = 100;

pub fn mg_measure(hier: &MgHierarchy, b: &[C64]) -> Result<MgMeasure> {
    mg_measure_with(hier, b, MG_TOL, MG_MAX_CYCLES)
}

pub fn mg_measure_with(hier: &MgHierarchy, b: &[C64], tol: f64, max_cycles: usize) -> Result<MgMeasure> {
    let a = &hier.levels[0].a;
    let mut x = vec![C64::new(0.0, 0.0); b.len()];
    let r0 = norm2(b);
    if r0 == 0.0 {
        return Ok(MgMeasure {
            conv_factor: 0.0,
            iters: 0,
            converged: true,
            diverged: false,
            history: vec![1.0],
        });
    }
    let mut history = vec![1.0];
    let mut r = vec![C64::new(0.0, 0.0); b.len()];
    let mut growth = 0;
    let mut converged = false;
    let mut diverged = false;
    for _ in 0..max_cycles {
        hier.cycle(b, &mut x)?;
        a.residual_into(b, &x, &mut r);
        let rel = norm2(&r) / r0;
        let prev = *history.last().expect("non-empty");
        history.push(rel);
        if !rel.is_finite() {
            diverged = true;
            break;
        }
        growth = if rel > prev { growth + 1 } else { 0 };
        if rel < tol {
            converged = true;
            break;
        }
        if growth >= 3 {
            diverged = true;
            break;
        }
    }
    let iters = history.len() - 1;
    let last = *history.last().expect("non-empty");
    let conv_factor = if iters > 0 && last.is_finite() {
        last.powf(1.0 / iters as f64)
    } else {
        f64::INFINITY
    };
    Ok(MgMeasure {
        conv_factor,
        iters,
        converged,
        diverged,
        history,
    })
}
