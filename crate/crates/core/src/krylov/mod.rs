//! Left-preconditioned Krylov solvers for `M⁻¹ A x = M⁻¹ b`.
//!
//! All solvers start from `x = 0`, stop when the preconditioned relative
//! residual `‖M⁻¹(b − Ax)‖ / ‖M⁻¹b‖` drops below `tol`, and report the true
//! relative residual `‖b − Ax‖ / ‖b‖` once at exit. A matvec is one
//! application of `M⁻¹A`.
//!
//! References: H. A. van der Vorst, Bi-CGSTAB (1992); P. Sonneveld and
//! M. B. van Gijzen, IDR(s) (2008); Y. Saad and M. H. Schultz, GMRES (1986).

mod bicgstab;
mod gmres;
mod idr;

pub use bicgstab::bicgstab;
pub use gmres::gmres;
pub use idr::idr_s;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::multigrid::MgHierarchy;
use crate::sparse::BandLu;
use crate::{norm2, Error, Result, SparseOperator, C64};

/// Action of `M⁻¹`.
pub trait Preconditioner {
    fn apply(&self, v: &[C64]) -> Vec<C64>;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        v.to_vec()
    }
}

/// One multigrid cycle from a zero initial guess on `rhs_scale · v`.
pub struct MgPreconditioner<'a> {
    pub hierarchy: &'a MgHierarchy,
    pub rhs_scale: C64,
}

impl Preconditioner for MgPreconditioner<'_> {
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        if self.rhs_scale == C64::new(1.0, 0.0) {
            self.hierarchy.apply(v)
        } else {
            let scaled: Vec<C64> = v.iter().map(|z| z * self.rhs_scale).collect();
            self.hierarchy.apply(&scaled)
        }
    }
}

/// Exact inverse through a banded LU.
pub struct DirectPreconditioner(pub BandLu);

impl Preconditioner for DirectPreconditioner {
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.0.solve(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Bicgstab,
    Idr(usize),
    Gmres,
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverMethod::Bicgstab => write!(f, "bicgstab"),
            SolverMethod::Idr(s) => write!(f, "idr({s})"),
            SolverMethod::Gmres => write!(f, "gmres"),
        }
    }
}

impl FromStr for SolverMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.to_ascii_lowercase();
        let t = t.trim();
        match t {
            "bicgstab" | "bi-cgstab" => return Ok(SolverMethod::Bicgstab),
            "gmres" => return Ok(SolverMethod::Gmres),
            _ => {}
        }
        let arg = t
            .strip_prefix("idr(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("idr"));
        match arg.and_then(|a| a.parse::<usize>().ok()) {
            Some(s) if s >= 1 => Ok(SolverMethod::Idr(s)),
            _ => Err(Error::InvalidParameter(format!("unknown solver {s:?}"))),
        }
    }
}

/// Side on which `M⁻¹` is applied. Left stops on the preconditioned
/// residual; right iterates on `A M⁻¹ y = b` and stops on the true residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondSide {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub side: PrecondSide,
    pub max_matvecs: usize,
    /// Seed of the IDR(s) shadow space.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            side: PrecondSide::Left,
            max_matvecs: 2000,
            seed: 20_080_101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: SolverMethod,
    pub s: Option<usize>,
    /// Applications of `M⁻¹A`.
    pub matvecs: usize,
    pub iterations: usize,
    /// Preconditioned relative residual at each check, starting with 1.
    pub residual_history: Vec<f64>,
    /// Matvec count at each entry of `residual_history`.
    pub matvec_history: Vec<usize>,
    pub true_final_relres: f64,
    pub converged: bool,
    pub breakdown: Option<String>,
    pub wall_time: f64,
    pub seed: Option<u64>,
}

impl SolverReport {
    fn new(method: SolverMethod) -> Self {
        SolverReport {
            method,
            s: match method {
                SolverMethod::Idr(s) => Some(s),
                _ => None,
            },
            matvecs: 0,
            iterations: 0,
            residual_history: vec![1.0],
            matvec_history: vec![0],
            true_final_relres: f64::NAN,
            converged: false,
            breakdown: None,
            wall_time: 0.0,
            seed: None,
        }
    }

    fn record(&mut self, relres: f64) {
        self.residual_history.push(relres);
        self.matvec_history.push(self.matvecs);
    }

    /// Writes `iteration,matvecs,relres` rows.
    pub fn write_history_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "matvecs", "relres"])?;
        for (i, (r, m)) in self.residual_history.iter().zip(&self.matvec_history).enumerate() {
            wr.write_record([i.to_string(), m.to_string(), format!("{r:.6e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `M⁻¹ A` (or `A M⁻¹`) with matvec counting.
pub(crate) struct PrecOp<'a> {
    pub a: &'a SparseOperator,
    pub m: &'a dyn Preconditioner,
    pub side: PrecondSide,
}

impl PrecOp<'_> {
    pub fn apply(&self, v: &[C64], report: &mut SolverReport) -> Vec<C64> {
        report.matvecs += 1;
        match self.side {
            PrecondSide::Left => self.m.apply(&self.a.matvec(v)),
            PrecondSide::Right => self.a.matvec(&self.m.apply(v)),
        }
    }

    /// Initial residual of the iterated system for `x = 0`.
    pub fn initial_residual(&self, b: &[C64]) -> Vec<C64> {
        match self.side {
            PrecondSide::Left => self.m.apply(b),
            PrecondSide::Right => b.to_vec(),
        }
    }

    /// Maps the iterate back to the solution of `A x = b`.
    pub fn solution(&self, y: Vec<C64>) -> Vec<C64> {
        match self.side {
            PrecondSide::Left => y,
            PrecondSide::Right => self.m.apply(&y),
        }
    }
}

pub(crate) fn check_dims(a: &SparseOperator, b: &[C64]) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    Ok(())
}

pub(crate) fn finish(report: &mut SolverReport, a: &SparseOperator, b: &[C64], x: &[C64], start: std::time::Instant) {
    let nb = norm2(b);
    report.true_final_relres = if nb == 0.0 {
        norm2(x)
    } else {
        norm2(&a.residual(b, x)) / nb
    };
    report.wall_time = start.elapsed().as_secs_f64();
}

/// Runs `method` on `A x = b` with preconditioner `m`.
pub fn solve(
    method: SolverMethod,
    a: &SparseOperator,
    b: &[C64],
    m: &dyn Preconditioner,
    opts: &SolverOptions,
) -> Result<(Vec<C64>, SolverReport)> {
    match method {
        SolverMethod::Bicgstab => bicgstab(a, b, m, opts),
        SolverMethod::Idr(s) => idr_s(s, a, b, m, opts),
        SolverMethod::Gmres => gmres(a, b, m, opts),
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use crate::{SparseOperator, C64};

    /// `-Δ_h + shift` on an `n × n` grid, scaled by `h²`.
    pub fn laplacian(n: usize, shift: C64) -> SparseOperator {
        let mut t = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                let i = iy * n + ix;
                t.push((i, i, C64::new(4.0, 0.0) + shift));
                if ix > 0 {
                    t.push((i, i - 1, C64::new(-1.0, 0.0)));
                }
                if ix + 1 < n {
                    t.push((i, i + 1, C64::new(-1.0, 0.0)));
                }
                if iy > 0 {
                    t.push((i, i - n, C64::new(-1.0, 0.0)));
                }
                if iy + 1 < n {
                    t.push((i, i + n, C64::new(-1.0, 0.0)));
                }
            }
        }
        SparseOperator::from_triplets(n * n, n * n, &t)
    }

    pub fn rhs(n: usize) -> Vec<C64> {
        (0..n)
            .map(|i| C64::new(((i * 7) % 11) as f64 - 5.0, ((i * 3) % 5) as f64))
            .collect()
    }
}
