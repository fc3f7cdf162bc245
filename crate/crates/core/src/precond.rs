//! Shifted-Laplacian (CSL) and complex-stretched-grid (CSG) preconditioner
//! operators.
//!
//! CSL assembles `-(Δ + β² φ)`. CSG assembles the unshifted operator on the
//! grid with every width multiplied by `β = e^{iθ_β}`; `φ` and `χ` are still
//! evaluated at the unstretched coordinates. Then `M_CSG = M_CSL / β²` with
//! `β² = e^{2iθ_β}`, including a Sommerfeld closure, so that
//! `M_CSL u = b` and `M_CSG u = b / β²` have the same solution.
//!
//! Tables quote CSL shifts as `s = -β²` ("-1 - 0.2i" is `β² = 1 + 0.2i`);
//! [`ShiftSpec::from_table_shift`] is the only place that converts.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::discretize::{assemble_2d, EdgeConditions, Field, Source};
use crate::grid::csg_rescale;
use crate::{Error, Grid2D, ProblemOperator, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    None,
    Csl,
    Csg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    /// CSL shift `β²`; for CSG the equivalent `e^{2iθ_β}`, for none 1.
    pub beta_sq: C64,
    /// CSG angle; 0 otherwise.
    pub theta_beta: f64,
    /// Factor applied to the right-hand side of the preconditioner system.
    pub rhs_scale: C64,
}

impl ShiftSpec {
    pub fn none() -> Self {
        ShiftSpec {
            kind: ShiftKind::None,
            beta_sq: C64::new(1.0, 0.0),
            theta_beta: 0.0,
            rhs_scale: C64::new(1.0, 0.0),
        }
    }

    pub fn csl(beta_sq: C64) -> Result<Self> {
        if beta_sq.norm() == 0.0 || !beta_sq.re.is_finite() || !beta_sq.im.is_finite() {
            return Err(Error::InvalidParameter(format!("CSL shift beta^2 = {beta_sq}")));
        }
        Ok(ShiftSpec {
            kind: ShiftKind::Csl,
            beta_sq,
            theta_beta: 0.0,
            rhs_scale: C64::new(1.0, 0.0),
        })
    }

    /// CSL shift from the table convention `s = -β²`.
    pub fn from_table_shift(s: C64) -> Result<Self> {
        Self::csl(-s)
    }

    /// The table value `-β²` of a CSL shift.
    pub fn table_shift(&self) -> C64 {
        -self.beta_sq
    }

    pub fn csg(theta_beta: f64) -> Result<Self> {
        if !(theta_beta.abs() < FRAC_PI_4) {
            return Err(Error::UnsupportedAngle {
                theta: theta_beta,
                range: "(-pi/4, pi/4)",
            });
        }
        let beta_sq = C64::from_polar(1.0, 2.0 * theta_beta);
        Ok(ShiftSpec {
            kind: ShiftKind::Csg,
            beta_sq,
            theta_beta,
            rhs_scale: 1.0 / beta_sq,
        })
    }

    /// CSG with `θ_β = π / d`; negative `d` gives a negative angle.
    pub fn csg_from_denominator(d: f64) -> Result<Self> {
        if d == 0.0 {
            return Err(Error::InvalidParameter("angle denominator 0".into()));
        }
        Self::csg(PI / d)
    }

    /// Short label used in reports, e.g. `csl(-1-0.2i)` or `csg(pi/20)`.
    pub fn label(&self) -> String {
        match self.kind {
            ShiftKind::None => "none".into(),
            ShiftKind::Csl => {
                let s = self.table_shift();
                let sign = if s.im < 0.0 { "-" } else { "+" };
                format!("csl({}{sign}{}i)", fmt_num(s.re), fmt_num(s.im.abs()))
            }
            ShiftKind::Csg => {
                let d = PI / self.theta_beta;
                if (d - d.round()).abs() < 1e-9 {
                    format!("csg(pi/{})", d.round())
                } else {
                    format!("csg({:.6})", self.theta_beta)
                }
            }
        }
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// `-(Δ + β² φ)` on the target grid and boundary conditions.
pub fn build_csl(
    grid: &Grid2D,
    phi: Field<'_>,
    source: Source<'_>,
    bcs: EdgeConditions,
    beta_sq: C64,
) -> Result<ProblemOperator> {
    if beta_sq.norm() == 0.0 {
        return Err(Error::InvalidParameter("CSL shift beta^2 = 0".into()));
    }
    let shifted = |x: C64, y: C64| phi(x, y).map(|v| beta_sq * v);
    assemble_2d(grid, &shifted, source, bcs)
}

/// Unshifted operator on the stretched grid and the right-hand-side factor
/// `e^{-2iθ_β}`. The returned `b` is already scaled.
pub fn build_csg(
    grid: &Grid2D,
    phi: Field<'_>,
    source: Source<'_>,
    bcs: EdgeConditions,
    theta_beta: f64,
) -> Result<(ProblemOperator, C64)> {
    let stretched = csg_rescale(grid, theta_beta)?;
    let beta = C64::from_polar(1.0, theta_beta);
    let phi_u = |x: C64, y: C64| phi(x / beta, y / beta);
    let chi_u;
    let source = match source {
        Source::Field(chi) => {
            chi_u = move |x: C64, y: C64| chi(x / beta, y / beta);
            Source::Field(&chi_u)
        }
        s => s,
    };
    let mut op = assemble_2d(&stretched, &phi_u, source, bcs)?;
    let rhs_scale = 1.0 / (beta * beta);
    for v in &mut op.b {
        *v *= rhs_scale;
    }
    Ok((op, rhs_scale))
}

/// Preconditioner operator selected by `shift`; `None` gives the target.
pub fn build_preconditioner(
    grid: &Grid2D,
    phi: Field<'_>,
    source: Source<'_>,
    bcs: EdgeConditions,
    shift: &ShiftSpec,
) -> Result<ProblemOperator> {
    match shift.kind {
        ShiftKind::None => assemble_2d(grid, phi, source, bcs),
        ShiftKind::Csl => build_csl(grid, phi, source, bcs, shift.beta_sq),
        ShiftKind::Csg => build_csg(grid, phi, source, bcs, shift.theta_beta).map(|(op, _)| op),
    }
}

/// CSG stretch composed with a CSL shift.
pub fn build_hybrid(
    grid: &Grid2D,
    phi: Field<'_>,
    source: Source<'_>,
    bcs: EdgeConditions,
    beta_sq: C64,
    theta_beta: f64,
) -> Result<(ProblemOperator, C64)> {
    let shifted = |x: C64, y: C64| phi(x, y).map(|v| beta_sq * v);
    build_csg(grid, &shifted, source, bcs, theta_beta)
}
