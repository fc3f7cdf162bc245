//! End-to-end runs: discretize a model problem, build and measure the
//! multigrid preconditioner, run the Krylov solvers, and collect the table
//! rows of the iterative experiments.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use crate::krylov::{
    solve, IdentityPreconditioner, MgPreconditioner, PrecondSide, Preconditioner, SolverMethod, SolverOptions,
    SolverReport,
};
use crate::multigrid::{mg_measure, CoarseOperator, CycleSpec, MgHierarchy, MgMeasure};
use crate::precond::ShiftKind;
use crate::problems::{BcChoice, Discrete, ProblemId, ProblemSpec};
use crate::{Error, Grid2D, Result, ShiftSpec, C64};

/// Solvers of the tables, in column order.
pub const TABLE_SOLVERS: [SolverMethod; 3] = [SolverMethod::Bicgstab, SolverMethod::Idr(4), SolverMethod::Idr(8)];

/// Cycle counts accepted by the shift selection.
pub const SELECT_MAX_CYCLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub problem: ProblemSpec,
    /// Interior cells per axis.
    pub n: usize,
    /// Layer cells per absorbing edge.
    pub layer: usize,
    pub shift: ShiftSpec,
    pub cycle: CycleSpec,
    pub solvers: Vec<SolverMethod>,
    pub opts: SolverOptions,
}

impl CaseConfig {
    /// Table configuration: table grid, one V(0,1) cycle, the three table
    /// solvers, stopping on the true residual (right preconditioning).
    pub fn table(problem: ProblemSpec, shift: ShiftSpec) -> Self {
        let (n, layer) = problem.table_grid();
        CaseConfig {
            problem,
            n,
            layer,
            shift,
            cycle: CycleSpec::default(),
            solvers: TABLE_SOLVERS.to_vec(),
            opts: table_solver_options(),
        }
    }
}

pub fn table_solver_options() -> SolverOptions {
    SolverOptions {
        side: PrecondSide::Right,
        ..SolverOptions::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgSummary {
    pub conv_factor: f64,
    pub iters: usize,
    pub converged: bool,
    pub diverged: bool,
}

impl From<&MgMeasure> for MgSummary {
    fn from(m: &MgMeasure) -> Self {
        MgSummary {
            conv_factor: m.conv_factor,
            iters: m.iters,
            converged: m.converged,
            diverged: m.diverged,
        }
    }
}

/// Self-describing record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub config: CaseConfig,
    pub precond: String,
    pub unknowns: usize,
    pub mg: Option<MgSummary>,
    pub mg_levels: usize,
    pub setup_time: f64,
    pub mg_time: f64,
    pub solves: Vec<SolverReport>,
    pub errors: Vec<String>,
}

impl CaseRecord {
    pub fn all_converged(&self) -> bool {
        self.errors.is_empty() && self.solves.iter().all(|s| s.converged)
    }

    pub fn matvecs(&self, method: SolverMethod) -> Option<usize> {
        self.solves.iter().find(|s| s.method == method).map(|s| s.matvecs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Multigrid hierarchy of the preconditioner of `d`.
pub fn build_hierarchy(d: &Discrete, shift: &ShiftSpec, cycle: &CycleSpec) -> Result<MgHierarchy> {
    let m = d.preconditioner(shift)?;
    let redisc = |g: &Grid2D| d.preconditioner_on(g, shift).map(|op| op.a);
    let redisc_ref: Option<crate::multigrid::Rediscretize<'_>> = match cycle.coarse {
        CoarseOperator::Direct => Some(&redisc),
        CoarseOperator::Galerkin => None,
    };
    MgHierarchy::build(&m.a, &d.grid, cycle, redisc_ref)
}

/// Runs the configured solvers; solver failures are recorded, not raised.
pub fn run_case(cfg: &CaseConfig) -> Result<CaseRecord> {
    run_case_with(cfg, |_| {})
}

/// As [`run_case`], handing each finished solve to `on_solve`.
pub fn run_case_with(cfg: &CaseConfig, mut on_solve: impl FnMut(&SolverReport)) -> Result<CaseRecord> {
    let t0 = Instant::now();
    let d = cfg.problem.discretize(cfg.n, cfg.layer)?;
    let mut rec = CaseRecord {
        config: cfg.clone(),
        precond: cfg.shift.label(),
        unknowns: d.op.b.len(),
        mg: None,
        mg_levels: 0,
        setup_time: 0.0,
        mg_time: 0.0,
        solves: Vec::new(),
        errors: Vec::new(),
    };
    let hier = if cfg.shift.kind == ShiftKind::None {
        None
    } else {
        match build_hierarchy(&d, &cfg.shift, &cfg.cycle) {
            Ok(h) => Some(h),
            Err(e) => {
                rec.errors.push(format!("multigrid setup: {e}"));
                rec.setup_time = t0.elapsed().as_secs_f64();
                return Ok(rec);
            }
        }
    };
    rec.setup_time = t0.elapsed().as_secs_f64();
    if let Some(h) = &hier {
        rec.mg_levels = h.num_levels();
        let t = Instant::now();
        let b: Vec<C64> = d.op.b.iter().map(|v| v * cfg.shift.rhs_scale).collect();
        match mg_measure(h, &b) {
            Ok(m) => rec.mg = Some(MgSummary::from(&m)),
            Err(e) => rec.errors.push(format!("multigrid measure: {e}")),
        }
        rec.mg_time = t.elapsed().as_secs_f64();
    }
    let mgp;
    let pc: &dyn Preconditioner = match &hier {
        Some(h) => {
            mgp = MgPreconditioner {
                hierarchy: h,
                rhs_scale: cfg.shift.rhs_scale,
            };
            &mgp
        }
        None => &IdentityPreconditioner,
    };
    for &method in &cfg.solvers {
        match solve(method, &d.op.a, &d.op.b, pc, &cfg.opts) {
            Ok((_, r)) => {
                log::info!(
                    "{} {} {}: {} matvecs, converged {}, true relres {:.2e}",
                    cfg.problem.id,
                    rec.precond,
                    method,
                    r.matvecs,
                    r.converged,
                    r.true_final_relres
                );
                on_solve(&r);
                rec.solves.push(r);
            }
            Err(e) => rec.errors.push(format!("{method}: {e}")),
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    Mp1,
    Mp2,
    Mp3,
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableId::Mp1 => "mp1",
            TableId::Mp2 => "mp2",
            TableId::Mp3 => "mp3",
        })
    }
}

impl FromStr for TableId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mp1" => Ok(TableId::Mp1),
            "mp2" => Ok(TableId::Mp2),
            "mp3" => Ok(TableId::Mp3),
            _ => Err(Error::InvalidParameter(format!("unknown table {s:?}"))),
        }
    }
}

/// Published multigrid and matvec figures of one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub conv: f64,
    pub cycles: usize,
    /// Bi-CGSTAB, IDR(4), IDR(8).
    pub matvecs: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: TableId,
    pub problem: ProblemSpec,
    pub n: usize,
    pub layer: usize,
    pub shift: ShiftSpec,
    pub reference: ReferenceRow,
    /// Too large for the default suite.
    pub extended: bool,
}

impl TableRow {
    pub fn config(&self) -> CaseConfig {
        CaseConfig {
            n: self.n,
            layer: self.layer,
            ..CaseConfig::table(self.problem, self.shift)
        }
    }
}

/// One block of three rows: CSL with a given table shift, CSG with angle
/// `π/d`, and CSL with the equivalent shift `e^{2iπ/d}`. The signs follow
/// the boundary condition.
fn block(
    table: TableId,
    problem: ProblemSpec,
    grid: (usize, usize),
    csl_im: f64,
    denom: f64,
    reference: [(f64, usize, [usize; 3]); 3],
    extended: bool,
) -> Vec<TableRow> {
    let sign = match problem.bc {
        BcChoice::Ecs => 1.0,
        BcChoice::Sommerfeld => -1.0,
    };
    let theta = sign * PI / denom;
    let shifts = [
        ShiftSpec::from_table_shift(C64::new(-1.0, -sign * csl_im)).expect("nonzero shift"),
        ShiftSpec::csg(theta).expect("small angle"),
        ShiftSpec::csl(C64::from_polar(1.0, 2.0 * theta)).expect("nonzero shift"),
    ];
    shifts
        .into_iter()
        .zip(reference)
        .map(|(shift, (conv, cycles, matvecs))| TableRow {
            table,
            problem,
            n: grid.0,
            layer: grid.1,
            shift,
            reference: ReferenceRow { conv, cycles, matvecs },
            extended,
        })
        .collect()
}

/// Row configurations of a table; `extended` adds the runs too large for
/// the default suite.
pub fn table_rows(table: TableId, extended: bool) -> Vec<TableRow> {
    use BcChoice::{Ecs, Sommerfeld};
    let mut rows = Vec::new();
    match table {
        TableId::Mp1 => {
            let g = (256, 64);
            let som = ProblemSpec::mp1(160.0, Sommerfeld);
            let ecs = ProblemSpec::mp1(160.0, Ecs);
            rows.extend(block(
                table,
                som,
                g,
                0.2,
                28.0,
                [
                    (0.31, 12, [79, 72, 76]),
                    (0.24, 10, [74, 70, 72]),
                    (0.26, 11, [74, 69, 72]),
                ],
                false,
            ));
            rows.extend(block(
                table,
                ecs,
                g,
                0.2,
                28.0,
                [
                    (0.29, 12, [59, 62, 60]),
                    (0.24, 10, [58, 62, 56]),
                    (0.24, 10, [58, 59, 54]),
                ],
                false,
            ));
        }
        TableId::Mp2 => {
            let g = (384, 128);
            let p = |nu, k, bc| ProblemSpec::mp2(nu, k, bc);
            rows.extend(block(
                table,
                p(7.0, 2.0, Sommerfeld),
                g,
                0.35,
                20.0,
                [
                    (0.25, 10, [123, 120, 122]),
                    (0.25, 10, [113, 115, 115]),
                    (0.26, 11, [115, 114, 113]),
                ],
                false,
            ));
            rows.extend(block(
                table,
                p(7.0, 2.0, Ecs),
                g,
                0.34,
                20.0,
                [
                    (0.17, 8, [71, 72, 74]),
                    (0.19, 9, [68, 73, 69]),
                    (0.18, 9, [70, 77, 71]),
                ],
                false,
            ));
            rows.extend(block(
                table,
                p(1.0, 4.0, Sommerfeld),
                g,
                0.27,
                27.0,
                [
                    (0.39, 15, [179, 175, 177]),
                    (0.51, 21, [161, 164, 161]),
                    (0.53, 22, [161, 160, 159]),
                ],
                false,
            ));
            rows.extend(block(
                table,
                p(1.0, 4.0, Ecs),
                g,
                0.27,
                26.0,
                [
                    (0.34, 13, [138, 125, 131]),
                    (0.43, 18, [115, 123, 114]),
                    (0.44, 17, [116, 120, 124]),
                ],
                false,
            ));
        }
        TableId::Mp3 => {
            let g = (1024, 256);
            let p = |r, k, bc| ProblemSpec::mp3(r, k, bc);
            rows.extend(block(
                table,
                p(90.0, 2.0, Sommerfeld),
                g,
                0.38,
                17.0,
                [
                    (0.44, 18, [207, 214, 232]),
                    (0.41, 16, [205, 207, 207]),
                    (0.45, 18, [198, 204, 223]),
                ],
                false,
            ));
            rows.extend(block(
                table,
                p(90.0, 2.0, Ecs),
                g,
                0.38,
                17.0,
                [
                    (0.28, 11, [142, 145, 141]),
                    (0.27, 11, [139, 139, 134]),
                    (0.27, 11, [138, 137, 137]),
                ],
                false,
            ));
            if extended {
                let g = (2048, 512);
                rows.extend(block(
                    table,
                    p(150.0, 4.0, Sommerfeld),
                    g,
                    0.40,
                    17.0,
                    [
                        (0.39, 15, [681, 682, 669]),
                        (0.37, 15, [620, 650, 652]),
                        (0.39, 15, [623, 673, 614]),
                    ],
                    true,
                ));
                rows.extend(block(
                    table,
                    p(150.0, 4.0, Ecs),
                    g,
                    0.40,
                    17.0,
                    [
                        (0.37, 15, [436, 413, 423]),
                        (0.31, 13, [390, 387, 392]),
                        (0.30, 13, [395, 390, 383]),
                    ],
                    true,
                ));
            }
        }
    }
    rows
}

/// Flat CSV row of a reproduced table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCsvRow {
    pub table: TableId,
    pub problem: ProblemId,
    pub k: f64,
    pub nu: f64,
    pub r: f64,
    pub bc: BcChoice,
    pub n: usize,
    pub layer: usize,
    pub precond: String,
    pub mg_conv: Option<f64>,
    pub mg_iters: Option<usize>,
    pub bicgstab_matvecs: Option<usize>,
    pub idr4_matvecs: Option<usize>,
    pub idr8_matvecs: Option<usize>,
    pub all_converged: bool,
    pub ref_mg_conv: f64,
    pub ref_mg_iters: usize,
    pub ref_bicgstab: usize,
    pub ref_idr4: usize,
    pub ref_idr8: usize,
    pub wall_time: f64,
}

impl TableCsvRow {
    pub fn new(row: &TableRow, rec: &CaseRecord) -> Self {
        let p = &row.problem;
        TableCsvRow {
            table: row.table,
            problem: p.id,
            k: p.k.re,
            nu: p.nu,
            r: p.r,
            bc: p.bc,
            n: row.n,
            layer: row.layer,
            precond: rec.precond.clone(),
            mg_conv: rec.mg.map(|m| m.conv_factor),
            mg_iters: rec.mg.map(|m| m.iters),
            bicgstab_matvecs: rec.matvecs(SolverMethod::Bicgstab),
            idr4_matvecs: rec.matvecs(SolverMethod::Idr(4)),
            idr8_matvecs: rec.matvecs(SolverMethod::Idr(8)),
            all_converged: rec.all_converged(),
            ref_mg_conv: row.reference.conv,
            ref_mg_iters: row.reference.cycles,
            ref_bicgstab: row.reference.matvecs[0],
            ref_idr4: row.reference.matvecs[1],
            ref_idr8: row.reference.matvecs[2],
            wall_time: rec.setup_time + rec.mg_time + rec.solves.iter().map(|s| s.wall_time).sum::<f64>(),
        }
    }
}

pub fn write_table_csv<W: Write>(rows: &[TableCsvRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_table_csv<R: Read>(r: R) -> Result<Vec<TableCsvRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Reruns every row of `table`; per-row failures are recorded in the row.
pub fn emit_table(table: TableId, extended: bool) -> Result<Vec<(TableCsvRow, CaseRecord)>> {
    table_rows(table, extended)
        .iter()
        .map(|row| {
            let rec = run_case(&row.config())?;
            Ok((TableCsvRow::new(row, &rec), rec))
        })
        .collect()
}

/// Outcome of the shift (or angle) selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSelection {
    pub shift: ShiftSpec,
    /// `|Im s|` of the CSL table shift or `|θ_β|`.
    pub magnitude: f64,
    pub mg: MgSummary,
    /// Whether `0.8 · magnitude` fails the cycle test, as expected.
    pub reduced_fails: bool,
    pub evaluations: usize,
}

/// Shift family searched by [`select_shift`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectKind {
    Csl,
    Csg,
}

impl FromStr for SelectKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csl" => Ok(SelectKind::Csl),
            "csg" => Ok(SelectKind::Csg),
            _ => Err(Error::InvalidParameter(format!("unknown shift kind {s:?}"))),
        }
    }
}

/// CSL shift `-1 ∓ i v` or CSG angle `±v`, signed for the boundary condition.
pub fn signed_shift(bc: BcChoice, kind: SelectKind, v: f64) -> Result<ShiftSpec> {
    let sign = match bc {
        BcChoice::Ecs => 1.0,
        BcChoice::Sommerfeld => -1.0,
    };
    match kind {
        SelectKind::Csl => ShiftSpec::from_table_shift(C64::new(-1.0, -sign * v)),
        SelectKind::Csg => ShiftSpec::csg(sign * v),
    }
}

/// Bisects the imaginary shift magnitude or the angle down to the smallest
/// value (within 5% relative) for which multigrid on the preconditioner
/// still converges in at most 20 cycles.
pub fn select_shift(
    problem: &ProblemSpec,
    n: usize,
    layer: usize,
    kind: SelectKind,
    start: f64,
    cycle: &CycleSpec,
) -> Result<ShiftSelection> {
    if !(start > 0.0) {
        return Err(Error::InvalidParameter(format!("start magnitude {start}")));
    }
    let d = problem.discretize(n, layer)?;
    let mut evaluations = 0;
    let mut eval = |v: f64| -> Result<MgSummary> {
        evaluations += 1;
        let shift = signed_shift(problem.bc, kind, v)?;
        let m = match build_hierarchy(&d, &shift, cycle) {
            Ok(h) => {
                let b: Vec<C64> = d.op.b.iter().map(|z| z * shift.rhs_scale).collect();
                MgSummary::from(&mg_measure(&h, &b)?)
            }
            // an indefinite shift can break the ILU(0) factorization
            Err(Error::ZeroPivot { .. }) => MgSummary {
                conv_factor: f64::INFINITY,
                iters: 0,
                converged: false,
                diverged: true,
            },
            Err(e) => return Err(e),
        };
        log::debug!(
            "select {kind:?} {v:.5}: conv {:.3} in {} cycles",
            m.conv_factor,
            m.iters
        );
        Ok(m)
    };
    let ok = |m: &MgSummary| m.converged && m.iters <= SELECT_MAX_CYCLES;
    let first = eval(start)?;
    if !ok(&first) {
        return Err(Error::StartDoesNotConverge {
            conv_factor: first.conv_factor,
        });
    }
    let (mut lo, mut hi, mut best) = (0.0, start, first);
    while (hi - lo) > 0.05 * hi {
        let mid = 0.5 * (lo + hi);
        let m = eval(mid)?;
        if ok(&m) {
            hi = mid;
            best = m;
        } else {
            lo = mid;
        }
    }
    let reduced_fails = !ok(&eval(0.8 * hi)?);
    if !reduced_fails {
        log::warn!("shift selection is not monotone: 0.8 x {hi} also converges");
    }
    Ok(ShiftSelection {
        shift: signed_shift(problem.bc, kind, hi)?,
        magnitude: hi,
        mg: best,
        reduced_fails,
        evaluations,
    })
}

/// Multigrid directly on the unshifted MP1 operator with ECS layers on all
/// edges, the setting of the unpreconditioned experiments.
pub fn unshifted_mg(k: C64, n: usize, layer: usize, cycle: &CycleSpec) -> Result<MgMeasure> {
    let problem = crate::problems::make_problem(
        ProblemId::Mp1,
        crate::problems::ProblemParams {
            k,
            bc: BcChoice::Ecs,
            ..Default::default()
        },
    )?;
    let d = problem.discretize(n, layer)?;
    let h = build_hierarchy(&d, &ShiftSpec::none(), cycle)?;
    mg_measure(&h, &d.op.b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        assert_eq!(table_rows(TableId::Mp1, false).len(), 6);
        assert_eq!(table_rows(TableId::Mp2, false).len(), 12);
        assert_eq!(table_rows(TableId::Mp3, false).len(), 6);
        assert_eq!(table_rows(TableId::Mp3, true).len(), 12);
        for t in [TableId::Mp1, TableId::Mp2, TableId::Mp3] {
            for block in table_rows(t, true).chunks(3) {
                assert!(block.iter().all(|r| r.problem == block[0].problem));
                assert_eq!(block[0].shift.kind, ShiftKind::Csl);
                assert_eq!(block[1].shift.kind, ShiftKind::Csg);
                // third row is the CSL shift equivalent to the CSG angle
                assert!((block[2].shift.beta_sq - block[1].shift.beta_sq).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn table_labels_match_printed_shifts() {
        let rows = table_rows(TableId::Mp1, false);
        let labels: Vec<String> = rows.iter().map(|r| r.shift.label()).collect();
        assert_eq!(labels[0], "csl(-1+0.2i)");
        assert_eq!(labels[1], "csg(pi/-28)");
        assert_eq!(labels[3], "csl(-1-0.2i)");
        assert_eq!(labels[4], "csg(pi/28)");
        // printed as -0.97 - 0.22i
        let s = rows[5].shift.table_shift();
        assert!((s.re + 0.97).abs() < 0.005 && (s.im + 0.22).abs() < 0.005);
    }

    #[test]
    fn names() {
        assert_eq!("MP2".parse::<TableId>().unwrap(), TableId::Mp2);
        assert_eq!(TableId::Mp3.to_string(), "mp3");
        assert!("mp4".parse::<TableId>().is_err());
        assert_eq!("csg".parse::<SelectKind>().unwrap(), SelectKind::Csg);
    }

    #[test]
    fn signed_shifts() {
        let s = signed_shift(BcChoice::Sommerfeld, SelectKind::Csl, 0.3).unwrap();
        assert_eq!(s.table_shift(), C64::new(-1.0, 0.3));
        let s = signed_shift(BcChoice::Ecs, SelectKind::Csg, 0.1).unwrap();
        assert_eq!(s.theta_beta, 0.1);
    }
}
