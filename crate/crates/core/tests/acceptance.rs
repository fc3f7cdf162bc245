//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 5 8`. The MP3 run is skipped unless
//! `ECS_EXTENDED=1`. The process fails only when a criterion outside
//! [`KNOWN_FAILURES`] fails.

mod common;

use common::{csl_csg_gap, MP2_LIMITS, MP3_LIMITS};
use ecs_helmholtz::discretize::assemble_1d;
use ecs_helmholtz::grid::build_ecs_grid_1d;
use ecs_helmholtz::harness::{
    build_hierarchy, run_case, table_rows, unshifted_mg, CaseConfig, CaseRecord, TableId, TABLE_SOLVERS,
};
use ecs_helmholtz::krylov::{solve, MgPreconditioner};
use ecs_helmholtz::multigrid::mg_measure;
use ecs_helmholtz::problems::{mesh_limit_mp2, mesh_limit_mp3, truncate_3, BcChoice, ProblemSpec};
use ecs_helmholtz::spectral::{
    default_seeds, dense_eigensolve_oracle, gershgorin_bounds, newton_solve_eigs, pitchfork_model, DEFAULT_RHO0,
};
use ecs_helmholtz::{CycleSpec, EcsGrid1D, PrecondSide, ShiftSpec, SolverMethod, SolverOptions, Topology, C64};
use proptest::test_runner::{Config, TestRunner};
use std::cell::Cell;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

/// Criteria that cannot be met as stated; see the README.
const KNOWN_FAILURES: [u32; 2] = [4, 7];

/// Relative band for matvec counts against the tables.
const MATVEC_BAND: f64 = 0.30;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn detail(mut self, d: Vec<String>) -> Self {
        self.details = d;
        self
    }
}

fn within(x: f64, target: f64, band: f64) -> bool {
    (x - target).abs() <= band * target
}

fn vertex_grid(n: usize, m: usize, theta: f64) -> EcsGrid1D {
    let h = 1.0 / n as f64;
    build_ecs_grid_1d(n, m, theta, 1.0, 1.0 + m as f64 * h, Topology::VertexCentered).unwrap()
}

fn sweep() -> impl Iterator<Item = (usize, usize, f64)> {
    [8, 16, 32].into_iter().flat_map(|n| {
        [8, 16, 32]
            .into_iter()
            .flat_map(move |m| [PI / 12.0, PI / 6.0].into_iter().map(move |t| (n, m, t)))
    })
}

fn c1_spectral_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (n, m, theta) in sweep() {
        let g = vertex_grid(n, m, theta);
        let oracle = dense_eigensolve_oracle(&assemble_1d(&g, 0.0).unwrap().a).unwrap();
        let roots = newton_solve_eigs(&g, &default_seeds(&g), 1e-13, 200).unwrap().roots;
        let scale = 4.0 / (g.h * g.h);
        let dist = |set: &[C64], z: C64| set.iter().map(|x| (x - z).norm()).fold(f64::INFINITY, f64::min);
        let d = oracle
            .iter()
            .map(|&e| dist(&roots, e))
            .chain(roots.iter().map(|&r| dist(&oracle, r)))
            .fold(0.0f64, f64::max)
            / scale;
        worst = worst.max(d);
        if roots.len() != oracle.len() || d >= 1e-6 {
            bad.push(format!(
                "n={n} m={m} theta={theta:.4}: {} roots, {} eigenvalues, dist {d:.1e}",
                roots.len(),
                oracle.len()
            ));
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("18 grids, max scaled distance {worst:.1e} (limit 1e-6)"),
    )
    .detail(bad)
}

fn c2_containment() -> Outcome {
    let mut bad = Vec::new();
    for (n, m, theta) in sweep() {
        let g = vertex_grid(n, m, theta);
        let b = gershgorin_bounds(&g).unwrap();
        for e in dense_eigensolve_oracle(&assemble_1d(&g, 0.0).unwrap().a).unwrap() {
            if !b.contains(e * g.h * g.h, 1e-12) {
                bad.push(format!("n={n} m={m} theta={theta:.4}: {e}"));
            }
        }
    }
    let b = gershgorin_bounds(&vertex_grid(16, 8, 0.0)).unwrap();
    let unit = [b.re_min, b.re_max, b.im_min, b.im_max];
    let unit_ok = unit
        .iter()
        .zip([0.0, 4.0, 0.0, 0.0])
        .all(|(x, y)| (x - y).abs() < 1e-12);
    if !unit_ok {
        bad.push(format!("gamma=1 box {unit:?}"));
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "all eigenvalues inside the box; gamma=1 box [{}, {}]x[{}, {}]",
            b.re_min, b.re_max, b.im_min, b.im_max
        ),
    )
    .detail(bad)
}

fn c3_tail_order() -> Outcome {
    let errs: Vec<f64> = [16, 32, 64]
        .into_iter()
        .map(|n| {
            let g = vertex_grid(n, n / 4, PI / 6.0);
            let eig = dense_eigensolve_oracle(&assemble_1d(&g, 0.0).unwrap().a).unwrap();
            let tail = pitchfork_model(&g, 1, DEFAULT_RHO0).unwrap().tail_eigs[0];
            (eig[0] - tail).norm()
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = orders.iter().all(|&p| p >= 1.9);
    Outcome::new(
        pass,
        format!(
            "errors {}, observed orders {orders:.3?}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn c4_mesh_tables() -> Outcome {
    let mut misses = Vec::new();
    let mut hits = 0;
    for (nu, row) in MP2_LIMITS.iter().enumerate() {
        for (j, &printed) in row.iter().enumerate() {
            let h = mesh_limit_mp2(nu as f64, (j + 1) as f64);
            if (truncate_3(h) - printed).abs() < 1e-9 {
                hits += 1;
            } else {
                misses.push(format!(
                    "nu={nu} k={}: exact {h:.5}, truncated {:.3}, printed {printed:.3}",
                    j + 1,
                    truncate_3(h)
                ));
            }
        }
    }
    let mp3_hits = MP3_LIMITS
        .iter()
        .enumerate()
        .filter(|(j, &p)| truncate_3(mesh_limit_mp3((j + 1) as f64)) == p)
        .count();
    misses.push(format!(
        "nu=2,k=4 and nu=8,k=2 share 2nu+k^2=20 but print {:.3} and {:.3}: no single rounding rule fits",
        MP2_LIMITS[2][3], MP2_LIMITS[8][1]
    ));
    Outcome::new(
        hits == 55 && mp3_hits == 5,
        format!("MP2 {hits}/55 cells, MP3 {mp3_hits}/5 cells"),
    )
    .detail(misses)
}

fn c5_csl_csg() -> Outcome {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for n in [32, 64] {
        for k in [2.0, 40.0] {
            let g = csl_csg_gap(n, k, PI / 20.0);
            worst = worst.max(g);
            lines.push(format!("n={n} k={k}: {g:.1e}"));
        }
    }
    Outcome::new(
        worst < 1e-10,
        format!("max relative solution gap {worst:.1e} (limit 1e-10)"),
    )
    .detail(lines)
}

fn c6_standalone_mg() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (bc, im, conv_ref) in [(BcChoice::Sommerfeld, 0.2, 0.31), (BcChoice::Ecs, -0.2, 0.29)] {
        let d = ProblemSpec::mp1(160.0, bc).discretize(256, 64).unwrap();
        let shift = ShiftSpec::from_table_shift(C64::new(-1.0, im)).unwrap();
        let h = build_hierarchy(&d, &shift, &CycleSpec::default()).unwrap();
        let m = mg_measure(&h, &d.op.b).unwrap();
        let ok = m.converged && m.iters.abs_diff(12) <= 4 && (m.conv_factor - conv_ref).abs() <= 0.15;
        pass &= ok;
        parts.push(format!(
            "{bc} {}: {} cycles, conv {:.3} (ref 12, {conv_ref})",
            shift.label(),
            m.iters,
            m.conv_factor
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn c7_unshifted() -> Outcome {
    let damped_k40: CycleSpec = "F(1,2)-ilu0(0.3)-fw-bilin-gcg".parse().unwrap();
    let damped_k80: CycleSpec = "F(1,1)-ilu0(0.3)-fw-bilin-gcg".parse().unwrap();
    let cases = [
        ("k=40 N=64", C64::new(40.0, 0.0), 64, damped_k40),
        ("k=80-0.05i N=128", C64::new(80.0, -0.05), 128, damped_k80),
        ("k=80 N=128", C64::new(80.0, 0.0), 128, damped_k80),
    ];
    let run = |k: C64, n: usize, cycle: &CycleSpec| unshifted_mg(k, n, n / 4, cycle).unwrap();
    let a = run(cases[0].1, cases[0].2, &cases[0].3);
    let b = run(cases[1].1, cases[1].2, &cases[1].3);
    let c = run(cases[2].1, cases[2].2, &cases[2].3);
    let ok = [
        a.converged && a.iters.abs_diff(21) <= 10,
        b.converged && b.iters.abs_diff(35) <= 15,
        !c.converged,
    ];
    let describe = |name: &str, m: &ecs_helmholtz::multigrid::MgMeasure, ok: bool| {
        let state = if m.converged {
            "converged"
        } else if m.diverged {
            "diverged"
        } else {
            "stalled"
        };
        format!(
            "{name}: {state} after {} cycles, conv {:.3} [{}]",
            m.iters,
            m.conv_factor,
            if ok { "ok" } else { "miss" }
        )
    };
    let summary = format!(
        "{}; {}; {}",
        describe(cases[0].0, &a, ok[0]),
        describe(cases[1].0, &b, ok[1]),
        describe(cases[2].0, &c, ok[2])
    );
    // the same components with the hierarchy cut to two levels
    let mut details = Vec::new();
    for (name, k, n, cycle) in &cases {
        let two = CycleSpec {
            max_levels: Some(2),
            ..*cycle
        };
        let m = run(*k, *n, &two);
        details.push(format!(
            "two levels ({two}): {}",
            describe(name, &m, true).trim_end_matches(" [ok]")
        ));
    }
    Outcome::new(ok.iter().all(|&x| x), summary).detail(details)
}

/// Runs every row of a table and compares matvec counts with the reference values.
/// Rows for which `gated` is false are reported but do not decide the
/// outcome.
fn table_check(
    table: TableId,
    rows: Vec<ecs_helmholtz::harness::TableRow>,
    gated: impl Fn(usize) -> bool,
    records: &mut Vec<CaseRecord>,
) -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let t = Instant::now();
        let rec = run_case(&row.config()).unwrap();
        let counts: Vec<Option<usize>> = TABLE_SOLVERS.iter().map(|&m| rec.matvecs(m)).collect();
        let mut row_ok = rec.all_converged();
        for (c, &p) in counts.iter().zip(&row.reference.matvecs) {
            match c {
                Some(c) => {
                    let dev = (*c as f64 - p as f64) / p as f64;
                    if gated(i) {
                        worst = worst.max(dev.abs());
                    }
                    row_ok &= within(*c as f64, p as f64, MATVEC_BAND);
                }
                None => row_ok = false,
            }
        }
        let verdict = match (gated(i), row_ok) {
            (true, true) => "ok",
            (true, false) => "miss",
            (false, true) => "ok, informational",
            (false, false) => "miss, informational",
        };
        pass &= row_ok || !gated(i);
        let mg = rec
            .mg
            .map(|m| format!("{:.3}/{}", m.conv_factor, m.iters))
            .unwrap_or_else(|| "-".into());
        lines.push(format!(
            "{} nu={} k={} {} {}: matvecs {:?} ref {:?}; mg {mg} ref {}/{}; {:.0}s [{}]",
            row.problem.id,
            row.problem.nu,
            row.problem.k.re,
            row.problem.bc,
            row.shift.label(),
            counts.iter().map(|c| c.unwrap_or(0)).collect::<Vec<_>>(),
            row.reference.matvecs,
            row.reference.conv,
            row.reference.cycles,
            t.elapsed().as_secs_f64(),
            verdict
        ));
        records.push(rec);
    }
    Outcome::new(
        pass,
        format!(
            "{table}: {} rows, worst deviation on gated rows {:.0}% (band 30%)",
            lines.len(),
            100.0 * worst
        ),
    )
    .detail(lines)
}

fn c8_mp1(records: &mut Vec<CaseRecord>) -> Outcome {
    let rows = table_rows(TableId::Mp1, false);
    // the criterion names the table-shift CSL and the CSG row of each block
    let out = table_check(TableId::Mp1, rows.clone(), |i| i % 3 != 2, records);
    // the same row with left preconditioning, stopping on M⁻¹r
    let row = rows
        .iter()
        .find(|r| r.problem.bc == BcChoice::Ecs && r.shift.kind == ecs_helmholtz::precond::ShiftKind::Csl)
        .unwrap();
    let mut cfg = row.config();
    cfg.opts.side = PrecondSide::Left;
    let rec = run_case(&cfg).unwrap();
    let counts: Vec<usize> = TABLE_SOLVERS.iter().map(|&m| rec.matvecs(m).unwrap_or(0)).collect();
    let mut details = out.details;
    details.push(format!(
        "left-preconditioned ecs {}: matvecs {counts:?}",
        row.shift.label()
    ));
    Outcome { details, ..out }
}

fn c9_mp2(records: &mut Vec<CaseRecord>) -> Outcome {
    table_check(TableId::Mp2, table_rows(TableId::Mp2, false), |_| true, records)
}

fn c10_gmres() -> Outcome {
    let p = ProblemSpec::mp2(1.0, 4.0, BcChoice::Ecs);
    let mut cfg = CaseConfig::table(p, ShiftSpec::csg_from_denominator(26.0).unwrap());
    cfg.solvers = vec![SolverMethod::Gmres];
    // seven orders of magnitude
    cfg.opts.tol = 1e-7;
    let rec = run_case(&cfg).unwrap();
    let r = &rec.solves[0];
    let pass = r.converged && r.iterations.abs_diff(103) <= 25;
    Outcome::new(
        pass,
        format!(
            "{} iterations to 1e-7 (ref 103 +- 25), true relres {:.1e}",
            r.iterations, r.true_final_relres
        ),
    )
}

fn c11_mp3(records: &mut Vec<CaseRecord>) -> Option<Outcome> {
    if std::env::var("ECS_EXTENDED").map(|v| v != "1").unwrap_or(true) {
        return None;
    }
    let rows: Vec<_> = table_rows(TableId::Mp3, false)
        .into_iter()
        .filter(|r| r.problem.bc == BcChoice::Ecs)
        .collect();
    let mut out = table_check(TableId::Mp3, rows.clone(), |_| true, records);
    // the criterion names the Bi-CGSTAB column
    let start = records.len() - rows.len();
    out.pass = rows.iter().zip(&records[start..]).all(|(row, rec)| {
        rec.matvecs(SolverMethod::Bicgstab)
            .is_some_and(|c| within(c as f64, row.reference.matvecs[0] as f64, MATVEC_BAND))
    });
    Some(out)
}

fn c12_cross_validation(records: &[CaseRecord]) -> Outcome {
    let worst_gap = Cell::new(0.0f64);
    let worst_res = Cell::new(0.0f64);
    let mut runner = TestRunner::new(Config {
        cases: 8,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (4.0..30.0f64, proptest::bool::ANY, 0.2..0.8f64, proptest::bool::ANY);
    let result = runner.run(&strategy, |(k, ecs, im, right)| {
        let bc = if ecs { BcChoice::Ecs } else { BcChoice::Sommerfeld };
        let d = ProblemSpec::mp1(k, bc).discretize(64, 16).unwrap();
        let sign = if ecs { -1.0 } else { 1.0 };
        let shift = ShiftSpec::from_table_shift(C64::new(-1.0, sign * im)).unwrap();
        let h = build_hierarchy(&d, &shift, &CycleSpec::default()).unwrap();
        let pc = MgPreconditioner {
            hierarchy: &h,
            rhs_scale: shift.rhs_scale,
        };
        let opts = SolverOptions {
            side: if right { PrecondSide::Right } else { PrecondSide::Left },
            ..SolverOptions::default()
        };
        let mut xs = Vec::new();
        for m in [SolverMethod::Bicgstab, SolverMethod::Idr(4), SolverMethod::Gmres] {
            let (x, r) = solve(m, &d.op.a, &d.op.b, &pc, &opts).unwrap();
            proptest::prop_assert!(r.converged, "{m} did not converge");
            proptest::prop_assert!(r.true_final_relres <= 1e-5, "{m}: {}", r.true_final_relres);
            worst_res.set(worst_res.get().max(r.true_final_relres));
            xs.push(x);
        }
        for i in 0..3 {
            for j in i + 1..3 {
                let num: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| (a - b).norm_sqr()).sum();
                let den: f64 = xs[j].iter().map(|b| b.norm_sqr()).sum();
                let gap = (num / den).sqrt();
                worst_gap.set(worst_gap.get().max(gap));
                proptest::prop_assert!(gap < 1e-4, "pair {i},{j}: {gap:.1e}");
            }
        }
        Ok(())
    });
    let mut details = Vec::new();
    let mut pass = result.is_ok();
    if let Err(e) = result {
        details.push(e.to_string());
    }
    let table_res: Vec<f64> = records
        .iter()
        .flat_map(|r| &r.solves)
        .filter(|s| s.converged)
        .map(|s| s.true_final_relres)
        .collect();
    let table_worst = table_res.iter().copied().fold(0.0f64, f64::max);
    pass &= table_worst <= 1e-5;
    let table_note = if table_res.is_empty() {
        "no table runs in this invocation".to_string()
    } else {
        format!("{} table solves, max true relres {table_worst:.1e}", table_res.len())
    };
    Outcome::new(
        pass,
        format!(
            "8 random systems: max pairwise gap {:.1e}, max true relres {:.1e}; {table_note}",
            worst_gap.get(),
            worst_res.get()
        ),
    )
    .detail(details)
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |c: u32| selected.is_empty() || selected.contains(&c);
    let mut records = Vec::new();
    let mut unexpected = Vec::new();
    let names = [
        "spectral oracle equivalence",
        "containment in the bounds box",
        "tail eigenvalue order",
        "mesh width tables",
        "CSL and CSG equivalence",
        "standalone multigrid, MP1",
        "multigrid on the unshifted operator",
        "MP1 table, k=160",
        "MP2 table, 384^2",
        "GMRES on MP2 nu=1 k=4",
        "MP3 table, r=90 k=2 (extended)",
        "Krylov cross-validation",
    ];
    for c in 1..=12u32 {
        if !wanted(c) {
            continue;
        }
        let t = Instant::now();
        let out = match c {
            1 => Some(c1_spectral_oracle()),
            2 => Some(c2_containment()),
            3 => Some(c3_tail_order()),
            4 => Some(c4_mesh_tables()),
            5 => Some(c5_csl_csg()),
            6 => Some(c6_standalone_mg()),
            7 => Some(c7_unshifted()),
            8 => Some(c8_mp1(&mut records)),
            9 => Some(c9_mp2(&mut records)),
            10 => Some(c10_gmres()),
            11 => c11_mp3(&mut records),
            _ => Some(c12_cross_validation(&records)),
        };
        let name = names[c as usize - 1];
        let secs = t.elapsed().as_secs_f64();
        match out {
            None => println!("SKIP C{c:<2} {name}: set ECS_EXTENDED=1 to run"),
            Some(o) => {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                println!("{tag} C{c:<2} {name}: {} ({secs:.1}s)", o.summary);
                for d in &o.details {
                    println!("         {d}");
                }
                if !o.pass && !KNOWN_FAILURES.contains(&c) {
                    unexpected.push(c);
                }
            }
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
