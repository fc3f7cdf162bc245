use ecs_helmholtz::harness::{
    read_table_csv, run_case, select_shift, table_rows, write_table_csv, CaseConfig, CaseRecord, ReferenceRow,
    SelectKind, TableCsvRow, TableId, TableRow, SELECT_MAX_CYCLES, TABLE_SOLVERS,
};
use ecs_helmholtz::problems::{BcChoice, ProblemSpec};
use ecs_helmholtz::{CycleSpec, ShiftSpec, SolverMethod, C64};

fn small_case(bc: BcChoice, shift: ShiftSpec) -> CaseConfig {
    CaseConfig {
        n: 64,
        layer: 16,
        ..CaseConfig::table(ProblemSpec::mp1(40.0, bc), shift)
    }
}

#[test]
fn records_replay_exactly() {
    let cfg = small_case(BcChoice::Ecs, ShiftSpec::csg_from_denominator(28.0).unwrap());
    let rec = run_case(&cfg).unwrap();
    assert!(rec.all_converged(), "{:?}", rec.errors);
    assert!(rec.mg.unwrap().converged);
    for r in &rec.solves {
        assert!(r.true_final_relres <= 10.0 * cfg.opts.tol);
    }
    let back: CaseRecord = serde_json::from_str(&rec.to_json().unwrap()).unwrap();
    assert_eq!(back.config, cfg);
    let again = run_case(&back.config).unwrap();
    for m in TABLE_SOLVERS {
        assert_eq!(again.matvecs(m), rec.matvecs(m), "{m}");
    }
}

#[test]
fn unpreconditioned_failure_is_recorded() {
    let mut cfg = small_case(BcChoice::Ecs, ShiftSpec::none());
    cfg.solvers = vec![SolverMethod::Bicgstab];
    cfg.opts.max_matvecs = 200;
    let rec = run_case(&cfg).unwrap();
    assert!(rec.mg.is_none());
    assert_eq!(rec.solves.len(), 1);
    assert!(!rec.solves[0].converged);
    assert!(!rec.all_converged());
}

#[test]
fn table_structure() {
    for (t, rows) in [(TableId::Mp1, 6), (TableId::Mp2, 12), (TableId::Mp3, 6)] {
        let all = table_rows(t, false);
        assert_eq!(all.len(), rows, "{t}");
        for bc in [BcChoice::Sommerfeld, BcChoice::Ecs] {
            assert_eq!(all.iter().filter(|r| r.problem.bc == bc).count() % 3, 0);
        }
        assert!(all.iter().all(|r| !r.extended));
    }
    let mp3 = table_rows(TableId::Mp3, true);
    assert_eq!(mp3.len(), 12);
    assert!(mp3.iter().filter(|r| r.extended).all(|r| r.n == 2048));

    let mp1 = table_rows(TableId::Mp1, false);
    let ecs_csl = mp1
        .iter()
        .find(|r| r.problem.bc == BcChoice::Ecs && r.shift.table_shift() == C64::new(-1.0, -0.2))
        .unwrap();
    assert_eq!(ecs_csl.reference.matvecs, [59, 62, 60]);
    assert_eq!((ecs_csl.n, ecs_csl.layer), (256, 64));
}

#[test]
fn table_csv_round_trip() {
    let shift = ShiftSpec::from_table_shift(C64::new(-1.0, 0.2)).unwrap();
    let row = TableRow {
        table: TableId::Mp1,
        problem: ProblemSpec::mp1(40.0, BcChoice::Sommerfeld),
        n: 64,
        layer: 16,
        shift,
        reference: ReferenceRow {
            conv: 0.31,
            cycles: 12,
            matvecs: [79, 72, 76],
        },
        extended: false,
    };
    let rec = run_case(&row.config()).unwrap();
    let failed = CaseRecord {
        mg: None,
        solves: Vec::new(),
        ..rec.clone()
    };
    let rows = vec![TableCsvRow::new(&row, &rec), TableCsvRow::new(&row, &failed)];
    let mut buf = Vec::new();
    write_table_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(read_table_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn shift_selection_brackets_the_threshold() {
    let p = ProblemSpec::mp1(40.0, BcChoice::Ecs);
    let cycle = CycleSpec::default();
    let sel = select_shift(&p, 64, 16, SelectKind::Csl, 0.5, &cycle).unwrap();
    assert!(sel.mg.converged && sel.mg.iters <= SELECT_MAX_CYCLES);
    assert!(sel.reduced_fails);
    assert!(sel.magnitude > 0.0 && sel.magnitude < 0.5);
    assert!(sel.shift.table_shift().im < 0.0);

    // a start that cannot converge is rejected
    let sel = select_shift(&p, 64, 16, SelectKind::Csl, 1e-3, &cycle);
    assert!(sel.is_err());
}

/// The MP1 table uses `|Im s| = 0.2`; selection from 0.5 should land
/// within half of that.
#[test]
fn shift_selection_at_table_scale() {
    let p = ProblemSpec::mp1(160.0, BcChoice::Ecs);
    let sel = select_shift(&p, 256, 64, SelectKind::Csl, 0.5, &CycleSpec::default()).unwrap();
    assert!((sel.magnitude - 0.2).abs() <= 0.1, "{}", sel.magnitude);
}
