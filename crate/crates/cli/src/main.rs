use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ecs_helmholtz::discretize::assemble_1d;
use ecs_helmholtz::grid::build_ecs_grid_1d;
use ecs_helmholtz::harness::{emit_table, run_case, select_shift, write_table_csv, CaseConfig, SelectKind, TableId};
use ecs_helmholtz::problems::{make_problem, mesh_limit, suggest_grid, BcChoice, ProblemParams};
use ecs_helmholtz::spectral::{
    dense_eigensolve_oracle, gershgorin_bounds, lattice_seeds, newton_solve_eigs, pitchfork_model, DEFAULT_RHO0,
    ORACLE_MAX_DIM,
};
use ecs_helmholtz::{
    CycleSpec, PrecondSide, ProblemId, ProblemSpec, ShiftSpec, SolverMethod, SolverOptions, Topology, C64,
};

#[derive(Parser)]
#[command(
    name = "ecs-helmholtz",
    version,
    about = "Preconditioned Helmholtz solves with ECS absorbing layers"
)]
struct Cli {
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues of the 1D ECS Laplacian: Newton roots, dense oracle, bounds.
    Spectrum(SpectrumArgs),
    /// One preconditioned solve of a model problem.
    Solve(SolveArgs),
    /// Mesh width limit and suggested grid.
    Meshcalc(ProblemArgs),
    /// Reproduce a table of iterative results.
    Bench {
        #[arg(long)]
        table: TableId,
        /// Include the runs too large for the default suite.
        #[arg(long)]
        extended: bool,
    },
    /// Smallest CSL shift or CSG angle for which multigrid converges in at most 20 cycles.
    SelectShift(SelectArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Interior cells.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Layer cells.
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Layer angle in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    theta: f64,
    /// Interior length.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Lattice seeds per side for the Newton search.
    #[arg(long, default_value_t = 40)]
    seeds: usize,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, default_value = "mp1")]
    problem: ProblemId,
    /// Wavenumber, `RE` or `RE,IM`.
    #[arg(long, default_value = "160")]
    k: String,
    #[arg(long, default_value_t = 7.0)]
    nu: f64,
    /// Domain edge length (MP3).
    #[arg(long, default_value_t = 90.0)]
    r: f64,
    #[arg(long, value_enum, default_value_t = Bc::Ecs)]
    bc: Bc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bc {
    Sommerfeld,
    Ecs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precond {
    None,
    Csl,
    Csg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Left,
    Right,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Interior cells per axis (default: table grid).
    #[arg(long)]
    n: Option<usize>,
    /// Layer cells per absorbing edge.
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, value_enum, default_value_t = Precond::Csl)]
    precond: Precond,
    /// CSL shift in the table convention `-β²`, as `RE,IM`.
    #[arg(long, default_value = "-1,-0.2", allow_hyphen_values = true)]
    shift: String,
    /// CSG angle `π / D`.
    #[arg(long, allow_hyphen_values = true)]
    angle_denominator: Option<f64>,
    /// Solvers, e.g. `bicgstab,idr(4),gmres`.
    #[arg(long, default_value = "bicgstab,idr(4),idr(8)")]
    solvers: String,
    #[arg(long, default_value = "V(0,1)-ilu0-fw-bilin-gcg")]
    cycle: CycleSpec,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_matvecs: usize,
    #[arg(long, default_value_t = SolverOptions::default().seed)]
    seed: u64,
    /// Preconditioning side; right stops on the true residual.
    #[arg(long, value_enum, default_value_t = Side::Right)]
    side: Side,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, default_value = "csl")]
    kind: SelectKind,
    /// Starting `|Im s|` (CSL) or `|θ_β|` in radians (CSG).
    #[arg(long)]
    start: f64,
    #[arg(long, default_value = "V(0,1)-ilu0-fw-bilin-gcg")]
    cycle: CycleSpec,
}

fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().with_context(|| format!("bad number {t:?}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => bail!("expected RE or RE,IM, got {s:?}"),
    }
}

impl ProblemArgs {
    fn spec(&self) -> Result<ProblemSpec> {
        let bc = match self.bc {
            Bc::Sommerfeld => BcChoice::Sommerfeld,
            Bc::Ecs => BcChoice::Ecs,
        };
        Ok(make_problem(
            self.problem,
            ProblemParams {
                k: parse_complex(&self.k)?,
                nu: self.nu,
                r: self.r,
                bc,
                ..ProblemParams::default()
            },
        )?)
    }
}

fn grid_of(spec: &ProblemSpec, n: Option<usize>, layer: Option<usize>) -> (usize, usize) {
    let (pn, pl) = spec.table_grid();
    match (n, layer) {
        (Some(n), Some(l)) => (n, l),
        (Some(n), None) => (n, n / 4),
        (None, l) => (pn, l.unwrap_or(pl)),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn spectrum(a: &SpectrumArgs, out: &Path) -> Result<bool> {
    let r_layer = a.r * (1.0 + a.m.max(1) as f64 / a.n as f64);
    let grid = build_ecs_grid_1d(a.n, a.m, a.theta, a.r, r_layer, Topology::VertexCentered)?;
    let bounds = gershgorin_bounds(&grid)?;
    let newton = newton_solve_eigs(&grid, &lattice_seeds(&grid, a.seeds)?, 1e-12, 100)?;
    let op = assemble_1d(&grid, 0.0)?;
    let oracle = if op.a.dim() <= ORACLE_MAX_DIM {
        Some(dense_eigensolve_oracle(&op.a)?)
    } else {
        log::warn!("{} unknowns exceed the oracle limit {ORACLE_MAX_DIM}", op.a.dim());
        None
    };
    let model = pitchfork_model(&grid, (grid.n + grid.m).saturating_sub(2).min(16), DEFAULT_RHO0)?;
    let mut w = csv_writer(&out.join("spectrum.csv"))?;
    w.write_record(["source", "re", "im"])?;
    for (src, vals) in [("newton", Some(&newton.roots)), ("oracle", oracle.as_ref())] {
        for z in vals.into_iter().flatten() {
            w.write_record([src.to_string(), format!("{:.12e}", z.re), format!("{:.12e}", z.im)])?;
        }
    }
    w.flush()?;
    let expected = grid.n + grid.m - 1;
    write_json(
        &out.join("spectrum.json"),
        &json!({
            "grid": grid.summary(),
            "bounds_h2_scaled": bounds,
            "model": model,
            "newton_roots": newton.roots.len(),
            "dropped_seeds": newton.dropped_seeds.len(),
            "oracle_eigenvalues": oracle.as_ref().map(Vec::len),
            "expected": expected,
        }),
    )?;
    println!(
        "{} of {expected} Newton roots; csv in {}",
        newton.roots.len(),
        out.display()
    );
    Ok(newton.roots.len() == expected)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn solve(a: &SolveArgs, out: &Path) -> Result<bool> {
    let spec = a.problem.spec()?;
    let (n, layer) = grid_of(&spec, a.n, a.layer);
    let shift = match a.precond {
        Precond::None => ShiftSpec::none(),
        Precond::Csl => ShiftSpec::from_table_shift(parse_complex(&a.shift)?)?,
        Precond::Csg => {
            let d = a.angle_denominator.context("--precond csg needs --angle-denominator")?;
            ShiftSpec::csg_from_denominator(d)?
        }
    };
    let solvers = a
        .solvers
        .split(',')
        .map(|s| s.parse::<SolverMethod>())
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = CaseConfig {
        problem: spec,
        n,
        layer,
        shift,
        cycle: a.cycle,
        solvers,
        opts: SolverOptions {
            tol: a.tol,
            max_matvecs: a.max_matvecs,
            seed: a.seed,
            side: match a.side {
                Side::Left => PrecondSide::Left,
                Side::Right => PrecondSide::Right,
            },
        },
    };
    let rec = run_case(&cfg)?;
    let stem = format!("{}_{}_{}", spec.id, spec.bc, sanitize(&rec.precond));
    write_json(&out.join(format!("{stem}.json")), &rec)?;
    for s in &rec.solves {
        let f = File::create(out.join(format!("{stem}_{}.csv", sanitize(&s.method.to_string()))))?;
        s.write_history_csv(BufWriter::new(f))?;
    }
    if let Some(m) = rec.mg {
        println!(
            "multigrid on {}: conv {:.3}, {} cycles",
            rec.precond, m.conv_factor, m.iters
        );
    }
    for s in &rec.solves {
        println!(
            "{}: {} matvecs, converged {}, true relres {:.2e}",
            s.method, s.matvecs, s.converged, s.true_final_relres
        );
    }
    for e in &rec.errors {
        eprintln!("error: {e}");
    }
    Ok(rec.all_converged())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn meshcalc(a: &ProblemArgs) -> Result<bool> {
    let spec = a.spec()?;
    let s = suggest_grid(&spec)?;
    let v = json!({
        "problem": spec.id,
        "k": spec.k.re,
        "nu": spec.nu,
        "r": spec.r,
        "h_max": mesh_limit(&spec),
        "suggestion": s,
    });
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(true)
}

fn bench(table: TableId, extended: bool, out: &Path) -> Result<bool> {
    let rows = emit_table(table, extended)?;
    let csv_rows: Vec<_> = rows.iter().map(|(c, _)| c.clone()).collect();
    let path = out.join(format!("table_{table}.csv"));
    write_table_csv(&csv_rows, File::create(&path)?)?;
    let records: Vec<_> = rows.iter().map(|(_, r)| r).collect();
    write_json(&out.join(format!("table_{table}.json")), &records)?;
    for c in &csv_rows {
        println!(
            "{:<10} {:<14} mg {:>5.2}/{:>3}  matvecs {:>4} {:>4} {:>4}  (ref {:.2}/{} {} {} {})",
            c.bc.to_string(),
            c.precond,
            c.mg_conv.unwrap_or(f64::NAN),
            c.mg_iters.unwrap_or(0),
            opt(c.bicgstab_matvecs),
            opt(c.idr4_matvecs),
            opt(c.idr8_matvecs),
            c.ref_mg_conv,
            c.ref_mg_iters,
            c.ref_bicgstab,
            c.ref_idr4,
            c.ref_idr8
        );
    }
    println!("wrote {}", path.display());
    Ok(csv_rows.iter().all(|c| c.all_converged))
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn select(a: &SelectArgs, out: &Path) -> Result<bool> {
    let spec = a.problem.spec()?;
    let (n, layer) = grid_of(&spec, a.n, a.layer);
    let sel = select_shift(&spec, n, layer, a.kind, a.start, &a.cycle)?;
    write_json(&out.join("select_shift.json"), &sel)?;
    println!(
        "{}: multigrid conv {:.3} in {} cycles ({} evaluations)",
        sel.shift.label(),
        sel.mg.conv_factor,
        sel.mg.iters,
        sel.evaluations
    );
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match &cli.cmd {
        Cmd::Spectrum(a) => spectrum(a, &cli.out),
        Cmd::Solve(a) => solve(a, &cli.out),
        Cmd::Meshcalc(a) => meshcalc(a),
        Cmd::Bench { table, extended } => bench(*table, *extended, &cli.out),
        Cmd::SelectShift(a) => select(a, &cli.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
