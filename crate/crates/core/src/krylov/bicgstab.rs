use std::time::Instant;

use super::{check_dims, finish, PrecOp, Preconditioner, SolverMethod, SolverOptions, SolverReport};
use crate::{axpy, dotc, norm2, Result, SparseOperator, C64};

/// Bi-CGSTAB on the left-preconditioned system. The residual is checked
/// after both half steps, so a run may end on an odd matvec count.
pub fn bicgstab(
    a: &SparseOperator,
    b: &[C64],
    m: &dyn Preconditioner,
    opts: &SolverOptions,
) -> Result<(Vec<C64>, SolverReport)> {
    check_dims(a, b)?;
    let start = Instant::now();
    let op = PrecOp { a, m, side: opts.side };
    let mut rep = SolverReport::new(SolverMethod::Bicgstab);
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut r = op.initial_residual(b);
    let r0 = norm2(&r);
    if r0 == 0.0 {
        rep.converged = true;
        finish(&mut rep, a, b, &x, start);
        return Ok((x, rep));
    }
    let shadow = r.clone();
    let (mut rho, mut alpha, mut omega) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    let tiny = 1e-30;

    while rep.matvecs + 2 <= opts.max_matvecs {
        rep.iterations += 1;
        let rho_new = dotc(&shadow, &r);
        if rho_new.norm() < tiny * r0 * r0 {
            rep.breakdown = Some("rho vanished".into());
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = op.apply(&p, &mut rep);
        let sv = dotc(&shadow, &v);
        if sv.norm() < tiny * r0 * norm2(&v) {
            rep.breakdown = Some("<r~, v> vanished".into());
            break;
        }
        alpha = rho / sv;
        let mut s = r;
        axpy(-alpha, &v, &mut s);
        let s_rel = norm2(&s) / r0;
        rep.record(s_rel);
        if s_rel < opts.tol {
            axpy(alpha, &p, &mut x);
            rep.converged = true;
            break;
        }
        let t = op.apply(&s, &mut rep);
        let tt = dotc(&t, &t).re;
        if tt == 0.0 {
            rep.breakdown = Some("t vanished".into());
            axpy(alpha, &p, &mut x);
            break;
        }
        omega = dotc(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
        }
        r = s;
        axpy(-omega, &t, &mut r);
        let rel = norm2(&r) / r0;
        rep.record(rel);
        if rel < opts.tol {
            rep.converged = true;
            break;
        }
        if omega.norm() < tiny {
            rep.breakdown = Some("omega vanished".into());
            break;
        }
        if !rel.is_finite() {
            rep.breakdown = Some("non-finite residual".into());
            break;
        }
    }
    let x = op.solution(x);
    finish(&mut rep, a, b, &x, start);
    Ok((x, rep))
}
