use std::time::Instant;

use super::{check_dims, finish, PrecOp, Preconditioner, SolverMethod, SolverOptions, SolverReport};
use crate::{axpy, dotc, norm2, Result, SparseOperator, C64};

/// Full GMRES with modified Gram-Schmidt and Givens rotations on the
/// left-preconditioned system. One iteration is one matvec.
pub fn gmres(
    a: &SparseOperator,
    b: &[C64],
    m: &dyn Preconditioner,
    opts: &SolverOptions,
) -> Result<(Vec<C64>, SolverReport)> {
    check_dims(a, b)?;
    let start = Instant::now();
    let op = PrecOp { a, m, side: opts.side };
    let mut rep = SolverReport::new(SolverMethod::Gmres);
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let r = op.initial_residual(b);
    let beta = norm2(&r);
    if beta == 0.0 {
        rep.converged = true;
        finish(&mut rep, a, b, &x, start);
        return Ok((x, rep));
    }
    let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
    // columns of the Hessenberg matrix, each of length j + 2
    let mut h: Vec<Vec<C64>> = Vec::new();
    let mut rots: Vec<(f64, C64)> = Vec::new();
    let mut g = vec![C64::new(beta, 0.0)];

    while rep.matvecs < opts.max_matvecs {
        let j = h.len();
        let mut w = op.apply(&basis[j], &mut rep);
        rep.iterations += 1;
        let mut col = vec![zero; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dotc(v, &w);
            col[i] = hij;
            axpy(-hij, v, &mut w);
        }
        let hnext = norm2(&w);
        col[j + 1] = C64::new(hnext, 0.0);
        for (i, &(c, s)) in rots.iter().enumerate() {
            let (p, q) = (col[i], col[i + 1]);
            col[i] = c * p + s * q;
            col[i + 1] = -s.conj() * p + c * q;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        col[j] = c * col[j] + s * col[j + 1];
        col[j + 1] = zero;
        rots.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s.conj() * gj);
        h.push(col);
        let rel = g[j + 1].norm() / beta;
        rep.record(rel);
        let happy = hnext <= 1e-14 * beta;
        if rel < opts.tol || happy || !rel.is_finite() {
            rep.converged = rel < opts.tol || happy;
            break;
        }
        basis.push(w.iter().map(|z| z / hnext).collect());
    }
    // back substitution on the triangular factor
    let k = h.len();
    let mut y = vec![zero; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for jj in i + 1..k {
            acc -= h[jj][i] * y[jj];
        }
        y[i] = acc / h[i][i];
    }
    for (yi, v) in y.iter().zip(&basis) {
        axpy(*yi, v, &mut x);
    }
    let x = op.solution(x);
    finish(&mut rep, a, b, &x, start);
    Ok((x, rep))
}

fn givens(x: C64, y: C64) -> (f64, C64) {
    let nrm = x.norm().hypot(y.norm());
    if nrm == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if x.norm() == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let alpha = x / x.norm();
    (x.norm() / nrm, alpha * y.conj() / nrm)
}
