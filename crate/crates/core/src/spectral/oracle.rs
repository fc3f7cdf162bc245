//! Dense complex eigenvalues: Householder reduction to Hessenberg form
//! followed by single-shift QR with Wilkinson shifts and deflation.

use crate::{Error, Result, SparseOperator, C64};

pub const ORACLE_MAX_DIM: usize = 512;

type Dense = Vec<Vec<C64>>;

fn hessenberg(a: &mut Dense) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[i][k]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= vnorm;
        }
        // A <- (I - 2vv^H) A
        for j in k..n {
            let s: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * a[k + 1 + t][j]).sum();
            for (t, vi) in v.iter().enumerate() {
                a[k + 1 + t][j] -= 2.0 * vi * s;
            }
        }
        // A <- A (I - 2vv^H)
        for row in a.iter_mut() {
            let s: C64 = v.iter().enumerate().map(|(t, vi)| row[k + 1 + t] * vi).sum();
            for (t, vi) in v.iter().enumerate() {
                row[k + 1 + t] -= 2.0 * s * vi.conj();
            }
        }
    }
}

/// Rotation `[c s; -conj(s) c]` mapping `(x, y)` to `(r, 0)`.
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

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() < (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

fn hessenberg_qr(h: &mut Dense) -> Result<Vec<C64>> {
    let n = h.len();
    let mut eig = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let max_sweeps = 100 * n;
    let mut sweeps = 0;
    let mut hi = n - 1;
    let mut since_deflation = 0;
    let anorm = h.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let tiny = f64::EPSILON * (h[l - 1][l - 1].norm() + h[l][l].norm()).max(f64::EPSILON * anorm);
            if h[l][l - 1].norm() <= tiny {
                h[l][l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(Error::QrNoConvergence(sweeps));
        }
        let mu = if since_deflation % 11 == 0 {
            h[hi][hi] + C64::new(0.75, 0.5) * h[hi][hi - 1].norm()
        } else {
            wilkinson(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for i in l..=hi {
            h[i][i] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            for j in k..=hi {
                let (x, y) = (h[k][j], h[k + 1][j]);
                h[k][j] = c * x + s * y;
                h[k + 1][j] = -s.conj() * x + c * y;
            }
            rots.push((c, s));
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let k = l + t;
            for i in l..=(k + 1).min(hi) {
                let (x, y) = (h[i][k], h[i][k + 1]);
                h[i][k] = c * x + s.conj() * y;
                h[i][k + 1] = -s * x + c * y;
            }
        }
        for i in l..=hi {
            h[i][i] += mu;
        }
    }
    Ok(eig)
}

/// All eigenvalues of `a` (dimension at most [`ORACLE_MAX_DIM`]), sorted
/// by modulus.
pub fn dense_eigensolve_oracle(a: &SparseOperator) -> Result<Vec<C64>> {
    let n = a.dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::OracleTooLarge(n));
    }
    let mut d = a.to_dense();
    hessenberg(&mut d);
    let mut eig = hessenberg_qr(&mut d)?;
    eig.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    Ok(eig)
}

/// Inverse iteration for `λ`; returns `‖Av − λv‖ / (‖A‖_∞ ‖v‖)`.
pub fn eigenpair_residual(a: &SparseOperator, lambda: C64) -> f64 {
    let n = a.dim();
    let anorm = a.norm_inf().max(f64::MIN_POSITIVE);
    let mut m = a.to_dense();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    // LU with partial pivoting; zero pivots are nudged to eps * ‖A‖
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))
            .unwrap();
        m.swap(k, p);
        perm.swap(k, p);
        if m[k][k].norm() < f64::EPSILON * anorm {
            m[k][k] = C64::new(f64::EPSILON * anorm, 0.0);
        }
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            m[i][k] = f;
            for j in k + 1..n {
                let u = m[k][j];
                m[i][j] -= f * u;
            }
        }
    }
    let solve = |b: &[C64]| {
        let mut x: Vec<C64> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = m[i][j] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = m[i][j] * x[j];
                x[i] -= t;
            }
            x[i] /= m[i][i];
        }
        x
    };
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0, 0.1 * i as f64)).collect();
    for _ in 0..3 {
        v = solve(&v);
        let nv = crate::norm2(&v);
        for z in &mut v {
            *z /= nv;
        }
    }
    let mut r = a.matvec(&v);
    for (ri, vi) in r.iter_mut().zip(&v) {
        *ri -= lambda * vi;
    }
    crate::norm2(&r) / (anorm * crate::norm2(&v))
}
