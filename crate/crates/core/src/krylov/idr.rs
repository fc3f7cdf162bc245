use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use super::{check_dims, finish, PrecOp, Preconditioner, SolverMethod, SolverOptions, SolverReport};
use crate::{dotc, norm2, Error, Result, SparseOperator, C64};

/// `s` orthonormal rows with uniformly random complex entries.
fn shadow_space(n: usize, s: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(s);
    for _ in 0..s {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        for q in &rows {
            let c = dotc(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
        let nv = norm2(&v);
        for vi in &mut v {
            *vi /= nv;
        }
        rows.push(v);
    }
    rows
}

/// Solves the small `s × s` system by Gaussian elimination with partial
/// pivoting; `None` when the pivot ratio exceeds `1e14`.
fn small_solve(m: &[Vec<C64>], rhs: &[C64]) -> Option<Vec<C64>> {
    let s = rhs.len();
    let mut a: Vec<Vec<C64>> = (0..s).map(|i| (0..s).map(|j| m[j][i]).collect()).collect();
    let mut b = rhs.to_vec();
    let mut pmax: f64 = 0.0;
    let mut pmin = f64::INFINITY;
    for k in 0..s {
        let p = (k..s).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))?;
        a.swap(k, p);
        b.swap(k, p);
        let piv = a[k][k];
        pmax = pmax.max(piv.norm());
        pmin = pmin.min(piv.norm());
        if piv.norm() == 0.0 {
            return None;
        }
        for i in k + 1..s {
            let f = a[i][k] / piv;
            for j in k..s {
                let u = a[k][j];
                a[i][j] -= f * u;
            }
            let u = b[k];
            b[i] -= f * u;
        }
    }
    if pmax / pmin > 1e14 {
        return None;
    }
    for i in (0..s).rev() {
        let mut acc = b[i];
        for j in i + 1..s {
            acc -= a[i][j] * b[j];
        }
        b[i] = acc / a[i][i];
    }
    Some(b)
}

/// Projections `P^H v`.
fn project(p: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    p.iter().map(|row| dotc(row, v)).collect()
}

/// IDR(s) following the prototype algorithm of Sonneveld and van Gijzen,
/// with the residual checked after every matvec.
pub fn idr_s(
    s: usize,
    a: &SparseOperator,
    b: &[C64],
    m: &dyn Preconditioner,
    opts: &SolverOptions,
) -> Result<(Vec<C64>, SolverReport)> {
    if s == 0 {
        return Err(Error::InvalidParameter("IDR(s) needs s >= 1".into()));
    }
    check_dims(a, b)?;
    let start = Instant::now();
    let op = PrecOp { a, m, side: opts.side };
    let mut rep = SolverReport::new(SolverMethod::Idr(s));
    rep.seed = Some(opts.seed);
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
    let mut seed = opts.seed;
    let mut p = shadow_space(n, s, seed);
    let mut restarted = false;
    let mut d_r = vec![vec![zero; n]; s];
    let mut d_x = vec![vec![zero; n]; s];
    let mut mm = vec![vec![zero; s]; s]; // columns: P^H dR_k
    let mut rel = 1.0;

    // initial steepest-descent steps build the difference spaces
    for k in 0..s {
        if rep.matvecs >= opts.max_matvecs {
            break;
        }
        let v = op.apply(&r, &mut rep);
        rep.iterations += 1;
        let vv = dotc(&v, &v).re;
        if vv == 0.0 {
            rep.breakdown = Some("zero matvec in start-up".into());
            let x = op.solution(x);
            finish(&mut rep, a, b, &x, start);
            return Ok((x, rep));
        }
        let om = dotc(&v, &r) / vv;
        for i in 0..n {
            d_x[k][i] = om * r[i];
            d_r[k][i] = -om * v[i];
            x[i] += d_x[k][i];
            r[i] += d_r[k][i];
        }
        rel = norm2(&r) / r0;
        rep.record(rel);
        mm[k] = project(&p, &d_r[k]);
        if rel < opts.tol {
            rep.converged = true;
            let x = op.solution(x);
            finish(&mut rep, a, b, &x, start);
            return Ok((x, rep));
        }
    }

    let mut oldest = 0;
    let mut mvec = project(&p, &r);
    let mut om = C64::new(1.0, 0.0);
    'outer: while rel >= opts.tol && rep.matvecs < opts.max_matvecs {
        for k in 0..=s {
            let c = match small_solve(&mm, &mvec) {
                Some(c) => c,
                None if !restarted => {
                    restarted = true;
                    seed = seed.wrapping_add(1);
                    log::debug!("idr({s}): ill-conditioned projection, new shadow seed {seed}");
                    p = shadow_space(n, s, seed);
                    for j in 0..s {
                        mm[j] = project(&p, &d_r[j]);
                    }
                    mvec = project(&p, &r);
                    match small_solve(&mm, &mvec) {
                        Some(c) => c,
                        None => {
                            rep.breakdown = Some("singular projected system".into());
                            break 'outer;
                        }
                    }
                }
                None => {
                    rep.breakdown = Some("singular projected system".into());
                    break 'outer;
                }
            };
            // q = -dR c, v = r + q
            let mut q = vec![zero; n];
            let mut dxc = vec![zero; n];
            for j in 0..s {
                for i in 0..n {
                    q[i] -= d_r[j][i] * c[j];
                    dxc[i] += d_x[j][i] * c[j];
                }
            }
            let v: Vec<C64> = r.iter().zip(&q).map(|(ri, qi)| ri + qi).collect();
            if k == 0 {
                let t = op.apply(&v, &mut rep);
                let tt = dotc(&t, &t).re;
                if tt == 0.0 {
                    rep.breakdown = Some("t vanished".into());
                    break 'outer;
                }
                om = dotc(&t, &v) / tt;
                for i in 0..n {
                    d_r[oldest][i] = q[i] - om * t[i];
                    d_x[oldest][i] = -dxc[i] + om * v[i];
                }
            } else {
                for i in 0..n {
                    d_x[oldest][i] = -dxc[i] + om * v[i];
                }
                let adx = op.apply(&d_x[oldest], &mut rep);
                for i in 0..n {
                    d_r[oldest][i] = -adx[i];
                }
            }
            rep.iterations += 1;
            for i in 0..n {
                r[i] += d_r[oldest][i];
                x[i] += d_x[oldest][i];
            }
            rel = norm2(&r) / r0;
            rep.record(rel);
            if !rel.is_finite() {
                rep.breakdown = Some("non-finite residual".into());
                break 'outer;
            }
            if rel < opts.tol {
                rep.converged = true;
                break 'outer;
            }
            if rep.matvecs >= opts.max_matvecs {
                break 'outer;
            }
            let dm = project(&p, &d_r[oldest]);
            for j in 0..s {
                mvec[j] += dm[j];
            }
            mm[oldest] = dm;
            oldest = (oldest + 1) % s;
        }
    }
    rep.seed = Some(seed);
    let x = op.solution(x);
    finish(&mut rep, a, b, &x, start);
    Ok((x, rep))
}

#[cfg(test)]
mod tests {
    use super::super::test_util::{laplacian, rhs};
    use super::super::IdentityPreconditioner;
    use super::*;

    #[test]
    fn shadow_rows_are_orthonormal() {
        let p = shadow_space(50, 4, 7);
        for i in 0..4 {
            for j in 0..4 {
                let d = dotc(&p[i], &p[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).norm() < 1e-12);
            }
        }
        assert_eq!(shadow_space(50, 4, 7), p);
    }

    #[test]
    fn idr1_on_spd_laplacian() {
        let a = laplacian(32, C64::new(0.0, 0.0));
        let b = rhs(1024);
        let (_, r) = idr_s(1, &a, &b, &IdentityPreconditioner, &SolverOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.breakdown);
        assert!(r.true_final_relres < 1e-5);
    }

    #[test]
    fn idr_on_indefinite_complex_system() {
        let a = laplacian(16, C64::new(-0.5, 0.2));
        let b = rhs(256);
        for s in [2, 4, 8] {
            let (_, r) = idr_s(s, &a, &b, &IdentityPreconditioner, &SolverOptions::default()).unwrap();
            assert!(r.converged, "s={s}");
            assert!(r.matvecs >= r.iterations);
            assert_eq!(r.seed, Some(SolverOptions::default().seed));
        }
    }
}
