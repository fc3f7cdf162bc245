use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::bounds::gershgorin_bounds;
use crate::{EcsGrid1D, Error, Result, Topology, C64};

/// One evaluation of the eigenvalue condition at `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConditionEval {
    pub lambda: C64,
    pub p: C64,
    pub q: C64,
    /// `1 - λh²/2`
    pub s: C64,
    /// `1 - λ(γh)²/2`
    pub t: C64,
    pub f: C64,
}

/// Interior width and layer ratio of a vertex-centered grid with one uniform
/// right layer.
fn uniform_parts(grid: &EcsGrid1D) -> Result<(C64, C64)> {
    if grid.topology != Topology::VertexCentered || grid.m == 0 {
        return Err(Error::InvalidGrid(
            "eigenvalue condition needs a vertex-centered grid with a right layer".into(),
        ));
    }
    let w = grid.widths();
    let (h, hg) = (w[0], w[grid.n]);
    let uniform = w[..grid.n].iter().all(|x| (x - h).norm() <= 1e-12 * h.norm())
        && w[grid.n..].iter().all(|x| (x - hg).norm() <= 1e-12 * hg.norm());
    if !uniform {
        return Err(Error::InvalidGrid(
            "eigenvalue condition needs uniform interior and layer widths".into(),
        ));
    }
    Ok((h, hg / h))
}

/// `tan` that saturates to `±i` instead of overflowing to NaN.
fn tan_c(z: C64) -> C64 {
    if z.im > 20.0 {
        C64::new(0.0, 1.0)
    } else if z.im < -20.0 {
        C64::new(0.0, -1.0)
    } else {
        z.sin() / z.cos()
    }
}

struct Angles {
    s: C64,
    t: C64,
    p: C64,
    q: C64,
}

fn angles(lambda: C64, h: C64, gamma: C64) -> Angles {
    let s = 1.0 - lambda * h * h * 0.5;
    let t = 1.0 - lambda * gamma * gamma * h * h * 0.5;
    Angles {
        s,
        t,
        p: 0.5 * s.acos(),
        q: 0.5 * t.acos(),
    }
}

/// `F(λ) = tan(2np)/tan(2mq) + cos p / cos q`.
pub fn eigen_condition_f(lambda: C64, grid: &EcsGrid1D) -> Result<EigenConditionEval> {
    let (h, gamma) = uniform_parts(grid)?;
    let a = angles(lambda, h, gamma);
    let (n, m) = (grid.n as f64, grid.m as f64);
    let tq = tan_c(2.0 * m * a.q);
    let cq = a.q.cos();
    if tq.norm() < 1e-14 || cq.norm() < 1e-14 {
        return Err(Error::ConditionPole {
            re: lambda.re,
            im: lambda.im,
        });
    }
    let f = tan_c(2.0 * n * a.p) / tq + a.p.cos() / cq;
    Ok(EigenConditionEval {
        lambda,
        p: a.p,
        q: a.q,
        s: a.s,
        t: a.t,
        f,
    })
}

/// Condition multiplied through by `cos(2np) cos(2mq) cos q`; entire in
/// `λ` away from the arccos branch points.
fn cleared(lambda: C64, h: C64, gamma: C64, n: f64, m: f64) -> C64 {
    let a = angles(lambda, h, gamma);
    let (np, mq) = (2.0 * n * a.p, 2.0 * m * a.q);
    np.sin() * mq.cos() * a.q.cos() + np.cos() * mq.sin() * a.p.cos()
}

/// Smallest of the residuals of `F`, of the reciprocal form
/// `cot(2mq) + cot(2np) cos p / cos q`, and of the two terms of the cleared
/// form when both vanish (where `F` is `0/0`). Branch points are never roots.
fn root_residual(lambda: C64, h: C64, gamma: C64, n: f64, m: f64) -> f64 {
    let a = angles(lambda, h, gamma);
    let (cp, cq) = (a.p.cos(), a.q.cos());
    if cp.norm() < 1e-6 || cq.norm() < 1e-6 {
        return f64::INFINITY;
    }
    let (np, mq) = (2.0 * n * a.p, 2.0 * m * a.q);
    let f1 = tan_c(np) / tan_c(mq) + cp / cq;
    let f2 = 1.0 / tan_c(mq) + cp / (tan_c(np) * cq);
    let both = (np.sin() * mq.cos() * cq).norm().max((np.cos() * mq.sin() * cp).norm());
    [f1, f2]
        .iter()
        .filter(|f| f.re.is_finite() && f.im.is_finite())
        .map(|f| f.norm())
        .fold(both, f64::min)
}

/// `γ sin p / sin q` equals `±1` at every root; `+1` selects the branch on
/// which the discrete eigenvector is continuous at the turning point.
fn branch_ratio(lambda: C64, h: C64, gamma: C64) -> C64 {
    let a = angles(lambda, h, gamma);
    gamma * a.p.sin() / a.q.sin()
}

/// Newton on `g(x) / (x * prod(x - r))` written through the logarithmic
/// derivative so the deflation product never overflows.
fn newton(
    g: &dyn Fn(C64) -> C64,
    x0: C64,
    deflate: &[C64],
    deflate_zero: bool,
    tol: f64,
    max_iter: usize,
) -> Option<C64> {
    let mut x = x0;
    for _ in 0..max_iter {
        let gx = g(x);
        if gx == C64::new(0.0, 0.0) {
            return Some(x);
        }
        let d = 1e-7 * (1.0 + x.norm());
        let dg = (g(x + d) - g(x - d)) / (2.0 * d);
        let mut ratio = dg / gx;
        if deflate_zero {
            ratio -= 1.0 / x;
        }
        for r in deflate {
            ratio -= 1.0 / (x - r);
        }
        if !(ratio.re.is_finite() && ratio.im.is_finite()) || ratio.norm() == 0.0 {
            return None;
        }
        let dx = 1.0 / ratio;
        x -= dx;
        if !(x.re.is_finite() && x.im.is_finite()) {
            return None;
        }
        if dx.norm() < tol * (1.0 + x.norm()) {
            return Some(x);
        }
    }
    None
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonRoots {
    /// Distinct accepted roots, sorted by modulus.
    pub roots: Vec<C64>,
    /// Seeds whose iteration did not converge or converged to a rejected point.
    pub dropped_seeds: Vec<C64>,
}

/// Seeds along the three regions of the pitchfork picture: the tail
/// `(lπ/R_z)²`, the real branch `(4/h²) sin²(lπ/2n)` and the rotated branch
/// `(4/(γh)²) sin²(lπ/2m)`.
pub fn default_seeds(grid: &EcsGrid1D) -> Vec<C64> {
    let h = grid.h * grid.scale;
    let hg = grid.h_gamma * grid.scale;
    let (n, m) = (grid.n, grid.m);
    let mut seeds = Vec::with_capacity(2 * (n + m));
    for l in 1..n + m {
        let z = l as f64 * PI / grid.r_z;
        seeds.push(z * z);
    }
    for l in 1..=n {
        let s = (l as f64 * PI / (2.0 * n as f64)).sin();
        seeds.push(4.0 / (h * h) * s * s);
    }
    for l in 1..=m {
        let s = (l as f64 * PI / (2.0 * m as f64)).sin();
        seeds.push(4.0 / (hg * hg) * s * s);
    }
    seeds
}

/// `per_side × per_side` lattice covering the Gershgorin box, unscaled.
pub fn lattice_seeds(grid: &EcsGrid1D, per_side: usize) -> Result<Vec<C64>> {
    let b = gershgorin_bounds(grid)?;
    let h = grid.h * grid.scale;
    let inv_h2 = 1.0 / (h * h);
    let step = |lo: f64, hi: f64, i: usize| {
        if per_side < 2 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (per_side - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            let z = C64::new(step(b.re_min, b.re_max, i), step(b.im_min, b.im_max, j));
            out.push(z * inv_h2);
        }
    }
    Ok(out)
}

/// Roots of the eigenvalue condition reachable from `seeds`.
///
/// Each seed runs Newton on the pole-free form of the condition, deflated by
/// `λ = 0` and the roots already found, and is then polished without
/// deflation. A candidate is accepted when `|F| < 1e-8` (or the
/// reciprocal form where `F` is `∞/∞`), it lies on the
/// consistent arccos branch, and it is not a duplicate. Seeds are swept
/// repeatedly (at most five rounds) until `n + m - 1` roots are known.
pub fn newton_solve_eigs(grid: &EcsGrid1D, seeds: &[C64], tol: f64, max_iter: usize) -> Result<NewtonRoots> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    if seeds.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::InvalidParameter("non-finite Newton seed".into()));
    }
    let (h, gamma) = uniform_parts(grid)?;
    let (n, m) = (grid.n as f64, grid.m as f64);
    let expected = grid.cells() - 1;
    let g = |x: C64| cleared(x, h, gamma, n, m);
    let scale = (1.0 / (h * h)).norm();

    let mut roots: Vec<C64> = Vec::new();
    let mut dropped = Vec::new();
    for round in 0..5 {
        let last = round == 4;
        for &seed in seeds {
            let accepted = newton(&g, seed, &roots, true, tol, max_iter)
                .and_then(|x| newton(&g, x, &[], false, tol, max_iter))
                .filter(|&r| r.norm() > 1e-8 * scale)
                .filter(|&r| root_residual(r, h, gamma, n, m) < 1e-8)
                .filter(|&r| (branch_ratio(r, h, gamma) - 1.0).norm() < 1e-4)
                .filter(|&r| roots.iter().all(|q| (r - q).norm() > 1e3 * tol * r.norm()));
            match accepted {
                Some(r) => roots.push(r),
                None if round == 0 || last => dropped.push(seed),
                None => {}
            }
            if roots.len() >= expected {
                break;
            }
        }
        if roots.len() >= expected {
            break;
        }
    }
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    if !dropped.is_empty() {
        log::debug!("newton: {} seeds dropped", dropped.len());
    }
    Ok(NewtonRoots {
        roots,
        dropped_seeds: dropped,
    })
}
