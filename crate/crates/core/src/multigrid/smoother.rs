//! ILU(0) and damped Jacobi relaxation.

use crate::{Error, Result, SparseOperator, C64};

/// Incomplete LU factors sharing the sparsity pattern of `A`. `L` has unit
/// diagonal and is stored below the diagonal, `U` on and above it.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    lu: Vec<C64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Combined `L + U - I` values in the CSR order of `A`.
    pub fn values(&self) -> &[C64] {
        &self.lu
    }

    /// Solves `L U z = r` in place.
    pub fn solve_in_place(&self, r: &mut [C64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.lu[p] * r[self.col_idx[p]];
            }
            r[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = r[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.lu[p] * r[self.col_idx[p]];
            }
            r[i] = s / self.lu[self.diag[i]];
        }
    }
}

/// ILU(0) in IKJ order. `level` is only used in the error.
pub fn ilu0_factor(a: &SparseOperator, level: usize) -> Result<Ilu0> {
    let n = a.nrows();
    let row_ptr = a.row_ptr().to_vec();
    let col_idx = a.col_idx().to_vec();
    let mut lu = a.values().to_vec();
    let mut diag = vec![usize::MAX; n];
    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            if col_idx[p] == i {
                diag[i] = p;
            }
        }
        if diag[i] == usize::MAX {
            return Err(Error::ZeroPivot { level, row: i });
        }
    }
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);
        for p in start..end {
            pos[col_idx[p]] = p;
        }
        let row_norm = a.values()[start..end].iter().map(|z| z.norm()).fold(0.0, f64::max);
        for p in start..diag[i] {
            let k = col_idx[p];
            let w = lu[p] / lu[diag[k]];
            lu[p] = w;
            for q in diag[k] + 1..row_ptr[k + 1] {
                let j = col_idx[q];
                if pos[j] != usize::MAX {
                    let u = lu[q];
                    lu[pos[j]] -= w * u;
                }
            }
        }
        for p in start..end {
            pos[col_idx[p]] = usize::MAX;
        }
        if lu[diag[i]].norm() < 1e-14 * row_norm {
            return Err(Error::ZeroPivot { level, row: i });
        }
    }
    Ok(Ilu0 {
        row_ptr,
        col_idx,
        lu,
        diag,
    })
}

/// `x <- x + ω (LU)^{-1} (b - A x)`.
pub fn ilu0_sweep(f: &Ilu0, a: &SparseOperator, x: &mut [C64], b: &[C64], omega: f64, work: &mut Vec<C64>) {
    work.resize(x.len(), C64::new(0.0, 0.0));
    a.residual_into(b, x, work);
    f.solve_in_place(work);
    for (xi, zi) in x.iter_mut().zip(work.iter()) {
        *xi += omega * zi;
    }
}

/// `x <- x + ω D^{-1} (b - A x)` given `inv_diag = 1 / diag(A)`.
pub fn jacobi_sweep_with(
    inv_diag: &[C64],
    a: &SparseOperator,
    x: &mut [C64],
    b: &[C64],
    omega: f64,
    work: &mut Vec<C64>,
) {
    work.resize(x.len(), C64::new(0.0, 0.0));
    a.residual_into(b, x, work);
    for ((xi, ri), di) in x.iter_mut().zip(work.iter()).zip(inv_diag) {
        *xi += omega * ri * di;
    }
}

pub fn inverse_diagonal(a: &SparseOperator) -> Result<Vec<C64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d.norm() == 0.0 {
                Err(Error::ZeroDiagonal(i))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

/// One damped Jacobi sweep.
pub fn jacobi_sweep(a: &SparseOperator, x: &mut [C64], b: &[C64], omega: f64) -> Result<()> {
    let inv = inverse_diagonal(a)?;
    let mut work = Vec::new();
    jacobi_sweep_with(&inv, a, x, b, omega, &mut work);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm2;

    fn laplacian(n: usize, shift: C64) -> SparseOperator {
        let mut t = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                let i = iy * n + ix;
                t.push((i, i, C64::new(4.0, 0.0) + shift));
                if ix > 0 {
                    t.push((i, i - 1, C64::new(-1.0, 0.0)));
                }
                if ix + 1 < n {
                    t.push((i, i + 1, C64::new(-1.0, 0.0)));
                }
                if iy > 0 {
                    t.push((i, i - n, C64::new(-1.0, 0.0)));
                }
                if iy + 1 < n {
                    t.push((i, i + n, C64::new(-1.0, 0.0)));
                }
            }
        }
        SparseOperator::from_triplets(n * n, n * n, &t)
    }

    #[test]
    fn tridiagonal_ilu_is_exact() {
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(2.0, 0.3)));
            if i > 0 {
                t.push((i, i - 1, C64::new(-1.0, 0.1)));
                t.push((i - 1, i, C64::new(-1.0, 0.0)));
            }
        }
        let a = SparseOperator::from_triplets(n, n, &t);
        let f = ilu0_factor(&a, 0).unwrap();
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut x = vec![C64::new(0.0, 0.0); n];
        ilu0_sweep(&f, &a, &mut x, &b, 1.0, &mut Vec::new());
        assert!(norm2(&a.residual(&b, &x)) < 1e-12 * norm2(&b));
    }

    #[test]
    fn zero_pivot_reported() {
        let t = [
            (0, 0, C64::new(0.0, 0.0)),
            (0, 1, C64::new(1.0, 0.0)),
            (1, 0, C64::new(1.0, 0.0)),
            (1, 1, C64::new(1.0, 0.0)),
        ];
        let mut a = SparseOperator::from_triplets(2, 2, &t);
        assert!(matches!(ilu0_factor(&a, 3), Err(Error::ZeroPivot { level: 3, row: 0 })));
        a = SparseOperator::from_triplets(2, 2, &t[1..]);
        assert!(ilu0_factor(&a, 0).is_err());
    }

    #[test]
    fn jacobi_basics() {
        let a = laplacian(32, C64::new(0.0, 0.0));
        let b: Vec<C64> = (0..a.dim()).map(|i| C64::new((i % 7) as f64, 0.0)).collect();
        let mut x = vec![C64::new(0.0, 0.0); a.dim()];
        let mut prev = norm2(&b);
        for _ in 0..10 {
            jacobi_sweep(&a, &mut x, &b, 0.5).unwrap();
            let r = norm2(&a.residual(&b, &x));
            assert!(r < prev);
            prev = r;
        }
        let before = x.clone();
        jacobi_sweep(&a, &mut x, &b, 0.0).unwrap();
        assert_eq!(before, x);
    }
}
