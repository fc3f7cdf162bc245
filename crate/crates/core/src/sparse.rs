//! Compressed-row complex matrices and a banded direct solver.

use std::io::Write;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetryHint {
    #[default]
    None,
    Structural,
}

/// Complex sparse matrix in compressed-row layout.
///
/// Column indices are strictly increasing within a row and no explicit zeros
/// are stored. Operators are square; transfer matrices may be rectangular.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    pub symmetry_hint: SymmetryHint,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![C64::new(0.0, 0.0); triplets.len()];
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, C64)> = Vec::new();
        for i in 0..nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut v = C64::new(0.0, 0.0);
                while k < scratch.len() && scratch[k].0 == c {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetry_hint: SymmetryHint::None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn diagonal_matrix(d: &[C64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Dimension of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `r = b - A x`.
    pub fn residual_into(&self, b: &[C64], x: &[C64], r: &mut [C64]) {
        for (i, ri) in r.iter_mut().enumerate() {
            let mut acc = b[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc -= self.values[k] * x[self.col_idx[k]];
            }
            *ri = acc;
        }
    }

    pub fn residual(&self, b: &[C64], x: &[C64]) -> Vec<C64> {
        let mut r = vec![C64::new(0.0, 0.0); self.nrows];
        self.residual_into(b, x, &mut r);
        r
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Sparse product `self * other` (Gustavson).
    pub fn matmul(&self, other: &SparseOperator) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut pattern = Vec::new();
        for i in 0..self.nrows {
            pattern.clear();
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = C64::new(0.0, 0.0);
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != C64::new(0.0, 0.0) {
                    col_idx.push(j);
                    values.push(acc[j]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col_idx,
            values,
            symmetry_hint: SymmetryHint::None,
        }
    }

    /// `alpha * self + beta * other` for matrices of equal shape.
    pub fn add_scaled(&self, alpha: C64, other: &SparseOperator, beta: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for (m, s) in [(self, alpha), (other, beta)] {
            for i in 0..m.nrows {
                let (cols, vals) = m.row(i);
                t.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, s * v)));
            }
        }
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Returns the operator with `shift` added to every diagonal entry.
    pub fn shifted(&self, shift: C64) -> Self {
        let n = self.nrows.min(self.ncols);
        self.add_scaled(
            C64::new(1.0, 0.0),
            &Self::diagonal_matrix(&vec![shift; n]),
            C64::new(1.0, 0.0),
        )
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut d = vec![vec![C64::new(0.0, 0.0); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    pub fn same_pattern(&self, other: &SparseOperator) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// Lower and upper bandwidth.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.nrows {
            let (cols, _) = self.row(i);
            if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
                kl = kl.max(i.saturating_sub(first));
                ku = ku.max(last.saturating_sub(i));
            }
        }
        (kl, ku)
    }

    /// Writes the matrix in MatrixMarket coordinate complex general format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// LU factorization with partial pivoting restricted to the band.
///
/// Row `i` of the working storage holds columns `i - kl ..= i + kl + ku`,
/// which leaves room for the fill that row interchanges create in `U`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<C64>,
    mult: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let zero = C64::new(0.0, 0.0);
        let mut band = vec![zero; n * width];
        // column c of row i sits at i*width + (c + kl - i)
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                band[i * width + c + kl - i] = v;
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut mult = vec![zero; n * kl.max(1)];
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[k * width + kl].norm();
            for i in k + 1..=last {
                let v = band[i * width + k + kl - i].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 * scale || best == 0.0 {
                return Err(Error::ZeroPivot { level: 0, row: k });
            }
            piv[k] = p;
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    band.swap(k * width + c + kl - k, p * width + c + kl - p);
                }
            }
            let pivot = band[k * width + kl];
            for i in k + 1..=last {
                let l = band[i * width + k + kl - i] / pivot;
                mult[k * kl.max(1) + (i - k - 1)] = l;
                band[i * width + k + kl - i] = zero;
                if l == zero {
                    continue;
                }
                for c in k + 1..=cmax {
                    let u = band[k * width + c + kl - k];
                    band[i * width + c + kl - i] -= l * u;
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            ku,
            width,
            band,
            mult,
            piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let ml = kl.max(1);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for j in 1..=kl.min(n - 1 - k) {
                b[k + j] -= self.mult[k * ml + j - 1] * bk;
            }
        }
        for i in (0..n).rev() {
            let cmax = (i + kl + ku).min(n - 1);
            let mut acc = b[i];
            for c in i + 1..=cmax {
                acc -= self.band[i * w + c + kl - i] * b[c];
            }
            b[i] = acc / self.band[i * w + kl];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> SparseOperator {
        SparseOperator::from_triplets(
            3,
            3,
            &[
                (0, 0, c(2.0, 0.0)),
                (0, 1, c(-1.0, 0.5)),
                (1, 0, c(-1.0, 0.0)),
                (1, 1, c(2.0, 1.0)),
                (1, 2, c(-1.0, 0.0)),
                (2, 1, c(0.0, -1.0)),
                (2, 2, c(3.0, 0.0)),
                (2, 2, c(0.0, 0.0)),
                (0, 2, c(0.0, 0.0)),
            ],
        )
    }

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let a = SparseOperator::from_triplets(
            2,
            2,
            &[
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(-1.0, 0.0)),
                (1, 0, c(2.0, 0.0)),
                (1, 0, c(1.0, 0.0)),
            ],
        );
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(1, 0), c(3.0, 0.0));
        assert_eq!(sample().nnz(), 7);
    }

    #[test]
    fn matvec_and_transpose() {
        let a = sample();
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let y = a.matvec(&x);
        let d = a.to_dense();
        for i in 0..3 {
            let e: C64 = (0..3).map(|j| d[i][j] * x[j]).sum();
            assert!((e - y[i]).norm() < 1e-14);
        }
        let t = a.transpose();
        assert_eq!(t.get(1, 0), a.get(0, 1));
        assert_eq!(t.transpose(), a);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = sample();
        let p = a.matmul(&a);
        let d = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let e: C64 = (0..3).map(|k| d[i][k] * d[k][j]).sum();
                assert!((e - p.get(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn band_lu_solves_with_pivoting() {
        // zero leading diagonal forces an interchange
        let a = SparseOperator::from_triplets(
            4,
            4,
            &[
                (0, 1, c(1.0, 0.0)),
                (1, 0, c(1.0, 0.0)),
                (1, 1, c(0.5, 0.2)),
                (1, 2, c(1.0, 0.0)),
                (2, 1, c(2.0, 0.0)),
                (2, 2, c(-1.0, 1.0)),
                (2, 3, c(1.0, 0.0)),
                (3, 2, c(1.0, 0.0)),
                (3, 3, c(4.0, 0.0)),
            ],
        );
        let x = vec![c(1.0, 2.0), c(-1.0, 0.0), c(0.5, 0.5), c(0.0, 3.0)];
        let b = a.matvec(&x);
        let lu = BandLu::factor(&a).unwrap();
        let got = lu.solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-13);
        }
    }

    #[test]
    fn matrix_market_header() {
        let mut out = Vec::new();
        sample().write_matrix_market(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate complex general"));
        assert_eq!(lines.next(), Some("3 3 7"));
        assert!(lines.next().unwrap().starts_with("1 1 2.0"));
    }
}
