//! Cell-centered 2:1 grid transfers, stored as sparse matrices.
//!
//! Along one axis, fine cells `2I` and `2I+1` lie inside coarse cell `I`.
//! Bilinear prolongation takes `3/4` of the own coarse cell and `1/4` of the
//! neighbour on the same side; at a boundary the missing neighbour's weight
//! moves onto the own cell. Full weighting is `P^T / 4` in 2D, i.e. the 1D
//! stencil `(1,3,3,1)/8` and `(1/2, 3/8, 1/8)` at an edge.

use crate::{Error, Result, SparseOperator, C64};

fn prolong_1d(coarse: usize) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(4 * coarse);
    for c in 0..coarse {
        for (f, nb) in [
            (2 * c, c.checked_sub(1)),
            (2 * c + 1, (c + 1 < coarse).then_some(c + 1)),
        ] {
            match nb {
                Some(nb) => {
                    t.push((f, c, 0.75));
                    t.push((f, nb, 0.25));
                }
                None => t.push((f, c, 1.0)),
            }
        }
    }
    t
}

fn fourpoint_1d(coarse: usize) -> Vec<(usize, usize, f64)> {
    (0..coarse)
        .flat_map(|c| [(c, 2 * c, 0.5), (c, 2 * c + 1, 0.5)])
        .collect()
}

/// `A_y ⊗ A_x` for lexicographic ordering with x fastest.
fn kron(
    tx: &[(usize, usize, f64)],
    ty: &[(usize, usize, f64)],
    rows: (usize, usize),
    cols: (usize, usize),
    scale: f64,
) -> SparseOperator {
    let mut t = Vec::with_capacity(tx.len() * ty.len());
    for &(ry, cy, wy) in ty {
        for &(rx, cx, wx) in tx {
            t.push((ry * rows.0 + rx, cy * cols.0 + cx, C64::new(scale * wx * wy, 0.0)));
        }
    }
    SparseOperator::from_triplets(rows.0 * rows.1, cols.0 * cols.1, &t)
}

fn check_even(nx: usize, ny: usize) -> Result<(usize, usize)> {
    if nx % 2 != 0 || ny % 2 != 0 || nx < 2 || ny < 2 {
        return Err(Error::InvalidGrid(format!(
            "cannot coarsen a {nx}x{ny} cell-centered grid 2:1"
        )));
    }
    Ok((nx / 2, ny / 2))
}

/// Bilinear prolongation from the coarse grid of an `nx × ny` fine grid.
pub fn bilinear_prolongation(nx: usize, ny: usize) -> Result<SparseOperator> {
    let (cx, cy) = check_even(nx, ny)?;
    Ok(kron(&prolong_1d(cx), &prolong_1d(cy), (nx, ny), (cx, cy), 1.0))
}

/// Full-weighting restriction `P^T / 4`.
pub fn fw_restriction(nx: usize, ny: usize) -> Result<SparseOperator> {
    Ok(bilinear_prolongation(nx, ny)?.transpose().scaled(C64::new(0.25, 0.0)))
}

/// Plain average over the four fine cells of a coarse cell.
pub fn fourpoint_restriction(nx: usize, ny: usize) -> Result<SparseOperator> {
    let (cx, cy) = check_even(nx, ny)?;
    Ok(kron(&fourpoint_1d(cx), &fourpoint_1d(cy), (cx, cy), (nx, ny), 1.0))
}

pub(crate) fn apply_checked(op: &SparseOperator, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != op.ncols() {
        return Err(Error::DimensionMismatch {
            expected: op.ncols(),
            got: v.len(),
        });
    }
    Ok(op.matvec(v))
}

/// Full weighting of a fine `nx × ny` vector.
pub fn restrict_fw(fine: &[C64], nx: usize, ny: usize) -> Result<Vec<C64>> {
    apply_checked(&fw_restriction(nx, ny)?, fine)
}

/// Four-point average of a fine `nx × ny` vector.
pub fn restrict_fourpoint(fine: &[C64], nx: usize, ny: usize) -> Result<Vec<C64>> {
    apply_checked(&fourpoint_restriction(nx, ny)?, fine)
}

/// Bilinear interpolation of a coarse vector onto the fine `nx × ny` grid.
pub fn prolong_bilinear(coarse: &[C64], nx: usize, ny: usize) -> Result<Vec<C64>> {
    apply_checked(&bilinear_prolongation(nx, ny)?, coarse)
}
