use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{EcsGrid1D, Error, Result, C64};

/// Fork location used when the caller has no better estimate.
pub const DEFAULT_RHO0: f64 = 0.9;

/// Three-region model of the spectrum of `-L_h`: a tail of continuum-like
/// eigenvalues along the ray through `(π/R_z)²` up to the fork point `mu1`,
/// splitting into a real branch towards `mu2` and a rotated one towards `mu3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub mu1: C64,
    pub mu2: C64,
    pub mu3: C64,
    /// `h_α / h` with `h_α = R_z / (n + m + 1)`.
    pub alpha: C64,
    pub rho0: f64,
    /// `(lπ/R_z)²`, sorted by modulus.
    pub tail_eigs: Vec<C64>,
}

pub fn pitchfork_model(grid: &EcsGrid1D, l_max: usize, rho0: f64) -> Result<SpectrumModel> {
    let cells = grid.cells();
    if l_max + 1 > cells {
        return Err(Error::InvalidParameter(format!(
            "l_max = {l_max} exceeds n + m - 1 = {}",
            cells - 1
        )));
    }
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(Error::InvalidParameter(format!("rho0 = {rho0} not in (0, 1)")));
    }
    let h = grid.h * grid.scale;
    let hg = grid.h_gamma * grid.scale;
    let alpha = grid.r_z / (cells as f64 + 1.0) / h;
    let tail_eigs = (1..=l_max)
        .map(|l| {
            let z = l as f64 * PI / grid.r_z;
            z * z
        })
        .collect();
    Ok(SpectrumModel {
        mu1: 4.0 * rho0 / (alpha * h * alpha * h),
        mu2: 4.0 / (h * h),
        mu3: 4.0 / (hg * hg),
        alpha,
        rho0,
        tail_eigs,
    })
}

/// `LF(μ) = (μ + k²) / (μ + β² k²)`.
pub fn fractional_map(mu: C64, k: f64, beta_sq: C64) -> Result<C64> {
    let k2 = k * k;
    let den = mu + beta_sq * k2;
    if den.norm() <= 1e-14 * (mu.norm() + k2).max(f64::MIN_POSITIVE) {
        return Err(Error::Pole { re: mu.re, im: mu.im });
    }
    Ok((mu + k2) / den)
}
