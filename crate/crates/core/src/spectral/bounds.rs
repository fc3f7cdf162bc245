use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_6;

use crate::{EcsGrid1D, Error, Result};

/// Axis-aligned box in the complex plane, in units of `1/h²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl BoundsBox {
    pub fn contains(&self, z: crate::C64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }
}

/// Gershgorin rectangle of `-h² L_h` for a layer with width ratio `γ`.
pub fn gershgorin_bounds(grid: &EcsGrid1D) -> Result<BoundsBox> {
    if grid.theta_gamma > FRAC_PI_6 + 1e-15 {
        return Err(Error::UnsupportedAngle {
            theta: grid.theta_gamma,
            range: "[0, pi/6]",
        });
    }
    let g = grid.gamma();
    let gb = g.conj();
    let inv_g2 = 1.0 / (g * g);
    let re_min = inv_g2.re - (inv_g2 * 0.5 + 1.0 / (gb * (1.0 + gb))).norm();
    let re_max = f64::max(4.0, 3.0 + 0.5 * ((3.0 + gb) / (1.0 + gb)).norm());
    let im_min = (4.0 * inv_g2).im;
    let g_abs2 = g.norm_sqr();
    let im_max = 0.5 * ((g_abs2 - g) / (g_abs2 + g)).norm();
    Ok(BoundsBox {
        re_min,
        re_max,
        im_min,
        im_max,
    })
}
