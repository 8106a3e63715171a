//! Simplified Magic Formula lateral tire model with load-dependent stiffness factor.
//!
//! ```text
//! F_y,stat = mu * F_z * sin(C * atan(B * alpha))
//! B        = c1 * sin(2 * atan(F_z / c2)) / (C * mu * F_z)
//! ```
//!
//! The cornering stiffness at the origin is therefore `c1 * sin(2 atan(F_z / c2))`,
//! independent of `mu` and `C`, and peaks at `F_z = c2`.

use crate::error::{Error, Result};
use crate::params::TireParams;

/// Stiffness factor `B` [1/rad]. Requires `F_z > 0`.
pub fn mtfm_b(tire: &TireParams, fz: f64) -> Result<f64> {
    if !(fz > 0.0) {
        return Err(Error::Domain(format!(
            "stiffness factor needs positive vertical load, got {fz} N"
        )));
    }
    Ok(b_unchecked(tire, fz))
}

#[inline]
fn b_unchecked(tire: &TireParams, fz: f64) -> f64 {
    tire.c1 * (2.0 * (fz / tire.c2).atan()).sin() / (tire.shape * tire.mu * fz)
}

/// Static lateral force of one tire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticLateralForce {
    /// Force [N]; zero when the wheel has lifted off.
    pub force: f64,
    /// `F_z <= 0`: the wheel carries no load.
    pub lifted_off: bool,
}

/// Steady-state lateral force for slip angle `alpha` [rad] and vertical load `fz` [N].
///
/// A non-positive load yields zero force and sets the lift-off flag.
#[inline]
pub fn lateral_tire_force_static(tire: &TireParams, alpha: f64, fz: f64) -> StaticLateralForce {
    if !(fz > 0.0) {
        return StaticLateralForce {
            force: 0.0,
            lifted_off: true,
        };
    }
    let b = b_unchecked(tire, fz);
    StaticLateralForce {
        force: tire.mu * fz * (tire.shape * (b * alpha).atan()).sin(),
        lifted_off: false,
    }
}

/// Cornering stiffness `dF_y/dalpha` at `alpha = 0` [N/rad].
pub fn cornering_stiffness(tire: &TireParams, fz: f64) -> f64 {
    tire.c1 * (2.0 * (fz / tire.c2).atan()).sin()
}
