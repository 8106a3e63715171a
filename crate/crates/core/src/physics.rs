//! Closed-form constituent relations: static loads, suspension and vertical
//! tire forces, slip angles, coupling kinematics.

use crate::error::{Error, Result};
use crate::params::VehicleParameters;
use crate::state::{InputSample, StateVector};

/// Longitudinal speed floor for slip-angle and relaxation-lag denominators [m/s].
pub const V_MIN: f64 = 0.5;

/// Static vertical loads from body masses (wheel masses excluded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticLoads {
    /// Tractor front axle [N].
    pub front: f64,
    /// Tractor rear axle [N].
    pub rear: f64,
    /// Each of the six trailer wheel stations [N].
    pub trailer_wheel: f64,
}

impl StaticLoads {
    /// Total supported body weight.
    pub fn total(&self) -> f64 {
        self.front + self.rear + 6.0 * self.trailer_wheel
    }
}

/// Static axle loads; the trailer load is shared equally by its three axles.
pub fn static_loads(p: &VehicleParameters) -> Result<StaticLoads> {
    let e = p.e();
    let f = p.f();
    if !(e > 0.0) {
        return Err(Error::invalid("e", format!("l_h22 + l_v2 = {e} must be positive")));
    }
    if !(f > 0.0) {
        return Err(Error::invalid("f", format!("l_v1 + l_h1 = {f} must be positive")));
    }
    let scale = p.g / (e * f);
    Ok(StaticLoads {
        front: (p.m_a1 * p.l_h1 * e + p.m_a2 * p.l_h22 * (p.l_h1 - p.l_k1)) * scale,
        rear: (p.m_a1 * p.l_v1 * e + p.m_a2 * p.l_h22 * (p.l_v1 + p.l_k1)) * scale,
        trailer_wheel: p.m_a2 * p.g * p.l_v2 / (6.0 * e),
    })
}

/// Trailer spring-damper forces, wheel order 21R, 21L, 22R, 22L, 23R, 23L.
pub fn suspension_forces(p: &VehicleParameters, kappa: f64, kappa_rate: f64) -> Result<[f64; 6]> {
    let stat = static_loads(p)?.trailer_wheel;
    Ok(suspension_forces_with(p, stat, kappa, kappa_rate))
}

#[inline]
pub(crate) fn suspension_forces_with(
    p: &VehicleParameters,
    stat: f64,
    kappa: f64,
    kappa_rate: f64,
) -> [f64; 6] {
    let half = 0.5 * p.b2;
    let dynamic = kappa * half * p.k + kappa_rate * half * p.d;
    let right = stat + dynamic;
    let left = stat - dynamic;
    [right, left, right, left, right, left]
}

/// Trailer vertical tire forces: suspension force plus wheel weight.
/// Negative values (lift-off) are passed through unchanged.
pub fn vertical_tire_forces(p: &VehicleParameters, suspension: &[f64; 6]) -> [f64; 6] {
    let wheel = p.m_r2 * p.g;
    suspension.map(|f| f + wheel)
}

/// Tractor axle vertical loads: static axle load plus the weight of the two
/// wheels on that axle.
pub fn tractor_axle_loads(p: &VehicleParameters, loads: &StaticLoads) -> (f64, f64) {
    let wheels = 2.0 * p.m_r1 * p.g;
    (loads.front + wheels, loads.rear + wheels)
}

/// Slip angles [rad]: front, rear, then trailer 21R, 21L, 22R, 22L, 23R, 23L.
pub type SlipAngles = [f64; 8];

/// Slip angles of all tires.
///
/// Both longitudinal speeds are floored at [`V_MIN`]; a trailer wheel whose
/// track-corrected speed `v_x2 +- yawrate_2 * b2/2` is still not positive is a
/// domain error.
pub fn slip_angles(
    x: &StateVector,
    u: &InputSample,
    v_x1: f64,
    p: &VehicleParameters,
) -> Result<SlipAngles> {
    let vx1 = v_x1.max(V_MIN);
    let vx2 = u.v_x2.max(V_MIN);
    let r1 = x.yawrate_1();
    let r2 = x.yawrate_2();
    let half_track = 0.5 * p.b2;
    let den_r = vx2 + r2 * half_track;
    let den_l = vx2 - r2 * half_track;
    if !(den_r > 0.0 && den_l > 0.0) {
        return Err(Error::Domain(format!(
            "trailer wheel longitudinal speed not positive (right {den_r}, left {den_l} m/s)"
        )));
    }
    let mut a = [0.0; 8];
    a[0] = u.delta - ((x.v_y1() + r1 * p.l_v1) / vx1).atan();
    a[1] = -((x.v_y1() - r1 * p.l_h1) / vx1).atan();
    let roll_term = x.rollrate_2() * p.h_w2;
    for (j, l_h) in p.trailer_axle_distances().into_iter().enumerate() {
        let lateral = x.v_y2() - r2 * l_h + roll_term;
        a[2 + 2 * j] = -(lateral / den_r).atan();
        a[3 + 2 * j] = -(lateral / den_l).atan();
    }
    Ok(a)
}

/// Tractor longitudinal speed derived from the shared coupling-point velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractorSpeed {
    /// Speed floored at [`V_MIN`] [m/s].
    pub value: f64,
    /// Unfloored projection [m/s].
    pub raw: f64,
    pub clamped: bool,
}

/// `v_x1 = v_x2 cos(theta) - (v_y2 + yawrate_2 * l_v2) sin(theta)`.
pub fn tractor_longitudinal_velocity(
    x: &StateVector,
    v_x2: f64,
    p: &VehicleParameters,
) -> Result<TractorSpeed> {
    let theta = x.theta();
    check_articulation(theta)?;
    let (s, c) = theta.sin_cos();
    let raw = v_x2 * c - (x.v_y2() + x.yawrate_2() * p.l_v2) * s;
    let clamped = raw < V_MIN;
    Ok(TractorSpeed {
        value: if clamped { V_MIN } else { raw },
        raw,
        clamped,
    })
}

/// Coupling force `F_Ky` from the tractor lateral force balance, given the
/// tractor lateral acceleration `a_y1`.
pub fn coupling_force(
    x: &StateVector,
    a_y1: f64,
    delta: f64,
    p: &VehicleParameters,
) -> Result<f64> {
    let theta = x.theta();
    check_articulation(theta)?;
    Ok((x.f_y11() * delta.cos() + x.f_y12() - p.tractor_mass() * a_y1) / theta.cos())
}

#[inline]
pub(crate) fn check_articulation(theta: f64) -> Result<()> {
    if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::SingularArticulation { theta });
    }
    Ok(())
}
