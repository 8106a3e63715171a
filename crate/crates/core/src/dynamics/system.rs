//! Implicit state-space form `M(x) xdot = f(x, u)` and the output map.
//!
//! Row layout (see `docs/implicit_system.md` for the derivation):
//!
//! | row | equation                                   | nonzero columns of `M`  |
//! |-----|--------------------------------------------|-------------------------|
//! | 0   | time derivative of the coupling constraint | 0, 1, 3, 5, 6           |
//! | 1   | tractor yaw balance                        | 0, 1                    |
//! | 2   | roll angle kinematics                      | 2                       |
//! | 3   | trailer lateral balance                    | 0, 3, 4                 |
//! | 4   | trailer roll balance                       | 0, 3, 4                 |
//! | 5   | trailer yaw balance                        | 0, 5                    |
//! | 6   | articulation kinematics                    | 6                       |
//! | 7.. | first-order tire lags                      | diagonal                |
//!
//! The coupling force is eliminated with the tractor lateral balance; its
//! dependence on `v_y1'` produces the column-0 entries of rows 1, 3, 4, 5.

use crate::dynamics::linalg::{mat_vec, Lu};
use crate::error::{Error, Result};
use crate::params::{TireSet, VehicleParameters};
use crate::physics::{
    self, check_articulation, slip_angles, suspension_forces_with, tractor_axle_loads,
    vertical_tire_forces, V_MIN,
};
use crate::state::{idx, InputSample, OutputVector, StateVector, N_STATES};
use crate::tire::lateral_tire_force_static;

/// Reciprocal condition estimates below this abort the evaluation.
pub const RCOND_LIMIT: f64 = 1e-12;

pub type Matrix = [[f64; N_STATES]; N_STATES];

/// Per-evaluation diagnostic flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalFlags {
    /// Bit `w` set: trailer wheel `w` (21R, 21L, 22R, 22L, 23R, 23L) has `F_z <= 0`.
    pub lift_off: u8,
    pub v_x1_clamped: bool,
    pub v_x2_clamped: bool,
    /// Max-norm of `M xdot - f` after the solve; only computed in debug builds.
    pub assembly_residual: f64,
}

impl EvalFlags {
    pub fn merge(&mut self, other: EvalFlags) {
        self.lift_off |= other.lift_off;
        self.v_x1_clamped |= other.v_x1_clamped;
        self.v_x2_clamped |= other.v_x2_clamped;
        self.assembly_residual = self.assembly_residual.max(other.assembly_residual);
    }
}

/// Mass matrix and right-hand side at one (state, input) point.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub m: Matrix,
    pub rhs: [f64; N_STATES],
    pub flags: EvalFlags,
}

impl AssembledSystem {
    /// `M xdot - f`.
    pub fn residual(&self, xdot: &[f64; N_STATES]) -> [f64; N_STATES] {
        let mx = mat_vec(&self.m, xdot);
        std::array::from_fn(|i| mx[i] - self.rhs[i])
    }

    pub fn solve(&self) -> Result<[f64; N_STATES]> {
        let lu = Lu::factor(&self.m)?;
        let rcond = lu.rcond();
        if !(rcond >= RCOND_LIMIT) {
            return Err(Error::IllConditioned { rcond });
        }
        let xdot = lu.solve(&self.rhs);
        if xdot.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state derivative"));
        }
        Ok(xdot)
    }

    /// Solve exploiting the block structure: rows 2, 6 and 7.. have a single
    /// diagonal entry, so only the 5x5 block coupling `v_y1, r1, v_y2, p2, r2`
    /// needs a factorization. The condition check applies to that block.
    pub fn solve_structured(&self) -> Result<[f64; N_STATES]> {
        let mut xdot = [0.0; N_STATES];
        for r in (0..N_STATES).filter(|r| !COUPLED.contains(r)) {
            debug_assert!((0..N_STATES).all(|c| c == r || self.m[r][c] == 0.0));
            xdot[r] = self.rhs[r] / self.m[r][r];
        }
        let a: [[f64; 5]; 5] =
            std::array::from_fn(|i| std::array::from_fn(|j| self.m[COUPLED[i]][COUPLED[j]]));
        let b: [f64; 5] = std::array::from_fn(|i| {
            let row = &self.m[COUPLED[i]];
            let known: f64 = (0..N_STATES)
                .filter(|c| !COUPLED.contains(c))
                .map(|c| row[c] * xdot[c])
                .sum();
            self.rhs[COUPLED[i]] - known
        });
        let lu = Lu::factor(&a)?;
        let rcond = lu.rcond();
        if !(rcond >= RCOND_LIMIT) {
            return Err(Error::IllConditioned { rcond });
        }
        let y = lu.solve(&b);
        for (k, &c) in COUPLED.iter().enumerate() {
            xdot[c] = y[k];
        }
        if xdot.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state derivative"));
        }
        Ok(xdot)
    }
}

/// Rows and columns of the dynamically coupled block of `M`.
const COUPLED: [usize; 5] = [
    idx::V_Y1,
    idx::YAWRATE_1,
    idx::V_Y2,
    idx::ROLLRATE_2,
    idx::YAWRATE_2,
];

/// Builds `M` and `f` from the constituent physics.
pub fn assemble(
    x: &StateVector,
    u: &InputSample,
    p: &VehicleParameters,
) -> Result<AssembledSystem> {
    if !x.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    let theta = x.theta();
    check_articulation(theta)?;

    let loads = physics::static_loads(p)?;
    let (fz_front, fz_rear) = tractor_axle_loads(p, &loads);
    let suspension = suspension_forces_with(p, loads.trailer_wheel, x.kappa_2(), x.rollrate_2());
    let fz_trailer = vertical_tire_forces(p, &suspension);

    let speed = physics::tractor_longitudinal_velocity(x, u.v_x2, p)?;
    let v_x1 = speed.raw;
    let v_x2 = u.v_x2;
    let mut flags = EvalFlags {
        lift_off: 0,
        v_x1_clamped: speed.clamped,
        v_x2_clamped: v_x2 < V_MIN,
        assembly_residual: 0.0,
    };
    let lag_speed_1 = speed.value;
    let lag_speed_2 = v_x2.max(V_MIN);

    let alpha = slip_angles(x, u, speed.value, p)?;

    let (sin_theta, cos_theta) = theta.sin_cos();
    let (sin_kappa, cos_kappa) = x.kappa_2().sin_cos();
    let cos_delta = u.delta.cos();
    let r1 = x.yawrate_1();
    let r2 = x.yawrate_2();
    let m1 = p.tractor_mass();
    let m2 = p.trailer_mass();
    let trailer_forces = x.trailer_forces();

    // Coupling force without its v_y1' contribution:
    // F_Ky = q - (m1 / cos theta) * v_y1'
    let tractor_lateral = x.f_y11() * cos_delta + x.f_y12();
    let q = (tractor_lateral - m1 * v_x1 * r1) / cos_theta;
    let coupling_gain = m1 / cos_theta;

    let mut m = [[0.0; N_STATES]; N_STATES];
    let mut rhs = [0.0; N_STATES];

    // 0: d/dt [v_y1 - r1 l_k1 - v_x2 sin(theta) - (v_y2 + r2 l_v2) cos(theta)] = 0
    m[0][idx::V_Y1] = 1.0;
    m[0][idx::YAWRATE_1] = -p.l_k1;
    m[0][idx::V_Y2] = -cos_theta;
    m[0][idx::YAWRATE_2] = -p.l_v2 * cos_theta;
    m[0][idx::THETA] = -v_x2 * cos_theta + (x.v_y2() + r2 * p.l_v2) * sin_theta;
    rhs[0] = u.a_x2 * sin_theta;

    // 1: tractor yaw
    m[1][idx::V_Y1] = m1 * p.l_k1;
    m[1][idx::YAWRATE_1] = p.j_z1;
    rhs[1] = x.f_y11() * cos_delta * p.l_v1 - x.f_y12() * p.l_h1
        + (tractor_lateral - m1 * v_x1 * r1) * p.l_k1;

    // 2: kappa' = kappa_rate
    m[2][idx::KAPPA_2] = 1.0;
    rhs[2] = x.rollrate_2();

    // 3: trailer lateral
    let trailer_lateral: f64 = trailer_forces.iter().sum();
    m[3][idx::V_Y1] = coupling_gain;
    m[3][idx::V_Y2] = m2;
    m[3][idx::ROLLRATE_2] = p.m_a2 * p.h_w2;
    rhs[3] = trailer_lateral + q - m2 * v_x2 * r2;

    // 4: trailer roll
    let half_track = 0.5 * p.b2;
    let spring_moment = half_track
        * (-suspension[0] + suspension[1] - suspension[2] + suspension[3] - suspension[4]
            + suspension[5]);
    m[4][idx::V_Y1] = -coupling_gain * p.h_wk * cos_kappa;
    m[4][idx::V_Y2] = -p.m_a2 * p.h_w2 * cos_kappa;
    m[4][idx::ROLLRATE_2] = p.j_x2;
    rhs[4] = p.m_a2 * p.h_w2 * (v_x2 * r2 * cos_kappa + p.g * sin_kappa) + spring_moment
        - q * p.h_wk * cos_kappa;

    // 5: trailer yaw
    let axle_moment: f64 = p
        .trailer_axle_distances()
        .iter()
        .enumerate()
        .map(|(j, l)| (trailer_forces[2 * j] + trailer_forces[2 * j + 1]) * l)
        .sum();
    m[5][idx::V_Y1] = coupling_gain * p.l_v2;
    m[5][idx::YAWRATE_2] = p.j_z2;
    rhs[5] = q * p.l_v2 - axle_moment;

    // 6: theta' = r2 - r1
    m[6][idx::THETA] = 1.0;
    rhs[6] = r2 - r1;

    // 7..14: F' = (v_x / l) (F_stat - F)
    let front = p.tire(TireSet::Front);
    let rear = p.tire(TireSet::Rear);
    let trailer = p.tire(TireSet::Trailer);
    let f_front = lateral_tire_force_static(&front, alpha[0], fz_front).force;
    let f_rear = lateral_tire_force_static(&rear, alpha[1], fz_rear).force;
    m[idx::F_Y11][idx::F_Y11] = 1.0;
    rhs[idx::F_Y11] = lag_speed_1 / front.relaxation_length * (f_front - x.f_y11());
    m[idx::F_Y12][idx::F_Y12] = 1.0;
    rhs[idx::F_Y12] = lag_speed_1 / rear.relaxation_length * (f_rear - x.f_y12());
    let trailer_rate = lag_speed_2 / trailer.relaxation_length;
    for w in 0..6 {
        let stat = lateral_tire_force_static(&trailer, alpha[2 + w], fz_trailer[w]);
        if stat.lifted_off {
            flags.lift_off |= 1 << w;
        }
        let row = idx::F_Y2 + w;
        m[row][row] = 1.0;
        rhs[row] = trailer_rate * (stat.force - trailer_forces[w]);
    }

    Ok(AssembledSystem { m, rhs, flags })
}

/// State derivative with the diagnostic flags of the evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Derivative {
    pub xdot: [f64; N_STATES],
    pub flags: EvalFlags,
}

/// Solves the assembled system for `xdot`.
pub fn state_derivative(
    x: &StateVector,
    u: &InputSample,
    p: &VehicleParameters,
) -> Result<Derivative> {
    let sys = assemble(x, u, p)?;
    let mut xdot = sys.solve_structured()?;
    // Exact kinematic rows.
    xdot[idx::KAPPA_2] = x.rollrate_2();
    xdot[idx::THETA] = x.yawrate_2() - x.yawrate_1();
    let mut flags = sys.flags;
    if cfg!(debug_assertions) {
        flags.assembly_residual = sys.residual(&xdot).iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    Ok(Derivative { xdot, flags })
}

/// Output map: kinematic outputs copied from the state, vertical forces from
/// the suspension model.
pub fn output(x: &StateVector, _u: &InputSample, p: &VehicleParameters) -> Result<OutputVector> {
    let stat = physics::static_loads(p)?.trailer_wheel;
    let suspension = suspension_forces_with(p, stat, x.kappa_2(), x.rollrate_2());
    let fz = vertical_tire_forces(p, &suspension);
    let f = x.trailer_forces();
    Ok(OutputVector([
        x.yawrate_1(),
        x.yawrate_2(),
        x.rollrate_2(),
        x.theta(),
        f[0],
        f[1],
        f[4],
        f[5],
        fz[0],
        fz[1],
        fz[4],
        fz[5],
    ]))
}

/// Residual of the (undifferentiated) coupling-point velocity constraint [m/s].
pub fn coupling_constraint_residual(x: &StateVector, v_x2: f64, p: &VehicleParameters) -> f64 {
    let (s, c) = x.theta().sin_cos();
    x.v_y1() - x.yawrate_1() * p.l_k1 - v_x2 * s - (x.v_y2() + x.yawrate_2() * p.l_v2) * c
}
