//! State, input and output vectors of the combination model.

use serde::{Deserialize, Serialize};

pub const N_STATES: usize = 15;
pub const N_OUTPUTS: usize = 12;

/// Canonical state names, in state-vector order.
pub const STATE_NAMES: [&str; N_STATES] = [
    "v_y1",
    "yawrate_1",
    "kappa_2",
    "v_y2",
    "rollrate_2",
    "yawrate_2",
    "theta",
    "F_y11",
    "F_y12",
    "F_y21R",
    "F_y21L",
    "F_y22R",
    "F_y22L",
    "F_y23R",
    "F_y23L",
];

/// Canonical output names, in output-vector order.
pub const OUTPUT_NAMES: [&str; N_OUTPUTS] = [
    "yawrate_1",
    "yawrate_2",
    "rollrate_2",
    "theta",
    "F_y21R",
    "F_y21L",
    "F_y23R",
    "F_y23L",
    "F_z21R",
    "F_z21L",
    "F_z23R",
    "F_z23L",
];

/// Input channel names used by datasets.
pub const INPUT_NAMES: [&str; 3] = ["delta", "v_x2", "a_x2"];

/// State-vector indices.
pub mod idx {
    pub const V_Y1: usize = 0;
    pub const YAWRATE_1: usize = 1;
    pub const KAPPA_2: usize = 2;
    pub const V_Y2: usize = 3;
    pub const ROLLRATE_2: usize = 4;
    pub const YAWRATE_2: usize = 5;
    pub const THETA: usize = 6;
    pub const F_Y11: usize = 7;
    pub const F_Y12: usize = 8;
    /// First trailer tire force; wheel `w` (0..6, order 21R,21L,22R,22L,23R,23L) is at `F_Y2 + w`.
    pub const F_Y2: usize = 9;
}

/// The 15 model states.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector(pub [f64; N_STATES]);

impl StateVector {
    pub const ZERO: StateVector = StateVector([0.0; N_STATES]);

    pub fn v_y1(&self) -> f64 {
        self.0[idx::V_Y1]
    }
    pub fn yawrate_1(&self) -> f64 {
        self.0[idx::YAWRATE_1]
    }
    pub fn kappa_2(&self) -> f64 {
        self.0[idx::KAPPA_2]
    }
    pub fn v_y2(&self) -> f64 {
        self.0[idx::V_Y2]
    }
    pub fn rollrate_2(&self) -> f64 {
        self.0[idx::ROLLRATE_2]
    }
    pub fn yawrate_2(&self) -> f64 {
        self.0[idx::YAWRATE_2]
    }
    pub fn theta(&self) -> f64 {
        self.0[idx::THETA]
    }
    pub fn f_y11(&self) -> f64 {
        self.0[idx::F_Y11]
    }
    pub fn f_y12(&self) -> f64 {
        self.0[idx::F_Y12]
    }
    /// Trailer tire forces in wheel order 21R, 21L, 22R, 22L, 23R, 23L.
    pub fn trailer_forces(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        out.copy_from_slice(&self.0[idx::F_Y2..idx::F_Y2 + 6]);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Left/right mirror image: lateral quantities change sign and the
    /// trailer's right and left wheel stations trade places.
    pub fn mirrored(&self) -> StateVector {
        let mut m = self.0.map(|v| -v);
        for axle in 0..3 {
            m.swap(idx::F_Y2 + 2 * axle, idx::F_Y2 + 2 * axle + 1);
        }
        StateVector(m)
    }
}

/// Model input at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSample {
    /// Time [s].
    pub t: f64,
    /// Road-wheel steer angle [rad].
    pub delta: f64,
    /// Trailer longitudinal speed [m/s].
    pub v_x2: f64,
    /// Trailer longitudinal acceleration [m/s^2].
    pub a_x2: f64,
}

/// The 12 measured/simulated outputs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputVector(pub [f64; N_OUTPUTS]);

impl OutputVector {
    pub fn by_name(&self, name: &str) -> Option<f64> {
        OUTPUT_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.0[i])
    }

    /// Mirror image: rates, angle and lateral forces change sign; right and
    /// left wheel channels trade places.
    pub fn mirrored(&self) -> OutputVector {
        let y = &self.0;
        OutputVector([
            -y[0], -y[1], -y[2], -y[3], -y[5], -y[4], -y[7], -y[6], y[9], y[8], y[11], y[10],
        ])
    }
}

/// Whether an output channel is an angular quantity (reported in degrees).
pub fn output_is_angular(i: usize) -> bool {
    i < 4
}
