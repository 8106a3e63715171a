//! Steer and speed profiles for standard test maneuvers, and synthetic
//! measurement datasets generated from a known parameter set.
//!
//! Every transition (speed ramp, steer pulse edge, slalom envelope) is a
//! raised cosine, so the profiles are C¹ and the longitudinal acceleration is
//! the analytic derivative of the speed profile.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Channel, DatasetMetadata, MeasurementDataset};
use crate::dynamics::{simulate, time_grid, InputSource, InputTrajectory};
use crate::error::{Error, Result};
use crate::params::VehicleParameters;
use crate::physics::V_MIN;
use crate::state::{InputSample, StateVector, OUTPUT_NAMES};

/// km/h to m/s.
pub const KMH: f64 = 1.0 / 3.6;

/// Default raised-cosine transition time [s].
pub const DEFAULT_RISE_TIME: f64 = 1.0;

/// Default sample rate of generated trajectories [Hz].
pub const DEFAULT_SAMPLE_RATE: f64 = 100.0;

/// Names accepted by [`ManeuverSpec::preset`].
pub const PRESET_NAMES: [&str; 5] = [
    "slalom",
    "double-lane-change",
    "constant-turn",
    "validation-sequence",
    "identification-mix",
];

fn default_rise() -> f64 {
    DEFAULT_RISE_TIME
}
fn default_rate() -> f64 {
    DEFAULT_SAMPLE_RATE
}
fn default_lead_in() -> f64 {
    2.0
}
fn default_hold() -> f64 {
    0.5
}
fn default_gap() -> f64 {
    1.0
}

/// Raised-cosine step from 0 to 1 over `[0, 1]` and its derivative.
fn raised_cosine(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0)
    } else {
        (0.5 * (1.0 - (PI * x).cos()), 0.5 * PI * (PI * x).sin())
    }
}

/// Smooth transition of the speed to `target_kmh` over `[start, start + duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedRamp {
    pub start: f64,
    pub duration: f64,
    pub target_kmh: f64,
}

/// Speed plateaus joined by raised-cosine ramps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedProfile {
    pub initial_kmh: f64,
    #[serde(default)]
    pub ramps: Vec<SpeedRamp>,
}

impl SpeedProfile {
    pub fn constant(kmh: f64) -> Self {
        SpeedProfile {
            initial_kmh: kmh,
            ramps: Vec::new(),
        }
    }

    /// Speed [m/s] and its time derivative [m/s^2].
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let mut v = self.initial_kmh * KMH;
        let mut a = 0.0;
        for r in &self.ramps {
            if t <= r.start {
                break;
            }
            let target = r.target_kmh * KMH;
            let (s, ds) = raised_cosine((t - r.start) / r.duration);
            a = (target - v) * ds / r.duration + 0.0;
            v += (target - v) * s;
        }
        (v, a)
    }

    fn validate(&self) -> Result<()> {
        let mut end = f64::NEG_INFINITY;
        for (i, r) in self.ramps.iter().enumerate() {
            if !(r.duration > 0.0 && r.duration.is_finite()) {
                return Err(Error::InvalidManeuver(format!("speed ramp {i}: duration must be positive")));
            }
            if !(r.start >= end) {
                return Err(Error::InvalidManeuver(format!(
                    "speed ramp {i} starts before the previous ramp ends"
                )));
            }
            end = r.start + r.duration;
        }
        for kmh in std::iter::once(self.initial_kmh).chain(self.ramps.iter().map(|r| r.target_kmh)) {
            if !(kmh * KMH >= V_MIN) {
                return Err(Error::InvalidManeuver(format!(
                    "speed {kmh} km/h is below the minimum {} km/h",
                    V_MIN / KMH
                )));
            }
        }
        Ok(())
    }
}

/// One steer event; the steer angle is the sum of all events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SteerEvent {
    /// Rise to `amplitude`, hold, return to zero.
    Pulse {
        start: f64,
        amplitude: f64,
        hold: f64,
        #[serde(default = "default_rise")]
        rise: f64,
    },
    /// Rise to `amplitude` and hold until the end of the maneuver.
    Step {
        start: f64,
        amplitude: f64,
        #[serde(default = "default_rise")]
        rise: f64,
    },
    /// Sine of the given frequency under a raised-cosine envelope.
    Sine {
        start: f64,
        duration: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default = "default_rise")]
        rise: f64,
    },
}

impl SteerEvent {
    fn interval(&self) -> (f64, f64) {
        match *self {
            SteerEvent::Pulse {
                start, hold, rise, ..
            } => (start, start + 2.0 * rise + hold),
            SteerEvent::Step { start, .. } => (start, f64::INFINITY),
            SteerEvent::Sine {
                start, duration, ..
            } => (start, start + duration),
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            SteerEvent::Pulse { amplitude, .. }
            | SteerEvent::Step { amplitude, .. }
            | SteerEvent::Sine { amplitude, .. } => amplitude,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match *self {
            SteerEvent::Pulse {
                start,
                amplitude,
                hold,
                rise,
            } => {
                let up = raised_cosine((t - start) / rise).0;
                let down = raised_cosine((t - start - rise - hold) / rise).0;
                amplitude * (up - down)
            }
            SteerEvent::Step {
                start,
                amplitude,
                rise,
            } => amplitude * raised_cosine((t - start) / rise).0,
            SteerEvent::Sine {
                start,
                duration,
                amplitude,
                frequency,
                rise,
            } => {
                if t <= start || t >= start + duration {
                    return 0.0;
                }
                let env = raised_cosine((t - start) / rise).0
                    * (1.0 - raised_cosine((t - start - duration + rise) / rise).0);
                amplitude * env * (2.0 * PI * frequency * (t - start)).sin()
            }
        }
    }

    fn validate(&self, i: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidManeuver(format!("steer event {i}: {m}")));
        let finite = |v: f64| v.is_finite();
        match *self {
            SteerEvent::Pulse {
                start,
                amplitude,
                hold,
                rise,
            } => {
                if !(finite(start) && finite(amplitude) && hold >= 0.0 && finite(hold)) {
                    return bad("start, amplitude and a non-negative hold are required");
                }
                if !(rise > 0.0 && finite(rise)) {
                    return bad("rise time must be positive");
                }
            }
            SteerEvent::Step {
                start,
                amplitude,
                rise,
            } => {
                if !(finite(start) && finite(amplitude)) {
                    return bad("start and amplitude must be finite");
                }
                if !(rise > 0.0 && finite(rise)) {
                    return bad("rise time must be positive");
                }
            }
            SteerEvent::Sine {
                start,
                duration,
                amplitude,
                frequency,
                rise,
            } => {
                if !(finite(start) && finite(amplitude)) {
                    return bad("start and amplitude must be finite");
                }
                if !(frequency > 0.0 && finite(frequency)) {
                    return bad("slalom frequency must be positive");
                }
                if !(rise > 0.0 && 2.0 * rise <= duration && finite(duration)) {
                    return bad("duration must cover both envelope ramps");
                }
            }
        }
        Ok(())
    }
}

/// Description of a test maneuver, as accepted in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManeuverSpec {
    /// Straight lead-in, then a sinusoidal steer at constant speed.
    Slalom {
        duration: f64,
        speed_kmh: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default = "default_lead_in")]
        lead_in: f64,
        #[serde(default = "default_rise")]
        rise_time: f64,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
    /// Repeated double lane changes (out and back) at constant speed.
    DoubleLaneChange {
        duration: f64,
        speed_kmh: f64,
        amplitude: f64,
        /// Hold time of each steer pulse [s].
        #[serde(default = "default_hold")]
        hold: f64,
        /// Straight driving between the two lane changes and between repetitions [s].
        #[serde(default = "default_gap")]
        gap: f64,
        #[serde(default = "default_lead_in")]
        lead_in: f64,
        #[serde(default = "default_rise")]
        rise_time: f64,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
    /// Steer ramp to a constant angle, held to the end.
    ConstantTurn {
        duration: f64,
        speed_kmh: f64,
        amplitude: f64,
        #[serde(default = "default_lead_in")]
        lead_in: f64,
        #[serde(default = "default_rise")]
        rise_time: f64,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
    /// The 115 s four-section validation sequence.
    ValidationSequence {
        #[serde(default = "default_rise")]
        rise_time: f64,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
    /// 60 s identification mix: slalom, double lane change, constant turn.
    IdentificationMix {
        #[serde(default = "default_rise")]
        rise_time: f64,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
    /// Free-form speed ramps and steer events.
    Piecewise {
        duration: f64,
        speed: SpeedProfile,
        #[serde(default)]
        steer: Vec<SteerEvent>,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
}

/// Labeled time window of a maneuver [s].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

impl Section {
    pub fn new(label: impl Into<String>, start: f64, end: f64) -> Self {
        Section {
            label: label.into(),
            start,
            end,
        }
    }
}

/// Sections I-IV of the validation sequence.
pub fn validation_sections() -> Vec<Section> {
    vec![
        Section::new("I", 0.0, 40.0),
        Section::new("II", 40.0, 60.0),
        Section::new("III", 60.0, 80.0),
        Section::new("IV", 80.0, 115.0),
    ]
}

/// Two opposed pulses, then two more in reverse order: lane change out and back.
fn double_lane_change(start: f64, amplitude: f64, hold: f64, gap: f64, rise: f64) -> (Vec<SteerEvent>, f64) {
    let pulse = 2.0 * rise + hold;
    let mut t = start;
    let mut events = Vec::with_capacity(4);
    for (k, sign) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
        if k == 2 {
            t += gap;
        }
        events.push(SteerEvent::Pulse {
            start: t,
            amplitude: sign * amplitude,
            hold,
            rise,
        });
        t += pulse;
    }
    (events, t)
}

impl ManeuverSpec {
    /// Default spec for a named maneuver.
    pub fn preset(name: &str) -> Result<Self> {
        let spec = match name {
            "slalom" => ManeuverSpec::Slalom {
                duration: 30.0,
                speed_kmh: 25.0,
                amplitude: 0.1,
                frequency: 0.3,
                lead_in: default_lead_in(),
                rise_time: DEFAULT_RISE_TIME,
                sample_rate: DEFAULT_SAMPLE_RATE,
            },
            "double-lane-change" => ManeuverSpec::DoubleLaneChange {
                duration: 30.0,
                speed_kmh: 30.0,
                amplitude: 0.06,
                hold: default_hold(),
                gap: default_gap(),
                lead_in: default_lead_in(),
                rise_time: DEFAULT_RISE_TIME,
                sample_rate: DEFAULT_SAMPLE_RATE,
            },
            "constant-turn" => ManeuverSpec::ConstantTurn {
                duration: 20.0,
                speed_kmh: 25.0,
                amplitude: 0.15,
                lead_in: default_lead_in(),
                rise_time: DEFAULT_RISE_TIME,
                sample_rate: DEFAULT_SAMPLE_RATE,
            },
            "validation-sequence" => ManeuverSpec::ValidationSequence {
                rise_time: DEFAULT_RISE_TIME,
                sample_rate: DEFAULT_SAMPLE_RATE,
            },
            "identification-mix" => ManeuverSpec::IdentificationMix {
                rise_time: DEFAULT_RISE_TIME,
                sample_rate: DEFAULT_SAMPLE_RATE,
            },
            other => {
                return Err(Error::InvalidManeuver(format!(
                    "unknown maneuver `{other}`; valid options: {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Ok(spec)
    }

    pub fn sample_rate(&self) -> f64 {
        match *self {
            ManeuverSpec::Slalom { sample_rate, .. }
            | ManeuverSpec::DoubleLaneChange { sample_rate, .. }
            | ManeuverSpec::ConstantTurn { sample_rate, .. }
            | ManeuverSpec::ValidationSequence { sample_rate, .. }
            | ManeuverSpec::IdentificationMix { sample_rate, .. }
            | ManeuverSpec::Piecewise { sample_rate, .. } => sample_rate,
        }
    }

    /// Labeled windows for reporting; a single window for the simple maneuvers.
    pub fn sections(&self) -> Result<Vec<Section>> {
        Ok(match self {
            ManeuverSpec::ValidationSequence { .. } => validation_sections(),
            ManeuverSpec::IdentificationMix { .. } => vec![
                Section::new("slalom", 0.0, 22.0),
                Section::new("double-lane-change", 22.0, 40.0),
                Section::new("constant-turn", 40.0, 60.0),
            ],
            _ => vec![Section::new("all", 0.0, self.profile()?.duration)],
        })
    }

    /// Analytic profile described by this spec.
    pub fn profile(&self) -> Result<ManeuverProfile> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidManeuver(format!("{name} must be positive, got {v}")))
            }
        };
        positive("sample rate", self.sample_rate())?;
        let profile = match *self {
            ManeuverSpec::Slalom {
                duration,
                speed_kmh,
                amplitude,
                frequency,
                lead_in,
                rise_time,
                ..
            } => {
                positive("duration", duration)?;
                positive("slalom frequency", frequency)?;
                if !(lead_in >= 0.0 && lead_in < duration) {
                    return Err(Error::InvalidManeuver("lead-in must lie within the duration".into()));
                }
                ManeuverProfile::new(
                    duration,
                    SpeedProfile::constant(speed_kmh),
                    vec![SteerEvent::Sine {
                        start: lead_in,
                        duration: duration - lead_in,
                        amplitude,
                        frequency,
                        rise: rise_time,
                    }],
                )?
            }
            ManeuverSpec::DoubleLaneChange {
                duration,
                speed_kmh,
                amplitude,
                hold,
                gap,
                lead_in,
                rise_time,
                ..
            } => {
                positive("duration", duration)?;
                positive("rise time", rise_time)?;
                if !(hold >= 0.0 && gap >= 0.0 && lead_in >= 0.0) {
                    return Err(Error::InvalidManeuver(
                        "hold, gap and lead-in must be non-negative".into(),
                    ));
                }
                let mut steer = Vec::new();
                let mut t = lead_in;
                loop {
                    let (events, end) = double_lane_change(t, amplitude, hold, gap, rise_time);
                    if end > duration {
                        break;
                    }
                    steer.extend(events);
                    t = end + gap;
                }
                if steer.is_empty() {
                    return Err(Error::InvalidManeuver(
                        "duration too short for one double lane change".into(),
                    ));
                }
                ManeuverProfile::new(duration, SpeedProfile::constant(speed_kmh), steer)?
            }
            ManeuverSpec::ConstantTurn {
                duration,
                speed_kmh,
                amplitude,
                lead_in,
                rise_time,
                ..
            } => {
                positive("duration", duration)?;
                ManeuverProfile::new(
                    duration,
                    SpeedProfile::constant(speed_kmh),
                    vec![SteerEvent::Step {
                        start: lead_in,
                        amplitude,
                        rise: rise_time,
                    }],
                )?
            }
            ManeuverSpec::ValidationSequence { rise_time, .. } => validation_sequence(rise_time)?,
            ManeuverSpec::IdentificationMix { rise_time, .. } => identification_mix(rise_time)?,
            ManeuverSpec::Piecewise {
                duration,
                ref speed,
                ref steer,
                ..
            } => ManeuverProfile::new(duration, speed.clone(), steer.clone())?,
        };
        Ok(profile)
    }
}

fn validation_sequence(rise: f64) -> Result<ManeuverProfile> {
    let speed = SpeedProfile {
        initial_kmh: 15.0,
        ramps: vec![
            SpeedRamp {
                start: 40.0,
                duration: 6.0,
                target_kmh: 30.0,
            },
            SpeedRamp {
                start: 60.0,
                duration: 5.0,
                target_kmh: 18.0,
            },
            SpeedRamp {
                start: 80.0,
                duration: 6.0,
                target_kmh: 40.0,
            },
        ],
    };
    let mut steer = Vec::new();
    // I: three double lane changes at 15 km/h
    let mut t = 2.0;
    for _ in 0..3 {
        let (events, end) = double_lane_change(t, 0.15, 0.5, 1.0, rise);
        steer.extend(events);
        t = end + 1.0;
    }
    // II: right turn of roughly 90 degrees at 30 km/h
    steer.push(SteerEvent::Pulse {
        start: 50.0,
        amplitude: -0.12,
        hold: 5.0,
        rise,
    });
    // III: 180 degree left turn at 18 km/h
    steer.push(SteerEvent::Pulse {
        start: 66.0,
        amplitude: 0.25,
        hold: 8.5,
        rise,
    });
    // IV: two double lane changes at 40 km/h
    let mut t = 88.0;
    for _ in 0..2 {
        let (events, end) = double_lane_change(t, 0.04, 0.5, 1.0, rise);
        steer.extend(events);
        t = end + 1.0;
    }
    ManeuverProfile::new(115.0, speed, steer)
}

fn identification_mix(rise: f64) -> Result<ManeuverProfile> {
    let speed = SpeedProfile {
        initial_kmh: 20.0,
        ramps: vec![
            SpeedRamp {
                start: 22.0,
                duration: 4.0,
                target_kmh: 35.0,
            },
            SpeedRamp {
                start: 39.0,
                duration: 4.0,
                target_kmh: 25.0,
            },
        ],
    };
    let mut steer = vec![SteerEvent::Sine {
        start: 2.0,
        duration: 20.0,
        amplitude: 0.12,
        frequency: 0.3,
        rise,
    }];
    let (events, _) = double_lane_change(27.0, 0.06, 0.5, 1.0, rise);
    steer.extend(events);
    steer.push(SteerEvent::Step {
        start: 44.0,
        amplitude: 0.15,
        rise,
    });
    ManeuverProfile::new(60.0, speed, steer)
}

/// Analytic input source over `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverProfile {
    pub duration: f64,
    pub speed: SpeedProfile,
    pub steer: Vec<SteerEvent>,
}

impl ManeuverProfile {
    /// Validates durations, speeds and that steer events do not overlap.
    pub fn new(duration: f64, speed: SpeedProfile, mut steer: Vec<SteerEvent>) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidManeuver(format!("duration must be positive, got {duration}")));
        }
        speed.validate()?;
        for (i, e) in steer.iter().enumerate() {
            e.validate(i)?;
        }
        steer.sort_by(|a, b| a.interval().0.total_cmp(&b.interval().0));
        for w in steer.windows(2) {
            if w[1].interval().0 < w[0].interval().1 - 1e-12 {
                return Err(Error::InvalidManeuver(format!(
                    "steer events starting at {} s and {} s overlap",
                    w[0].interval().0,
                    w[1].interval().0
                )));
            }
        }
        Ok(ManeuverProfile {
            duration,
            speed,
            steer,
        })
    }

    pub fn steer_angle(&self, t: f64) -> f64 {
        self.steer.iter().map(|e| e.eval(t)).sum()
    }

    /// Largest steer amplitude of any event; bounds |delta|.
    pub fn max_amplitude(&self) -> f64 {
        self.steer.iter().map(|e| e.amplitude().abs()).fold(0.0, f64::max)
    }
}

impl InputSource for ManeuverProfile {
    fn span(&self) -> (f64, f64) {
        (0.0, self.duration)
    }

    fn sample(&self, t: f64) -> Result<InputSample> {
        let tol = 1e-9 * self.duration.max(1.0);
        if !(t >= -tol && t <= self.duration + tol) {
            return Err(Error::InputOutOfRange {
                t,
                start: 0.0,
                end: self.duration,
            });
        }
        let (v_x2, a_x2) = self.speed.eval(t);
        Ok(InputSample {
            t,
            delta: self.steer_angle(t),
            v_x2,
            a_x2,
        })
    }
}

/// Samples the spec's profile at its sample rate.
pub fn generate(spec: &ManeuverSpec) -> Result<InputTrajectory> {
    let profile = spec.profile()?;
    let grid = time_grid(0.0, profile.duration, 1.0 / spec.sample_rate())?;
    InputTrajectory::from_source(&profile, grid)
}

/// Additive Gaussian measurement noise per output channel [SI units].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation by output channel name; missing channels are noise-free.
    #[serde(default)]
    pub std: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            std: BTreeMap::new(),
            seed: 0,
        }
    }

    /// Sensor-grade noise: 0.1 deg/s on rates, 0.05 deg on the articulation
    /// angle, 0.2 kN on forces.
    pub fn realistic(seed: u64) -> Self {
        let std = OUTPUT_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let s = match i {
                    0..=2 => 0.1f64.to_radians(),
                    3 => 0.05f64.to_radians(),
                    _ => 200.0,
                };
                (name.to_string(), s)
            })
            .collect();
        NoiseSpec { std, seed }
    }

    pub fn std_of(&self, channel: &str) -> f64 {
        self.std.get(channel).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, &s) in &self.std {
            if !OUTPUT_NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!("noise given for unknown channel `{name}`")));
            }
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("noise std of `{name}` must be >= 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Simulates `spec` with `params_true`, samples the outputs at the spec rate
/// and adds noise. The inputs stored in the dataset are exactly those the
/// simulation was driven with.
pub fn synthesize_dataset(
    params_true: &VehicleParameters,
    spec: &ManeuverSpec,
    noise: &NoiseSpec,
    dt: f64,
) -> Result<MeasurementDataset> {
    noise.validate()?;
    let inputs = generate(spec)?;
    let rate = spec.sample_rate();
    let sim = crate::dynamics::simulate_outputs_at(
        &StateVector::ZERO,
        &inputs,
        params_true,
        dt,
        &inputs.t,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut channels = vec![
        Channel::new("delta", inputs.t.clone(), inputs.delta.clone())?,
        Channel::new("v_x2", inputs.t.clone(), inputs.v_x2.clone())?,
        Channel::new("a_x2", inputs.t.clone(), inputs.a_x2.clone())?,
    ];
    for (i, name) in OUTPUT_NAMES.iter().enumerate() {
        let mut values: Vec<f64> = sim.iter().map(|y| y.0[i]).collect();
        let s = noise.std_of(name);
        if s > 0.0 {
            let dist = Normal::new(0.0, s).expect("validated std");
            for v in &mut values {
                *v += dist.sample(&mut rng);
            }
        }
        channels.push(Channel::new(*name, inputs.t.clone(), values)?);
    }
    let metadata = DatasetMetadata {
        source: Some("synthetic".into()),
        true_parameters: Some(params_true.to_file_contents()),
        maneuver: Some(spec.clone()),
        noise: Some(noise.clone()),
        sample_rate: Some(rate),
        dt: Some(dt),
        ..Default::default()
    };
    MeasurementDataset::new(channels, metadata)
}

/// Simulation on the analytic profile, for callers that do not need a dataset.
pub fn simulate_maneuver(
    params: &VehicleParameters,
    spec: &ManeuverSpec,
    dt: f64,
) -> Result<crate::dynamics::SimulationResult> {
    simulate(&StateVector::ZERO, &spec.profile()?, params, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn zero_amplitude_slalom_is_straight() {
        let spec = ManeuverSpec::Slalom {
            duration: 10.0,
            speed_kmh: 20.0,
            amplitude: 0.0,
            frequency: 0.5,
            lead_in: 2.0,
            rise_time: 1.0,
            sample_rate: 100.0,
        };
        let u = generate(&spec).unwrap();
        assert!(u.delta.iter().all(|&d| d == 0.0));
        assert_eq!(u.len(), 1001);
    }

    #[test]
    fn zero_frequency_slalom_is_rejected() {
        let spec = ManeuverSpec::Slalom {
            duration: 10.0,
            speed_kmh: 20.0,
            amplitude: 0.1,
            frequency: 0.0,
            lead_in: 2.0,
            rise_time: 1.0,
            sample_rate: 100.0,
        };
        assert!(matches!(generate(&spec), Err(Error::InvalidManeuver(_))));
    }

    #[test]
    fn slow_speed_is_rejected() {
        let spec = ManeuverSpec::ConstantTurn {
            duration: 10.0,
            speed_kmh: 1.0,
            amplitude: 0.1,
            lead_in: 2.0,
            rise_time: 1.0,
            sample_rate: 100.0,
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn double_lane_change_has_zero_net_steer() {
        let spec = ManeuverSpec::preset("double-lane-change").unwrap();
        let p = spec.profile().unwrap();
        let a = p.max_amplitude();
        let integral = trapezoid(|t| p.steer_angle(t), 0.0, p.duration, 300_000);
        assert!(integral.abs() <= 0.01 * a * p.duration, "{integral}");
        assert!(integral.abs() < 1e-9);
    }

    #[test]
    fn validation_sequence_timeline() {
        let spec = ManeuverSpec::preset("validation-sequence").unwrap();
        let p = spec.profile().unwrap();
        assert_eq!(p.duration, 115.0);
        let kmh = |t: f64| p.speed.eval(t).0 / KMH;
        assert!((kmh(20.0) - 15.0).abs() < 1e-9);
        assert!((kmh(55.0) - 30.0).abs() < 1e-9);
        assert!((kmh(75.0) - 18.0).abs() < 1e-9);
        assert!((kmh(100.0) - 40.0).abs() < 1e-9);
        assert!(p.steer_angle(53.0) < 0.0, "right turn in section II");
        assert!(p.steer_angle(70.0) > 0.0, "left turn in section III");
        // left turn yaw integral: v * integral(delta) / wheelbase ~ pi
        let wheelbase = 3.8;
        let heading = trapezoid(|t| p.speed.eval(t).0 * p.steer_angle(t), 62.0, 80.0, 20_000) / wheelbase;
        assert!((heading - PI).abs() < 0.3, "{heading}");
        let u = generate(&spec).unwrap();
        assert_eq!(*u.t.last().unwrap(), 115.0);
    }

    #[test]
    fn acceleration_is_derivative_of_speed() {
        let p = ManeuverSpec::preset("validation-sequence").unwrap().profile().unwrap();
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        let junctions: Vec<f64> = p
            .speed
            .ramps
            .iter()
            .flat_map(|r| [r.start, r.start + r.duration])
            .collect();
        let mut t = 0.5;
        while t < 114.5 {
            // v'' jumps at ramp ends, where the stencil is only first order
            if junctions.iter().any(|j| (t - j).abs() < 2.0 * h) {
                t += 0.0137;
                continue;
            }
            let num = (p.speed.eval(t + h).0 - p.speed.eval(t - h).0) / (2.0 * h);
            worst = worst.max((num - p.speed.eval(t).1).abs());
            t += 0.0137;
        }
        // central difference error ~ h^2 v''' / 6
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn profiles_respect_bounds() {
        for name in PRESET_NAMES {
            let p = ManeuverSpec::preset(name).unwrap().profile().unwrap();
            let a = p.max_amplitude();
            let mut t = 0.0;
            while t <= p.duration {
                let u = p.sample(t).unwrap();
                assert!(u.delta.abs() <= a + 1e-15, "{name} at {t}");
                assert!(u.v_x2 >= V_MIN);
                t += 0.01;
            }
        }
    }

    #[test]
    fn steer_is_continuously_differentiable() {
        let p = ManeuverSpec::preset("identification-mix").unwrap().profile().unwrap();
        let h = 1e-6;
        let mut t = 0.01;
        while t < p.duration - 0.01 {
            let left = (p.steer_angle(t) - p.steer_angle(t - h)) / h;
            let right = (p.steer_angle(t + h) - p.steer_angle(t)) / h;
            assert!((left - right).abs() < 1e-3, "kink at {t}");
            t += 0.001;
        }
    }

    #[test]
    fn overlapping_events_are_rejected() {
        let steer = vec![
            SteerEvent::Pulse {
                start: 1.0,
                amplitude: 0.1,
                hold: 1.0,
                rise: 1.0,
            },
            SteerEvent::Pulse {
                start: 2.0,
                amplitude: 0.1,
                hold: 1.0,
                rise: 1.0,
            },
        ];
        assert!(ManeuverProfile::new(10.0, SpeedProfile::constant(20.0), steer).is_err());
    }

    #[test]
    fn unknown_preset_lists_options() {
        let err = ManeuverSpec::preset("figure-eight").unwrap_err().to_string();
        for name in PRESET_NAMES {
            assert!(err.contains(name));
        }
    }

    #[test]
    fn spec_json_round_trip() {
        for name in PRESET_NAMES {
            let spec = ManeuverSpec::preset(name).unwrap();
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<ManeuverSpec>(&json).unwrap(), spec);
        }
        let spec: ManeuverSpec = serde_json::from_str(
            r#"{"kind":"piecewise","duration":20,"speed":{"initial_kmh":20,
                "ramps":[{"start":5,"duration":2,"target_kmh":30}]},
                "steer":[{"shape":"pulse","start":8,"amplitude":0.1,"hold":1}]}"#,
        )
        .unwrap();
        let p = spec.profile().unwrap();
        assert!((p.steer_angle(10.0) - 0.1).abs() < 1e-12);
        assert_eq!(spec.sample_rate(), DEFAULT_SAMPLE_RATE);
    }
}
