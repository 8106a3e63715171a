//! Input trajectories, fixed-step RK4 integration and simulation results.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::system::{self, state_derivative, EvalFlags};
use crate::error::{Error, Result};
use crate::params::VehicleParameters;
use crate::state::{InputSample, OutputVector, StateVector, N_STATES, OUTPUT_NAMES, STATE_NAMES};

/// Default integration step [s].
pub const DEFAULT_DT: f64 = 1e-3;

/// Anything that yields model inputs over a closed time span.
pub trait InputSource: Sync {
    /// `(start, end)` of the covered horizon [s].
    fn span(&self) -> (f64, f64);
    fn sample(&self, t: f64) -> Result<InputSample>;
}

impl<S: InputSource + ?Sized> InputSource for &S {
    fn span(&self) -> (f64, f64) {
        (**self).span()
    }
    fn sample(&self, t: f64) -> Result<InputSample> {
        (**self).sample(t)
    }
}

/// Tolerance for requests that overshoot the span by floating-point noise.
fn span_tolerance(start: f64, end: f64) -> f64 {
    1e-9 * start.abs().max(end.abs()).max(1.0)
}

/// Sampled inputs with linear interpolation between samples; no extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTrajectory {
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub v_x2: Vec<f64>,
    pub a_x2: Vec<f64>,
}

impl InputTrajectory {
    pub fn new(t: Vec<f64>, delta: Vec<f64>, v_x2: Vec<f64>, a_x2: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 {
            return Err(Error::InvalidTrajectory("need at least two samples".into()));
        }
        if delta.len() != n || v_x2.len() != n || a_x2.len() != n {
            return Err(Error::InvalidTrajectory("channel lengths differ".into()));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTrajectory(format!(
                "time stamps not strictly increasing at index {}",
                i + 1
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&t) && finite(&delta) && finite(&v_x2) && finite(&a_x2)) {
            return Err(Error::InvalidTrajectory("non-finite sample".into()));
        }
        Ok(InputTrajectory {
            t,
            delta,
            v_x2,
            a_x2,
        })
    }

    /// Samples any input source on `t`.
    pub fn from_source(source: &impl InputSource, t: Vec<f64>) -> Result<Self> {
        let mut delta = Vec::with_capacity(t.len());
        let mut v_x2 = Vec::with_capacity(t.len());
        let mut a_x2 = Vec::with_capacity(t.len());
        for &ti in &t {
            let u = source.sample(ti)?;
            delta.push(u.delta);
            v_x2.push(u.v_x2);
            a_x2.push(u.a_x2);
        }
        Self::new(t, delta, v_x2, a_x2)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample_at(&self, i: usize) -> InputSample {
        InputSample {
            t: self.t[i],
            delta: self.delta[i],
            v_x2: self.v_x2[i],
            a_x2: self.a_x2[i],
        }
    }
}

impl InputSource for InputTrajectory {
    fn span(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().expect("non-empty"))
    }

    fn sample(&self, t: f64) -> Result<InputSample> {
        let (start, end) = self.span();
        let tol = span_tolerance(start, end);
        if !(t >= start - tol && t <= end + tol) {
            return Err(Error::InputOutOfRange { t, start, end });
        }
        let tc = t.clamp(start, end);
        // index of the last sample <= tc
        let i = self.t.partition_point(|&s| s <= tc).saturating_sub(1);
        if i + 1 >= self.t.len() {
            let mut u = self.sample_at(self.t.len() - 1);
            u.t = t;
            return Ok(u);
        }
        let w = (tc - self.t[i]) / (self.t[i + 1] - self.t[i]);
        let lerp = |v: &[f64]| v[i] + w * (v[i + 1] - v[i]);
        Ok(InputSample {
            t,
            delta: lerp(&self.delta),
            v_x2: lerp(&self.v_x2),
            a_x2: lerp(&self.a_x2),
        })
    }
}

/// Wraps a source and negates its steer angle.
#[derive(Debug, Clone, Copy)]
pub struct MirroredSteer<S>(pub S);

impl<S: InputSource> InputSource for MirroredSteer<S> {
    fn span(&self) -> (f64, f64) {
        self.0.span()
    }
    fn sample(&self, t: f64) -> Result<InputSample> {
        let mut u = self.0.sample(t)?;
        u.delta = -u.delta;
        Ok(u)
    }
}

/// One classical fourth-order Runge-Kutta step for `x' = f(t, x)`.
pub fn rk4_step<const N: usize, F>(x: &[f64; N], t: f64, dt: f64, mut f: F) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |a: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| x[i] + a * k[i]) };
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k1))?;
    let k3 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k2))?;
    let k4 = f(t + dt, &axpy(dt, &k3))?;
    Ok(std::array::from_fn(|i| {
        x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// One RK4 step of the vehicle model from time `t`; returns the new state and
/// the union of the stage flags.
pub fn step_rk4(
    x: &StateVector,
    inputs: &impl InputSource,
    t: f64,
    dt: f64,
    p: &VehicleParameters,
) -> Result<(StateVector, EvalFlags)> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let mut flags = EvalFlags::default();
    let next = rk4_step(&x.0, t, dt, |ts, xs| {
        let u = inputs.sample(ts)?;
        let d = state_derivative(&StateVector(*xs), &u, p)?;
        flags.merge(d.flags);
        Ok(d.xdot)
    })?;
    let next = StateVector(next);
    if !next.is_finite() {
        return Err(Error::NonFinite("integrated state"));
    }
    Ok((next, flags))
}

/// Run diagnostics accumulated over a simulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt: f64,
    /// Steps during which each trailer wheel (21R, 21L, 22R, 22L, 23R, 23L) had `F_z <= 0`.
    pub lift_off_steps: [usize; 6],
    pub first_lift_off_time: Option<f64>,
    pub v_x1_clamp_steps: usize,
    pub v_x2_clamp_steps: usize,
    /// Largest |coupling-point velocity constraint residual| along the run [m/s].
    pub max_constraint_residual: f64,
    /// Largest max-norm of `M xdot - f` over all stage evaluations; debug builds only.
    pub max_assembly_residual: Option<f64>,
}

impl Diagnostics {
    fn record(&mut self, t: f64, flags: EvalFlags) {
        self.steps += 1;
        if flags.lift_off != 0 {
            for (w, count) in self.lift_off_steps.iter_mut().enumerate() {
                if flags.lift_off & (1 << w) != 0 {
                    *count += 1;
                }
            }
            self.first_lift_off_time.get_or_insert(t);
        }
        self.v_x1_clamp_steps += flags.v_x1_clamped as usize;
        self.v_x2_clamp_steps += flags.v_x2_clamped as usize;
        if cfg!(debug_assertions) {
            let slot = self.max_assembly_residual.get_or_insert(0.0);
            *slot = slot.max(flags.assembly_residual);
        }
    }

    pub fn any_lift_off(&self) -> bool {
        self.first_lift_off_time.is_some()
    }
}

/// Integration grid `start + k dt` covering `[start, end]`.
pub fn time_grid(start: f64, end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    if !(end > start) {
        return Err(Error::InvalidTrajectory(format!("empty horizon [{start}, {end}]")));
    }
    let n = ((end - start) / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * dt).collect())
}

/// Integrates from `x0` over the source's span and calls `observe(t, x, u)` at
/// every grid point, including the initial one.
pub(crate) fn integrate<F>(
    x0: &StateVector,
    inputs: &impl InputSource,
    p: &VehicleParameters,
    dt: f64,
    mut observe: F,
) -> Result<Diagnostics>
where
    F: FnMut(f64, &StateVector, &InputSample) -> Result<()>,
{
    let (start, end) = inputs.span();
    let grid = time_grid(start, end, dt)?;
    let mut diag = Diagnostics {
        dt,
        ..Default::default()
    };
    let mut x = *x0;
    let abort = |time: f64, x: &StateVector, e: Error| Error::IntegrationAborted {
        time,
        state: x.0.to_vec(),
        source: Box::new(e),
    };
    for (k, &t) in grid.iter().enumerate() {
        let u = inputs.sample(t).map_err(|e| abort(t, &x, e))?;
        let residual = system::coupling_constraint_residual(&x, u.v_x2, p).abs();
        diag.max_constraint_residual = diag.max_constraint_residual.max(residual);
        observe(t, &x, &u)?;
        if k + 1 == grid.len() {
            break;
        }
        let h = grid[k + 1] - t;
        let (next, flags) = step_rk4(&x, inputs, t, h, p).map_err(|e| abort(t, &x, e))?;
        diag.record(t, flags);
        x = next;
    }
    Ok(diag)
}

/// Time histories of one simulation run on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub outputs: Vec<OutputVector>,
    pub diagnostics: Diagnostics,
}

/// Fixed-step RK4 simulation over the full span of `inputs`.
pub fn simulate(
    x0: &StateVector,
    inputs: &impl InputSource,
    p: &VehicleParameters,
    dt: f64,
) -> Result<SimulationResult> {
    p.validate()?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut outputs = Vec::new();
    let diagnostics = integrate(x0, inputs, p, dt, |t, x, u| {
        times.push(t);
        states.push(*x);
        outputs.push(system::output(x, u, p)?);
        Ok(())
    })?;
    Ok(SimulationResult {
        times,
        states,
        outputs,
        diagnostics,
    })
}

/// Simulates and returns the outputs linearly interpolated at `sample_times`
/// (which must be increasing and lie within the input span).
pub fn simulate_outputs_at(
    x0: &StateVector,
    inputs: &impl InputSource,
    p: &VehicleParameters,
    dt: f64,
    sample_times: &[f64],
) -> Result<Vec<OutputVector>> {
    let mut out = Vec::with_capacity(sample_times.len());
    let mut next = 0usize;
    let mut prev: Option<(f64, OutputVector)> = None;
    let (start, end) = inputs.span();
    let tol = span_tolerance(start, end);
    integrate(x0, inputs, p, dt, |t, x, u| {
        let y = system::output(x, u, p)?;
        while next < sample_times.len() && sample_times[next] <= t + tol {
            let ts = sample_times[next];
            let value = match prev {
                Some((tp, yp)) if ts > tp => {
                    let w = ((ts - tp) / (t - tp)).min(1.0);
                    OutputVector(std::array::from_fn(|i| yp.0[i] + w * (y.0[i] - yp.0[i])))
                }
                _ => y,
            };
            out.push(value);
            next += 1;
        }
        prev = Some((t, y));
        Ok(())
    })?;
    if out.len() != sample_times.len() {
        // trailing samples within rounding distance of the final grid point
        let (_, last) = prev.expect("at least one grid point");
        while out.len() < sample_times.len() {
            if sample_times[out.len()] > end + tol {
                return Err(Error::InputOutOfRange {
                    t: sample_times[out.len()],
                    start,
                    end,
                });
            }
            out.push(last);
        }
    }
    Ok(out)
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Output channel `i` as a time series.
    pub fn output_channel(&self, i: usize) -> Vec<f64> {
        self.outputs.iter().map(|y| y.0[i]).collect()
    }

    /// State component `i` as a time series.
    pub fn state_channel(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x.0[i]).collect()
    }

    /// CSV header: `t`, the 15 state names, then the outputs prefixed with `y.`.
    pub fn csv_header() -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend(STATE_NAMES.iter().map(|s| s.to_string()));
        cols.extend(OUTPUT_NAMES.iter().map(|s| format!("y.{s}")));
        cols.join(",")
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        let mut line = String::with_capacity(64 * (1 + N_STATES));
        for ((t, x), y) in self.times.iter().zip(&self.states).zip(&self.outputs) {
            line.clear();
            line.push_str(&t.to_string());
            for v in x.0.iter().chain(y.0.iter()) {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn save_diagnostics(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let s = serde_json::to_string_pretty(&self.diagnostics)
            .map_err(|e| Error::json("diagnostics", e))?;
        std::fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
    }
}
