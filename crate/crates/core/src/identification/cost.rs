//! Normalized output-error cost.
//!
//! For measured channels `y_m` and simulated channels `y` on a common grid,
//!
//! ```text
//! J = sum_l |y_m(l) - y(l)|^2 / |y_m(l) - mean(y_m(l))|^2
//! ```
//!
//! A channel whose measured variance is zero carries no information and is
//! left out (with a warning). Several datasets contribute the sum of their
//! costs. A candidate whose simulation fails costs [`PENALTY`].

use crate::dataset::{MeasurementDataset, PreparedDataset, ANALYSIS_RATE};
use crate::dynamics::simulate_outputs_at;
use crate::error::{Error, Result};
use crate::identification::space::ParamSpace;
use crate::params::VehicleParameters;
use crate::state::{OutputVector, StateVector, N_OUTPUTS, OUTPUT_NAMES};

/// Cost assigned to candidates whose simulation fails.
pub const PENALTY: f64 = 1e6;

/// Measured outputs with the per-channel normalization precomputed.
#[derive(Debug, Clone)]
pub struct CostTarget {
    pub data: PreparedDataset,
    /// `1 / |y_m - mean|^2` per channel; `None` for excluded channels.
    weights: [Option<f64>; N_OUTPUTS],
}

impl CostTarget {
    pub fn new(data: PreparedDataset) -> Result<Self> {
        if data.outputs.len() != N_OUTPUTS || data.outputs.iter().any(|c| c.len() != data.len()) {
            return Err(Error::Config("prepared dataset has inconsistent output columns".into()));
        }
        let weights = std::array::from_fn(|l| {
            let col = &data.outputs[l];
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let denom: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let scale: f64 = col.iter().map(|v| v * v).sum();
            if denom > f64::EPSILON * f64::EPSILON * scale && denom > 0.0 {
                Some(1.0 / denom)
            } else {
                log::warn!(
                    "measured channel `{}` has zero variance; excluded from the cost",
                    OUTPUT_NAMES[l]
                );
                None
            }
        });
        Ok(CostTarget { data, weights })
    }

    pub fn from_dataset(dataset: &MeasurementDataset, rate: f64) -> Result<Self> {
        Self::new(dataset.prepare(rate)?)
    }

    /// Channels that take part in the cost.
    pub fn included(&self) -> [bool; N_OUTPUTS] {
        self.weights.map(|w| w.is_some())
    }

    /// Normalized error of simulated outputs on the target grid.
    pub fn error_of(&self, simulated: &[OutputVector]) -> Result<f64> {
        if simulated.len() != self.data.len() {
            return Err(Error::Config(format!(
                "{} simulated samples for {} measured",
                simulated.len(),
                self.data.len()
            )));
        }
        Ok(self.channel_errors(simulated).iter().flatten().sum())
    }

    /// Per-channel contributions; `None` for excluded channels.
    pub fn channel_errors(&self, simulated: &[OutputVector]) -> [Option<f64>; N_OUTPUTS] {
        std::array::from_fn(|l| {
            self.weights[l].map(|w| {
                let num: f64 = self.data.outputs[l]
                    .iter()
                    .zip(simulated)
                    .map(|(m, y)| (m - y.0[l]).powi(2))
                    .sum();
                num * w
            })
        })
    }

    /// Simulates `params` from rest over the target's inputs.
    pub fn simulate(&self, params: &VehicleParameters, dt: f64) -> Result<Vec<OutputVector>> {
        simulate_outputs_at(
            &StateVector::ZERO,
            &self.data.inputs,
            params,
            dt,
            self.data.times(),
        )
    }

    pub fn cost_of_params(&self, params: &VehicleParameters, dt: f64) -> Result<f64> {
        let sim = self.simulate(params, dt)?;
        self.error_of(&sim)
    }
}

/// Cost over one or more datasets as a function of the identification vector.
#[derive(Debug, Clone)]
pub struct CostFunction {
    targets: Vec<CostTarget>,
    base: VehicleParameters,
    space: ParamSpace,
    dt: f64,
}

impl CostFunction {
    /// Resamples each dataset to the analysis rate; `base` supplies every
    /// parameter outside `space`.
    pub fn new(
        datasets: &[MeasurementDataset],
        base: &VehicleParameters,
        space: &ParamSpace,
        dt: f64,
    ) -> Result<Self> {
        let targets = datasets
            .iter()
            .map(|d| CostTarget::from_dataset(d, ANALYSIS_RATE))
            .collect::<Result<Vec<_>>>()?;
        Self::from_targets(targets, base, space, dt)
    }

    pub fn from_targets(
        targets: Vec<CostTarget>,
        base: &VehicleParameters,
        space: &ParamSpace,
        dt: f64,
    ) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Config("at least one dataset is required".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {dt}")));
        }
        base.validate()?;
        Ok(CostFunction {
            targets,
            base: base.clone(),
            space: space.clone(),
            dt,
        })
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn base(&self) -> &VehicleParameters {
        &self.base
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn targets(&self) -> &[CostTarget] {
        &self.targets
    }

    pub fn params_for(&self, p: &[f64]) -> Result<VehicleParameters> {
        self.space.apply(&self.base, p)
    }

    /// Cost with failures reported as errors.
    pub fn try_evaluate(&self, p: &[f64]) -> Result<f64> {
        self.try_evaluate_params(&self.params_for(p)?)
    }

    pub fn try_evaluate_params(&self, params: &VehicleParameters) -> Result<f64> {
        let mut total = 0.0;
        for t in &self.targets {
            total += t.cost_of_params(params, self.dt)?;
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::NonFinite("cost"))
        }
    }

    /// Cost with failures mapped to [`PENALTY`].
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        match self.try_evaluate(p) {
            Ok(j) => j,
            Err(e) => {
                log::debug!("candidate rejected: {e}");
                PENALTY
            }
        }
    }
}

/// Cost of `params` against one dataset (single-call convenience).
pub fn cost(
    params: &VehicleParameters,
    dataset: &MeasurementDataset,
    dt: f64,
) -> Result<f64> {
    CostTarget::from_dataset(dataset, ANALYSIS_RATE)?.cost_of_params(params, dt)
}
