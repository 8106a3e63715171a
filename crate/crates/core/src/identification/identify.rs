//! Multi-restart identification: PSO followed by local refinement.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MeasurementDataset;
use crate::error::{Error, Result};
use crate::identification::cost::CostFunction;
use crate::identification::pso::{pso, PsoConfig};
use crate::identification::refine::{refine, RefineConfig};
use crate::identification::space::ParamSpace;
use crate::params::{ParameterFile, VehicleParameters};

/// Default integration step of cost evaluations [s].
pub const DEFAULT_IDENTIFICATION_DT: f64 = 0.01;

fn default_restarts() -> usize {
    60
}
fn default_dt() -> f64 {
    DEFAULT_IDENTIFICATION_DT
}

/// Identification settings as read from JSON. The `seed` of `pso` is
/// ignored; per-restart seeds derive from the master `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    #[serde(default)]
    pub space: ParamSpace,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            space: ParamSpace::default(),
            pso: PsoConfig::default(),
            refine: RefineConfig::default(),
            restarts: default_restarts(),
            seed: 0,
            dt: default_dt(),
        }
    }
}

impl IdentifyConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.dt)));
        }
        self.pso.validate()
    }
}

/// Seed of restart `i` under `master`: one draw from stream `i` of the master generator.
pub fn restart_seed(master: u64, i: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(i as u64);
    rng.next_u64()
}

/// Outcome of one PSO + refinement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub seed: u64,
    pub pso_cost: f64,
    pub refined_cost: f64,
    pub improvement_ratio: f64,
    pub refine_iterations: usize,
    pub no_progress: bool,
    pub evaluations: usize,
    pub parameters: Vec<f64>,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub names: Vec<String>,
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub best_restart: usize,
    /// Final cost of every restart; `None` where the restart failed.
    pub restart_costs: Vec<Option<f64>>,
    /// Swarm-best history of the winning restart.
    pub history: Vec<f64>,
    /// Relative cost reduction by refinement in the winning restart.
    pub refinement_improvement: f64,
    pub restarts: Vec<Option<RestartOutcome>>,
    /// Complete parameter set with the identified values.
    pub parameters: ParameterFile,
}

/// JSON report written by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub config: IdentifyConfig,
    pub datasets: Vec<String>,
    pub result: IdentificationResult,
}

/// One PSO + refinement run with the given seed.
pub fn run_restart(cost: &CostFunction, config: &IdentifyConfig, seed: u64) -> Result<RestartOutcome> {
    let space = cost.space();
    let pso_cfg = PsoConfig {
        seed,
        ..config.pso.clone()
    };
    let f = |p: &[f64]| cost.evaluate(p);
    let swarm = pso(f, space, &pso_cfg)?;
    let refined = refine(f, &swarm.best, space, &config.refine)?;
    debug_assert!(refined.cost <= swarm.best_cost + 1e-12);
    Ok(RestartOutcome {
        seed,
        pso_cost: swarm.best_cost,
        refined_cost: refined.cost,
        improvement_ratio: refined.improvement_ratio(),
        refine_iterations: refined.iterations,
        no_progress: refined.no_progress,
        evaluations: swarm.evaluations + refined.evaluations,
        parameters: refined.p,
        history: swarm.history,
    })
}

/// Runs `config.restarts` independent restarts (in parallel) and keeps the
/// cheapest. Ties go to the lowest restart index, so the result does not
/// depend on scheduling.
pub fn identify(
    datasets: &[MeasurementDataset],
    base: &VehicleParameters,
    config: &IdentifyConfig,
) -> Result<IdentificationResult> {
    config.validate()?;
    let cost = CostFunction::new(datasets, base, &config.space, config.dt)?;
    identify_with(&cost, config)
}

pub fn identify_with(cost: &CostFunction, config: &IdentifyConfig) -> Result<IdentificationResult> {
    config.validate()?;
    if cost.space() != &config.space {
        return Err(Error::Config("cost function and config use different parameter spaces".into()));
    }
    let outcomes: Vec<Result<RestartOutcome>> = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let seed = restart_seed(config.seed, i);
            let r = run_restart(cost, config, seed);
            match &r {
                Ok(o) => log::info!(
                    "restart {i}: PSO J = {:.6e}, refined J = {:.6e}",
                    o.pso_cost,
                    o.refined_cost
                ),
                Err(e) => log::warn!("restart {i} failed: {e}"),
            }
            r
        })
        .collect();

    let mut best: Option<(usize, &RestartOutcome)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok(o) = o {
            if best.is_none_or(|(_, b)| o.refined_cost < b.refined_cost) {
                best = Some((i, o));
            }
        }
    }
    let Some((best_restart, winner)) = best else {
        let reasons: Vec<String> = outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.as_ref().err().map(|e| format!("restart {i}: {e}")))
            .collect();
        return Err(Error::Optimization(format!(
            "all {} restarts failed ({})",
            config.restarts,
            reasons.join("; ")
        )));
    };
    let params = cost.params_for(&winner.parameters)?;
    Ok(IdentificationResult {
        names: config.space.names().to_vec(),
        best: winner.parameters.clone(),
        best_cost: winner.refined_cost,
        best_restart,
        restart_costs: outcomes
            .iter()
            .map(|o| o.as_ref().ok().map(|o| o.refined_cost))
            .collect(),
        history: winner.history.clone(),
        refinement_improvement: winner.improvement_ratio,
        restarts: outcomes.iter().map(|o| o.as_ref().ok().cloned()).collect(),
        parameters: params.to_file_contents(),
    })
}

impl IdentificationResult {
    pub fn vehicle_parameters(&self) -> Result<VehicleParameters> {
        VehicleParameters::from_file_contents(&self.parameters)
    }
}
