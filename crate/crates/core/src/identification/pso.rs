//! Global-best particle swarm optimization on a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::space::ParamSpace;

/// Swarm settings. Defaults are the usual constriction-equivalent constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit per dimension as a fraction of the bound range.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 50,
            max_iterations: 150,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: 0.2,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config("swarm size must be at least 2".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("iteration cap must be at least 1".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("velocity_clamp", self.velocity_clamp),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("PSO {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    /// Swarm-best cost after initialization and after every iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Runs the swarm. Cost evaluations of one iteration run in parallel; all
/// random numbers are drawn sequentially from one seeded stream, so the
/// result depends only on the seed.
///
/// Non-finite costs count as worse than any finite cost; if every particle
/// is non-finite at initialization the run aborts.
pub fn pso<F>(cost: F, space: &ParamSpace, config: &PsoConfig) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let n = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vmax: Vec<f64> = (0..n).map(|i| config.velocity_clamp * space.range(i)).collect();

    let mut pos: Vec<Vec<f64>> = (0..config.swarm_size)
        .map(|_| {
            (0..n)
                .map(|i| rng.random_range(space.lower()[i]..=space.upper()[i]))
                .collect()
        })
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..config.swarm_size)
        .map(|_| (0..n).map(|i| rng.random_range(-vmax[i]..=vmax[i])).collect())
        .collect();

    let evaluate = |pos: &[Vec<f64>]| -> Vec<f64> {
        pos.par_iter()
            .map(|p| {
                let j = cost(p);
                if j.is_finite() {
                    j
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    };

    let mut costs = evaluate(&pos);
    let mut evaluations = costs.len();
    if costs.iter().all(|j| j.is_infinite()) {
        return Err(Error::Optimization(
            "cost is non-finite for every particle of the initial swarm".into(),
        ));
    }
    let mut pbest = pos.clone();
    let mut pbest_cost = costs.clone();
    let (mut gbest_idx, mut gbest_cost) = argmin(&pbest_cost);
    let mut gbest = pbest[gbest_idx].clone();
    let mut history = Vec::with_capacity(config.max_iterations + 1);
    history.push(gbest_cost);

    for _ in 0..config.max_iterations {
        for (k, (x, v)) in pos.iter_mut().zip(vel.iter_mut()).enumerate() {
            for i in 0..n {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vi = config.inertia * v[i]
                    + config.cognitive * r1 * (pbest[k][i] - x[i])
                    + config.social * r2 * (gbest[i] - x[i]);
                v[i] = vi.clamp(-vmax[i], vmax[i]);
                let xi = x[i] + v[i];
                if xi < space.lower()[i] {
                    x[i] = space.lower()[i];
                    v[i] = 0.0;
                } else if xi > space.upper()[i] {
                    x[i] = space.upper()[i];
                    v[i] = 0.0;
                } else {
                    x[i] = xi;
                }
            }
        }
        costs = evaluate(&pos);
        evaluations += costs.len();
        for k in 0..pos.len() {
            if costs[k] < pbest_cost[k] {
                pbest_cost[k] = costs[k];
                pbest[k].clone_from(&pos[k]);
            }
        }
        let (idx, c) = argmin(&pbest_cost);
        if c < gbest_cost {
            gbest_idx = idx;
            gbest_cost = c;
            gbest.clone_from(&pbest[gbest_idx]);
        }
        history.push(gbest_cost);
    }

    Ok(PsoResult {
        best: gbest,
        best_cost: gbest_cost,
        history,
        evaluations,
    })
}

/// First index of the smallest value.
fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &c)| if c < acc.1 { (i, c) } else { acc })
}
