//! Bound-constrained quasi-Newton refinement with finite-difference gradients.
//!
//! Works in the unit box of the parameter space. Each iteration computes a
//! central-difference gradient, takes a projected BFGS step (variables held
//! at a bound by the gradient are frozen) and backtracks until the Armijo
//! condition holds on the projected path. Only strictly improving points are
//! accepted, so the result never costs more than the start.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::space::ParamSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub max_iterations: usize,
    /// Finite-difference step relative to the parameter magnitude.
    pub relative_step: f64,
    /// Stop when the projected gradient (unit-box coordinates) is below this.
    pub gradient_tolerance: f64,
    /// Stop when an iteration improves the cost by less than this fraction.
    pub cost_tolerance: f64,
    pub max_backtracks: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_iterations: 50,
            relative_step: 1e-4,
            gradient_tolerance: 1e-10,
            cost_tolerance: 1e-6,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub p: Vec<f64>,
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// The first line search failed; `p` is the start point.
    pub no_progress: bool,
}

impl RefineResult {
    /// `(J(p0) - J_refined) / J(p0)`, zero for a zero start cost.
    pub fn improvement_ratio(&self) -> f64 {
        if self.initial_cost > 0.0 {
            (self.initial_cost - self.cost) / self.initial_cost
        } else {
            0.0
        }
    }
}

/// Refines `p0` (which must lie in `space`).
pub fn refine<F>(cost: F, p0: &[f64], space: &ParamSpace, config: &RefineConfig) -> Result<RefineResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !space.contains(p0) {
        return Err(Error::Optimization("refinement start point outside the bounds".into()));
    }
    if !(config.relative_step > 0.0 && config.relative_step < 0.5) {
        return Err(Error::Config(format!(
            "relative finite-difference step must lie in (0, 0.5), got {}",
            config.relative_step
        )));
    }
    let n = space.dim();
    let f_of = |z: &[f64]| -> f64 {
        let j = cost(&space.denormalize(z));
        if j.is_finite() {
            j
        } else {
            f64::INFINITY
        }
    };
    let mut z = space.normalize(p0);
    for v in &mut z {
        *v = v.clamp(0.0, 1.0);
    }
    let f0 = f_of(&z);
    if !f0.is_finite() {
        return Err(Error::Optimization("cost at the refinement start point is not finite".into()));
    }
    let mut f = f0;
    let mut evaluations = 1;
    let mut g = gradient(&f_of, &z, space, config.relative_step, &mut evaluations);
    let mut h = identity(n);
    let mut iterations = 0;
    let mut moved = false;

    while iterations < config.max_iterations {
        if projected_gradient_norm(&z, &g) <= config.gradient_tolerance {
            break;
        }
        iterations += 1;
        let active: Vec<bool> = (0..n)
            .map(|i| (z[i] <= 0.0 && g[i] > 0.0) || (z[i] >= 1.0 && g[i] < 0.0))
            .collect();
        let mut d = direction(&h, &g, &active);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            d = direction(&h, &g, &active);
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                break;
            }
        }
        // first step: cap the move at 10% of the box
        if !moved {
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > 0.1 {
                d.iter_mut().for_each(|v| *v *= 0.1 / dmax);
            }
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial: Vec<f64> = (0..n).map(|i| (z[i] + alpha * d[i]).clamp(0.0, 1.0)).collect();
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - z[i])).sum();
            let ft = f_of(&trial);
            evaluations += 1;
            if ft < f && ft <= f + 1e-4 * decrease {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((z_new, f_new)) = accepted else {
            break;
        };
        let g_new = gradient(&f_of, &z_new, space, config.relative_step, &mut evaluations);
        let s: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        bfgs_update(&mut h, &s, &y);
        let rel_gain = (f - f_new) / f.abs().max(f64::MIN_POSITIVE);
        z = z_new;
        f = f_new;
        g = g_new;
        moved = true;
        if rel_gain < config.cost_tolerance {
            break;
        }
    }

    let p = if moved { space.denormalize(&z) } else { p0.to_vec() };
    let mut p = p;
    space.clamp(&mut p);
    Ok(RefineResult {
        p,
        cost: if moved { f } else { f0 },
        initial_cost: f0,
        iterations,
        evaluations,
        no_progress: !moved,
    })
}

/// Central differences in unit-box coordinates. The step is relative to the
/// parameter value (absolute near zero); the stencil is shifted inward at a bound.
fn gradient<G>(f_of: &G, z: &[f64], space: &ParamSpace, rel: f64, evaluations: &mut usize) -> Vec<f64>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let n = z.len();
    let p = space.denormalize(z);
    let steps: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let range = space.range(i);
            let scale = p[i].abs().max(1e-3 * range);
            let h = (rel * scale / range).min(0.25);
            let center = z[i].clamp(h, 1.0 - h);
            (center, h)
        })
        .collect();
    let points: Vec<(usize, f64)> = (0..n)
        .flat_map(|i| [(i, steps[i].0 + steps[i].1), (i, steps[i].0 - steps[i].1)])
        .collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(i, zi)| {
            let mut zz = z.to_vec();
            zz[i] = zi;
            f_of(&zz)
        })
        .collect();
    *evaluations += values.len();
    (0..n)
        .map(|i| {
            let d = (values[2 * i] - values[2 * i + 1]) / (2.0 * steps[i].1);
            if d.is_finite() {
                d
            } else {
                0.0
            }
        })
        .collect()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `-H g` restricted to the free variables.
fn direction(h: &[Vec<f64>], g: &[f64], active: &[bool]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if active[i] {
                0.0
            } else {
                -(0..n).filter(|&j| !active[j]).map(|j| h[i][j] * g[j]).sum::<f64>()
            }
        })
        .collect()
}

fn projected_gradient_norm(z: &[f64], g: &[f64]) -> f64 {
    z.iter()
        .zip(g)
        .map(|(zi, gi)| ((zi - gi).clamp(0.0, 1.0) - zi).abs())
        .fold(0.0, f64::max)
}

/// Inverse-Hessian BFGS update; skipped when the curvature condition fails.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let n = s.len();
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let yy: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(sy > 1e-12 * ss * yy) {
        return;
    }
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}
