//! Runs the particle swarm optimizer and the local refinement on a shifted,
//! ill-scaled quadratic in a bounded box.
//!
//! ```text
//! cargo run --release --example pso_sphere
//! ```

use semitrailer::identification::{pso, refine, ParamSpace, PsoConfig, RefineConfig};

fn main() -> semitrailer::Result<()> {
    // any identifiable names will do; the cost below ignores their meaning
    let space = ParamSpace::new([("mu", -5.0, 5.0), ("k", 0.0, 1e5), ("d", 1.0, 3.0), ("h_W2", -1.0, 0.0)])?;
    let optimum = [1.25, 4.2e4, 2.2, -0.3];
    let cost = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&optimum)
            .enumerate()
            .map(|(i, (x, o))| ((x - o) / space.range(i)).powi(2))
            .sum()
    };

    let config = PsoConfig {
        swarm_size: 30,
        max_iterations: 100,
        seed: 3,
        ..Default::default()
    };
    let swarm = pso(cost, &space, &config)?;
    println!("PSO: J = {:.3e} after {} evaluations", swarm.best_cost, swarm.evaluations);
    for (k, j) in swarm.history.iter().enumerate().step_by(20) {
        println!("  iteration {k:>3}: {j:.3e}");
    }

    let r = refine(cost, &swarm.best, &space, &RefineConfig::default())?;
    println!("refined: J = {:.3e} in {} iterations", r.cost, r.iterations);
    for (i, name) in space.names().iter().enumerate() {
        println!("  {name} = {:>12.6} (optimum {})", r.p[i], optimum[i]);
    }
    Ok(())
}
