//! Synthetic round trip: generate noisy data from known parameters, identify
//! all 17 identifiable parameters, then validate the estimate on a held-out
//! validation-sequence dataset.
//!
//! ```text
//! cargo run --release --example identify_round_trip -- [restarts] [swarm] [iterations]
//! ```

use std::time::Instant;

use semitrailer::dynamics::DEFAULT_DT;
use semitrailer::identification::{identify, CostFunction, IdentifyConfig, ParamSpace, PsoConfig};
use semitrailer::maneuvers::{synthesize_dataset, validation_sections, ManeuverSpec, NoiseSpec};
use semitrailer::validation::{reference_rmse, validate};
use semitrailer::VehicleParameters;

fn main() -> semitrailer::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let arg = |i: usize, default: usize| args.get(i).copied().unwrap_or(default);

    let truth = VehicleParameters::default();
    let mix = ManeuverSpec::preset("identification-mix")?;
    let data = synthesize_dataset(&truth, &mix, &NoiseSpec::realistic(1), DEFAULT_DT)?;

    let config = IdentifyConfig {
        pso: PsoConfig {
            swarm_size: arg(1, 30),
            max_iterations: arg(2, 60),
            ..Default::default()
        },
        restarts: arg(0, 8),
        seed: 2024,
        ..Default::default()
    };
    let space = ParamSpace::default();
    let floor = CostFunction::new(std::slice::from_ref(&data), &truth, &space, config.dt)?
        .try_evaluate(&space.extract(&truth))?;
    println!("noise-floor cost of the true parameters: {floor:.5}");

    let started = Instant::now();
    let result = identify(std::slice::from_ref(&data), &truth, &config)?;
    println!(
        "identified in {:.1} s: J = {:.5} ({:.3} x floor), refinement gain {:.2} %",
        started.elapsed().as_secs_f64(),
        result.best_cost,
        result.best_cost / floor,
        100.0 * result.refinement_improvement
    );
    let costs: Vec<String> = result
        .restart_costs
        .iter()
        .map(|c| c.map_or("failed".into(), |c| format!("{c:.4}")))
        .collect();
    println!("per-restart costs: {}", costs.join(", "));
    for r in result.restarts.iter().flatten() {
        println!(
            "  PSO J {:.5} -> refined {:.5} in {} iterations, {} cost evaluations",
            r.pso_cost, r.refined_cost, r.refine_iterations, r.evaluations
        );
    }
    let truth_vec = space.extract(&truth);
    for (i, name) in result.names.iter().enumerate() {
        println!(
            "  {name:<32} true {:>12.5e}  identified {:>12.5e}",
            truth_vec[i], result.best[i]
        );
    }

    let estimate = result.vehicle_parameters()?;
    let holdout = synthesize_dataset(
        &truth,
        &ManeuverSpec::preset("validation-sequence")?,
        &NoiseSpec::realistic(2),
        DEFAULT_DT,
    )?;
    let report = validate(&holdout, &estimate, &validation_sections(), DEFAULT_DT)?.report;
    println!("\nheld-out validation\n{}", report.format_table());
    for c in &report.channels {
        if let Some(r) = reference_rmse(&c.channel) {
            let verdict = if c.rmse_display <= r { "ok" } else { "ABOVE" };
            println!("  {:<10} {:.3} {} vs reference {r}: {verdict}", c.channel, c.rmse_display, c.display_unit);
        }
    }
    Ok(())
}
