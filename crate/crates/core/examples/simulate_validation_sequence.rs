//! Simulates the 115 s validation sequence with the default parameters and
//! prints a per-section summary of the outputs.
//!
//! ```text
//! cargo run --release --example simulate_validation_sequence
//! ```

use std::time::Instant;

use semitrailer::dynamics::{simulate, DEFAULT_DT};
use semitrailer::maneuvers::{validation_sections, ManeuverSpec};
use semitrailer::state::{idx, OUTPUT_NAMES};
use semitrailer::validation::display_unit;
use semitrailer::{StateVector, VehicleParameters};

fn main() -> semitrailer::Result<()> {
    let params = VehicleParameters::default();
    let profile = ManeuverSpec::preset("validation-sequence")?.profile()?;

    let started = Instant::now();
    let sim = simulate(&StateVector::ZERO, &profile, &params, DEFAULT_DT)?;
    println!(
        "{} steps in {:.2} s, max constraint residual {:.2e} m/s",
        sim.diagnostics.steps,
        started.elapsed().as_secs_f64(),
        sim.diagnostics.max_constraint_residual
    );
    if let Some(t) = sim.diagnostics.first_lift_off_time {
        println!("first wheel lift-off at {t:.2} s");
    }

    for section in validation_sections() {
        let rows: Vec<usize> = (0..sim.len())
            .filter(|&k| sim.times[k] >= section.start && sim.times[k] <= section.end)
            .collect();
        let peak = |f: &dyn Fn(usize) -> f64| rows.iter().map(|&k| f(k).abs()).fold(0.0, f64::max);
        println!("section {:>3}  [{:>5.1}, {:>5.1}] s", section.label, section.start, section.end);
        for (i, name) in OUTPUT_NAMES.iter().enumerate() {
            let (scale, unit) = display_unit(i);
            println!("    max |{name:<10}| = {:>8.3} {unit}", peak(&|k| sim.outputs[k].0[i]) * scale);
        }
        let ay = peak(&|k| {
            let x = &sim.states[k].0;
            x[idx::YAWRATE_2] * profile_speed(&profile, sim.times[k])
        });
        println!("    approx. max |a_y trailer| = {ay:.2} m/s^2");
    }
    Ok(())
}

fn profile_speed(p: &semitrailer::maneuvers::ManeuverProfile, t: f64) -> f64 {
    p.speed.eval(t).0
}
