//! Generates a synthetic measurement dataset for a maneuver preset, writes it
//! to CSV with its metadata sidecar and reads it back.
//!
//! ```text
//! cargo run --release --example generate_dataset -- [preset] [out.csv]
//! ```

use semitrailer::dataset::MeasurementDataset;
use semitrailer::dynamics::DEFAULT_DT;
use semitrailer::maneuvers::{synthesize_dataset, ManeuverSpec, NoiseSpec};
use semitrailer::VehicleParameters;

fn main() -> semitrailer::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "double-lane-change".into());
    let out = args
        .next()
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("{preset}.csv")));

    let spec = ManeuverSpec::preset(&preset)?;
    let noise = NoiseSpec::realistic(7);
    let ds = synthesize_dataset(&VehicleParameters::default(), &spec, &noise, DEFAULT_DT)?;
    ds.save(&out)?;
    println!("wrote {}", out.display());

    let back = MeasurementDataset::load(&out)?;
    let (start, end) = back.common_span()?;
    println!("{} channels over [{start}, {end}] s", back.channels().len());
    for c in back.channels() {
        let peak = c.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("  {:<11} {:>6} samples, max |value| {:.4e}", c.name, c.len(), peak);
    }
    Ok(())
}
