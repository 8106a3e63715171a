//! Validates a parameter set against a dataset: overall and per-section RMSE
//! in display units next to the reference values, plus plot CSVs.
//!
//! Without arguments a noisy validation-sequence dataset is synthesized from
//! perturbed parameters, and the nominal parameters are validated against it.
//!
//! ```text
//! cargo run --release --example validate_model -- [dataset.csv] [params.json]
//! ```

use semitrailer::dataset::MeasurementDataset;
use semitrailer::dynamics::DEFAULT_DT;
use semitrailer::maneuvers::{synthesize_dataset, validation_sections, ManeuverSpec, NoiseSpec};
use semitrailer::validation::validate;
use semitrailer::VehicleParameters;

fn main() -> semitrailer::Result<()> {
    let mut args = std::env::args().skip(1);
    let dataset = match args.next() {
        Some(path) => MeasurementDataset::load(path)?,
        None => {
            let mut truth = VehicleParameters::default();
            truth.set("tire_front.c1", truth.get("tire_front.c1").unwrap() * 0.9)?;
            truth.set("k", truth.get("k").unwrap() * 1.2)?;
            let spec = ManeuverSpec::preset("validation-sequence")?;
            synthesize_dataset(&truth, &spec, &NoiseSpec::realistic(11), DEFAULT_DT)?
        }
    };
    let params = match args.next() {
        Some(path) => VehicleParameters::load(path)?,
        None => VehicleParameters::default(),
    };
    let sections = match &dataset.metadata.maneuver {
        Some(spec) => spec.sections()?,
        None => validation_sections(),
    };

    let v = validate(&dataset, &params, &sections, DEFAULT_DT)?;
    print!("{}", v.report.format_table());
    let dir = std::env::temp_dir().join("semitrailer_validation_plots");
    let files = v.traces.write_plot_csvs(&dir)?;
    println!("{} plot files in {}", files.len(), dir.display());
    Ok(())
}
