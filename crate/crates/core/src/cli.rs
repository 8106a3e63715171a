//! Command-line front end: `simulate`, `identify`, `validate`, `generate` and
//! `tire-curve`.
//!
//! Exit codes: 0 success, 1 domain error (a JSON object
//! `{"error": {"kind", "message"}}` on stderr), 2 usage error. Every
//! subcommand writes only into `--out` and echoes its effective configuration
//! into `run_config.json` and into each JSON artifact.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dataset::{DatasetMetadata, MeasurementDataset};
use crate::dynamics::{simulate, InputTrajectory, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::identification::{identify, IdentificationReport, IdentifyConfig, ParamSpace};
use crate::maneuvers::{generate, synthesize_dataset, ManeuverSpec, NoiseSpec, Section};
use crate::params::{TireSet, VehicleParameters};
use crate::state::StateVector;
use crate::tire::{cornering_stiffness, lateral_tire_force_static};
use crate::validation::validate;

#[derive(Debug, Parser)]
#[command(
    name = "semitrailer",
    version,
    about = "Simulation and grey-box identification of a tractor-semitrailer"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Vehicle parameter file (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Output directory, created if absent. Not echoed, so artifacts do not
    /// depend on where they are written.
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Random seed (noise synthesis, identification master seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Integration step [s].
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a maneuver or the inputs of a dataset.
    Simulate(SimulateArgs),
    /// Identify parameters from one or more datasets.
    Identify(IdentifyArgs),
    /// Compare a parameter set against a dataset.
    Validate(ValidateArgs),
    /// Write maneuver inputs, optionally a synthetic dataset.
    Generate(GenerateArgs),
    /// Tabulate the static lateral tire force against slip angle.
    TireCurve(TireCurveArgs),
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct SimulateArgs {
    /// Maneuver preset name or maneuver JSON file.
    #[arg(long)]
    pub maneuver: Option<String>,
    /// Dataset whose input channels drive the simulation.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentifyArgs {
    /// Dataset file; repeat for several datasets.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
    /// Identification config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Independent PSO restarts; the lowest-cost one wins.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// PSO iteration cap.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// PSO swarm size.
    #[arg(long)]
    pub swarm: Option<usize>,
    /// Identify only these parameters (comma separated); the rest stay at `--params`.
    #[arg(long, value_delimiter = ',')]
    pub parameters: Option<Vec<String>>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// `validation-sequence` or `label:start:end,...`; defaults to the
    /// dataset's maneuver sections, else the whole span.
    #[arg(long)]
    pub sections: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// Maneuver preset name or maneuver JSON file.
    #[arg(long)]
    pub maneuver: String,
    /// Also simulate and write a synthetic measurement dataset.
    #[arg(long)]
    pub synthesize: bool,
    /// `none`, `realistic` or a noise JSON file (with --synthesize).
    #[arg(long, default_value = "realistic")]
    pub noise: String,
}

#[derive(Debug, Args, Serialize)]
pub struct TireCurveArgs {
    /// Tire set: front, rear or trailer.
    #[arg(long, default_value = "trailer")]
    pub set: String,
    /// Vertical loads [N], comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000.0, 20_000.0, 30_000.0, 40_000.0])]
    pub fz: Vec<f64>,
    /// Largest slip angle magnitude [rad].
    #[arg(long, default_value_t = 0.3)]
    pub alpha_max: f64,
    /// Number of slip angles (odd, so that 0 is included).
    #[arg(long, default_value_t = 121)]
    pub points: usize,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{report}");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(p) = &g.params {
        require_file(p)?;
    }
    if let Some(dt) = g.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("--dt must be positive, got {dt}")));
        }
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(g, a),
        Command::Identify(a) => cmd_identify(g, a),
        Command::Validate(a) => cmd_validate(g, a),
        Command::Generate(a) => cmd_generate(g, a),
        Command::TireCurve(a) => cmd_tire_curve(g, a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ))
    }
}

fn load_params(g: &GlobalArgs) -> Result<VehicleParameters> {
    match &g.params {
        Some(p) => VehicleParameters::load(p),
        None => Ok(VehicleParameters::default()),
    }
}

fn prepare_out(g: &GlobalArgs) -> Result<&Path> {
    std::fs::create_dir_all(&g.out).map_err(|e| Error::io(&g.out, e))?;
    Ok(&g.out)
}

/// Preset name, or a path to a maneuver JSON file.
fn load_maneuver(arg: &str) -> Result<ManeuverSpec> {
    let path = Path::new(arg);
    if arg.ends_with(".json") || path.is_file() {
        require_file(path)?;
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return serde_json::from_str(&s).map_err(|e| Error::json(arg, e));
    }
    ManeuverSpec::preset(arg)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::json("output", e))?;
    std::fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
}

/// Effective configuration of a run, echoed into every JSON output.
fn run_config(subcommand: &str, g: &GlobalArgs, args: &impl Serialize, effective: Value) -> Value {
    json!({
        "subcommand": subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "global": g,
        "arguments": args,
        "effective": effective,
    })
}

fn cmd_simulate(g: &GlobalArgs, a: &SimulateArgs) -> Result<()> {
    if let Some(d) = &a.dataset {
        require_file(d)?;
    }
    let params = load_params(g)?;
    let dt = g.dt.unwrap_or(DEFAULT_DT);
    let (result, source) = match (&a.maneuver, &a.dataset) {
        (Some(m), _) => {
            let spec = load_maneuver(m)?;
            let profile = spec.profile()?;
            let sim = simulate(&StateVector::ZERO, &profile, &params, dt)?;
            (sim, serde_json::to_value(&spec).expect("spec serializes"))
        }
        (None, Some(d)) => {
            let inputs: InputTrajectory = MeasurementDataset::load(d)?.input_trajectory()?;
            let sim = simulate(&StateVector::ZERO, &inputs, &params, dt)?;
            (sim, json!({ "dataset": d }))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let out = prepare_out(g)?;
    let config = run_config(
        "simulate",
        g,
        a,
        json!({ "dt": dt, "inputs": source, "parameters": params.to_file_contents() }),
    );
    result.save_csv(out.join("trajectory.csv"))?;
    write_json(
        &out.join("diagnostics.json"),
        &json!({ "config": config, "diagnostics": result.diagnostics }),
    )?;
    write_json(&out.join("run_config.json"), &config)?;
    println!(
        "simulated {} s in {} steps -> {}",
        result.times.last().copied().unwrap_or(0.0) - result.times[0],
        result.diagnostics.steps,
        out.join("trajectory.csv").display()
    );
    Ok(())
}

fn cmd_identify(g: &GlobalArgs, a: &IdentifyArgs) -> Result<()> {
    for d in &a.dataset {
        require_file(d)?;
    }
    if let Some(c) = &a.config {
        require_file(c)?;
    }
    let base = load_params(g)?;
    let mut config = match &a.config {
        Some(p) => IdentifyConfig::load(p)?,
        None => IdentifyConfig::default(),
    };
    if let Some(r) = a.restarts {
        config.restarts = r;
    }
    if let Some(i) = a.iterations {
        config.pso.max_iterations = i;
    }
    if let Some(s) = a.swarm {
        config.pso.swarm_size = s;
    }
    if let Some(s) = g.seed {
        config.seed = s;
    }
    if let Some(dt) = g.dt {
        config.dt = dt;
    }
    if let Some(names) = &a.parameters {
        let mut entries = Vec::with_capacity(names.len());
        for n in names {
            let i = config
                .space
                .index_of(n)
                .ok_or_else(|| Error::invalid(n.clone(), "not in the configured parameter space"))?;
            entries.push((n.as_str(), config.space.lower()[i], config.space.upper()[i]));
        }
        config.space = ParamSpace::new(entries)?;
    }
    config.pso.seed = config.seed;
    config.validate()?;
    let datasets = a
        .dataset
        .iter()
        .map(MeasurementDataset::load)
        .collect::<Result<Vec<_>>>()?;
    let out = prepare_out(g)?;
    let result = identify(&datasets, &base, &config)?;
    let identified = result.vehicle_parameters()?;
    let echo = run_config(
        "identify",
        g,
        a,
        json!({ "identification": config, "base_parameters": base.to_file_contents() }),
    );
    let report = IdentificationReport {
        config: config.clone(),
        datasets: a.dataset.iter().map(|d| d.display().to_string()).collect(),
        result,
    };
    write_json(
        &out.join("identification.json"),
        &json!({ "run_config": echo, "report": report }),
    )?;
    identified.save(out.join("identified_params.json"))?;
    write_json(&out.join("run_config.json"), &echo)?;
    println!(
        "best J = {:.6e} (restart {}) -> {}",
        report.result.best_cost,
        report.result.best_restart,
        out.join("identification.json").display()
    );
    Ok(())
}

/// `label:start:end,...`
fn parse_sections(s: &str) -> Result<Vec<Section>> {
    if s == "validation-sequence" {
        return Ok(crate::maneuvers::validation_sections());
    }
    s.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let bad = || Error::Config(format!("section `{item}` is not `label:start:end`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let start: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let end: f64 = parts[2].trim().parse().map_err(|_| bad())?;
            Ok(Section::new(parts[0].trim(), start, end))
        })
        .collect()
}

fn cmd_validate(g: &GlobalArgs, a: &ValidateArgs) -> Result<()> {
    require_file(&a.dataset)?;
    let params = load_params(g)?;
    let dt = g.dt.unwrap_or(DEFAULT_DT);
    let dataset = MeasurementDataset::load(&a.dataset)?;
    let sections = match (&a.sections, &dataset.metadata.maneuver) {
        (Some(s), _) => parse_sections(s)?,
        (None, Some(spec)) => spec.sections()?,
        (None, None) => {
            let (start, end) = dataset.common_span()?;
            vec![Section::new("all", start, end)]
        }
    };
    let out = prepare_out(g)?;
    let v = validate(&dataset, &params, &sections, dt)?;
    let echo = run_config("validate", g, a, json!({ "dt": dt, "sections": sections }));
    write_json(
        &out.join("validation_report.json"),
        &json!({ "run_config": echo, "report": v.report }),
    )?;
    v.traces.write_plot_csvs(&out.join("plots"))?;
    write_json(&out.join("run_config.json"), &echo)?;
    print!("{}", v.report.format_table());
    Ok(())
}

fn load_noise(arg: &str, seed: Option<u64>) -> Result<NoiseSpec> {
    let mut noise = match arg {
        "none" => NoiseSpec::none(),
        "realistic" => NoiseSpec::realistic(0),
        path => {
            let p = Path::new(path);
            require_file(p)?;
            let s = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&s).map_err(|e| Error::json(path, e))?
        }
    };
    if let Some(s) = seed {
        noise.seed = s;
    }
    Ok(noise)
}

fn cmd_generate(g: &GlobalArgs, a: &GenerateArgs) -> Result<()> {
    let spec = load_maneuver(&a.maneuver)?;
    let dt = g.dt.unwrap_or(DEFAULT_DT);
    let inputs = generate(&spec)?;
    let noise = if a.synthesize {
        Some(load_noise(&a.noise, g.seed)?)
    } else {
        None
    };
    let params = if a.synthesize { Some(load_params(g)?) } else { None };
    let out = prepare_out(g)?;
    let echo = run_config(
        "generate",
        g,
        a,
        json!({ "dt": dt, "maneuver": spec, "noise": noise }),
    );
    write_json(&out.join("maneuver.json"), &spec)?;
    let meta = DatasetMetadata {
        source: Some("generated inputs".into()),
        maneuver: Some(spec.clone()),
        sample_rate: Some(spec.sample_rate()),
        ..Default::default()
    };
    MeasurementDataset::from_inputs(&inputs, meta)?.save(out.join("inputs.csv"))?;
    if let (Some(noise), Some(params)) = (&noise, &params) {
        let mut ds = synthesize_dataset(params, &spec, noise, dt)?;
        ds.metadata.extra.insert("run_config".into(), echo.clone());
        ds.save(out.join("dataset.csv"))?;
    }
    write_json(&out.join("run_config.json"), &echo)?;
    println!(
        "{} input samples over {} s -> {}",
        inputs.len(),
        inputs.t[inputs.len() - 1] - inputs.t[0],
        out.display()
    );
    Ok(())
}

fn cmd_tire_curve(g: &GlobalArgs, a: &TireCurveArgs) -> Result<()> {
    let params = load_params(g)?;
    let set = TireSet::parse(&a.set).ok_or_else(|| {
        Error::Config(format!("unknown tire set `{}`; valid: front, rear, trailer", a.set))
    })?;
    if a.points < 3 || a.points.is_multiple_of(2) {
        return Err(Error::Config("--points must be odd and at least 3".into()));
    }
    if !(a.alpha_max > 0.0 && a.alpha_max.is_finite()) {
        return Err(Error::Config("--alpha-max must be positive".into()));
    }
    if a.fz.is_empty() || a.fz.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Config("--fz needs positive loads".into()));
    }
    let tire = params.tire(set);
    tire.validate()?;
    let out = prepare_out(g)?;
    let half = (a.points - 1) / 2;
    let step = a.alpha_max / half as f64;
    let path = out.join("tire_curve.csv");
    let io = |e: csv::Error| Error::Io {
        path: path.clone(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    let mut header = vec!["alpha".to_string()];
    header.extend(a.fz.iter().map(|f| format!("F_y@{f}")));
    w.write_record(&header).map_err(io)?;
    for k in 0..a.points {
        let alpha = (k as f64 - half as f64) * step;
        let mut row = vec![alpha.to_string()];
        for &fz in &a.fz {
            row.push(lateral_tire_force_static(&tire, alpha, fz).force.to_string());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let stiffness: Vec<Value> = a
        .fz
        .iter()
        .map(|&fz| json!({ "F_z": fz, "cornering_stiffness": cornering_stiffness(&tire, fz) }))
        .collect();
    let echo = run_config("tire-curve", g, a, json!({ "tire": tire }));
    write_json(
        &out.join("tire_curve.json"),
        &json!({ "run_config": echo, "cornering_stiffness": stiffness }),
    )?;
    write_json(&out.join("run_config.json"), &echo)?;
    println!("{} slip angles x {} loads -> {}", a.points, a.fz.len(), path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let s = parse_sections("a:0:10, b:10:20").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].label, "b");
        assert_eq!(s[1].end, 20.0);
        assert_eq!(parse_sections("validation-sequence").unwrap().len(), 4);
        assert!(parse_sections("a:0").is_err());
        assert!(parse_sections("a:x:1").is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(main_with_args(["semitrailer", "frobnicate"]), 2);
        assert_eq!(main_with_args(["semitrailer", "simulate"]), 2);
        assert_eq!(
            main_with_args(["semitrailer", "simulate", "--maneuver", "slalom", "--dataset", "x.csv"]),
            2
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
