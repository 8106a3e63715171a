//! Dataset files, maneuver generation and validation reports.

use proptest::prelude::*;

use semitrailer::dataset::{Channel, DatasetMetadata, MeasurementDataset, ANALYSIS_RATE};
use semitrailer::identification::cost;
use semitrailer::maneuvers::{
    generate, synthesize_dataset, ManeuverSpec, NoiseSpec, Section, SpeedProfile, SpeedRamp,
    SteerEvent,
};
use semitrailer::physics::V_MIN;
use semitrailer::state::OUTPUT_NAMES;
use semitrailer::validation::{rmse, validate};
use semitrailer::{Error, VehicleParameters};

fn short_dataset(noise: NoiseSpec) -> MeasurementDataset {
    let spec = ManeuverSpec::DoubleLaneChange {
        duration: 12.0,
        speed_kmh: 30.0,
        amplitude: 0.06,
        hold: 0.5,
        gap: 1.0,
        lead_in: 1.0,
        rise_time: 1.0,
        sample_rate: 100.0,
    };
    synthesize_dataset(&VehicleParameters::default(), &spec, &noise, 0.002).unwrap()
}

#[test]
fn wide_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dlc.csv");
    let ds = short_dataset(NoiseSpec::realistic(4));
    ds.save(&path).unwrap();
    assert!(dir.path().join("dlc.csv.meta.json").exists());
    let back = MeasurementDataset::load(&path).unwrap();
    assert_eq!(back.channels(), ds.channels());
    assert_eq!(back.metadata.maneuver, ds.metadata.maneuver);
    assert_eq!(back.metadata.noise, ds.metadata.noise);
    assert_eq!(back.metadata.true_parameters, ds.metadata.true_parameters);
}

#[test]
fn long_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dlc_long.csv");
    let ds = short_dataset(NoiseSpec::realistic(4));
    ds.save_long(&path).unwrap();
    let back = MeasurementDataset::load(&path).unwrap();
    assert_eq!(back.channels(), ds.channels());
}

#[test]
fn missing_input_channel_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no_speed.csv");
    std::fs::write(&path, "t,delta,a_x2,yawrate_1\n0,0,0,0\n0.01,0,0,0.1\n").unwrap();
    let err = MeasurementDataset::load(&path).unwrap_err();
    assert!(matches!(&err, Error::MissingChannel(c) if c == "v_x2"), "{err}");
    assert_eq!(err.kind(), "missing_channel");
}

#[test]
fn malformed_value_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,delta,v_x2,a_x2\n0,0,10,0\n0.01,abc,10,0\n").unwrap();
    match MeasurementDataset::load(&path).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 3),
        e => panic!("unexpected error {e}"),
    }
}

#[test]
fn multirate_channels_are_aligned_on_the_analysis_grid() {
    let ds = short_dataset(NoiseSpec::none());
    let mut channels = Vec::new();
    for c in ds.channels() {
        if c.name.starts_with("F_") {
            // force channels at 1000 Hz, linear between the 100 Hz samples
            let (start, end) = c.span();
            let n = ((end - start) * 1000.0).round() as usize;
            let t: Vec<f64> = (0..=n).map(|k| start + k as f64 / 1000.0).collect();
            let v = c.interpolate_sorted(&t).unwrap();
            channels.push(Channel::new(c.name.clone(), t, v).unwrap());
        } else {
            channels.push(c.clone());
        }
    }
    let fast = MeasurementDataset::new(channels, DatasetMetadata::default()).unwrap();
    let a = ds.prepare(ANALYSIS_RATE).unwrap();
    let b = fast.prepare(ANALYSIS_RATE).unwrap();
    assert_eq!(a.len(), b.len());
    for (ca, cb) in a.outputs.iter().zip(&b.outputs) {
        for (x, y) in ca.iter().zip(cb) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let a = short_dataset(NoiseSpec::realistic(8));
    let b = short_dataset(NoiseSpec::realistic(8));
    let c = short_dataset(NoiseSpec::realistic(9));
    assert_eq!(a, b);
    assert_ne!(a.channel("yawrate_1").unwrap(), c.channel("yawrate_1").unwrap());
    assert_eq!(a.channel("delta").unwrap(), c.channel("delta").unwrap());
}

#[test]
fn noiseless_self_validation_is_near_zero() {
    let ds = short_dataset(NoiseSpec::none());
    let p = VehicleParameters::default();
    let sections = [Section::new("all", 0.0, 12.0)];
    let v = validate(&ds, &p, &sections, 0.002).unwrap();
    for c in &v.report.channels {
        assert!(c.rmse <= 1e-9 * 1e4, "{} {}", c.channel, c.rmse);
    }
    assert!(v.report.cost <= 1e-12);
}

#[test]
fn report_cost_matches_identification_cost() {
    let ds = short_dataset(NoiseSpec::realistic(3));
    let mut p = VehicleParameters::default();
    p.set("tire_trailer.c1", 2.4e5).unwrap();
    let sections = [Section::new("a", 0.0, 6.0), Section::new("b", 6.0, 12.0)];
    let v = validate(&ds, &p, &sections, 0.002).unwrap();
    let j = cost(&p, &ds, 0.002).unwrap();
    assert!(((v.report.cost - j) / j).abs() <= 1e-12);
    assert_eq!(v.report.sections[0].samples + v.report.sections[1].samples, 1202);
}

#[test]
fn plot_files_have_three_columns() {
    let dir = tempfile::tempdir().unwrap();
    let ds = short_dataset(NoiseSpec::realistic(3));
    let v = validate(&ds, &VehicleParameters::default(), &[], 0.002).unwrap();
    let files = v.traces.write_plot_csvs(dir.path()).unwrap();
    assert_eq!(files.len(), OUTPUT_NAMES.len());
    let text = std::fs::read_to_string(dir.path().join("plot_F_z23L.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,measured,simulated"));
    assert_eq!(lines.count(), 1201);
}

#[test]
fn section_outside_span_is_rejected() {
    let ds = short_dataset(NoiseSpec::none());
    let r = validate(&ds, &VehicleParameters::default(), &[Section::new("late", 50.0, 60.0)], 0.002);
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn validation_sequence_lasts_115_s() {
    let inputs = generate(&ManeuverSpec::preset("validation-sequence").unwrap()).unwrap();
    assert_eq!(inputs.t[0], 0.0);
    assert!((inputs.t[inputs.len() - 1] - 115.0).abs() < 1e-9);
}

fn ramps() -> impl Strategy<Value = (f64, Vec<SpeedRamp>)> {
    (
        10.0f64..60.0,
        prop::collection::vec((0.5f64..4.0, 1.0f64..5.0, 5.0f64..80.0), 0..4),
    )
        .prop_map(|(initial, raw)| {
            let mut t = 1.0;
            let ramps = raw
                .into_iter()
                .map(|(pause, duration, target_kmh)| {
                    let r = SpeedRamp { start: t + pause, duration, target_kmh };
                    t = r.start + duration;
                    r
                })
                .collect();
            (initial, ramps)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rmse_is_symmetric_and_detects_offsets(v in prop::collection::vec(-1e3f64..1e3, 1..50), c in -5.0f64..5.0) {
        let w: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = rmse(&v, &w).unwrap();
        prop_assert_eq!(a, rmse(&w, &v).unwrap());
        prop_assert!(a >= 0.0);
        prop_assert!((a - c.abs()).abs() <= 1e-9 * (1.0 + c.abs()) * 1e3);
    }

    #[test]
    fn generated_speed_and_steer_stay_in_range(
        (initial, ramps) in ramps(),
        amp in 0.01f64..0.3,
        freq in 0.1f64..1.0,
    ) {
        let end = ramps.last().map_or(5.0, |r| r.start + r.duration + 1.0);
        let duration = end.max(8.0);
        let spec = ManeuverSpec::Piecewise {
            duration,
            speed: SpeedProfile { initial_kmh: initial, ramps },
            steer: vec![
                SteerEvent::Sine { start: 0.5, duration: duration - 1.0, amplitude: amp, frequency: freq, rise: 1.0 },
            ],
            sample_rate: 100.0,
        };
        let u = generate(&spec).unwrap();
        prop_assert!(u.v_x2.iter().all(|v| *v >= V_MIN));
        prop_assert!(u.delta.iter().all(|d| d.abs() <= amp * (1.0 + 1e-12)));
        // central differences of the speed against the supplied acceleration
        let profile = spec.profile().unwrap();
        let accel_scale = u.a_x2.iter().fold(1e-3f64, |m, a| m.max(a.abs()));
        for k in 1..u.len() - 1 {
            let t = u.t[k];
            let (_, a) = profile.speed.eval(t);
            let fd = (profile.speed.eval(t + 1e-4).0 - profile.speed.eval(t - 1e-4).0) / 2e-4;
            prop_assert!((fd - a).abs() <= 1e-3 * accel_scale, "t {t}: {fd} vs {a}");
        }
    }
}
