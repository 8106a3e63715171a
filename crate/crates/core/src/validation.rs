//! Per-channel RMSE between simulation and measurement, validation reports
//! and plot-ready CSV files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{MeasurementDataset, ANALYSIS_RATE};
use crate::error::{Error, Result};
use crate::identification::CostTarget;
use crate::maneuvers::Section;
use crate::params::{ParameterFile, VehicleParameters};
use crate::state::{output_is_angular, OutputVector, N_OUTPUTS, OUTPUT_NAMES};

/// Reference RMSE values in display units (deg/s, kN) from a published
/// test-track validation of this vehicle model. Used as plausibility bounds
/// and to format comparison tables.
pub const REFERENCE_RMSE: [(&str, f64); 7] = [
    ("yawrate_1", 0.76),
    ("yawrate_2", 0.39),
    ("rollrate_2", 0.5),
    ("F_y21R", 0.74),
    ("F_z21R", 1.34),
    ("F_y23L", 0.79),
    ("F_z23L", 1.87),
];

pub fn reference_rmse(channel: &str) -> Option<f64> {
    REFERENCE_RMSE.iter().find(|(n, _)| *n == channel).map(|(_, v)| *v)
}

/// Root-mean-square difference of two equally long series.
pub fn rmse(sim: &[f64], meas: &[f64]) -> Result<f64> {
    if sim.len() != meas.len() {
        return Err(Error::Config(format!(
            "RMSE of series with different lengths ({} vs {})",
            sim.len(),
            meas.len()
        )));
    }
    if sim.is_empty() {
        return Err(Error::Config("RMSE of empty series".into()));
    }
    let ss: f64 = sim.iter().zip(meas).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / sim.len() as f64).sqrt())
}

/// Factor and unit label converting an output channel from SI to display units.
pub fn display_unit(channel_index: usize) -> (f64, &'static str) {
    match channel_index {
        3 => (1f64.to_degrees(), "deg"),
        i if output_is_angular(i) => (1f64.to_degrees(), "deg/s"),
        _ => (1e-3, "kN"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRmse {
    pub channel: String,
    /// SI units (rad/s, rad, N).
    pub rmse: f64,
    pub rmse_display: f64,
    pub display_unit: String,
}

impl ChannelRmse {
    fn new(i: usize, rmse: f64) -> Self {
        let (scale, unit) = display_unit(i);
        ChannelRmse {
            channel: OUTPUT_NAMES[i].to_string(),
            rmse,
            rmse_display: rmse * scale,
            display_unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionReport {
    pub label: String,
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    pub channels: Vec<ChannelRmse>,
}

/// Echo of the settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub dt: f64,
    pub analysis_rate: f64,
    pub sections: Vec<Section>,
    pub parameters: ParameterFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub channels: Vec<ChannelRmse>,
    pub sections: Vec<SectionReport>,
    /// Normalized output-error cost of the parameters on this dataset.
    pub cost: f64,
    pub config: ValidationConfig,
}

/// Measured and simulated outputs on the analysis grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationTraces {
    pub t: Vec<f64>,
    pub measured: Vec<Vec<f64>>,
    pub simulated: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub report: ValidationReport,
    pub traces: ValidationTraces,
}

/// Simulates `params` over the dataset inputs, compares on the 100 Hz grid
/// and summarizes RMSE overall and per section. Sections are clipped to the
/// dataset span; a section outside it is an error.
pub fn validate(
    dataset: &MeasurementDataset,
    params: &VehicleParameters,
    sections: &[Section],
    dt: f64,
) -> Result<Validation> {
    params.validate()?;
    let target = CostTarget::from_dataset(dataset, ANALYSIS_RATE)?;
    let sim = target.simulate(params, dt)?;
    let cost = target.error_of(&sim)?;
    let t = target.data.times().to_vec();
    let measured = target.data.outputs.clone();
    let simulated: Vec<Vec<f64>> = (0..N_OUTPUTS)
        .map(|l| sim.iter().map(|y: &OutputVector| y.0[l]).collect())
        .collect();

    let channel_rmse = |range: std::ops::Range<usize>| -> Result<Vec<ChannelRmse>> {
        (0..N_OUTPUTS)
            .map(|l| {
                let r = rmse(&simulated[l][range.clone()], &measured[l][range.clone()])?;
                Ok(ChannelRmse::new(l, r))
            })
            .collect()
    };
    let channels = channel_rmse(0..t.len())?;

    let (span_start, span_end) = (t[0], t[t.len() - 1]);
    let mut section_reports = Vec::with_capacity(sections.len());
    let mut clipped = Vec::with_capacity(sections.len());
    for s in sections {
        if !(s.end > s.start) {
            return Err(Error::Config(format!("section `{}` has an empty window", s.label)));
        }
        let start = s.start.max(span_start);
        let end = s.end.min(span_end);
        let lo = t.partition_point(|&v| v < start - 1e-9);
        let hi = t.partition_point(|&v| v <= end + 1e-9);
        if hi <= lo {
            return Err(Error::Config(format!(
                "section `{}` [{}, {}] s lies outside the dataset span [{span_start}, {span_end}] s",
                s.label, s.start, s.end
            )));
        }
        section_reports.push(SectionReport {
            label: s.label.clone(),
            start,
            end,
            samples: hi - lo,
            channels: channel_rmse(lo..hi)?,
        });
        clipped.push(Section::new(s.label.clone(), start, end));
    }

    Ok(Validation {
        report: ValidationReport {
            channels,
            sections: section_reports,
            cost,
            config: ValidationConfig {
                dt,
                analysis_rate: ANALYSIS_RATE,
                sections: clipped,
                parameters: params.to_file_contents(),
            },
        },
        traces: ValidationTraces {
            t,
            measured,
            simulated,
        },
    })
}

impl ValidationReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelRmse> {
        self.channels.iter().find(|c| c.channel == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Text table in display units with the reference values alongside.
    pub fn format_table(&self) -> String {
        let mut s = String::new();
        s += &format!("{:<12} {:>12} {:>8} {:>10}", "channel", "RMSE", "unit", "reference");
        for sec in &self.sections {
            s += &format!(" {:>9}", sec.label);
        }
        s.push('\n');
        for (i, c) in self.channels.iter().enumerate() {
            let reference = reference_rmse(&c.channel)
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "-".into());
            s += &format!(
                "{:<12} {:>12.4} {:>8} {:>10}",
                c.channel, c.rmse_display, c.display_unit, reference
            );
            for sec in &self.sections {
                s += &format!(" {:>9.4}", sec.channels[i].rmse_display);
            }
            s.push('\n');
        }
        s += &format!("cost J = {:.6e}\n", self.cost);
        s
    }
}

impl ValidationTraces {
    /// Writes `plot_<channel>.csv` with columns `t,measured,simulated` (SI)
    /// into `dir` and returns the paths.
    pub fn write_plot_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::with_capacity(N_OUTPUTS);
        for (l, name) in OUTPUT_NAMES.iter().enumerate() {
            let path = dir.join(format!("plot_{name}.csv"));
            let io = |e: csv::Error| Error::Io {
                path: path.clone(),
                source: e.into(),
            };
            let mut w = csv::Writer::from_path(&path).map_err(io)?;
            w.write_record(["t", "measured", "simulated"]).map_err(io)?;
            for k in 0..self.t.len() {
                w.write_record([
                    self.t[k].to_string(),
                    self.measured[l][k].to_string(),
                    self.simulated[l][k].to_string(),
                ])
                .map_err(io)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
        Ok(paths)
    }
}
