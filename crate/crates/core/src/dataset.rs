//! Measurement datasets: named multi-rate channels, the CSV file contract and
//! resampling onto a common analysis grid.
//!
//! Wide format (canonical): a header `t,<channel>,<channel>,...` followed by
//! one row per time stamp. A channel sampled at a lower rate leaves its cell
//! empty on rows where it has no sample, so 100 Hz and 1000 Hz channels can
//! share a file. Long format: header `channel,t,value`, one sample per row.
//! Metadata goes to an optional JSON sidecar `<file>.meta.json`.
//! Values are SI units; floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::InputTrajectory;
use crate::error::{Error, Result};
use crate::maneuvers::{ManeuverSpec, NoiseSpec};
use crate::params::ParameterFile;
use crate::state::{INPUT_NAMES, N_OUTPUTS, OUTPUT_NAMES};

/// Common analysis rate for identification and validation [Hz].
pub const ANALYSIS_RATE: f64 = 100.0;

/// One time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    t: Vec<f64>,
    values: Vec<f64>,
}

impl Channel {
    /// Requires equal lengths, at least one sample, finite values and
    /// strictly increasing time stamps.
    pub fn new(name: impl Into<String>, t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let err = |message: String| Error::Channel {
            channel: name.clone(),
            message,
        };
        if t.is_empty() {
            return Err(err("channel is empty".into()));
        }
        if t.len() != values.len() {
            return Err(err(format!("{} time stamps but {} values", t.len(), values.len())));
        }
        if let Some(i) = t.iter().chain(&values).position(|v| !v.is_finite()) {
            return Err(err(format!("non-finite entry at position {}", i % t.len())));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(err(format!(
                "time stamps not strictly increasing at sample {} (t = {})",
                i + 1,
                t[i + 1]
            )));
        }
        Ok(Channel { name, t, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Mean sample rate [Hz]; `None` for a single sample.
    pub fn native_rate(&self) -> Option<f64> {
        let (a, b) = self.span();
        (self.len() > 1).then(|| (self.len() - 1) as f64 / (b - a))
    }

    /// Linear interpolation at increasing times inside the span.
    pub fn interpolate_sorted(&self, times: &[f64]) -> Result<Vec<f64>> {
        let (start, end) = self.span();
        let tol = 1e-9 * start.abs().max(end.abs()).max(1.0);
        let mut out = Vec::with_capacity(times.len());
        let mut i = 0usize;
        for &t in times {
            if !(t >= start - tol && t <= end + tol) {
                return Err(Error::Channel {
                    channel: self.name.clone(),
                    message: format!("t = {t} s is outside the channel span [{start}, {end}] s"),
                });
            }
            let tc = t.clamp(start, end);
            while i + 1 < self.t.len() && self.t[i + 1] <= tc {
                i += 1;
            }
            if i + 1 == self.t.len() || self.t[i] == tc {
                out.push(self.values[i]);
            } else {
                let w = (tc - self.t[i]) / (self.t[i + 1] - self.t[i]);
                out.push(self.values[i] + w * (self.values[i + 1] - self.values[i]));
            }
        }
        Ok(out)
    }

    /// Linear interpolation onto the uniform grid `t0 + k / rate` within the
    /// channel span. The rate must lie in `[1, 10 * native rate]` Hz.
    pub fn resample(&self, target_rate: f64) -> Result<Channel> {
        let native = self.native_rate().ok_or_else(|| Error::Channel {
            channel: self.name.clone(),
            message: "cannot resample a single sample".into(),
        })?;
        if !(target_rate >= 1.0 && target_rate <= 10.0 * native * (1.0 + 1e-12)) {
            return Err(Error::Channel {
                channel: self.name.clone(),
                message: format!(
                    "target rate {target_rate} Hz outside [1, {}] Hz",
                    10.0 * native
                ),
            });
        }
        let (start, end) = self.span();
        let grid = uniform_grid(start, end, target_rate);
        let values = self.interpolate_sorted(&grid)?;
        Channel::new(self.name.clone(), grid, values)
    }
}

/// `start + k / rate` for all k with the point inside `[start, end]` (up to rounding).
pub fn uniform_grid(start: f64, end: f64, rate: f64) -> Vec<f64> {
    let dt = 1.0 / rate;
    let n = ((end - start) / dt + 1e-9).floor().max(0.0) as usize;
    (0..=n).map(|k| start + k as f64 * dt).collect()
}

/// Provenance and bookkeeping stored next to a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_parameters: Option<ParameterFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maneuver: Option<ManeuverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    /// Rate the synthetic outputs were sampled at [Hz].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<f64>,
    /// Integration step used for synthesis [s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Native rate per channel [Hz], refreshed on save.
    #[serde(default)]
    pub native_rates: BTreeMap<String, f64>,
    /// Anything else the producer wants to keep.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Named channels plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataset {
    channels: Vec<Channel>,
    pub metadata: DatasetMetadata,
}

/// Dataset resampled onto one uniform grid, ready for simulation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub rate: f64,
    pub inputs: InputTrajectory,
    /// Measured outputs in canonical order, each on `inputs.t`.
    pub outputs: Vec<Vec<f64>>,
}

impl PreparedDataset {
    pub fn times(&self) -> &[f64] {
        &self.inputs.t
    }

    pub fn len(&self) -> usize {
        self.inputs.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.t.is_empty()
    }
}

impl MeasurementDataset {
    /// Channel names must be unique.
    pub fn new(channels: Vec<Channel>, mut metadata: DatasetMetadata) -> Result<Self> {
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Channel {
                    channel: c.name.clone(),
                    message: "duplicate channel".into(),
                });
            }
        }
        metadata.native_rates = native_rates(&channels);
        Ok(MeasurementDataset { channels, metadata })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Channel> {
        self.channel(name)
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    /// Replaces or appends a channel.
    pub fn insert(&mut self, channel: Channel) {
        match self.channels.iter_mut().find(|c| c.name == channel.name) {
            Some(c) => *c = channel,
            None => self.channels.push(channel),
        }
        self.metadata.native_rates = native_rates(&self.channels);
    }

    /// Checks that the input channels and all output channels are present.
    pub fn check_complete(&self) -> Result<()> {
        for name in INPUT_NAMES.iter().chain(OUTPUT_NAMES.iter()) {
            self.require(name)?;
        }
        Ok(())
    }

    /// Span shared by all inputs and outputs.
    pub fn common_span(&self) -> Result<(f64, f64)> {
        let mut start = f64::NEG_INFINITY;
        let mut end = f64::INFINITY;
        for name in INPUT_NAMES.iter().chain(OUTPUT_NAMES.iter()) {
            let (a, b) = self.require(name)?.span();
            start = start.max(a);
            end = end.min(b);
        }
        if !(end > start) {
            return Err(Error::InvalidTrajectory(format!(
                "channels do not overlap in time (common span [{start}, {end}] s)"
            )));
        }
        Ok((start, end))
    }

    /// Resamples all inputs and outputs onto a uniform grid over the common span.
    pub fn prepare(&self, rate: f64) -> Result<PreparedDataset> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("analysis rate must be positive, got {rate}")));
        }
        let (start, end) = self.common_span()?;
        let grid = uniform_grid(start, end, rate);
        let col = |name: &str| self.require(name)?.interpolate_sorted(&grid);
        let inputs = InputTrajectory::new(grid.clone(), col("delta")?, col("v_x2")?, col("a_x2")?)?;
        let outputs = OUTPUT_NAMES
            .iter()
            .map(|n| col(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedDataset {
            rate,
            inputs,
            outputs,
        })
    }

    /// Input channels as a trajectory on the `delta` time stamps.
    pub fn input_trajectory(&self) -> Result<InputTrajectory> {
        let t = self.require("delta")?.times().to_vec();
        let col = |name: &str| self.require(name)?.interpolate_sorted(&t);
        InputTrajectory::new(t.clone(), col("delta")?, col("v_x2")?, col("a_x2")?)
    }

    pub fn from_inputs(inputs: &InputTrajectory, metadata: DatasetMetadata) -> Result<Self> {
        let channels = vec![
            Channel::new("delta", inputs.t.clone(), inputs.delta.clone())?,
            Channel::new("v_x2", inputs.t.clone(), inputs.v_x2.clone())?,
            Channel::new("a_x2", inputs.t.clone(), inputs.a_x2.clone())?,
        ];
        Self::new(channels, metadata)
    }

    /// Writes the wide CSV format.
    pub fn write_wide_csv(&self, w: impl Write) -> std::io::Result<()> {
        let mut times: Vec<f64> = self.channels.iter().flat_map(|c| c.t.iter().copied()).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.channels.iter().map(|c| c.name.clone()));
        wtr.write_record(&header)?;
        let mut cursor = vec![0usize; self.channels.len()];
        let mut row = Vec::with_capacity(header.len());
        for &t in &times {
            row.clear();
            row.push(t.to_string());
            for (c, k) in self.channels.iter().zip(cursor.iter_mut()) {
                if *k < c.t.len() && c.t[*k] == t {
                    row.push(c.values[*k].to_string());
                    *k += 1;
                } else {
                    row.push(String::new());
                }
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()
    }

    /// Writes the long CSV format.
    pub fn write_long_csv(&self, w: impl Write) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["channel", "t", "value"])?;
        for c in &self.channels {
            for (t, v) in c.t.iter().zip(&c.values) {
                wtr.write_record([c.name.as_str(), &t.to_string(), &v.to_string()])?;
            }
        }
        wtr.flush()
    }

    /// Saves the wide CSV plus the metadata sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with(path, false)
    }

    pub fn save_long(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with(path, true)
    }

    fn save_with(&self, path: impl AsRef<Path>, long: bool) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let w = std::io::BufWriter::new(file);
        let res = if long {
            self.write_long_csv(w)
        } else {
            self.write_wide_csv(w)
        };
        res.map_err(|e| Error::io(path, e))?;
        let meta_path = metadata_path(path);
        let json = serde_json::to_string_pretty(&self.metadata)
            .map_err(|e| Error::json("dataset metadata", e))?;
        std::fs::write(&meta_path, json + "\n").map_err(|e| Error::io(meta_path, e))
    }

    /// Loads a wide or long CSV (detected from the header) and its sidecar if
    /// present. The three input channels are required.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut ds = Self::read_csv(file, path)?;
        let meta_path = metadata_path(path);
        if meta_path.exists() {
            let s = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let mut meta: DatasetMetadata = serde_json::from_str(&s)
                .map_err(|e| Error::json(meta_path.display().to_string(), e))?;
            meta.native_rates = native_rates(&ds.channels);
            ds.metadata = meta;
        }
        for name in INPUT_NAMES {
            ds.require(name)?;
        }
        Ok(ds)
    }

    /// Parses CSV text; `path` is only used in error messages.
    pub fn read_csv(r: impl Read, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(r);
        let mut records = rdr.records();
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let header = match records.next() {
            Some(rec) => rec.map_err(|e| parse_err(1, e.to_string()))?,
            None => return Err(parse_err(1, "file is empty".into())),
        };
        let header: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
        let long = header == ["channel", "t", "value"];
        if !long && header.first().map(String::as_str) != Some("t") {
            return Err(parse_err(
                1,
                "header must start with `t` (wide format) or be `channel,t,value` (long format)".into(),
            ));
        }
        let number = |s: &str, line: u64, what: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("cannot parse {what} `{s}` as a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{what} is not finite")))
            }
        };
        // per channel: (times, values, line of last sample)
        let mut series: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
        let mut lines: Vec<Vec<u64>> = Vec::new();
        if !long {
            for (i, name) in header.iter().enumerate().skip(1) {
                if name.is_empty() || header[..i].contains(name) {
                    return Err(parse_err(1, format!("empty or duplicate column name `{name}`")));
                }
                series.push((name.clone(), Vec::new(), Vec::new()));
                lines.push(Vec::new());
            }
        }
        for rec in records {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.iter().all(|f| f.trim().is_empty()) {
                continue;
            }
            if long {
                if rec.len() != 3 {
                    return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
                }
                let name = rec[0].trim();
                let t = number(&rec[1], line, "time")?;
                let v = number(&rec[2], line, "value")?;
                let k = match series.iter().position(|s| s.0 == name) {
                    Some(k) => k,
                    None => {
                        series.push((name.to_string(), Vec::new(), Vec::new()));
                        lines.push(Vec::new());
                        series.len() - 1
                    }
                };
                series[k].1.push(t);
                series[k].2.push(v);
                lines[k].push(line);
            } else {
                if rec.len() != header.len() {
                    return Err(parse_err(
                        line,
                        format!("expected {} fields, found {}", header.len(), rec.len()),
                    ));
                }
                let t = number(&rec[0], line, "time")?;
                for (k, field) in rec.iter().skip(1).enumerate() {
                    if field.trim().is_empty() {
                        continue;
                    }
                    let v = number(field, line, &format!("value of `{}`", series[k].0))?;
                    series[k].1.push(t);
                    series[k].2.push(v);
                    lines[k].push(line);
                }
            }
        }
        let mut channels = Vec::with_capacity(series.len());
        for ((name, t, v), lines) in series.into_iter().zip(lines) {
            if t.is_empty() {
                continue;
            }
            if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(parse_err(
                    lines[i + 1],
                    format!("time stamps of `{name}` not strictly increasing"),
                ));
            }
            channels.push(Channel::new(name, t, v)?);
        }
        Self::new(channels, DatasetMetadata::default())
    }
}

fn native_rates(channels: &[Channel]) -> BTreeMap<String, f64> {
    channels
        .iter()
        .filter_map(|c| c.native_rate().map(|r| (c.name.clone(), r)))
        .collect()
}

/// `<file>.meta.json` next to a dataset file.
pub fn metadata_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Index of an output channel by canonical name.
pub fn output_index(name: &str) -> Option<usize> {
    OUTPUT_NAMES.iter().position(|n| *n == name)
}

const _: () = assert!(OUTPUT_NAMES.len() == N_OUTPUTS);
