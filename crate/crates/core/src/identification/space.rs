//! Identifiable parameter vector and its box bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::{VehicleParameters, IDENTIFIABLE_NAMES};

const DEFAULT_BOUNDS_JSON: &str = include_str!("../../data/default_bounds.json");

/// Ordered parameter names with lower/upper bounds in SI units.
///
/// Entries are kept in the canonical identification order (`mu`, the three
/// `C`, `c1`, `c2` and relaxation lengths, `k`, `d`, `h_WK`, `h_W2`); a space
/// may hold any subset of them. In JSON it is a map `name -> [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Default for ParamSpace {
    /// The shipped default bounds for all 17 identifiable parameters.
    fn default() -> Self {
        let map: BTreeMap<String, [f64; 2]> =
            serde_json::from_str(DEFAULT_BOUNDS_JSON).expect("bundled bounds parse");
        Self::from_map(&map).expect("bundled bounds are valid")
    }
}

impl ParamSpace {
    pub fn from_map(map: &BTreeMap<String, [f64; 2]>) -> Result<Self> {
        let entries = map.iter().map(|(k, v)| (k.as_str(), v[0], v[1]));
        Self::new(entries)
    }

    /// Builds a space from `(name, lower, upper)`; order of the input is irrelevant.
    pub fn new<'a>(entries: impl IntoIterator<Item = (&'a str, f64, f64)>) -> Result<Self> {
        let mut rows: Vec<(usize, String, f64, f64)> = Vec::new();
        for (name, lo, hi) in entries {
            let pos = IDENTIFIABLE_NAMES
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::invalid(name, "not an identifiable parameter"))?;
            if rows.iter().any(|r| r.0 == pos) {
                return Err(Error::invalid(name, "listed twice in the parameter space"));
            }
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(
                    name,
                    format!("bounds must be finite with lower < upper, got [{lo}, {hi}]"),
                ));
            }
            rows.push((pos, name.to_string(), lo, hi));
        }
        if rows.is_empty() {
            return Err(Error::Config("parameter space is empty".into()));
        }
        rows.sort_by_key(|r| r.0);
        Ok(ParamSpace {
            names: rows.iter().map(|r| r.1.clone()).collect(),
            lower: rows.iter().map(|r| r.2).collect(),
            upper: rows.iter().map(|r| r.3).collect(),
        })
    }

    /// Default bounds restricted to `names`.
    pub fn default_subset(names: &[&str]) -> Result<Self> {
        let all = Self::default();
        let mut entries = Vec::with_capacity(names.len());
        for n in names {
            let i = all
                .index_of(n)
                .ok_or_else(|| Error::invalid(*n, "not an identifiable parameter"))?;
            entries.push((*n, all.lower[i], all.upper[i]));
        }
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Maps into the unit box.
    pub fn normalize(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(i, v)| (v - self.lower[i]) / self.range(i))
            .collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| self.lower[i] + v * self.range(i))
            .collect()
    }

    /// Current values of the space's parameters in `params`.
    pub fn extract(&self, params: &VehicleParameters) -> Vec<f64> {
        self.names
            .iter()
            .map(|n| params.get(n).expect("identifiable names are known"))
            .collect()
    }

    /// `base` with the space's parameters replaced by `p`, validated.
    pub fn apply(&self, base: &VehicleParameters, p: &[f64]) -> Result<VehicleParameters> {
        if p.len() != self.dim() {
            return Err(Error::Config(format!(
                "parameter vector has {} entries, space has {}",
                p.len(),
                self.dim()
            )));
        }
        let mut out = base.clone();
        for (name, v) in self.names.iter().zip(p) {
            out.set(name, *v)?;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn to_map(&self) -> BTreeMap<String, [f64; 2]> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), [self.lower[i], self.upper[i]]))
            .collect()
    }
}

impl Serialize for ParamSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParamSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, [f64; 2]>::deserialize(d)?;
        ParamSpace::from_map(&map).map_err(serde::de::Error::custom)
    }
}
