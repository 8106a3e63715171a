//! Vehicle parameter set and its JSON file format.
//!
//! The file has two groups, `fixed` (measured quantities) and `identifiable`
//! (the quantities estimated from driving data). Keys use the symbol names
//! (`m_A1`, `l_h21`, `tire_trailer.C`, ...) and SI units. The JSON schema lives
//! in `schemas/vehicle_parameters.schema.json`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity used throughout the model [m/s^2].
pub const GRAVITY: f64 = 9.81;

const DEFAULT_PARAMS_JSON: &str = include_str!("../data/default_params.json");

/// Names of the measured parameters, in file order.
pub const FIXED_NAMES: [&str; 16] = [
    "m_A1", "m_A2", "m_R1", "m_R2", "J_z1", "J_z2", "J_x2", "l_v1", "l_h1", "l_k1", "l_v2", "l_h21",
    "l_h22", "l_h23", "b2", "g",
];

/// Names of the identifiable parameters, in the order of the identification vector.
pub const IDENTIFIABLE_NAMES: [&str; 17] = [
    "mu",
    "tire_front.C",
    "tire_rear.C",
    "tire_trailer.C",
    "tire_front.c1",
    "tire_rear.c1",
    "tire_trailer.c1",
    "tire_front.c2",
    "tire_rear.c2",
    "tire_trailer.c2",
    "tire_front.relaxation_length",
    "tire_rear.relaxation_length",
    "tire_trailer.relaxation_length",
    "k",
    "d",
    "h_WK",
    "h_W2",
];

/// Which tire coefficient set a wheel station uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TireSet {
    /// Tractor front axle (lumped, single track).
    Front,
    /// Tractor rear axle (lumped, single track).
    Rear,
    /// All six trailer wheel stations.
    Trailer,
}

impl TireSet {
    pub fn prefix(self) -> &'static str {
        match self {
            TireSet::Front => "tire_front",
            TireSet::Rear => "tire_rear",
            TireSet::Trailer => "tire_trailer",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "front" | "tire_front" | "11" => Some(TireSet::Front),
            "rear" | "tire_rear" | "12" => Some(TireSet::Rear),
            "trailer" | "tire_trailer" | "2j" => Some(TireSet::Trailer),
            _ => None,
        }
    }
}

/// Per-set tire coefficients; the friction scale `mu` is shared and stored
/// once on [`VehicleParameters`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TireCoefficients {
    /// Shape factor `C`.
    pub shape: f64,
    /// Load-sensitivity amplitude `c1` [N].
    pub c1: f64,
    /// Load at peak cornering stiffness `c2` [N].
    pub c2: f64,
    /// Relaxation length [m].
    pub relaxation_length: f64,
}

/// Complete coefficient set for one tire evaluation of the simplified Magic Formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TireParams {
    pub mu: f64,
    /// Shape factor `C`.
    pub shape: f64,
    pub c1: f64,
    pub c2: f64,
    pub relaxation_length: f64,
}

impl TireParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 2.0) {
            return Err(Error::invalid("mu", format!("{} not in (0, 2]", self.mu)));
        }
        if !(self.shape > 0.0 && self.shape <= 3.0) {
            return Err(Error::invalid("C", format!("{} not in (0, 3]", self.shape)));
        }
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("relaxation_length", self.relaxation_length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be positive and finite")));
            }
        }
        Ok(())
    }
}

/// All constants of the tractor (single track) and semitrailer (two track).
///
/// Field names follow the symbol names with lower-case Rust spelling; the
/// file keys keep the original capitalization (see [`VehicleParameters::get`]).
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParameters {
    /// Tractor body mass [kg].
    pub m_a1: f64,
    /// Trailer body mass [kg].
    pub m_a2: f64,
    /// Tractor wheel+axle mass per wheel [kg].
    pub m_r1: f64,
    /// Trailer wheel+axle mass per wheel [kg].
    pub m_r2: f64,
    pub j_z1: f64,
    pub j_z2: f64,
    pub j_x2: f64,
    /// Tractor CG to front axle [m].
    pub l_v1: f64,
    /// Tractor CG to rear axle [m].
    pub l_h1: f64,
    /// Tractor CG to coupling point [m].
    pub l_k1: f64,
    /// Trailer kingpin to CG [m].
    pub l_v2: f64,
    /// Trailer CG to axles 1..3 [m].
    pub l_h21: f64,
    pub l_h22: f64,
    pub l_h23: f64,
    /// Trailer track width [m].
    pub b2: f64,
    /// Body CG height above the roll axis [m].
    pub h_w2: f64,
    /// Coupling point height above the roll axis [m].
    pub h_wk: f64,
    /// Suspension stiffness per side [N/m].
    pub k: f64,
    /// Suspension damping per side [N s/m].
    pub d: f64,
    pub mu: f64,
    pub tire_front: TireCoefficients,
    pub tire_rear: TireCoefficients,
    pub tire_trailer: TireCoefficients,
    pub g: f64,
}

/// On-disk layout of a parameter file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFile {
    pub fixed: BTreeMap<String, f64>,
    pub identifiable: BTreeMap<String, f64>,
}

impl Default for VehicleParameters {
    fn default() -> Self {
        let file: ParameterFile =
            serde_json::from_str(DEFAULT_PARAMS_JSON).expect("bundled default parameters parse");
        Self::from_file_contents(&file).expect("bundled default parameters are valid")
    }
}

impl VehicleParameters {
    /// Trailer axle distances behind the CG, axle 1..3.
    pub fn trailer_axle_distances(&self) -> [f64; 3] {
        [self.l_h21, self.l_h22, self.l_h23]
    }

    /// Kingpin-to-middle-axle distance `e`.
    pub fn e(&self) -> f64 {
        self.l_h22 + self.l_v2
    }

    /// Tractor wheelbase `f`.
    pub fn f(&self) -> f64 {
        self.l_v1 + self.l_h1
    }

    /// Tractor mass including wheels, `4 m_R1 + m_A1`.
    pub fn tractor_mass(&self) -> f64 {
        4.0 * self.m_r1 + self.m_a1
    }

    /// Trailer mass including wheels, `6 m_R2 + m_A2`.
    pub fn trailer_mass(&self) -> f64 {
        6.0 * self.m_r2 + self.m_a2
    }

    pub fn tire_coefficients(&self, set: TireSet) -> &TireCoefficients {
        match set {
            TireSet::Front => &self.tire_front,
            TireSet::Rear => &self.tire_rear,
            TireSet::Trailer => &self.tire_trailer,
        }
    }

    pub fn tire(&self, set: TireSet) -> TireParams {
        let c = self.tire_coefficients(set);
        TireParams {
            mu: self.mu,
            shape: c.shape,
            c1: c.c1,
            c2: c.c2,
            relaxation_length: c.relaxation_length,
        }
    }

    /// Looks up a parameter by its file key.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "m_A1" => self.m_a1,
            "m_A2" => self.m_a2,
            "m_R1" => self.m_r1,
            "m_R2" => self.m_r2,
            "J_z1" => self.j_z1,
            "J_z2" => self.j_z2,
            "J_x2" => self.j_x2,
            "l_v1" => self.l_v1,
            "l_h1" => self.l_h1,
            "l_k1" => self.l_k1,
            "l_v2" => self.l_v2,
            "l_h21" => self.l_h21,
            "l_h22" => self.l_h22,
            "l_h23" => self.l_h23,
            "b2" => self.b2,
            "g" => self.g,
            "h_W2" => self.h_w2,
            "h_WK" => self.h_wk,
            "k" => self.k,
            "d" => self.d,
            "mu" => self.mu,
            _ => {
                let (prefix, field) = name.split_once('.')?;
                let c = self.tire_coefficients(TireSet::parse(prefix)?);
                match field {
                    "C" => c.shape,
                    "c1" => c.c1,
                    "c2" => c.c2,
                    "relaxation_length" => c.relaxation_length,
                    _ => return None,
                }
            }
        })
    }

    /// Sets a parameter by its file key. Does not re-validate.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "m_A1" => &mut self.m_a1,
            "m_A2" => &mut self.m_a2,
            "m_R1" => &mut self.m_r1,
            "m_R2" => &mut self.m_r2,
            "J_z1" => &mut self.j_z1,
            "J_z2" => &mut self.j_z2,
            "J_x2" => &mut self.j_x2,
            "l_v1" => &mut self.l_v1,
            "l_h1" => &mut self.l_h1,
            "l_k1" => &mut self.l_k1,
            "l_v2" => &mut self.l_v2,
            "l_h21" => &mut self.l_h21,
            "l_h22" => &mut self.l_h22,
            "l_h23" => &mut self.l_h23,
            "b2" => &mut self.b2,
            "g" => &mut self.g,
            "h_W2" => &mut self.h_w2,
            "h_WK" => &mut self.h_wk,
            "k" => &mut self.k,
            "d" => &mut self.d,
            "mu" => &mut self.mu,
            _ => {
                let unknown = || Error::invalid(name, "unknown parameter name");
                let (prefix, field) = name.split_once('.').ok_or_else(unknown)?;
                let set = TireSet::parse(prefix).ok_or_else(unknown)?;
                let c = match set {
                    TireSet::Front => &mut self.tire_front,
                    TireSet::Rear => &mut self.tire_rear,
                    TireSet::Trailer => &mut self.tire_trailer,
                };
                match field {
                    "C" => &mut c.shape,
                    "c1" => &mut c.c1,
                    "c2" => &mut c.c2,
                    "relaxation_length" => &mut c.relaxation_length,
                    _ => return Err(unknown()),
                }
            }
        };
        *slot = value;
        Ok(())
    }

    /// Checks every invariant of the parameter set.
    pub fn validate(&self) -> Result<()> {
        for name in FIXED_NAMES.iter().chain(IDENTIFIABLE_NAMES.iter()) {
            let v = self.get(name).expect("known name");
            if !v.is_finite() {
                return Err(Error::invalid(*name, "not finite"));
            }
        }
        // l_k1 may be zero (coupling above the CG); every other length is strictly positive.
        for name in FIXED_NAMES.iter().chain(IDENTIFIABLE_NAMES.iter()) {
            if matches!(*name, "l_k1" | "mu" | "tire_front.C" | "tire_rear.C" | "tire_trailer.C") {
                continue;
            }
            let v = self.get(name).expect("known name");
            let allow_zero = matches!(*name, "m_A2");
            if v < 0.0 || (v == 0.0 && !allow_zero) {
                return Err(Error::invalid(*name, format!("{v} must be positive")));
            }
        }
        if self.l_k1 < 0.0 {
            return Err(Error::invalid("l_k1", "must be non-negative"));
        }
        for set in [TireSet::Front, TireSet::Rear, TireSet::Trailer] {
            self.tire(set).validate().map_err(|e| match e {
                Error::InvalidParameter { name, reason } => Error::InvalidParameter {
                    name: if name == "mu" { name } else { format!("{}.{name}", set.prefix()) },
                    reason,
                },
                other => other,
            })?;
        }
        if self.e() <= 0.0 {
            return Err(Error::invalid("e", "l_h22 + l_v2 must be positive"));
        }
        if self.f() <= 0.0 {
            return Err(Error::invalid("f", "l_v1 + l_h1 must be positive"));
        }
        Ok(())
    }

    pub fn from_file_contents(file: &ParameterFile) -> Result<Self> {
        let mut p = Self::zeroed();
        p.g = GRAVITY;
        for (group, names, values) in [
            ("fixed", &FIXED_NAMES[..], &file.fixed),
            ("identifiable", &IDENTIFIABLE_NAMES[..], &file.identifiable),
        ] {
            for key in values.keys() {
                if !names.contains(&key.as_str()) {
                    return Err(Error::invalid(
                        key.clone(),
                        format!("unknown key in `{group}` group"),
                    ));
                }
            }
            for name in names {
                match values.get(*name) {
                    Some(v) => p.set(name, *v)?,
                    None if *name == "g" => {}
                    None => {
                        return Err(Error::invalid(*name, format!("missing from `{group}` group")))
                    }
                }
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_file_contents(&self) -> ParameterFile {
        let collect = |names: &[&str]| {
            names
                .iter()
                .map(|n| (n.to_string(), self.get(n).expect("known name")))
                .collect()
        };
        ParameterFile {
            fixed: collect(&FIXED_NAMES),
            identifiable: collect(&IDENTIFIABLE_NAMES),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ParameterFile =
            serde_json::from_str(s).map_err(|e| Error::json("parameter file", e))?;
        Self::from_file_contents(&file)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_contents()).expect("maps of f64 serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ParameterFile = serde_json::from_str(&s)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        Self::from_file_contents(&file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }

    fn zeroed() -> Self {
        let tire = TireCoefficients {
            shape: 0.0,
            c1: 0.0,
            c2: 0.0,
            relaxation_length: 0.0,
        };
        VehicleParameters {
            m_a1: 0.0,
            m_a2: 0.0,
            m_r1: 0.0,
            m_r2: 0.0,
            j_z1: 0.0,
            j_z2: 0.0,
            j_x2: 0.0,
            l_v1: 0.0,
            l_h1: 0.0,
            l_k1: 0.0,
            l_v2: 0.0,
            l_h21: 0.0,
            l_h22: 0.0,
            l_h23: 0.0,
            b2: 0.0,
            h_w2: 0.0,
            h_wk: 0.0,
            k: 0.0,
            d: 0.0,
            mu: 0.0,
            tire_front: tire,
            tire_rear: tire,
            tire_trailer: tire,
            g: GRAVITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = VehicleParameters::default();
        p.validate().unwrap();
        assert_eq!(p.g, 9.81);
        assert!(p.e() > 0.0 && p.f() > 0.0);
    }

    #[test]
    fn every_name_round_trips_through_get_set() {
        let mut p = VehicleParameters::default();
        for (i, name) in FIXED_NAMES.iter().chain(IDENTIFIABLE_NAMES.iter()).enumerate() {
            let v = 1.0 + i as f64 * 0.01;
            p.set(name, v).unwrap();
            assert_eq!(p.get(name), Some(v), "{name}");
        }
        assert!(p.get("nope").is_none());
        assert!(p.set("tire_front.nope", 1.0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let p = VehicleParameters::default();
        let back = VehicleParameters::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn missing_and_unknown_keys_are_rejected() {
        let mut file = VehicleParameters::default().to_file_contents();
        file.identifiable.remove("h_W2");
        let err = VehicleParameters::from_file_contents(&file).unwrap_err();
        assert!(err.to_string().contains("h_W2"), "{err}");

        let mut file = VehicleParameters::default().to_file_contents();
        file.fixed.insert("m_A3".into(), 1.0);
        let err = VehicleParameters::from_file_contents(&file).unwrap_err();
        assert!(err.to_string().contains("m_A3"), "{err}");
    }

    #[test]
    fn g_defaults_when_absent() {
        let mut file = VehicleParameters::default().to_file_contents();
        file.fixed.remove("g");
        let p = VehicleParameters::from_file_contents(&file).unwrap();
        assert_eq!(p.g, GRAVITY);
    }

    #[test]
    fn invariants_are_enforced() {
        let mut p = VehicleParameters::default();
        p.k = -1.0;
        assert!(p.validate().is_err());

        let mut p = VehicleParameters::default();
        p.mu = 2.5;
        assert!(p.validate().is_err());

        let mut p = VehicleParameters::default();
        p.tire_trailer.shape = 3.5;
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("tire_trailer.C"), "{err}");

        let mut p = VehicleParameters::default();
        p.m_a2 = 0.0;
        p.validate().unwrap();
    }
}
