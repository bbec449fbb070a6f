//! Scenario presets and the JSON scenario document.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, Horizon, IntegratorConfig, Solution};
use crate::model::{MobilityState, ModelParams, DEFAULT_A_MAX};

pub const DEFAULT_INITIAL: MobilityState = MobilityState::new(100.0, 10.0);

/// A named, fully resolved simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub description: String,
    pub params: ModelParams,
    pub initial: MobilityState,
    pub horizon: Horizon,
    pub integrator: IntegratorConfig,
}

impl ScenarioSpec {
    /// A spec with the shared defaults and the given rate constants.
    pub fn with_defaults(name: impl Into<String>, k1: f64, k2: f64, k3: f64, k4: f64) -> Self {
        Self {
            name: name.into(),
            description: String::new(),
            params: ModelParams::new(k1, k2, k3, k4, DEFAULT_A_MAX),
            initial: DEFAULT_INITIAL,
            horizon: Horizon::default(),
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("name: must be non-empty".into()));
        }
        let nested = self
            .params
            .validate()
            .and_then(|_| self.initial.validate())
            .and_then(|_| self.horizon.validate())
            .and_then(|_| self.integrator.validate());
        nested.map_err(|e| match e {
            Error::Domain { field, constraint } => {
                Error::Validation(format!("{field}: {constraint}"))
            }
            other => other,
        })
    }

    /// Canonical pretty-printed JSON form, every field present.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

struct Preset {
    name: &'static str,
    description: &'static str,
    k: [f64; 4],
}

const PRESETS: [Preset; 4] = [
    Preset {
        name: "scenario-1",
        description: "High AI adoption with strong regulatory support",
        k: [0.05, 0.3, 0.1, 0.01],
    },
    Preset {
        name: "scenario-2",
        description: "High AI adoption with weak regulatory support",
        k: [0.03, 1.2, 0.08, 0.02],
    },
    Preset {
        name: "scenario-3",
        description: "Low AI adoption with strong regulatory support",
        k: [0.02, 0.4, 0.03, 0.02],
    },
    Preset {
        name: "scenario-4",
        description: "Low AI adoption with weak regulatory support",
        k: [0.01, 1.5, 0.02, 0.03],
    },
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// Looks up one of the four built-in scenarios.
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let p = PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset {
            name: name.to_string(),
            available: preset_names().join(", "),
        })?;
    let [k1, k2, k3, k4] = p.k;
    let mut spec = ScenarioSpec::with_defaults(p.name, k1, k2, k3, k4);
    spec.description = p.description.to_string();
    Ok(spec)
}

pub fn presets() -> Vec<ScenarioSpec> {
    PRESETS
        .iter()
        .map(|p| preset(p.name).expect("built-in preset"))
        .collect()
}

// Document shapes: every field except the name and the four rates is optional.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    #[serde(default)]
    description: String,
    params: ModelParams,
    #[serde(default)]
    initial: InitialDoc,
    #[serde(default)]
    horizon: Horizon,
    #[serde(default)]
    integrator: IntegratorConfig,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    congestion: Option<f64>,
    adoption: Option<f64>,
}

impl From<ScenarioDoc> for ScenarioSpec {
    fn from(d: ScenarioDoc) -> Self {
        ScenarioSpec {
            name: d.name,
            description: d.description,
            params: d.params,
            initial: MobilityState::new(
                d.initial.congestion.unwrap_or(DEFAULT_INITIAL.congestion),
                d.initial.adoption.unwrap_or(DEFAULT_INITIAL.adoption),
            ),
            horizon: d.horizon,
            integrator: d.integrator,
        }
    }
}

impl<'de> Deserialize<'de> for ScenarioSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ScenarioDoc::deserialize(d).map(Into::into)
    }
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = serde_json::from_str(text).map_err(json_error)?;
    spec.validate()?;
    Ok(spec)
}

/// Runs a scenario with its own integrator settings.
pub fn simulate(spec: &ScenarioSpec) -> Result<Solution> {
    spec.validate()?;
    let mut sol = integrate::integrate(spec.initial, &spec.params, &spec.horizon, &spec.integrator)?;
    sol.trajectory.scenario_name = spec.name.clone();
    Ok(sol)
}

/// Scalar knobs of a scenario that sweeps, sensitivities and calibration can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamKey {
    #[serde(rename = "k1")]
    K1,
    #[serde(rename = "k2")]
    K2,
    #[serde(rename = "k3")]
    K3,
    #[serde(rename = "k4")]
    K4,
    #[serde(rename = "a_max")]
    AMax,
    #[serde(rename = "c0")]
    C0,
    #[serde(rename = "a0")]
    A0,
}

impl ParamKey {
    pub const ALL: [ParamKey; 7] = [
        ParamKey::K1,
        ParamKey::K2,
        ParamKey::K3,
        ParamKey::K4,
        ParamKey::AMax,
        ParamKey::C0,
        ParamKey::A0,
    ];
    pub const RATES: [ParamKey; 4] = [ParamKey::K1, ParamKey::K2, ParamKey::K3, ParamKey::K4];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamKey::K1 => "k1",
            ParamKey::K2 => "k2",
            ParamKey::K3 => "k3",
            ParamKey::K4 => "k4",
            ParamKey::AMax => "a_max",
            ParamKey::C0 => "c0",
            ParamKey::A0 => "a0",
        }
    }

    /// Whether the quantity is constrained to be non-negative.
    pub fn non_negative(self) -> bool {
        !matches!(self, ParamKey::C0 | ParamKey::A0)
    }

    pub fn get(self, spec: &ScenarioSpec) -> f64 {
        match self {
            ParamKey::K1 => spec.params.k1,
            ParamKey::K2 => spec.params.k2,
            ParamKey::K3 => spec.params.k3,
            ParamKey::K4 => spec.params.k4,
            ParamKey::AMax => spec.params.a_max,
            ParamKey::C0 => spec.initial.congestion,
            ParamKey::A0 => spec.initial.adoption,
        }
    }

    pub fn set(self, spec: &mut ScenarioSpec, value: f64) {
        match self {
            ParamKey::K1 => spec.params.k1 = value,
            ParamKey::K2 => spec.params.k2 = value,
            ParamKey::K3 => spec.params.k3 = value,
            ParamKey::K4 => spec.params.k4 = value,
            ParamKey::AMax => spec.params.a_max = value,
            ParamKey::C0 => spec.initial.congestion = value,
            ParamKey::A0 => spec.initial.adoption = value,
        }
    }

    pub fn with(self, spec: &ScenarioSpec, value: f64) -> ScenarioSpec {
        let mut s = spec.clone();
        self.set(&mut s, value);
        s
    }

    pub fn param_value(self, p: &ModelParams) -> Option<f64> {
        match self {
            ParamKey::K1 => Some(p.k1),
            ParamKey::K2 => Some(p.k2),
            ParamKey::K3 => Some(p.k3),
            ParamKey::K4 => Some(p.k4),
            ParamKey::AMax => Some(p.a_max),
            ParamKey::C0 | ParamKey::A0 => None,
        }
    }

    pub fn set_param(self, p: &mut ModelParams, value: f64) -> bool {
        match self {
            ParamKey::K1 => p.k1 = value,
            ParamKey::K2 => p.k2 = value,
            ParamKey::K3 => p.k3 = value,
            ParamKey::K4 => p.k4 = value,
            ParamKey::AMax => p.a_max = value,
            ParamKey::C0 | ParamKey::A0 => return false,
        }
        true
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        ParamKey::ALL
            .into_iter()
            .find(|k| k.as_str() == lower)
            .or(match lower.as_str() {
                "amax" => Some(ParamKey::AMax),
                _ => None,
            })
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown parameter `{s}` (expected one of k1, k2, k3, k4, a_max, c0, a0)"
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Method;

    #[test]
    fn presets_carry_published_constants() {
        let k = |s: &ScenarioSpec| (s.params.k1, s.params.k2, s.params.k3, s.params.k4);
        assert_eq!(k(&preset("scenario-1").unwrap()), (0.05, 0.3, 0.1, 0.01));
        assert_eq!(k(&preset("scenario-4").unwrap()), (0.01, 1.5, 0.02, 0.03));
    }

    #[test]
    fn unknown_preset_lists_available() {
        let msg = preset("scenario-5").unwrap_err().to_string();
        for n in ["scenario-1", "scenario-2", "scenario-3", "scenario-4"] {
            assert!(msg.contains(n), "{msg}");
        }
    }

    #[test]
    fn minimal_document_takes_defaults() {
        let doc = r#"{"name": "s1", "params": {"k1": 0.05, "k2": 0.3, "k3": 0.1, "k4": 0.01}}"#;
        let spec = parse_scenario(doc).unwrap();
        let mut expected = preset("scenario-1").unwrap();
        expected.name = "s1".into();
        expected.description = String::new();
        assert_eq!(spec, expected);
    }

    #[test]
    fn a_max_override_normalizes() {
        let doc = r#"{"name":"x","params":{"k1":0.05,"k2":0.3,"k3":0.1,"k4":0.01,"a_max":50}}"#;
        let spec = parse_scenario(doc).unwrap();
        assert_eq!(spec.params.a_max, 50.0);
        assert_eq!(spec.initial, DEFAULT_INITIAL);
        assert_eq!(spec.horizon, Horizon::default());
        let canonical = spec.to_json();
        assert_eq!(parse_scenario(&canonical).unwrap(), spec);
        assert_eq!(parse_scenario(&canonical).unwrap().to_json(), canonical);
    }

    #[test]
    fn negative_rate_is_validation_error() {
        let doc = r#"{"name":"x","params":{"k1":-0.1,"k2":0.3,"k3":0.1,"k4":0.01}}"#;
        match parse_scenario(doc).unwrap_err() {
            Error::Validation(msg) => assert!(msg.contains("k1 must be ≥ 0"), "{msg}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn horizon_violation_names_field() {
        let doc = r#"{"name":"x","params":{"k1":1,"k2":1,"k3":1,"k4":1},
                      "horizon":{"t0":5,"t_end":5}}"#;
        let msg = parse_scenario(doc).unwrap_err().to_string();
        assert!(msg.contains("t_end"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = r#"{"name":"x","params":{"k1":1,"k2":1,"k3":1,"k4":1},"colour":"red"}"#;
        assert!(matches!(parse_scenario(doc), Err(Error::Parse { .. })));
        let doc = r#"{"name":"x","params":{"k1":1,"k2":1,"k3":1,"k4":1,"k5":2}}"#;
        assert!(matches!(parse_scenario(doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn malformed_json_reports_position() {
        let doc = "{\n  \"name\": \"x\",\n  \"params\": {\"k1\": 0.1,, }\n}";
        match parse_scenario(doc).unwrap_err() {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn integrator_method_names() {
        let doc = r#"{"name":"x","params":{"k1":1,"k2":1,"k3":1,"k4":1},
                      "integrator":{"method":"adaptive-rk45","rtol":1e-9}}"#;
        let spec = parse_scenario(doc).unwrap();
        assert_eq!(spec.integrator.method, Method::AdaptiveRk45);
        assert_eq!(spec.integrator.rtol, 1e-9);
        assert_eq!(spec.integrator.atol, 1e-10);
    }

    #[test]
    fn param_keys_parse() {
        assert_eq!("K3".parse::<ParamKey>().unwrap(), ParamKey::K3);
        assert_eq!("a_max".parse::<ParamKey>().unwrap(), ParamKey::AMax);
        assert!("k5".parse::<ParamKey>().is_err());
    }
}
