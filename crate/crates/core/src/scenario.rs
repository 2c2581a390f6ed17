//! Scenario files: strict JSON describing geometry, material, solver
//! settings, the actuation plan and requested outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuation::{nearest_point_id, ActuationSchedule};
use crate::chain::{discretize_polyline, ChainState};
use crate::error::{Error, Result, ScenarioError};
use crate::geometry::Point2;
use crate::material::{compliance_rate, ComplianceRate, MaterialParams, SolverParams};
use crate::solver::Relaxation;

/// Major version accepted by this loader.
pub const SCHEMA_MAJOR: u32 = 1;
pub const SCHEMA_VERSION: &str = "1.0";

/// Relative tolerance on `expected_compliance_rate`.
const COMPLIANCE_AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    /// One polyline per chain.
    pub initial_geometry: Vec<Vec<Point2>>,
    pub material: MaterialParams,
    pub solver: SolverParams,
    /// Working-unit compliance the material must reproduce, if recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_compliance_rate: Option<f64>,
    pub schedule: ActuationSchedule,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default)]
    pub svg: bool,
    #[serde(default = "default_true")]
    pub metrics: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<ShapeTarget>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            csv: true,
            svg: false,
            metrics: true,
            targets: Vec::new(),
        }
    }
}

/// Reference polyline that one chain is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeTarget {
    #[serde(default)]
    pub chain: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub polyline: Vec<Point2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    /// Spring coefficient in Pa, applied as an explicit override.
    K,
    /// Rest length in µm.
    L,
    Theta,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::L => "l",
            SweepParam::Theta => "theta",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "k" => Ok(SweepParam::K),
            "l" => Ok(SweepParam::L),
            "theta" => Ok(SweepParam::Theta),
            other => Err(format!("unknown sweep parameter `{other}` (expected k, l or theta)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// A validated scenario with its chains built and compliance folded in.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub file: ScenarioFile,
    pub chains: Vec<ChainState>,
    pub relaxation: Relaxation,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    ScenarioError::schema(field, message).into()
}

fn reference(field: impl Into<String>, message: impl Into<String>) -> Error {
    ScenarioError::reference(field, message).into()
}

fn prefix_param(prefix: &str, e: Error) -> Error {
    match e {
        Error::Parameter { field, reason } => schema(format!("{prefix}.{field}"), reason),
        Error::Stability { .. } => schema(prefix, e.to_string()),
        other => other,
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(ScenarioError::from)?;
        file.prepare()?;
        Ok(file)
    }

    /// Canonical pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn compliance(&self) -> Result<ComplianceRate> {
        compliance_rate(&self.material, self.solver.rest_length_um, &self.solver)
    }

    /// Validates every field and cross-reference and builds the chains.
    pub fn prepare(&self) -> Result<PreparedScenario> {
        let major = self
            .schema_version
            .split('.')
            .next()
            .and_then(|m| m.parse::<u32>().ok());
        if major != Some(SCHEMA_MAJOR) {
            return Err(schema(
                "schema_version",
                format!("unsupported version `{}`, expected {SCHEMA_MAJOR}.x", self.schema_version),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(schema("name", "must not be empty"));
        }
        self.material.validate().map_err(|e| prefix_param("material", e))?;
        self.solver.validate().map_err(|e| prefix_param("solver", e))?;
        let relaxation = Relaxation::from_material(&self.material, &self.solver).map_err(|e| match e {
            Error::Stability { .. } => schema("solver.dt", e.to_string()),
            other => prefix_param("material", other),
        })?;
        if let Some(expected) = self.expected_compliance_rate {
            let got = relaxation.compliance.value();
            if (got - expected).abs() > COMPLIANCE_AUDIT_TOLERANCE * expected.abs() {
                return Err(schema(
                    "expected_compliance_rate",
                    format!("material yields {got}, file records {expected}"),
                ));
            }
        }
        if self.initial_geometry.is_empty() {
            return Err(schema("initial_geometry", "at least one polyline is required"));
        }
        let l = self.solver.rest_length_um;
        let chains = self
            .initial_geometry
            .iter()
            .enumerate()
            .map(|(i, poly)| {
                discretize_polyline(poly, l).map_err(|e| schema(format!("initial_geometry[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;

        for (m, mv) in self.schedule.moves.iter().enumerate() {
            let at = |f: &str| format!("schedule.moves[{m}].{f}");
            let chain = chains.get(mv.chain).ok_or_else(|| {
                reference(at("chain"), format!("chain {} does not exist ({} chains)", mv.chain, chains.len()))
            })?;
            if mv.point_id >= chain.len() {
                return Err(reference(
                    at("point_id"),
                    format!("point {} does not exist on a chain of {} points", mv.point_id, chain.len()),
                ));
            }
            if !(mv.step_size.is_finite() && mv.step_size > 0.0) {
                return Err(schema(at("step_size"), format!("must be finite and > 0, got {}", mv.step_size)));
            }
            if mv.waypoints.is_empty() {
                return Err(schema(at("waypoints"), "at least one waypoint is required"));
            }
            if let Some(w) = mv.waypoints.iter().position(|p| !p.is_finite()) {
                return Err(schema(format!("schedule.moves[{m}].waypoints[{w}]"), "must be finite"));
            }
        }
        for (t, target) in self.outputs.targets.iter().enumerate() {
            if target.chain >= chains.len() {
                return Err(reference(
                    format!("outputs.targets[{t}].chain"),
                    format!("chain {} does not exist", target.chain),
                ));
            }
            if target.polyline.is_empty() || target.polyline.iter().any(|p| !p.is_finite()) {
                return Err(schema(
                    format!("outputs.targets[{t}].polyline"),
                    "must be a non-empty list of finite points",
                ));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(schema("sweep.values", "at least one value is required"));
            }
            for (i, v) in sweep.values.iter().enumerate() {
                self.with_param(sweep.param, *v)
                    .and_then(|s| s.prepare().map(|_| ()))
                    .map_err(|e| schema(format!("sweep.values[{i}]"), e.to_string()))?;
            }
        }
        Ok(PreparedScenario {
            file: self.clone(),
            chains,
            relaxation,
        })
    }

    /// Copy with one parameter replaced. Changing `l` re-discretizes the
    /// geometry and remaps every move to the point nearest its original
    /// position. The sweep section and compliance audit are dropped.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<ScenarioFile> {
        let mut out = self.clone();
        out.sweep = None;
        out.expected_compliance_rate = None;
        out.name = format!("{}[{}={}]", self.name, param.as_str(), value);
        match param {
            SweepParam::K => out.material.explicit_k_pa = Some(value),
            SweepParam::Theta => out.solver.threshold = value,
            SweepParam::L => {
                let l0 = self.solver.rest_length_um;
                let old: Vec<ChainState> = self
                    .initial_geometry
                    .iter()
                    .map(|poly| discretize_polyline(poly, l0))
                    .collect::<Result<_>>()?;
                let new: Vec<ChainState> = self
                    .initial_geometry
                    .iter()
                    .map(|poly| discretize_polyline(poly, value))
                    .collect::<Result<_>>()?;
                out.solver.rest_length_um = value;
                for mv in &mut out.schedule.moves {
                    let (Some(o), Some(n)) = (old.get(mv.chain), new.get(mv.chain)) else {
                        continue;
                    };
                    if mv.point_id < o.len() {
                        mv.point_id = nearest_point_id(n, o.point(mv.point_id));
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioFile::from_json(&text)
}

pub fn save_scenario(scenario: &ScenarioFile, path: &Path) -> Result<()> {
    std::fs::write(path, scenario.to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::WaypointMove;

    pub(crate) fn sample() -> ScenarioFile {
        ScenarioFile {
            schema_version: SCHEMA_VERSION.into(),
            name: "sample".into(),
            comment: None,
            initial_geometry: vec![vec![Point2::new(10.0, 10.0), Point2::new(150.0, 10.0)]],
            material: MaterialParams {
                youngs_modulus_pa: 60e9,
                poisson_ratio: 0.5,
                explicit_k_pa: None,
                cross_section_area_um2: std::f64::consts::PI / 16.0,
                density_kg_m3: 1000.0,
            },
            solver: SolverParams {
                dt: 0.1,
                substeps: 10,
                rest_length_um: 5.0,
                threshold: 0.05,
                max_sweeps: 200_000,
                clamp_fraction: 0.5,
            },
            expected_compliance_rate: None,
            schedule: ActuationSchedule {
                moves: vec![WaypointMove {
                    chain: 0,
                    point_id: 28,
                    waypoints: vec![Point2::new(150.0, 60.0)],
                    step_size: 1.0,
                }],
                settle_between: true,
            },
            outputs: OutputSpec::default(),
            sweep: None,
        }
    }

    fn field_of(e: Error) -> String {
        match e {
            Error::Scenario(s) => s.field().unwrap_or("").to_string(),
            other => panic!("not a scenario error: {other}"),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let s = sample();
        let again = ScenarioFile::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_json(), s.to_json());
    }

    #[test]
    fn zero_threshold_names_the_field() {
        let mut s = sample();
        s.solver.threshold = 0.0;
        assert_eq!(field_of(ScenarioFile::from_json(&s.to_json()).unwrap_err()), "solver.threshold");
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_location() {
        let text = sample().to_json().replacen("\"name\"", "\"bogus\": 1,\n  \"name\"", 1);
        match ScenarioFile::from_json(&text).unwrap_err() {
            Error::Scenario(ScenarioError::Parse { line, message, .. }) => {
                assert!(line >= 2);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn dangling_point_id_is_a_reference_error() {
        let mut s = sample();
        s.schedule.moves[0].point_id = 29;
        let e = ScenarioFile::from_json(&s.to_json()).unwrap_err();
        assert!(matches!(e, Error::Scenario(ScenarioError::Reference { .. })));
        assert_eq!(field_of(e), "schedule.moves[0].point_id");
    }

    #[test]
    fn indivisible_geometry_names_the_polyline() {
        let mut s = sample();
        s.initial_geometry[0][1].x = 149.0;
        assert_eq!(field_of(s.prepare().unwrap_err()), "initial_geometry[0]");
    }

    #[test]
    fn compliance_audit_is_checked() {
        let mut s = sample();
        let c = s.compliance().unwrap().value();
        s.expected_compliance_rate = Some(c);
        assert!(s.prepare().is_ok());
        s.expected_compliance_rate = Some(c * 1.001);
        assert_eq!(field_of(s.prepare().unwrap_err()), "expected_compliance_rate");
    }

    #[test]
    fn rest_length_variant_remaps_points() {
        let mut s = sample();
        s.initial_geometry[0][0].x = 0.0;
        s.schedule.moves[0].point_id = 30;
        let v = s.with_param(SweepParam::L, 15.0).unwrap();
        assert_eq!(v.schedule.moves[0].point_id, 10);
        assert_eq!(v.prepare().unwrap().chains[0].len(), 11);
    }
}
