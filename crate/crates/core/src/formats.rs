//! Versioned JSON documents for problems, trajectories, certificates, and
//! cone families.
//!
//! Every document carries `"format_version": "MAJOR.MINOR"`; documents with
//! an unknown major version are refused. Schema violations are reported
//! with the JSON path of the offending field.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::PolyCone;
use crate::lmp::{JumpVector, MultiplierSet, Support};
use crate::measures::{BVFunction, SignedMeasure};
use crate::problem::{CellControl, ControlJump, ProblemDef, TimeGrid, Trajectory};

pub const FORMAT_VERSION: &str = "1.0";
const MAJOR: &str = "1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported format_version `{0}` (this build reads {MAJOR}.x)")]
    Version(String),
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
}

fn invalid(what: &'static str) -> impl Fn(String) -> FormatError {
    move |message| FormatError::Invalid { what, message }
}

fn version() -> String {
    FORMAT_VERSION.to_string()
}

/// Parses a document after checking its `format_version`.
pub fn parse_document<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("format_version") {
        Some(serde_json::Value::String(v)) => {
            if v.split('.').next() != Some(MAJOR) {
                return Err(FormatError::Version(v.clone()));
            }
        }
        Some(other) => return Err(FormatError::Version(other.to_string())),
        None => {
            return Err(FormatError::Schema { path: "format_version".into(), message: "missing field".into() })
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| FormatError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    #[serde(default = "version")]
    pub format_version: String,
    pub n: usize,
    pub m: usize,
    pub t0: f64,
    pub t1: f64,
    pub f: Vec<String>,
    #[serde(rename = "G")]
    pub g: String,
    #[serde(rename = "J")]
    pub j: String,
}

impl ProblemDoc {
    pub fn from_problem(p: &ProblemDef) -> Self {
        let s = p.sources();
        ProblemDoc {
            format_version: version(),
            n: p.n(),
            m: p.m(),
            t0: p.t0(),
            t1: p.t1(),
            f: s.f.clone(),
            g: s.g.clone(),
            j: s.j.clone(),
        }
    }

    pub fn to_problem(&self) -> Result<ProblemDef, FormatError> {
        let f: Vec<&str> = self.f.iter().map(String::as_str).collect();
        ProblemDef::parse(self.n, self.m, self.t0, self.t1, &f, &self.g, &self.j)
            .map_err(|e| invalid("problem")(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDoc {
    #[serde(default = "version")]
    pub format_version: String,
    pub grid: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u_cells: Vec<CellControl>,
    #[serde(default)]
    pub jumps: Vec<ControlJump>,
}

impl TrajectoryDoc {
    pub fn from_trajectory(tr: &Trajectory) -> Self {
        TrajectoryDoc {
            format_version: version(),
            grid: tr.grid().nodes().to_vec(),
            x: tr.states().to_vec(),
            u_cells: tr.cell_controls().to_vec(),
            jumps: tr.jumps().to_vec(),
        }
    }

    pub fn to_trajectory(&self) -> Result<Trajectory, FormatError> {
        let grid = TimeGrid::new(self.grid.clone()).map_err(|e| invalid("trajectory")(e.to_string()))?;
        Trajectory::new(grid, self.x.clone(), self.u_cells.clone(), self.jumps.clone())
            .map_err(|e| invalid("trajectory")(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaDoc {
    pub atoms: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Atom,
    Cell,
}

/// One `ŝ` entry: exactly one of `vector` or `weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpEntryDoc {
    pub support: SupportKind,
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostateDoc {
    pub exterior_left: Vec<f64>,
    pub node_values: Vec<Vec<f64>>,
    pub atoms: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    #[serde(default = "version")]
    pub format_version: String,
    pub alpha0: f64,
    pub lambda: Vec<f64>,
    pub eta: EtaDoc,
    #[serde(default)]
    pub s: Vec<JumpEntryDoc>,
    pub p: CostateDoc,
}

impl CertificateDoc {
    pub fn from_certificate(ms: &MultiplierSet) -> Self {
        let s = ms
            .s
            .iter()
            .map(|(k, v)| {
                let (support, index) = match *k {
                    Support::Atom(i) => (SupportKind::Atom, i),
                    Support::Cell(i) => (SupportKind::Cell, i),
                };
                let (vector, weights) = match v {
                    JumpVector::Vector(x) => (Some(x.clone()), None),
                    JumpVector::Weights(w) => (None, Some(w.clone())),
                };
                JumpEntryDoc { support, index, vector, weights }
            })
            .collect();
        CertificateDoc {
            format_version: version(),
            alpha0: ms.alpha0,
            lambda: ms.lambda.clone(),
            eta: EtaDoc { atoms: ms.eta.atoms().to_vec(), density: ms.eta.density().to_vec() },
            s,
            p: CostateDoc {
                exterior_left: ms.p.exterior_left().to_vec(),
                node_values: ms.p.node_values().to_vec(),
                atoms: ms.p.atoms().to_vec(),
            },
        }
    }

    /// Builds the certificate on the trajectory's grid.
    pub fn to_certificate(&self, grid: &TimeGrid) -> Result<MultiplierSet, FormatError> {
        let bad = invalid("certificate");
        let eta = SignedMeasure::new(grid.clone(), self.eta.atoms.clone(), self.eta.density.clone())
            .map_err(|e| bad(format!("eta: {e}")))?;
        let p = BVFunction::new(grid.clone(), self.p.exterior_left.clone(), self.p.node_values.clone(), self.p.atoms.clone())
            .map_err(|e| bad(format!("p: {e}")))?;
        let mut s = BTreeMap::new();
        for (i, e) in self.s.iter().enumerate() {
            let key = match e.support {
                SupportKind::Atom => Support::Atom(e.index),
                SupportKind::Cell => Support::Cell(e.index),
            };
            let v = match (&e.vector, &e.weights) {
                (Some(v), None) => JumpVector::Vector(v.clone()),
                (None, Some(w)) => JumpVector::Weights(w.clone()),
                _ => return Err(bad(format!("s[{i}]: give exactly one of `vector` and `weights`"))),
            };
            if s.insert(key, v).is_some() {
                return Err(bad(format!("s[{i}]: duplicate entry for {key:?}")));
            }
        }
        MultiplierSet::new(self.alpha0, self.lambda.clone(), eta, s, p).map_err(|e| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpecDoc {
    #[serde(default = "version")]
    pub format_version: String,
    pub dim: usize,
    pub cones: Vec<PolyCone>,
}

impl ConeSpecDoc {
    pub fn new(cones: Vec<PolyCone>) -> Self {
        let dim = cones.first().map_or(0, PolyCone::dim);
        ConeSpecDoc { format_version: version(), dim, cones }
    }

    /// Validated cones; every cone must have dimension `dim`.
    pub fn to_cones(&self) -> Result<Vec<PolyCone>, FormatError> {
        let bad = invalid("cone spec");
        self.cones
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let cone = PolyCone::new(c.generators.clone(), c.open, c.x0.clone())
                    .map_err(|e| bad(format!("cones[{i}]: {e}")))?;
                if cone.dim() != self.dim {
                    return Err(bad(format!("cones[{i}] has dimension {}, expected {}", cone.dim(), self.dim)));
                }
                Ok(cone)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin_example, Example, ExampleParams};

    #[test]
    fn round_trip_fixture() {
        let fx = builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.5, 40)).unwrap();
        let pd: ProblemDoc = parse_document(&to_json(&ProblemDoc::from_problem(&fx.problem))).unwrap();
        assert_eq!(pd.to_problem().unwrap().sources(), fx.problem.sources());
        let td: TrajectoryDoc = parse_document(&to_json(&TrajectoryDoc::from_trajectory(&fx.trajectory))).unwrap();
        assert_eq!(td.to_trajectory().unwrap(), fx.trajectory);
        let cd: CertificateDoc = parse_document(&to_json(&CertificateDoc::from_certificate(&fx.certificate))).unwrap();
        let ms = cd.to_certificate(fx.trajectory.grid()).unwrap();
        assert_eq!((&ms.p, &ms.s, &ms.lambda), (&fx.certificate.p, &fx.certificate.s, &fx.certificate.lambda));
        assert_eq!(CertificateDoc::from_certificate(&ms), cd);
    }

    #[test]
    fn version_and_paths() {
        let r: Result<ProblemDoc, _> = parse_document(r#"{"format_version":"2.0"}"#);
        assert!(matches!(r, Err(FormatError::Version(v)) if v == "2.0"));
        let r: Result<ProblemDoc, _> =
            parse_document(r#"{"format_version":"1.3","n":1,"m":"one","t0":0,"t1":1,"f":["u1"],"G":"x1","J":"x1_1"}"#);
        match r {
            Err(FormatError::Schema { path, .. }) => assert_eq!(path, "m"),
            other => panic!("{other:?}"),
        }
        let r: Result<ProblemDoc, _> = parse_document("{");
        assert!(matches!(r, Err(FormatError::Syntax(_))));
    }
}
