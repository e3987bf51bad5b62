//! Scenario files: one JSON document describing a structure, a potential, a
//! field, a side and a sampling box.
//!
//! ```json
//! {
//!   "name": "circle-m1",
//!   "dim": 2,
//!   "structure": { "kind": "euclidean", "dim": 2 },
//!   "f": "(x1^2 + x2^2)/2",
//!   "F": ["x1 + x2*(x1^2 + x2^2 - 1)", "x2 - x1*(x1^2 + x2^2 - 1)"],
//!   "side": "left",
//!   "box": [[-2, 2], [-2, 2]],
//!   "n_seeds": 1000,
//!   "rng_seed": 1
//! }
//! ```
//!
//! `side`, `box`, `n_seeds`, `rng_seed` and `tolerances` may be omitted.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{ScalarField, VectorField};
use crate::geometry::{
    companion_map, make_form, minkowski, pseudo_euclidean, standard_euclidean, standard_symplectic, GeometricPair,
};
use crate::integrability::{Side, TOL_GAMMA, TOL_INTEGRABLE};
use crate::locus::{Tolerances, TOL_RANK, TOL_RESIDUAL};
use crate::sampling::BoxDomain;

pub const DEMOS: [&str; 3] = ["circle-m1", "plane-m2", "minkowski-grad"];

const DEFAULT_SEEDS: usize = 500;
const DEFAULT_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown demo {name:?}; available: {}", DEMOS.join(", "))]
    UnknownDemo { name: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Invalid { field: field.into(), message: message.to_string() }
    }

    /// The offending scenario field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Euclidean,
    Symplectic,
    PseudoEuclidean,
    Minkowski,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub kind: StructureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<f64>>>,
}

impl StructureSpec {
    pub fn of_kind(kind: StructureKind, dim: usize) -> Self {
        StructureSpec { kind, dim: Some(dim), p: None, q: None, gram: None }
    }

    /// Builds the geometric pair, checking the block against `dim`.
    pub fn build(&self, dim: usize) -> Result<GeometricPair, ScenarioError> {
        let bad = |field: &str, msg: String| ScenarioError::invalid(format!("structure.{field}"), msg);
        if let Some(d) = self.dim {
            if d != dim {
                return Err(bad("dim", format!("{d} does not match scenario dim {dim}")));
            }
        }
        let form = match self.kind {
            StructureKind::Euclidean => standard_euclidean(dim),
            StructureKind::Minkowski => minkowski(dim),
            StructureKind::Symplectic => {
                if dim % 2 == 1 {
                    return Err(bad("kind", format!("symplectic structure needs even dim, got {dim}")));
                }
                standard_symplectic(dim / 2)
            }
            StructureKind::PseudoEuclidean => {
                let p = self.p.ok_or_else(|| bad("p", "required for pseudo_euclidean".into()))?;
                let q = self.q.ok_or_else(|| bad("q", "required for pseudo_euclidean".into()))?;
                if p + q != dim {
                    return Err(bad("p", format!("p + q = {} does not match dim {dim}", p + q)));
                }
                pseudo_euclidean(p, q)
            }
            StructureKind::General => {
                let rows = self.gram.as_ref().ok_or_else(|| bad("Q", "required for general".into()))?;
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(bad("Q", format!("must be {dim}x{dim}")));
                }
                make_form(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
            }
        }
        .map_err(|e| bad("kind", e.to_string()))?;
        companion_map(&form).map_err(|e| bad("Q", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTolerances {
    #[serde(default = "default_residual")]
    pub residual: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_rank")]
    pub rank: f64,
    #[serde(default = "default_integrable")]
    pub integrable: f64,
}

fn default_residual() -> f64 {
    TOL_RESIDUAL
}
fn default_gamma() -> f64 {
    TOL_GAMMA
}
fn default_rank() -> f64 {
    TOL_RANK
}
fn default_integrable() -> f64 {
    TOL_INTEGRABLE
}

impl Default for ScenarioTolerances {
    fn default() -> Self {
        ScenarioTolerances { residual: TOL_RESIDUAL, gamma: TOL_GAMMA, rank: TOL_RANK, integrable: TOL_INTEGRABLE }
    }
}

impl ScenarioTolerances {
    pub fn locus(&self) -> Tolerances {
        Tolerances { residual: self.residual, gamma: self.gamma, rank: self.rank }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub structure: StructureSpec,
    pub f: String,
    #[serde(rename = "F")]
    pub field: Vec<String>,
    #[serde(default = "default_side")]
    pub side: Side,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxDomain>,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub tolerances: ScenarioTolerances,
}

fn default_side() -> Side {
    Side::Left
}
fn default_seeds() -> usize {
    DEFAULT_SEEDS
}

/// A scenario with its expressions parsed and its structure built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub pair: GeometricPair,
    pub f: ScalarField,
    pub field: VectorField,
    pub domain: BoxDomain,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.resolve().map(|_| ())
    }

    /// `[-2, 2]^n` unless the scenario names a box.
    pub fn domain(&self) -> Result<BoxDomain, ScenarioError> {
        match &self.domain {
            Some(b) if b.dim() != self.dim => {
                Err(ScenarioError::invalid("box", format!("has {} axes, expected {}", b.dim(), self.dim)))
            }
            Some(b) => Ok(b.clone()),
            None => BoxDomain::cube(self.dim, DEFAULT_HALF_WIDTH).map_err(|e| ScenarioError::invalid("box", e)),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, ScenarioError> {
        if self.dim == 0 {
            return Err(ScenarioError::invalid("dim", "must be positive"));
        }
        if self.n_seeds == 0 {
            return Err(ScenarioError::invalid("n_seeds", "must be at least 1"));
        }
        let pair = self.structure.build(self.dim)?;
        let f = ScalarField::parse(&self.f, self.dim).map_err(|e| ScenarioError::invalid("f", e))?;
        if self.field.len() != self.dim {
            return Err(ScenarioError::invalid(
                "F",
                format!("has {} components, expected {}", self.field.len(), self.dim),
            ));
        }
        let mut components = Vec::with_capacity(self.dim);
        for (i, text) in self.field.iter().enumerate() {
            let e = crate::fields::parse_expression(text, self.dim)
                .map_err(|e| ScenarioError::invalid(format!("F[{i}]"), e))?;
            components.push(e);
        }
        let field = VectorField::new(components, self.dim).map_err(|e| ScenarioError::invalid("F", e))?;
        let t = &self.tolerances;
        for (name, v) in [("residual", t.residual), ("gamma", t.gamma), ("rank", t.rank), ("integrable", t.integrable)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::invalid(format!("tolerances.{name}"), "must be a positive number"));
            }
        }
        Ok(Resolved { pair, f, field, domain: self.domain()? })
    }

    /// One of the built-in demonstration scenarios.
    pub fn demo(name: &str) -> Result<Self, ScenarioError> {
        let s = |v: &[&str]| v.iter().map(|t| t.to_string()).collect::<Vec<_>>();
        let base = |name: &str, dim: usize, structure: StructureSpec, f: &str, field: Vec<String>, n_seeds| Scenario {
            name: name.to_string(),
            dim,
            structure,
            f: f.to_string(),
            field,
            side: Side::Left,
            domain: Some(BoxDomain::cube(dim, DEFAULT_HALF_WIDTH).expect("valid cube")),
            n_seeds,
            rng_seed: 1,
            tolerances: ScenarioTolerances::default(),
        };
        match name {
            // F = ∇f - (|x|^2 - 1)(-x2, x1): the locus is the unit circle and the origin
            "circle-m1" => Ok(base(
                name,
                2,
                StructureSpec::of_kind(StructureKind::Euclidean, 2),
                "(x1^2 + x2^2)/2",
                s(&["x1 + x2*(x1^2 + x2^2 - 1)", "x2 - x1*(x1^2 + x2^2 - 1)"]),
                1000,
            )),
            // F = B*(∇f - (x3, x4, 0, 0)): the locus is the plane x3 = x4 = 0
            "plane-m2" => Ok(base(
                name,
                4,
                StructureSpec::of_kind(StructureKind::Symplectic, 4),
                "x1*x4",
                s(&["0", "x1", "x3 - x4", "x4"]),
                2000,
            )),
            // F is exactly the left gradient of f, so nothing is obstructed
            "minkowski-grad" => Ok(base(
                name,
                2,
                StructureSpec {
                    kind: StructureKind::PseudoEuclidean,
                    dim: Some(2),
                    p: Some(1),
                    q: Some(1),
                    gram: None,
                },
                "x1^2*x2 + sin(x1)",
                s(&["2*x1*x2 + cos(x1)", "-(x1^2)"]),
                500,
            )),
            _ => Err(ScenarioError::UnknownDemo { name: name.to_string() }),
        }
    }
}
