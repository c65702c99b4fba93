//! JSON scene format shared by the subcommands.

use modelspace::surfaces::{canonical_patch, Base, SupportGraph, SupportSpec, SurfacePatch};
use modelspace::{Flavor, GeomError, PolyField, SpaceName, SupportFunction};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A parametrized surface patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatchSpec {
    /// Round sphere (or hyperboloid) of the given radius about a point.
    Canonical { space: SpaceName, radius: f64 },
    /// Graph of a support function over a chart square of S² or H².
    Graph {
        base: Base,
        support: SupportSpec,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
}

fn default_half_width() -> f64 {
    0.4
}

impl PatchSpec {
    pub fn patch(&self) -> Result<SurfacePatch, CliError> {
        match self {
            PatchSpec::Canonical { space, radius } => Ok(canonical_patch(*space, *radius)?),
            PatchSpec::Graph { .. } => Ok(self.graph().expect("graph").patch()),
        }
    }

    pub fn graph(&self) -> Option<SupportGraph> {
        match self {
            PatchSpec::Graph { base, support, half_width } => {
                Some(SupportGraph::from_spec(*base, support, *half_width))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Entity {
    Point {
        coords: Vec<f64>,
    },
    /// Euclidean ball of radius r about the origin of ℝ^dim.
    Ball {
        dim: usize,
        radius: f64,
    },
    /// Future hyperboloid `{b(x,x) = -r², x_dim > 0}` of ℝ^{dim-1,1}.
    Hyperboloid {
        dim: usize,
        radius: f64,
    },
    /// Convex hull of points; Minkowski bodies add the future cone.
    Body {
        points: Vec<Vec<f64>>,
    },
    SupportFunction {
        function: SupportFunction,
    },
    Patch {
        patch: PatchSpec,
    },
    Field {
        field: PolyField,
    },
    /// Infinitesimal isometry of the ambient form.
    Generator {
        matrix: Vec<Vec<f64>>,
    },
    /// The isometry path `t ↦ exp(tA) h0`.
    Path {
        generator: Vec<Vec<f64>>,
        start: Vec<Vec<f64>>,
    },
}

impl Entity {
    pub fn tag(&self) -> &'static str {
        match self {
            Entity::Point { .. } => "point",
            Entity::Ball { .. } => "ball",
            Entity::Hyperboloid { .. } => "hyperboloid",
            Entity::Body { .. } => "body",
            Entity::SupportFunction { .. } => "support_function",
            Entity::Patch { .. } => "patch",
            Entity::Field { .. } => "field",
            Entity::Generator { .. } => "generator",
            Entity::Path { .. } => "path",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub space: Option<String>,
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl Scene {
    /// Parses either a full scene or a single entity.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
        if value.get("entities").is_some() {
            serde_json::from_str(text).map_err(json_error)
        } else {
            let e: Entity = serde_json::from_str(text).map_err(json_error)?;
            Ok(Scene { space: None, entities: vec![e], metadata: serde_json::Value::Null })
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {}", path.display(), e)))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {}", path.display(), m)),
            other => other,
        })
    }

    /// The first entity matching `f`, or a validation error naming `what`.
    pub fn find<T>(&self, what: &str, f: impl Fn(&Entity) -> Option<T>) -> Result<T, CliError> {
        self.entities.iter().find_map(f).ok_or_else(|| CliError::Validation(format!("scene has no {} entity", what)))
    }

    pub fn all<T>(&self, f: impl Fn(&Entity) -> Option<T>) -> Vec<T> {
        self.entities.iter().filter_map(f).collect()
    }
}

fn json_error(e: serde_json::Error) -> CliError {
    let what = match e.classify() {
        serde_json::error::Category::Data => "invalid scene",
        _ => "malformed JSON",
    };
    CliError::Validation(format!("{} at line {} column {}: {}", what, e.line(), e.column(), e))
}

pub fn parse_vector(s: &str) -> Result<DVector<f64>, CliError> {
    let v: Vec<f64> = serde_json::from_str(s).map_err(json_error)?;
    Ok(DVector::from_vec(v))
}

pub fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Validation("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Support function of a body-like entity at the given grid.
pub fn support_of(e: &Entity, flavor: Flavor, spec: modelspace::GridSpec) -> Option<Result<SupportFunction, CliError>> {
    let checked = |dim: usize, radius: f64| {
        if dim < 2 || !(radius > 0.0) {
            return Err(CliError::Validation(format!("{} needs dim >= 2 and radius > 0", e.tag())));
        }
        Ok(SupportFunction::constant(flavor, dim, spec, radius))
    };
    match (e, flavor) {
        (Entity::Ball { dim, radius }, Flavor::Euclidean) => Some(checked(*dim, *radius)),
        (Entity::Hyperboloid { dim, radius }, Flavor::Minkowski) => Some(checked(*dim, *radius)),
        (Entity::Ball { .. }, _) | (Entity::Hyperboloid { .. }, _) => {
            Some(Err(CliError::Validation(format!("a {} is not a {:?} body", e.tag(), flavor))))
        }
        (Entity::Body { points }, _) => {
            let pts: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_vec(p.clone())).collect();
            Some(modelspace::support_from_body(&pts, flavor, spec).map_err(CliError::from))
        }
        (Entity::SupportFunction { function }, _) => Some(if function.flavor != flavor {
            Err(CliError::Validation("support function flavor does not match --flavor".into()))
        } else {
            function.check().map(|_| function.clone()).map_err(CliError::from)
        }),
        _ => None,
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::Tolerance { .. } => CliError::Tolerance(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_entity_and_full_scene() {
        let s = Scene::parse(r#"{"type":"point","coords":[1,0,0]}"#).unwrap();
        assert_eq!(s.entities.len(), 1);
        let s = Scene::parse(
            r#"{"space":"Ell2","entities":[{"type":"ball","dim":3,"radius":1}],"metadata":{"by":"hand"}}"#,
        )
        .unwrap();
        assert_eq!(s.space.as_deref(), Some("Ell2"));
        assert_eq!(s.entities[0].tag(), "ball");
    }

    #[test]
    fn unknown_fields_and_tags() {
        assert!(Scene::parse(r#"{"type":"ball","dim":3,"radius":1,"colour":"red"}"#).is_err());
        assert!(Scene::parse(r#"{"entities":[],"extra":1}"#).is_err());
        match Scene::parse("{\n\"type\": \"blob\"}") {
            Err(CliError::Validation(m)) => assert!(m.contains("line 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flavor_mismatch() {
        let spec = modelspace::GridSpec { m: 4, radius: 0.8 };
        let ball = Entity::Ball { dim: 3, radius: 1.0 };
        assert!(support_of(&ball, Flavor::Minkowski, spec).unwrap().is_err());
        let h = support_of(&ball, Flavor::Euclidean, spec).unwrap().unwrap();
        assert!(h.values.iter().all(|&v| v == 1.0));
        assert!(support_of(&Entity::Point { coords: vec![0.0] }, Flavor::Euclidean, spec).is_none());
    }

    #[test]
    fn square_matrices_only() {
        assert!(matrix(&[vec![1.0, 0.0], vec![0.0]]).is_err());
        assert_eq!(matrix(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()[(1, 0)], 3.0);
    }
}
