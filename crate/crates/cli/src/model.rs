//! Input files: models, initial jets, variation data, symmetry candidates.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use hodegeo::expr::{parse_expression, Expr, JetPoint};
use hodegeo::matrix::ExprMatrix;
use hodegeo::riemann::{Metric, MetricError};
use hodegeo::semispray::{make_semispray, ModelError, Semispray};

use crate::CliError;

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dimension: usize,
    pub order: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFile {
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationFile {
    pub xi: Vec<f64>,
    pub nabla: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum FieldFile {
    Bare(Vec<String>),
    Wrapped { field: Vec<String> },
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct Model {
    pub n: usize,
    pub k: usize,
    pub parameters: BTreeMap<String, f64>,
    spray: Option<Semispray>,
    pub metric: Option<Metric>,
    pub field: Option<Vec<Expr>>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Model(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Model(format!("invalid {what} {}: {e}", path.display())))
}

fn parse_all(items: &[String], n: usize, k: usize, what: &str) -> Result<Vec<Expr>, CliError> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            parse_expression(s, n, k).map_err(|e| CliError::Model(format!("{what} {}: `{s}`: {e}", i + 1)))
        })
        .collect()
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Arity { .. } | ModelError::Shape { .. } => CliError::Mismatch(e.to_string()),
        _ => CliError::Model(e.to_string()),
    }
}

fn metric_error(e: MetricError) -> CliError {
    match e {
        MetricError::Dimension(_) => CliError::Mismatch(e.to_string()),
        _ => CliError::Model(format!("metric: {e}")),
    }
}

impl Model {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        Model::from_file(read_json(path, "model file")?)
    }

    pub fn from_file(file: ModelFile) -> Result<Self, CliError> {
        let (n, k) = (file.dimension, file.order);
        if n == 0 || k == 0 {
            return Err(CliError::Mismatch(format!(
                "dimension and order must be at least 1 (got {n} and {k})"
            )));
        }
        let spray = match &file.g {
            Some(g) => {
                if g.len() != n {
                    return Err(CliError::Mismatch(format!(
                        "G has {} entries but the dimension is {n}",
                        g.len()
                    )));
                }
                Some(make_semispray(n, k, parse_all(g, n, k, "G")?).map_err(model_error)?)
            }
            None => None,
        };
        let metric = match &file.metric {
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Mismatch(format!("metric must be {n}×{n}")));
                }
                let rows = rows
                    .iter()
                    .map(|r| parse_all(r, n, 1, "metric entry"))
                    .collect::<Result<Vec<_>, _>>()?;
                let m = ExprMatrix::from_rows(rows).expect("shape checked above");
                Some(Metric::new(m).map_err(metric_error)?)
            }
            None => None,
        };
        if spray.is_none() && metric.is_none() {
            return Err(CliError::Model("model needs `G`, `metric`, or both".into()));
        }
        let field = match &file.field {
            Some(f) => Some(parse_field(f, n, k)?),
            None => None,
        };
        Ok(Model {
            n,
            k,
            parameters: file.parameters,
            spray,
            metric,
            field,
        })
    }

    /// The semispray, for commands that need `G`.
    pub fn spray(&self) -> Result<&Semispray, CliError> {
        self.spray
            .as_ref()
            .ok_or_else(|| CliError::Model("model has no `G`".into()))
    }

    /// The semispray with every parameter bound to a value, for numerics.
    pub fn numeric_spray(&self) -> Result<Semispray, CliError> {
        self.spray()?
            .clone()
            .with_declared_parameters(self.parameters.keys())
            .map_err(|e| CliError::Model(format!("{e}; numeric commands need a value for every parameter")))
    }

    pub fn metric(&self) -> Result<&Metric, CliError> {
        self.metric
            .as_ref()
            .ok_or_else(|| CliError::Model("model has no `metric`".into()))
    }

    fn params(&self) -> Arc<BTreeMap<String, f64>> {
        Arc::new(self.parameters.clone())
    }

    pub fn load_init(&self, path: &Path) -> Result<JetPoint, CliError> {
        let init: InitFile = read_json(path, "initial-value file")?;
        if init.x.len() != self.n || init.y.len() != self.k || init.y.iter().any(|l| l.len() != self.n) {
            return Err(CliError::Mismatch(format!(
                "initial value must have x of length {n} and {k} levels y of length {n}",
                n = self.n,
                k = self.k
            )));
        }
        let p = JetPoint::from_levels(&init.x, &init.y).expect("lengths checked");
        Ok(p.with_params(self.params()))
    }

    /// Covariant variation data `[ξ, ∇ξ, …, ∇^k ξ]`.
    pub fn load_variation(&self, path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
        let v: VariationFile = read_json(path, "variation file")?;
        if v.xi.len() != self.n || v.nabla.len() != self.k || v.nabla.iter().any(|l| l.len() != self.n) {
            return Err(CliError::Mismatch(format!(
                "variation must have xi of length {n} and {k} levels nabla of length {n}",
                n = self.n,
                k = self.k
            )));
        }
        let mut out = vec![v.xi];
        out.extend(v.nabla);
        Ok(out)
    }

    pub fn load_field(&self, path: &Path) -> Result<Vec<Expr>, CliError> {
        let f = match read_json::<FieldFile>(path, "field file")? {
            FieldFile::Bare(f) | FieldFile::Wrapped { field: f } => f,
        };
        parse_field(&f, self.n, self.k)
    }
}

fn parse_field(f: &[String], n: usize, k: usize) -> Result<Vec<Expr>, CliError> {
    if f.len() != n {
        return Err(CliError::Mismatch(format!(
            "field has {} components but the dimension is {n}",
            f.len()
        )));
    }
    parse_all(f, n, k, "field component")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(json: &str) -> ModelFile {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn loads_the_spinning_particle() {
        let m = Model::from_file(file(
            r#"{"dimension": 1, "order": 3, "parameters": {"omega": 2.0}, "G": ["omega^2*y2_1/12"]}"#,
        ))
        .unwrap();
        assert_eq!((m.n, m.k), (1, 3));
        assert!(m.numeric_spray().is_ok());
    }

    #[test]
    fn classifies_errors() {
        let err = |json: &str| Model::from_file(file(json)).unwrap_err();
        assert!(matches!(err(r#"{"dimension": 2, "order": 1, "G": ["0"]}"#), CliError::Mismatch(_)));
        assert!(matches!(err(r#"{"dimension": 1, "order": 3, "G": ["y4_1"]}"#), CliError::Model(_)));
        assert!(matches!(err(r#"{"dimension": 1, "order": 1}"#), CliError::Model(_)));
        assert!(matches!(
            err(r#"{"dimension": 2, "order": 1, "metric": [["1", "x1"], ["0", "1"]]}"#),
            CliError::Model(_)
        ));
        assert!(serde_json::from_str::<ModelFile>(r#"{"dimension": 1, "order": 1, "H": []}"#).is_err());
    }

    #[test]
    fn numeric_use_needs_parameter_values() {
        let m = Model::from_file(file(r#"{"dimension": 1, "order": 1, "G": ["a*y1_1"]}"#)).unwrap();
        assert!(m.spray().is_ok());
        assert!(matches!(m.numeric_spray(), Err(CliError::Model(_))));
    }
}
