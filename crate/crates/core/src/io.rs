//! JSON encodings of problems and results.
//!
//! Problem files hold `x_labels`, `y_labels`, `eta` (row-major nested
//! arrays), `loss`, `predictors` and optionally `lambda`, `edges` (a graph
//! on the predictors) and `meta` (free-form, ignored on read). Reals are
//! written with 17 significant digits so every problem re-reads bit-for-bit.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::{json, Value};

use crate::corruption::pipeline::Ledger;
use crate::distance::{DistanceResult, WeightedDistanceResult};
use crate::error::{Error, Result};
use crate::landscape::{PredictorGraph, ReebGraph};
use crate::matrix::Matrix;
use crate::problem::{FiniteProblem, Predictor, WeightedProblem};
use crate::scalar::Scalar;

/// A real written in scientific notation with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite real {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Real)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    eta: Vec<Vec<Real>>,
    loss: Vec<Vec<Real>>,
    predictors: Vec<Predictor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Value>,
}

fn to_rows<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<Real>> {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(|v| Real(v.as_f64())).collect())
        .collect()
}

fn from_rows<T: Scalar>(field: &str, rows: Vec<Vec<Real>>) -> Result<Matrix<T>> {
    Matrix::from_rows(field, rows.into_iter().map(|r| r.into_iter().map(|v| T::lit(v.0)).collect()).collect())
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::invalid("json", format!("{e}"))
}

/// Parses a problem file; `lambda` is returned alongside when present.
pub fn problem_from_json<T: Scalar>(text: &str) -> Result<(FiniteProblem<T>, Option<Vec<T>>)> {
    let (p, lambda, _) = parse_problem(text)?;
    Ok((p, lambda))
}

type Parsed<T> = (FiniteProblem<T>, Option<Vec<T>>, Option<Vec<(usize, usize)>>);

fn parse_problem<T: Scalar>(text: &str) -> Result<Parsed<T>> {
    let file: ProblemFile = serde_json::from_str(text).map_err(parse_error)?;
    let problem = FiniteProblem::new(
        file.x_labels,
        file.y_labels,
        from_rows("eta", file.eta)?,
        from_rows("loss", file.loss)?,
        file.predictors,
    )?;
    let lambda = file.lambda.map(|l| l.into_iter().map(|v| T::lit(v.0)).collect::<Vec<T>>());
    if let Some(l) = &lambda {
        WeightedProblem::new(problem.clone(), l.clone())?;
    }
    Ok((problem, lambda, file.edges))
}

/// Parses a problem file into a predictor graph, using its `edges` key or
/// the path in predictor order when absent.
pub fn graph_from_json<T: Scalar>(text: &str) -> Result<PredictorGraph<T>> {
    match parse_problem(text)? {
        (p, _, Some(edges)) => PredictorGraph::new(p, edges),
        (p, _, None) => Ok(PredictorGraph::path(p)),
    }
}

/// Parses a problem file into a weighted problem, uniform `λ` when absent.
pub fn weighted_from_json<T: Scalar>(text: &str) -> Result<WeightedProblem<T>> {
    match problem_from_json(text)? {
        (p, Some(l)) => WeightedProblem::new(p, l),
        (p, None) => Ok(WeightedProblem::uniform(p)),
    }
}

pub fn problem_to_json<T: Scalar>(p: &FiniteProblem<T>, lambda: Option<&[T]>) -> String {
    problem_to_json_with_meta(p, lambda, None)
}

/// Like [`problem_to_json`] with a `meta` object attached.
pub fn problem_to_json_with_meta<T: Scalar>(p: &FiniteProblem<T>, lambda: Option<&[T]>, meta: Option<Value>) -> String {
    let file = ProblemFile {
        x_labels: p.x_labels().to_vec(),
        y_labels: p.y_labels().to_vec(),
        eta: to_rows(p.eta()),
        loss: to_rows(p.loss()),
        predictors: p.predictors().to_vec(),
        lambda: lambda.map(|l| l.iter().map(|v| Real(v.as_f64())).collect()),
        edges: None,
        meta,
    };
    serde_json::to_string_pretty(&file).expect("problem reals are finite")
}

pub fn weighted_to_json<T: Scalar>(wp: &WeightedProblem<T>) -> String {
    problem_to_json(wp.problem(), Some(wp.lambda()))
}

fn f<T: Scalar>(v: T) -> Value {
    json!(v.as_f64())
}

fn nested<T: Scalar>(m: &Matrix<T>) -> Value {
    Value::Array(m.to_rows().into_iter().map(|r| r.into_iter().map(f).collect()).collect())
}

/// `{value, status, coupling: [x][y][x′][y′], correspondence: [[h, h′], …]}`.
pub fn distance_result_json<T: Scalar>(r: &DistanceResult<T>) -> Value {
    let coupling: Vec<Vec<Vec<Vec<f64>>>> = r
        .coupling
        .to_nested()
        .into_iter()
        .map(|a| a.into_iter().map(|b| b.into_iter().map(|c| c.into_iter().map(|v| v.as_f64()).collect()).collect()).collect())
        .collect();
    json!({
        "value": r.value.as_f64(),
        "status": r.status.as_str(),
        "coupling": coupling,
        "correspondence": r.correspondence.pairs(),
    })
}

/// `{value, status, gamma, rho, history}` with `rho` as a predictor matrix.
pub fn weighted_result_json<T: Scalar>(r: &WeightedDistanceResult<T>) -> Value {
    let gamma: Vec<Vec<Vec<Vec<f64>>>> = r
        .gamma
        .to_nested()
        .into_iter()
        .map(|a| a.into_iter().map(|b| b.into_iter().map(|c| c.into_iter().map(|v| v.as_f64()).collect()).collect()).collect())
        .collect();
    json!({
        "value": r.value.as_f64(),
        "status": r.status.as_str(),
        "gamma": gamma,
        "rho": nested(r.rho.matrix()),
        "history": r.history.iter().map(|&v| v.as_f64()).collect::<Vec<_>>(),
    })
}

/// Stage bounds, cumulative bound and endpoint distance (`null` when skipped).
pub fn ledger_json<T: Scalar>(l: &Ledger<T>) -> Value {
    let stages: Vec<Value> = l
        .entries
        .iter()
        .map(|e| json!({"kind": e.kind, "bound": f(e.bound), "cumulative": f(e.cumulative)}))
        .collect();
    let endpoint = match &l.endpoint {
        Some((v, s)) => json!({"value": f(*v), "status": s.as_str()}),
        None => Value::Null,
    };
    json!({
        "p": l.p.map(|p| p.as_f64()),
        "stages": stages,
        "cumulative": f(l.cumulative),
        "endpoint": endpoint,
    })
}

/// `{nodes: [{id, height, members}], edges: [[a, b], …]}`.
pub fn reeb_json<T: Scalar>(r: &ReebGraph<T>) -> Value {
    let nodes: Vec<Value> = r
        .nodes
        .iter()
        .enumerate()
        .map(|(k, n)| json!({"id": k, "height": f(n.height), "members": n.members}))
        .collect();
    json!({"nodes": nodes, "edges": r.edges})
}
