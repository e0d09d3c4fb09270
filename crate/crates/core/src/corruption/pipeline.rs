//! Ordered corruption stages with per-stage bounds.
//!
//! A pipeline is a JSON array of stage objects, or an object
//! `{"stages": [...], "p": 2}`. With `p` present, bounds are for the
//! weighted `L^p` Risk distance under the problem's predictor weighting.

use serde::Deserialize;
use serde_json::Value;

use super::{
    apply_bias_density, apply_general_noise, apply_label_noise, check_p, loss_swap,
    noise_bound_metric, predictor_set_bound, restrict, s_metric_weighted, uniform_label_noise,
};
use crate::distance::{lp_risk_distance, risk_distance_exact, DistanceLimits, DistanceStatus};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{check_pseudometric, FiniteProblem, Predictor, WeightedProblem};
use crate::scalar::Scalar;
use crate::transport::{ot_unchecked, FiniteMarkovKernel};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Epsilon {
    Uniform(f64),
    PerInput(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stage {
    /// Reweight `η` by a density.
    BiasDensity { f: Vec<Vec<f64>> },
    /// Condition `η` on a set of `(x, y)` cells.
    Restrict { cells: Vec<(usize, usize)> },
    /// Resample labels: either `ε`-uniform mixing or an explicit kernel with
    /// rows indexed by flattened `(x, y)`. `metric` and `lipschitz` set the
    /// label metric of the bound; by default the loss is used when it is a
    /// pseudometric (constant 1), else the discrete metric with the largest
    /// loss gap as constant.
    LabelNoise {
        #[serde(default)]
        epsilon: Option<Epsilon>,
        #[serde(default)]
        kernel: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        metric: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        lipschitz: Option<f64>,
    },
    /// Move mass along a kernel on flattened `X × Y`.
    GeneralNoise { kernel: Vec<Vec<f64>> },
    LossSwap { loss: Vec<Vec<f64>> },
    PredictorSwap { predictors: Vec<Predictor> },
}

impl Stage {
    pub fn kind(&self) -> &'static str {
        match self {
            Stage::BiasDensity { .. } => "bias_density",
            Stage::Restrict { .. } => "restrict",
            Stage::LabelNoise { .. } => "label_noise",
            Stage::GeneralNoise { .. } => "general_noise",
            Stage::LossSwap { .. } => "loss_swap",
            Stage::PredictorSwap { .. } => "predictor_swap",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pipeline {
    pub stages: Vec<Stage>,
    pub p: Option<f64>,
}

impl Pipeline {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::invalid("pipeline", e.to_string()))?;
        let (stages, p) = match value {
            Value::Array(stages) => (stages, None),
            Value::Object(mut map) => {
                let p = match map.remove("p") {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(
                        v.as_f64()
                            .ok_or_else(|| Error::invalid("pipeline.p", "expected a number"))?,
                    ),
                };
                match map.remove("stages") {
                    Some(Value::Array(stages)) => (stages, p),
                    _ => return Err(Error::invalid("pipeline.stages", "expected an array of stages")),
                }
            }
            _ => return Err(Error::invalid("pipeline", "expected an array or an object")),
        };
        let stages = stages
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                serde_json::from_value(s).map_err(|e| Error::invalid(format!("pipeline.stages[{i}]"), e.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Pipeline { stages, p })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry<T> {
    pub kind: &'static str,
    pub bound: T,
    pub cumulative: T,
}

/// Stage bounds, their running sum, and the distance between the endpoints
/// when it could be computed.
#[derive(Clone, Debug, PartialEq)]
pub struct Ledger<T> {
    pub entries: Vec<LedgerEntry<T>>,
    pub cumulative: T,
    pub endpoint: Option<(T, DistanceStatus)>,
    pub p: Option<T>,
    pub result: WeightedProblem<T>,
}

/// Runs the stages in order. `lambda` weights the predictors in `L^p` mode
/// (uniform when absent). The endpoint distance uses the exact solver in the
/// unweighted mode (skipped past `limits`) and the alternating solver in
/// `L^p` mode.
pub fn run_pipeline<T: Scalar>(
    start: &WeightedProblem<T>,
    pipeline: &Pipeline,
    limits: &DistanceLimits,
) -> Result<Ledger<T>> {
    let p = pipeline.p.map(T::lit);
    if let Some(p) = p {
        check_p(p)?;
    }
    let mut current = start.clone();
    let mut entries = Vec::with_capacity(pipeline.stages.len());
    let mut cumulative = T::zero();
    for (i, stage) in pipeline.stages.iter().enumerate() {
        let (next, bound) = apply_stage(&current, stage, p)
            .map_err(|e| prefix(e, &format!("pipeline.stages[{i}]")))?;
        cumulative += bound;
        entries.push(LedgerEntry {
            kind: stage.kind(),
            bound,
            cumulative,
        });
        current = next;
    }
    let endpoint = match p {
        None => {
            let strict = DistanceLimits {
                fallback: false,
                ..*limits
            };
            match risk_distance_exact(start.problem(), current.problem(), &strict) {
                Ok(r) => Some((r.value, r.status)),
                Err(Error::Capacity { .. }) => None,
                Err(e) => return Err(e),
            }
        }
        Some(p) if p.is_finite() => {
            let r = lp_risk_distance(start, &current, p, 4, 0)?;
            Some((r.value, r.status))
        }
        Some(_) => None,
    };
    Ok(Ledger {
        entries,
        cumulative,
        endpoint,
        p,
        result: current,
    })
}

fn prefix(e: Error, at: &str) -> Error {
    match e {
        Error::Invalid { field, reason } => Error::Invalid {
            field: format!("{at}.{field}"),
            reason,
        },
        other => other,
    }
}

fn matrix<T: Scalar>(field: &str, rows: &[Vec<f64>]) -> Result<Matrix<T>> {
    Matrix::from_rows(field, rows.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect())
}

fn apply_stage<T: Scalar>(
    wp: &WeightedProblem<T>,
    stage: &Stage,
    p: Option<T>,
) -> Result<(WeightedProblem<T>, T)> {
    let problem = wp.problem();
    let reweight = |next: FiniteProblem<T>| WeightedProblem::new(next, wp.lambda().to_vec());
    // in L^p mode a change of joint law is bounded by W1 under s_{ℓ,λ,p}
    let eta_bound = |next: &FiniteProblem<T>, bound: T| -> Result<T> {
        match p {
            None => Ok(bound),
            Some(p) => {
                let s = s_metric_weighted(wp, p)?;
                Ok(ot_unchecked(s.matrix(), problem.eta().as_slice(), next.eta().as_slice())?.1)
            }
        }
    };
    match stage {
        Stage::BiasDensity { f } => {
            let (next, bound) = apply_bias_density(problem, &matrix("f", f)?)?;
            let bound = eta_bound(&next, bound)?;
            Ok((reweight(next)?, bound))
        }
        Stage::Restrict { cells } => {
            let (next, bound) = restrict(problem, cells)?;
            let bound = eta_bound(&next, bound)?;
            Ok((reweight(next)?, bound))
        }
        Stage::LabelNoise {
            epsilon,
            kernel,
            metric,
            lipschitz,
        } => {
            let kernel = match (epsilon, kernel) {
                (Some(Epsilon::Uniform(e)), None) => {
                    uniform_label_noise(problem.ny(), &vec![T::lit(*e); problem.nx()])?
                }
                (Some(Epsilon::PerInput(es)), None) => {
                    if es.len() != problem.nx() {
                        return Err(Error::invalid(
                            "epsilon",
                            format!("length {}, expected {}", es.len(), problem.nx()),
                        ));
                    }
                    uniform_label_noise(problem.ny(), &es.iter().map(|&e| T::lit(e)).collect::<Vec<_>>())?
                }
                (None, Some(k)) => FiniteMarkovKernel::new(matrix("kernel", k)?)?,
                _ => {
                    return Err(Error::invalid(
                        "label_noise",
                        "give exactly one of epsilon and kernel",
                    ))
                }
            };
            let next = apply_label_noise(problem, &kernel)?;
            let bound = match p {
                Some(_) => eta_bound(&next, T::zero())?,
                None => {
                    let (d_y, c) = label_metric(problem, metric.as_deref(), *lipschitz)?;
                    noise_bound_metric(problem, &kernel, &d_y, c)?
                }
            };
            Ok((reweight(next)?, bound))
        }
        Stage::GeneralNoise { kernel } => {
            let kernel = FiniteMarkovKernel::new(matrix("kernel", kernel)?)?;
            match p {
                Some(p) => apply_general_noise(wp, &kernel, p),
                None => {
                    // `s_{ℓ,H}` is the L^∞ form over the whole predictor set
                    let full = WeightedProblem::uniform(problem.clone());
                    let (next, bound) = apply_general_noise(&full, &kernel, T::infinity())?;
                    Ok((reweight(next.into_parts().0)?, bound))
                }
            }
        }
        Stage::LossSwap { loss } => {
            let (next, bound) = loss_swap(problem, matrix("loss", loss)?)?;
            let bound = match p {
                None => bound,
                Some(p) => {
                    let per_h = (0..problem.num_predictors()).map(|h| problem.l1_distance(&next, h, h));
                    let lam = wp.lambda();
                    if p.is_infinite() {
                        crate::scalar::max_of(per_h.zip(lam).filter(|(_, &w)| w > T::zero()).map(|(d, _)| d))
                    } else {
                        per_h.zip(lam).map(|(d, &w)| w * d.powf(p)).sum::<T>().powf(T::one() / p)
                    }
                }
            };
            Ok((reweight(next)?, bound))
        }
        Stage::PredictorSwap { predictors } => {
            if p.is_some() {
                return Err(Error::invalid(
                    "predictor_swap",
                    "not available in L^p mode: the weighting of the new predictors is undefined",
                ));
            }
            let (next, bound) = predictor_set_bound(problem, predictors.clone())?;
            Ok((WeightedProblem::uniform(next), bound))
        }
    }
}

/// The label metric and Lipschitz constant for a noise bound.
fn label_metric<T: Scalar>(
    problem: &FiniteProblem<T>,
    metric: Option<&[Vec<f64>]>,
    lipschitz: Option<f64>,
) -> Result<(Matrix<T>, T)> {
    let ny = problem.ny();
    if let Some(m) = metric {
        let d = matrix("metric", m)?;
        let c = lipschitz.map(T::lit).unwrap_or_else(|| smallest_lipschitz(problem.loss(), &d));
        return Ok((d, c));
    }
    let loss = problem.loss();
    if check_pseudometric("loss", loss).is_ok() {
        return Ok((loss.clone(), lipschitz.map_or(T::one(), T::lit)));
    }
    let discrete = crate::problem::zero_one_loss(ny);
    let c = lipschitz.map(T::lit).unwrap_or_else(|| smallest_lipschitz(loss, &discrete));
    Ok((discrete, c))
}

/// `max |ℓ(z,y) − ℓ(z,y′)| / d(y,y′)` over pairs at positive distance.
fn smallest_lipschitz<T: Scalar>(loss: &Matrix<T>, d: &Matrix<T>) -> T {
    let ny = loss.cols();
    let mut c = T::zero();
    for z in 0..loss.rows() {
        for y in 0..ny {
            for y2 in 0..ny {
                if d[(y, y2)] > T::zero() {
                    c = c.max((loss[(z, y)] - loss[(z, y2)]).abs() / d[(y, y2)]);
                }
            }
        }
    }
    c
}
