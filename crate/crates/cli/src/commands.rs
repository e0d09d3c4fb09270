use std::path::Path;

use riskspace::corruption::pipeline::{run_pipeline, Pipeline};
use riskspace::corruption::{tv_bound, w1_eta_bound};
use riskspace::distance::{
    geodesic_problem, lp_risk_distance, risk_distance_exact, risk_distance_lower,
    risk_distance_upper_shared, DistanceLimits, SharedMode,
};
use riskspace::empirical::{
    convergence_experiment, rademacher_exact_small, rademacher_gap_bound, rademacher_mc,
    sample_empirical, PRNG_ID,
};
use riskspace::io::{
    distance_result_json, graph_from_json, ledger_json, problem_from_json,
    problem_to_json_with_meta, reeb_json, weighted_from_json, weighted_result_json, weighted_to_json,
};
use riskspace::landscape::{connected_risk_distance_exact, reeb_graph, reeb_sandwich, PredictorGraph};
use riskspace::problem::{
    coarsen, coarsen_weighted, coarsening_bound, verify_simulation, FiniteProblem, Partition,
    SimulationMaps, SimulationViolation, WeightedProblem,
};
use riskspace::transport::{hausdorff_loss_profiles, wasserstein_profile_distributions};
use riskspace::Error;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::output::{invalid, read, write_atomic, CliError, Output};
use crate::{Command, Format, Global};

type Result<T> = std::result::Result<T, CliError>;

fn problem(path: &Path) -> Result<FiniteProblem<f64>> {
    Ok(problem_from_json(&read(path)?)?.0)
}

fn weighted(path: &Path) -> Result<WeightedProblem<f64>> {
    Ok(weighted_from_json(&read(path)?)?)
}

fn graph(path: &Path, radius: Option<f64>) -> Result<PredictorGraph<f64>> {
    let g = graph_from_json(&read(path)?)?;
    Ok(match radius {
        Some(r) if !(r >= 0.0) => return Err(invalid("radius", format!("{r} is negative"))),
        Some(r) => PredictorGraph::from_pseudometric(g.problem().clone(), r),
        None => g,
    })
}

fn limits(g: &Global) -> Result<DistanceLimits> {
    if g.cap_pairs == 0 {
        return Err(invalid("cap_pairs", "must be positive"));
    }
    if g.cap_support == 0 {
        return Err(invalid("cap_support", "must be positive"));
    }
    Ok(DistanceLimits {
        max_pairs: g.cap_pairs,
        max_support: g.cap_support,
        fallback: !g.no_fallback,
    })
}

fn exponent(g: &Global) -> Result<f64> {
    match g.p.parse::<f64>() {
        Ok(p) if p >= 1.0 => Ok(p),
        _ => Err(invalid("p", format!("{} is not a number in [1, inf]", g.p))),
    }
}

fn tolerance(g: &Global) -> Result<f64> {
    if g.tol >= 0.0 && g.tol.is_finite() {
        Ok(g.tol)
    } else {
        Err(invalid("tol", format!("{} is not a finite non-negative number", g.tol)))
    }
}

fn json_only(g: &Global, command: &str) -> Result<()> {
    match g.format {
        Format::Json => Ok(()),
        Format::Csv => Err(invalid("format", format!("csv output is not available for {command}"))),
    }
}

fn partition(text: &str, ny: usize) -> Result<Partition> {
    let blocks: Vec<Vec<usize>> =
        serde_json::from_str(text).map_err(|e| invalid("blocks", format!("expected [[label, ...], ...]: {e}")))?;
    Ok(Partition::new(blocks, ny)?)
}

pub fn run(g: &Global, command: &Command) -> Result<Output> {
    let p_exp = exponent(g)?;
    let tol = tolerance(g)?;
    let limits = limits(g)?;
    let csv = g.format == Format::Csv;
    match command {
        Command::Distance { a, b } => {
            json_only(g, "distance")?;
            let r = risk_distance_exact(&problem(a)?, &problem(b)?, &limits)?;
            Ok(Output::Json(distance_result_json(&r)))
        }
        Command::DistanceLp { a, b, restarts } => {
            json_only(g, "distance-lp")?;
            let r = lp_risk_distance(&weighted(a)?, &weighted(b)?, p_exp, *restarts, g.seed)?;
            let mut v = weighted_result_json(&r);
            v["p"] = json!(g.p);
            v["seed"] = json!(g.seed);
            v["prng"] = json!(PRNG_ID);
            Ok(Output::Json(v))
        }
        Command::Bound { a, b, mode, blocks } => {
            json_only(g, "bound")?;
            let pa = problem(a)?;
            let second = || -> Result<FiniteProblem<f64>> {
                match b {
                    Some(path) => problem(path),
                    None => Err(invalid("b", format!("mode {mode} compares two problems"))),
                }
            };
            let (name, value) = match mode.as_str() {
                "tv" => {
                    let pb = second()?;
                    let ell = pa.max_loss().max(pb.max_loss());
                    ("tv", tv_bound(&pa, &pb, ell)?)
                }
                "w1" => ("w1", w1_eta_bound(&pa, &second()?)?),
                "lower" => ("lower", risk_distance_lower(&pa, &second()?)),
                "coarsening" => {
                    let text = blocks.as_deref().ok_or_else(|| invalid("blocks", "coarsening mode needs --blocks"))?;
                    ("coarsening", coarsening_bound(&pa, &partition(text, pa.ny())?)?)
                }
                other => match SharedMode::parse(other) {
                    Some(m) => (m.as_str(), risk_distance_upper_shared(&pa, &second()?, m)?),
                    None => return Err(invalid("mode", format!("unknown bound mode {other}"))),
                },
            };
            Ok(Output::Json(json!({"mode": name, "bound": value})))
        }
        Command::Corrupt {
            problem: path,
            pipeline,
            result,
        } => {
            json_only(g, "corrupt")?;
            let start = weighted(path)?;
            let pipeline = Pipeline::from_json(&read(pipeline)?)?;
            let ledger = run_pipeline(&start, &pipeline, &limits)?;
            if let Some(out) = result {
                write_atomic(out, &weighted_to_json(&ledger.result))?;
            }
            Ok(Output::Json(ledger_json(&ledger)))
        }
        Command::Coarsen { problem: path, blocks } => {
            json_only(g, "coarsen")?;
            let (p, lambda) = problem_from_json::<f64>(&read(path)?)?;
            let q = partition(blocks, p.ny())?;
            let bound = coarsening_bound(&p, &q)?;
            let meta = Some(json!({"coarsening_bound": bound}));
            let text = match lambda {
                Some(l) => {
                    let wp = coarsen_weighted(&WeightedProblem::new(p, l)?, &q)?;
                    problem_to_json_with_meta(wp.problem(), Some(wp.lambda()), meta)
                }
                None => problem_to_json_with_meta(&coarsen(&p, &q)?, None, meta),
            };
            Ok(Output::Text(text))
        }
        Command::Sample { problem: path, n } => {
            json_only(g, "sample")?;
            let (p, lambda) = problem_from_json::<f64>(&read(path)?)?;
            let e = sample_empirical(&p, *n, g.seed)?;
            let meta = Some(json!({"n": n, "seed": g.seed, "prng": PRNG_ID}));
            Ok(Output::Text(problem_to_json_with_meta(&e, lambda.as_deref(), meta)))
        }
        Command::Convergence {
            problem: path,
            ns,
            trials,
        } => {
            let report = convergence_experiment(&problem(path)?, ns, *trials, g.seed, &limits)?;
            Ok(if csv {
                Output::Text(report.to_csv())
            } else {
                Output::Json(serde_json::to_value(&report).expect("reports serialize"))
            })
        }
        Command::Rademacher {
            problem: path,
            m,
            samples,
            against,
        } => {
            json_only(g, "rademacher")?;
            let p = problem(path)?;
            let exact = match rademacher_exact_small(&p, *m) {
                Ok(v) => json!(v),
                Err(Error::Capacity { .. }) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            let mc = if *samples > 0 {
                let (mean, se) = rademacher_mc(&p, *m, *samples, g.seed)?;
                json!({"estimate": mean, "standard_error": se, "samples": samples})
            } else {
                Value::Null
            };
            let mut v = json!({"m": m, "exact": exact, "monte_carlo": mc, "seed": g.seed, "prng": PRNG_ID});
            if let Some(other) = against {
                let q = problem(other)?;
                let strict = DistanceLimits { fallback: false, ..limits };
                let d = risk_distance_exact(&p, &q, &strict)?;
                let gap = rademacher_gap_bound(&p, &q, &d.correspondence, &d.coupling, *m)?;
                v["stability"] = json!({
                    "gap": gap.gap,
                    "distortion": gap.distortion,
                    "family_complexity": gap.family,
                    "bound": gap.bound,
                    "holds": gap.holds,
                });
            }
            Ok(Output::Json(v))
        }
        Command::Reeb { problem: path, radius } => {
            let r = reeb_graph(&graph(path, *radius)?, tol);
            Ok(if csv {
                Output::Text(r.to_csv())
            } else {
                let mut v = reeb_json(&r);
                v["local_minima"] = json!(r.local_minima());
                v["min_height"] = json!(r.min_height());
                Output::Json(v)
            })
        }
        Command::ConnectedDistance { a, b, radius } => {
            json_only(g, "connected-distance")?;
            let (ga, gb) = (graph(a, *radius)?, graph(b, *radius)?);
            let r = connected_risk_distance_exact(&ga, &gb, &limits)?;
            let (lower, _) = reeb_sandwich(&ga, &gb, &limits)?;
            let mut v = distance_result_json(&r);
            v["bayes_gap"] = json!(lower);
            Ok(Output::Json(v))
        }
        Command::Geodesic { a, b, t } => {
            json_only(g, "geodesic")?;
            let (p0, p1) = (problem(a)?, problem(b)?);
            let strict = DistanceLimits { fallback: false, ..limits };
            let w = risk_distance_exact(&p0, &p1, &strict)?;
            let pt = geodesic_problem(&p0, &p1, &w, *t)?;
            let meta = Some(json!({"t": t, "distance": w.value}));
            Ok(Output::Text(problem_to_json_with_meta(&pt, None, meta)))
        }
        Command::Profile { a, b } => {
            let wa = weighted(a)?;
            let pa = wa.problem();
            if csv {
                let mut out = String::from("predictor,loss,mass\n");
                for h in 0..pa.num_predictors() {
                    for &(v, m) in pa.loss_profile(h)?.atoms() {
                        out.push_str(&format!("{h},{v:.17e},{m:.17e}\n"));
                    }
                }
                return Ok(Output::Text(out));
            }
            let profiles: Vec<Vec<(f64, f64)>> = pa.loss_profile_set().iter().map(|l| l.atoms().to_vec()).collect();
            let mut v = json!({"profiles": profiles, "bayes_risk": pa.constrained_bayes_risk()});
            if let Some(bp) = b {
                let wb = weighted(bp)?;
                let pb = wb.problem();
                v["bayes_gap"] = json!((pa.constrained_bayes_risk() - pb.constrained_bayes_risk()).abs());
                v["hausdorff_w1"] = json!(hausdorff_loss_profiles(pa, pb));
                v["lower_bound"] = json!(risk_distance_lower(pa, pb));
                let w = wasserstein_profile_distributions(&wa, &wb, p_exp)?;
                v["wasserstein"] = json!({"p": g.p, "value": w});
            }
            Ok(Output::Json(v))
        }
        Command::Verify { rich, base, maps } => {
            json_only(g, "verify")?;
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Maps {
                f1: Vec<usize>,
                f2: Vec<usize>,
                fwd: Vec<usize>,
                bwd: Vec<usize>,
            }
            let m: Maps = serde_json::from_str(&read(maps)?).map_err(|e| invalid("maps", e.to_string()))?;
            let maps = SimulationMaps {
                f1: m.f1,
                f2: m.f2,
                fwd: m.fwd,
                bwd: m.bwd,
            };
            let report = verify_simulation(&problem(rich)?, &problem(base)?, &maps)?;
            let violation = report.violation.map(|v| match v {
                SimulationViolation::Pushforward { x, y, expected, actual } => {
                    json!({"kind": "pushforward", "x": x, "y": y, "expected": expected, "actual": actual})
                }
                SimulationViolation::Forward { h, x_rich, y_rich } => {
                    json!({"kind": "forward", "h": h, "x_rich": x_rich, "y_rich": y_rich})
                }
                SimulationViolation::Backward { h_rich, x_rich, y_rich } => {
                    json!({"kind": "backward", "h_rich": h_rich, "x_rich": x_rich, "y_rich": y_rich})
                }
            });
            Ok(Output::Json(json!({"holds": report.holds, "violation": violation})))
        }
    }
}
