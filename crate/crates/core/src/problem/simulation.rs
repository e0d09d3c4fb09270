use super::FiniteProblem;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Witness maps for "`rich` simulates `base`".
///
/// `f1: X' → X` and `f2: Y' → Y` act on the rich problem's spaces;
/// `fwd: H → H'` picks, for each base predictor, a rich predictor with the
/// same losses; `bwd: H' → H` does the converse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationMaps {
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub fwd: Vec<usize>,
    pub bwd: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimulationViolation {
    /// `(f1 × f2)♯η'` differs from `η` at `(x, y)`.
    Pushforward { x: usize, y: usize, expected: f64, actual: f64 },
    /// `ℓ'_{fwd(h)} ≠ ℓ_h ∘ (f1 × f2)` at a supported rich cell.
    Forward { h: usize, x_rich: usize, y_rich: usize },
    /// `ℓ'_{h'} ≠ ℓ_{bwd(h')} ∘ (f1 × f2)` at a supported rich cell.
    Backward { h_rich: usize, x_rich: usize, y_rich: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub holds: bool,
    pub violation: Option<SimulationViolation>,
}

/// Checks that `rich` simulates `base` through `maps`. Loss identities are
/// only required on the support of the rich joint law.
pub fn verify_simulation<T: Scalar>(
    rich: &FiniteProblem<T>,
    base: &FiniteProblem<T>,
    maps: &SimulationMaps,
) -> Result<SimulationReport> {
    check_map("f1", &maps.f1, rich.nx(), base.nx())?;
    check_map("f2", &maps.f2, rich.ny(), base.ny())?;
    check_map("fwd", &maps.fwd, base.num_predictors(), rich.num_predictors())?;
    check_map("bwd", &maps.bwd, rich.num_predictors(), base.num_predictors())?;

    let mut pushed = Matrix::filled(base.nx(), base.ny(), T::zero());
    for (x, y, &m) in rich.eta().indexed() {
        pushed[(maps.f1[x], maps.f2[y])] += m;
    }
    for (x, y, &m) in base.eta().indexed() {
        if (pushed[(x, y)] - m).abs() > T::mass_tol() {
            return Ok(fail(SimulationViolation::Pushforward {
                x,
                y,
                expected: m.as_f64(),
                actual: pushed[(x, y)].as_f64(),
            }));
        }
    }

    let support = rich.support();
    let same = |a: T, b: T| (a - b).abs() <= T::mass_tol() * (T::one() + a.abs().max(b.abs()));
    for (h, &h_rich) in maps.fwd.iter().enumerate() {
        for &(xr, yr) in &support {
            if !same(rich.loss_of(h_rich, xr, yr), base.loss_of(h, maps.f1[xr], maps.f2[yr])) {
                return Ok(fail(SimulationViolation::Forward {
                    h,
                    x_rich: xr,
                    y_rich: yr,
                }));
            }
        }
    }
    for (h_rich, &h) in maps.bwd.iter().enumerate() {
        for &(xr, yr) in &support {
            if !same(rich.loss_of(h_rich, xr, yr), base.loss_of(h, maps.f1[xr], maps.f2[yr])) {
                return Ok(fail(SimulationViolation::Backward {
                    h_rich,
                    x_rich: xr,
                    y_rich: yr,
                }));
            }
        }
    }
    Ok(SimulationReport {
        holds: true,
        violation: None,
    })
}

fn fail(v: SimulationViolation) -> SimulationReport {
    SimulationReport {
        holds: false,
        violation: Some(v),
    }
}

fn check_map(field: &str, map: &[usize], domain: usize, codomain: usize) -> Result<()> {
    if map.len() != domain {
        return Err(Error::invalid(
            field,
            format!("length {}, expected {domain}", map.len()),
        ));
    }
    if let Some((i, &v)) = map.iter().enumerate().find(|(_, &v)| v >= codomain) {
        return Err(Error::invalid(
            format!("{field}[{i}]"),
            format!("image {v} out of range 0..{codomain}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
/// Two-input classification on {a, b} with constant predictors, and its
/// copy with a label `c` indistinguishable from `b`.
pub(crate) fn simulation_fixture() -> (FiniteProblem<f64>, FiniteProblem<f64>, SimulationMaps) {
    let base = FiniteProblem::new(
        vec!["0".into(), "1".into()],
        vec!["a".into(), "b".into()],
        Matrix::from_rows("eta", vec![vec![0.3, 0.2], vec![0.1, 0.4]]).unwrap(),
        super::zero_one_loss(2),
        (0..2).map(|c| vec![c; 2]).collect(),
    )
    .unwrap();
    let merge = [0usize, 1, 1];
    let rich_loss = Matrix::from_fn(3, 3, |i, j| if merge[i] == merge[j] { 0.0 } else { 1.0 });
    let rich_preds: Vec<Vec<usize>> = (0..3).map(|c| vec![c; 2]).collect();
    let rich = FiniteProblem::new(
        vec!["0".into(), "1".into()],
        vec!["a".into(), "b".into(), "c".into()],
        Matrix::from_rows("eta", vec![vec![0.3, 0.05, 0.15], vec![0.1, 0.3, 0.1]]).unwrap(),
        rich_loss,
        rich_preds.clone(),
    )
    .unwrap();
    let fwd = base
        .predictors()
        .iter()
        .map(|h| rich_preds.iter().position(|g| g == h).unwrap())
        .collect();
    let bwd = rich_preds
        .iter()
        .map(|g| {
            let image: Vec<usize> = g.iter().map(|&y| merge[y]).collect();
            base.predictors().iter().position(|h| *h == image).unwrap()
        })
        .collect();
    let maps = SimulationMaps {
        f1: vec![0, 1],
        f2: merge.to_vec(),
        fwd,
        bwd,
    };
    (rich, base, maps)
}
