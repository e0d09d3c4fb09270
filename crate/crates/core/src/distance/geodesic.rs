use super::{DistanceResult, DistanceStatus};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::FiniteProblem;
use crate::scalar::Scalar;

/// The point at time `t` on the geodesic spanned by optimal witnesses:
/// inputs `X₀ × X₁`, responses `Y₀ × Y₁`, joint law `γ`, loss
/// `(1 − t)ℓ₀ + tℓ₁` and one predictor `h₀ × h₁` per related pair.
///
/// Product cells are flattened first-coordinate-major and labelled `(a,b)`.
pub fn geodesic_problem<T: Scalar>(
    p0: &FiniteProblem<T>,
    p1: &FiniteProblem<T>,
    witness: &DistanceResult<T>,
    t: T,
) -> Result<FiniteProblem<T>> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::invalid("t", format!("{t} is outside [0, 1]")));
    }
    if witness.status != DistanceStatus::Exact {
        return Err(Error::invalid(
            "witness",
            "geodesics need optimal witnesses from an exact solve",
        ));
    }
    witness.coupling.check(p0, p1)?;
    if witness.correspondence.shape() != (p0.num_predictors(), p1.num_predictors()) {
        return Err(Error::invalid("witness", "correspondence does not match the predictor sets"));
    }
    let (nx0, ny0, nx1, ny1) = (p0.nx(), p0.ny(), p1.nx(), p1.ny());
    let pair_labels = |a: &[String], b: &[String]| -> Vec<String> {
        a.iter()
            .flat_map(|u| b.iter().map(move |v| format!("({u},{v})")))
            .collect()
    };
    let x_labels = pair_labels(p0.x_labels(), p1.x_labels());
    let y_labels = pair_labels(p0.y_labels(), p1.y_labels());

    let mut eta = Matrix::filled(nx0 * nx1, ny0 * ny1, T::zero());
    for (i, j, &m) in witness.coupling.matrix().indexed() {
        let (x0, y0, x1, y1) = (i / ny0, i % ny0, j / ny1, j % ny1);
        eta[(x0 * nx1 + x1, y0 * ny1 + y1)] = m.max(T::zero());
    }
    let total: T = eta.iter().copied().sum();
    let eta = eta.map(|v| v / total);

    let s = T::one() - t;
    let loss = Matrix::from_fn(ny0 * ny1, ny0 * ny1, |z, y| {
        s * p0.loss()[(z / ny1, y / ny1)] + t * p1.loss()[(z % ny1, y % ny1)]
    });
    let predictors = witness
        .correspondence
        .pairs()
        .into_iter()
        .map(|(h0, h1)| {
            let (a, b) = (&p0.predictors()[h0], &p1.predictors()[h1]);
            (0..nx0 * nx1).map(|x| a[x / nx1] * ny1 + b[x % nx1]).collect()
        })
        .collect();
    FiniteProblem::new(x_labels, y_labels, eta, loss, predictors)
}
