use super::{FiniteProblem, WeightedProblem};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A finite metric measure space.
#[derive(Clone, Debug, PartialEq)]
pub struct MmSpace<T> {
    labels: Vec<String>,
    dist: Matrix<T>,
    mu: Vec<T>,
}

impl<T: Scalar> MmSpace<T> {
    /// `dist` must be symmetric with zero diagonal and satisfy the triangle
    /// inequality within `METRIC_TOL`; `mu` must be a probability vector.
    pub fn new(labels: Vec<String>, dist: Matrix<T>, mu: Vec<T>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::invalid("points", "space is empty"));
        }
        if dist.shape() != (n, n) {
            return Err(Error::invalid(
                "dist",
                format!("shape {:?}, expected ({n}, {n})", dist.shape()),
            ));
        }
        if mu.len() != n {
            return Err(Error::invalid("mu", format!("length {}, expected {n}", mu.len())));
        }
        check_pseudometric("dist", &dist)?;
        super::check_distribution("mu", &mu)?;
        Ok(MmSpace { labels, dist, mu })
    }

    pub fn from_parts(dist: Matrix<T>, mu: Vec<T>) -> Result<Self> {
        let labels = (0..mu.len()).map(|i| format!("p{i}")).collect();
        Self::new(labels, dist, mu)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self) -> &Matrix<T> {
        &self.dist
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    /// `(X, X, (Δ_X)♯μ, d_X, constants)`: the diagonal joint law, the metric as
    /// loss, and one constant predictor per point.
    pub fn encode(&self) -> FiniteProblem<T> {
        let n = self.len();
        let eta = Matrix::from_fn(n, n, |i, j| if i == j { self.mu[i] } else { T::zero() });
        let predictors = (0..n).map(|c| vec![c; n]).collect();
        FiniteProblem::new(
            self.labels.clone(),
            self.labels.clone(),
            eta,
            self.dist.clone(),
            predictors,
        )
        .expect("validated metric measure space encodes to a valid problem")
    }

    /// [`MmSpace::encode`] with the predictor weighting `λ = μ`.
    pub fn encode_weighted(&self) -> WeightedProblem<T> {
        WeightedProblem::new(self.encode(), self.mu.clone())
            .expect("validated measure is a valid predictor weighting")
    }
}

/// Symmetric, zero diagonal, nonnegative, triangle inequality within `METRIC_TOL`.
pub(crate) fn check_pseudometric<T: Scalar>(field: &str, d: &Matrix<T>) -> Result<()> {
    let n = d.rows();
    if d.cols() != n {
        return Err(Error::invalid(field, "matrix is not square"));
    }
    let tol = T::metric_tol();
    for i in 0..n {
        if d[(i, i)].abs() > tol {
            return Err(Error::invalid(format!("{field}[{i}][{i}]"), "diagonal must be zero"));
        }
        for j in 0..n {
            let v = d[(i, j)];
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(
                    format!("{field}[{i}][{j}]"),
                    format!("{v} is not a finite nonnegative distance"),
                ));
            }
            if (v - d[(j, i)]).abs() > tol {
                return Err(Error::invalid(format!("{field}[{i}][{j}]"), "matrix is not symmetric"));
            }
            for k in 0..n {
                if v > d[(i, k)] + d[(k, j)] + tol {
                    return Err(Error::invalid(
                        format!("{field}[{i}][{j}]"),
                        format!("triangle inequality fails through {k}"),
                    ));
                }
            }
        }
    }
    Ok(())
}
