//! Exact discrete optimal transport and the metrics built on it.

mod metrics;
mod ot;

pub use metrics::{
    hausdorff, hausdorff_loss_profiles, kernel_w1, total_variation, w1_real_line,
    wasserstein_profile_distributions,
};
pub use ot::{solve_ot_exact, transport_vertices, OtSolution};
pub(crate) use metrics::{hausdorff_unchecked, tv_unchecked};
pub(crate) use ot::{binomial, coupling_cost, ot_unchecked, vertices_unchecked};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{check_distribution, check_distribution_matrix};
use crate::scalar::Scalar;

/// Probability vector over an indexed ground set.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<T> {
    masses: Vec<T>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    pub fn new(masses: Vec<T>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::invalid("masses", "distribution has no atoms"));
        }
        check_distribution("masses", &masses)?;
        Ok(DiscreteDistribution { masses })
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "atom {at} outside ground set of size {n}");
        let mut masses = vec![T::zero(); n];
        masses[at] = T::one();
        DiscreteDistribution { masses }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution on an empty set");
        let w = T::one() / T::lit(n as f64);
        DiscreteDistribution { masses: vec![w; n] }
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Joint distribution on a product of two finite sets, remembered together
/// with the marginals it was checked against.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix<T> {
    matrix: Matrix<T>,
}

impl<T: Scalar> CouplingMatrix<T> {
    /// Checks nonnegativity and both marginals within `METRIC_TOL`.
    pub fn new(matrix: Matrix<T>, mu: &[T], nu: &[T]) -> Result<Self> {
        if matrix.shape() != (mu.len(), nu.len()) {
            return Err(Error::invalid(
                "coupling",
                format!(
                    "shape {:?}, marginals have lengths ({}, {})",
                    matrix.shape(),
                    mu.len(),
                    nu.len()
                ),
            ));
        }
        check_distribution_matrix("coupling", &matrix)?;
        let tol = T::metric_tol();
        for (i, (&r, &m)) in row_sums(&matrix).iter().zip(mu).enumerate() {
            if (r - m).abs() > tol {
                return Err(Error::invalid(
                    format!("coupling row {i}"),
                    format!("sums to {r}, marginal is {m}"),
                ));
            }
        }
        for (j, (&c, &m)) in col_sums(&matrix).iter().zip(nu).enumerate() {
            if (c - m).abs() > tol {
                return Err(Error::invalid(
                    format!("coupling column {j}"),
                    format!("sums to {c}, marginal is {m}"),
                ));
            }
        }
        Ok(CouplingMatrix { matrix })
    }

    pub(crate) fn new_unchecked(matrix: Matrix<T>) -> Self {
        CouplingMatrix { matrix }
    }

    /// Product coupling `μ ⊗ ν`.
    pub fn independent(mu: &[T], nu: &[T]) -> Self {
        CouplingMatrix {
            matrix: Matrix::from_fn(mu.len(), nu.len(), |i, j| mu[i] * nu[j]),
        }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    /// `⟨cost, γ⟩`.
    pub fn cost(&self, cost: &Matrix<T>) -> T {
        self.matrix
            .iter()
            .zip(cost.iter())
            .map(|(&g, &c)| if g > T::zero() { g * c } else { T::zero() })
            .sum()
    }

    pub fn row_marginal(&self) -> Vec<T> {
        row_sums(&self.matrix)
    }

    pub fn col_marginal(&self) -> Vec<T> {
        col_sums(&self.matrix)
    }

    pub fn transpose(&self) -> Self {
        CouplingMatrix {
            matrix: self.matrix.transpose(),
        }
    }
}

/// Row-stochastic matrix: row `i` is the distribution `M(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMarkovKernel<T> {
    matrix: Matrix<T>,
}

impl<T: Scalar> FiniteMarkovKernel<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if matrix.cols() == 0 {
            return Err(Error::invalid("kernel", "target space is empty"));
        }
        for i in 0..matrix.rows() {
            check_distribution(&format!("kernel[{i}]"), matrix.row(i))?;
        }
        Ok(FiniteMarkovKernel { matrix })
    }

    pub fn identity(n: usize) -> Self {
        FiniteMarkovKernel {
            matrix: Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() }),
        }
    }

    /// `ε·uniform + (1 − ε)·δ_y`: with probability `ε` the state is redrawn uniformly.
    pub fn uniform_mixing(n: usize, epsilon: T) -> Result<Self> {
        if !(epsilon >= T::zero() && epsilon <= T::one()) {
            return Err(Error::invalid("epsilon", format!("{epsilon} is outside [0, 1]")));
        }
        let spread = epsilon / T::lit(n as f64);
        Ok(FiniteMarkovKernel {
            matrix: Matrix::from_fn(n, n, |i, j| {
                if i == j {
                    T::one() - epsilon + spread
                } else {
                    spread
                }
            }),
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn num_sources(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_targets(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.matrix.row(i)
    }
}

pub(crate) fn row_sums<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    (0..m.rows()).map(|i| m.row(i).iter().copied().sum()).collect()
}

pub(crate) fn col_sums<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let mut sums = vec![T::zero(); m.cols()];
    for (_, j, &v) in m.indexed() {
        sums[j] += v;
    }
    sums
}
