//! Finite supervised learning problems and their basic functionals.
//!
//! A [`FiniteProblem`] is the tuple `(X, Y, η, ℓ, H)` with finite input and
//! response spaces and an explicitly enumerated predictor set.
//!
//! **Loss orientation.** `loss[(i, j)]` is `ℓ(y_i, y_j)` where the *first*
//! index is the predicted label and the *second* the true label, so the loss
//! incurred by predictor `h` on the observation `(x, y)` is
//! `loss[(h(x), y)]`.

mod coarsen;
mod mm_space;
mod profile;
mod simulation;

use std::collections::HashSet;

pub use coarsen::{coarsen, coarsen_weighted, coarsening_bound, Partition};
pub use mm_space::MmSpace;
pub(crate) use mm_space::check_pseudometric;
pub use profile::{LossProfile, ProfileDistribution};
pub use simulation::{verify_simulation, SimulationMaps, SimulationReport, SimulationViolation};
#[cfg(test)]
pub(crate) use simulation::simulation_fixture;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{max_of, Scalar};

/// A predictor, stored as the response index it assigns to every input.
pub type Predictor = Vec<usize>;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteProblem<T> {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    eta: Matrix<T>,
    loss: Matrix<T>,
    predictors: Vec<Predictor>,
}

impl<T: Scalar> FiniteProblem<T> {
    /// Validates and assembles a problem.
    pub fn new(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        eta: Matrix<T>,
        loss: Matrix<T>,
        predictors: Vec<Predictor>,
    ) -> Result<Self> {
        let nx = x_labels.len();
        let ny = y_labels.len();
        if nx == 0 {
            return Err(Error::invalid("x_labels", "input space is empty"));
        }
        if ny == 0 {
            return Err(Error::invalid("y_labels", "response space is empty"));
        }
        check_unique("x_labels", &x_labels)?;
        check_unique("y_labels", &y_labels)?;
        if eta.shape() != (nx, ny) {
            return Err(Error::invalid(
                "eta",
                format!("shape {:?}, expected ({nx}, {ny})", eta.shape()),
            ));
        }
        if loss.shape() != (ny, ny) {
            return Err(Error::invalid(
                "loss",
                format!("shape {:?}, expected ({ny}, {ny})", loss.shape()),
            ));
        }
        check_distribution_matrix("eta", &eta)?;
        for (i, j, &v) in loss.indexed() {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(
                    format!("loss[{i}][{j}]"),
                    format!("{v} is not a finite nonnegative real"),
                ));
            }
        }
        if predictors.is_empty() {
            return Err(Error::invalid("predictors", "predictor set is empty"));
        }
        for (k, h) in predictors.iter().enumerate() {
            if h.len() != nx {
                return Err(Error::invalid(
                    format!("predictors[{k}]"),
                    format!("length {}, expected {nx}", h.len()),
                ));
            }
            if let Some((x, &y)) = h.iter().enumerate().find(|(_, &y)| y >= ny) {
                return Err(Error::invalid(
                    format!("predictors[{k}][{x}]"),
                    format!("label index {y} out of range 0..{ny}"),
                ));
            }
        }
        Ok(FiniteProblem {
            x_labels,
            y_labels,
            eta,
            loss,
            predictors,
        })
    }

    /// Like [`FiniteProblem::new`] with generated labels `x0, x1, …` and `y0, y1, …`.
    pub fn from_parts(eta: Matrix<T>, loss: Matrix<T>, predictors: Vec<Predictor>) -> Result<Self> {
        let x_labels = (0..eta.rows()).map(|i| format!("x{i}")).collect();
        let y_labels = (0..loss.rows()).map(|i| format!("y{i}")).collect();
        Self::new(x_labels, y_labels, eta, loss, predictors)
    }

    /// The one-point problem `P•(c)`: a single input, a single label, constant loss `c`.
    pub fn one_point(c: T) -> Result<Self> {
        if !(c >= T::zero()) || !c.is_finite() {
            return Err(Error::invalid("c", format!("{c} must be finite and ≥ 0")));
        }
        Self::new(
            vec!["•".into()],
            vec!["•".into()],
            Matrix::filled(1, 1, T::one()),
            Matrix::filled(1, 1, c),
            vec![vec![0]],
        )
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn nx(&self) -> usize {
        self.x_labels.len()
    }

    pub fn ny(&self) -> usize {
        self.y_labels.len()
    }

    pub fn eta(&self) -> &Matrix<T> {
        &self.eta
    }

    pub fn loss(&self) -> &Matrix<T> {
        &self.loss
    }

    pub fn predictors(&self) -> &[Predictor] {
        &self.predictors
    }

    pub fn num_predictors(&self) -> usize {
        self.predictors.len()
    }

    /// `ℓ_h(x, y) = ℓ(h(x), y)`.
    #[inline]
    pub fn loss_of(&self, h: usize, x: usize, y: usize) -> T {
        self.loss[(self.predictors[h][x], y)]
    }

    /// Cells `(x, y)` carrying positive mass, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.eta
            .indexed()
            .filter(|(_, _, &m)| m > T::zero())
            .map(|(x, y, _)| (x, y))
            .collect()
    }

    pub fn max_loss(&self) -> T {
        max_of(self.loss.iter().copied())
    }

    pub fn check_predictor(&self, h: usize) -> Result<()> {
        if h >= self.predictors.len() {
            return Err(Error::invalid(
                "h_index",
                format!("{h} out of range 0..{}", self.predictors.len()),
            ));
        }
        Ok(())
    }

    /// Expected loss `Σ η(x,y)·ℓ(h(x), y)`.
    pub fn risk(&self, h: usize) -> Result<T> {
        self.check_predictor(h)?;
        Ok(self.risk_unchecked(h))
    }

    pub(crate) fn risk_unchecked(&self, h: usize) -> T {
        self.eta
            .indexed()
            .map(|(x, y, &m)| m * self.loss_of(h, x, y))
            .sum()
    }

    pub fn risks(&self) -> Vec<T> {
        (0..self.num_predictors()).map(|h| self.risk_unchecked(h)).collect()
    }

    /// Minimum risk over the predictor set.
    pub fn constrained_bayes_risk(&self) -> T {
        self.risks().into_iter().fold(T::infinity(), T::min)
    }

    /// `d(h, h') = Σ η·|ℓ_h − ℓ_{h'}|`, the L¹(η) distance between loss functions.
    pub fn predictor_pseudometric(&self) -> Matrix<T> {
        let n = self.num_predictors();
        let mut d = Matrix::filled(n, n, T::zero());
        for a in 0..n {
            for b in (a + 1)..n {
                let v = self.l1_distance(self, a, b);
                d[(a, b)] = v;
                d[(b, a)] = v;
            }
        }
        d
    }

    /// L¹(η) distance between `ℓ_h` of `self` and `ℓ'_{h'}` of `other`, where
    /// `other` shares `X`, `Y` and `η` with `self` (only the loss or the
    /// predictor list may differ).
    pub(crate) fn l1_distance(&self, other: &Self, h: usize, h_other: usize) -> T {
        self.eta
            .indexed()
            .map(|(x, y, &m)| m * (self.loss_of(h, x, y) - other.loss_of(h_other, x, y)).abs())
            .sum()
    }

    /// Same problem with a different joint law.
    pub fn with_eta(&self, eta: Matrix<T>) -> Result<Self> {
        Self::new(
            self.x_labels.clone(),
            self.y_labels.clone(),
            eta,
            self.loss.clone(),
            self.predictors.clone(),
        )
    }

    /// Same problem with a different loss.
    pub fn with_loss(&self, loss: Matrix<T>) -> Result<Self> {
        Self::new(
            self.x_labels.clone(),
            self.y_labels.clone(),
            self.eta.clone(),
            loss,
            self.predictors.clone(),
        )
    }

    /// Same problem with a different predictor set.
    pub fn with_predictors(&self, predictors: Vec<Predictor>) -> Result<Self> {
        Self::new(
            self.x_labels.clone(),
            self.y_labels.clone(),
            self.eta.clone(),
            self.loss.clone(),
            predictors,
        )
    }
}

/// A problem together with a probability weighting `λ` of its predictors.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedProblem<T> {
    problem: FiniteProblem<T>,
    lambda: Vec<T>,
}

impl<T: Scalar> WeightedProblem<T> {
    pub fn new(problem: FiniteProblem<T>, lambda: Vec<T>) -> Result<Self> {
        if lambda.len() != problem.num_predictors() {
            return Err(Error::invalid(
                "lambda",
                format!(
                    "length {}, expected {}",
                    lambda.len(),
                    problem.num_predictors()
                ),
            ));
        }
        check_distribution("lambda", &lambda)?;
        Ok(WeightedProblem { problem, lambda })
    }

    /// Uniform weights over the predictor list.
    pub fn uniform(problem: FiniteProblem<T>) -> Self {
        let n = problem.num_predictors();
        let w = T::one() / T::from_usize(n).expect("predictor count");
        WeightedProblem {
            problem,
            lambda: vec![w; n],
        }
    }

    pub fn one_point(c: T) -> Result<Self> {
        Self::new(FiniteProblem::one_point(c)?, vec![T::one()])
    }

    pub fn problem(&self) -> &FiniteProblem<T> {
        &self.problem
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn into_parts(self) -> (FiniteProblem<T>, Vec<T>) {
        (self.problem, self.lambda)
    }

    /// `(Σ_h λ_h · risk(h)^p)^{1/p}`, the distance to the zero one-point problem.
    pub fn p_diameter(&self, p: T) -> T {
        let s: T = self
            .problem
            .risks()
            .into_iter()
            .zip(&self.lambda)
            .map(|(r, &w)| w * r.powf(p))
            .sum();
        s.powf(T::one() / p)
    }
}

fn check_unique(field: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, l) in labels.iter().enumerate() {
        if !seen.insert(l.as_str()) {
            return Err(Error::invalid(
                format!("{field}[{i}]"),
                format!("duplicate label {l:?}"),
            ));
        }
    }
    Ok(())
}

/// Nonnegative finite entries summing to one within `MASS_TOL`.
pub(crate) fn check_distribution<T: Scalar>(field: &str, masses: &[T]) -> Result<()> {
    for (i, &m) in masses.iter().enumerate() {
        if !m.is_finite() || m < T::zero() {
            return Err(Error::invalid(
                format!("{field}[{i}]"),
                format!("{m} is not a finite nonnegative mass"),
            ));
        }
    }
    let total: T = masses.iter().sum();
    if (total - T::one()).abs() > T::mass_tol() {
        return Err(Error::invalid(field, format!("masses sum to {total}, expected 1")));
    }
    Ok(())
}

pub(crate) fn check_distribution_matrix<T: Scalar>(field: &str, m: &Matrix<T>) -> Result<()> {
    for (i, j, &v) in m.indexed() {
        if !v.is_finite() || v < T::zero() {
            return Err(Error::invalid(
                format!("{field}[{i}][{j}]"),
                format!("{v} is not a finite nonnegative mass"),
            ));
        }
    }
    let total: T = m.iter().sum();
    if (total - T::one()).abs() > T::mass_tol() {
        return Err(Error::invalid(field, format!("masses sum to {total}, expected 1")));
    }
    Ok(())
}

/// 0-1 loss on `n` labels.
pub fn zero_one_loss<T: Scalar>(n: usize) -> Matrix<T> {
    Matrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { T::one() })
}

/// Every map from `nx` inputs to `ny` labels, in lexicographic order.
pub fn all_predictors(nx: usize, ny: usize) -> Vec<Predictor> {
    let total = ny.pow(nx as u32);
    (0..total)
        .map(|mut code| {
            let mut h = vec![0; nx];
            for slot in h.iter_mut().rev() {
                *slot = code % ny;
                code /= ny;
            }
            h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// X = {0,1}, Y = {0,1}, η uniform on the diagonal, 0-1 loss, all four predictors.
    fn identity_support() -> FiniteProblem<f64> {
        FiniteProblem::from_parts(
            Matrix::from_rows("eta", vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap(),
            zero_one_loss(2),
            all_predictors(2, 2),
        )
        .unwrap()
    }

    /// Brute-force summation, written independently of `risk`.
    fn risk_oracle(eta: &[[f64; 2]; 2], loss: &[[f64; 2]; 2], h: [usize; 2]) -> f64 {
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                s += eta[x][y] * loss[h[x]][y];
            }
        }
        s
    }

    #[test]
    fn risk_examples() {
        let zero = FiniteProblem::<f64>::one_point(0.0).unwrap();
        assert_eq!(zero.risk(0).unwrap(), 0.0);

        let p = identity_support();
        // predictors in lexicographic order: [0,0], [0,1], [1,0], [1,1]
        assert_eq!(p.risk(1).unwrap(), 0.0);
        let eta = [[0.5, 0.0], [0.0, 0.5]];
        let loss = [[0.0, 1.0], [1.0, 0.0]];
        let expected = risk_oracle(&eta, &loss, [0, 0]);
        assert_eq!(expected, 0.5);
        assert_eq!(p.risk(0).unwrap(), expected);
        assert!(matches!(p.risk(4), Err(Error::Invalid { .. })));
    }

    #[test]
    fn bayes_risk_examples() {
        for c in [0.0, 1.0, 2.5] {
            assert_eq!(FiniteProblem::<f64>::one_point(c).unwrap().constrained_bayes_risk(), c);
        }
        assert_eq!(identity_support().constrained_bayes_risk(), 0.0);

        // n = 4 singleton indicators, η = unif([4]) ⊗ δ_0: each predictor errs on one point
        let n = 4;
        let eta = Matrix::from_fn(n, 2, |_, y| if y == 0 { 0.25 } else { 0.0 });
        let preds = (0..n).map(|k| (0..n).map(|x| usize::from(x == k)).collect()).collect();
        let p = FiniteProblem::from_parts(eta, zero_one_loss(2), preds).unwrap();
        assert_eq!(p.constrained_bayes_risk(), 0.25);
    }

    #[test]
    fn pseudometric_examples() {
        let p = identity_support();
        let d = p.predictor_pseudometric();
        assert_eq!(d[(1, 0)], 0.5);
        let dup = p.with_predictors(vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(dup.predictor_pseudometric()[(0, 1)], 0.0);
    }

    #[test]
    fn validation_names_the_field() {
        let bad = FiniteProblem::<f64>::from_parts(
            Matrix::from_rows("eta", vec![vec![0.5, 0.6]]).unwrap(),
            zero_one_loss(2),
            vec![vec![0]],
        );
        assert!(matches!(bad, Err(Error::Invalid { ref field, .. }) if field == "eta"));

        let bad = FiniteProblem::<f64>::from_parts(
            Matrix::from_rows("eta", vec![vec![0.5, 0.5]]).unwrap(),
            zero_one_loss(2),
            vec![vec![2]],
        );
        assert!(matches!(bad, Err(Error::Invalid { ref field, .. }) if field == "predictors[0][0]"));

        let bad = FiniteProblem::<f64>::new(
            vec!["a".into()],
            vec!["b".into(), "b".into()],
            Matrix::from_rows("eta", vec![vec![0.5, 0.5]]).unwrap(),
            zero_one_loss(2),
            vec![vec![0]],
        );
        assert!(matches!(bad, Err(Error::Invalid { ref field, .. }) if field == "y_labels[1]"));
        assert!(FiniteProblem::<f64>::one_point(-1.0).is_err());
    }

    #[test]
    fn p_diameter_of_uniform_weights() {
        let wp = WeightedProblem::uniform(identity_support());
        // risks 0.5, 0, 1, 0.5
        assert!((wp.p_diameter(1.0) - 0.5).abs() < 1e-15);
        assert!((wp.p_diameter(2.0) - (1.5f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_precision_problem() {
        let p = FiniteProblem::<f32>::from_parts(
            Matrix::from_rows("eta", vec![vec![0.5f32, 0.0], vec![0.0, 0.5]]).unwrap(),
            zero_one_loss(2),
            all_predictors(2, 2),
        )
        .unwrap();
        assert_eq!(p.risk(0).unwrap(), 0.5f32);
    }
}
