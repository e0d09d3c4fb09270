//! Risk distortion and the Risk distance between finite problems.
//!
//! For a fixed coupling `γ` the infimum over correspondences of the worst
//! pair cost is the Hausdorff value of the pair-cost matrix, attained by the
//! relation `{c ≤ value}` ([`hausdorff_reduction`]). The exact solver
//! therefore only searches over couplings: it enumerates the minimal edge
//! covers of `H × H′` (every correspondence contains one), solves the
//! minimax linear program `min_γ max_{(h,h′) ∈ E} c_{hh′}(γ)` for each, and
//! reports the Hausdorff value at the best coupling found.

mod bounds;
mod exact;
mod geodesic;
mod weighted;

pub use bounds::{risk_distance_lower, risk_distance_upper_shared, SharedMode};
pub use exact::{
    minimax_over_relation, risk_distance_exact, weak_isomorphism_witness, DistanceLimits,
};
pub use geodesic::geodesic_problem;
pub use weighted::{bilinear_gw, lp_risk_distance, lp_risk_distortion, WeightedDistanceResult};

pub(crate) use exact::PairContext;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::FiniteProblem;
use crate::scalar::{max_of, Scalar};
use crate::transport::{col_sums, row_sums};

/// Relation `R ⊆ H × H′` in which every predictor on either side has a partner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
}

impl Correspondence {
    pub fn from_matrix(entries: Vec<Vec<bool>>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        if let Some(i) = entries.iter().position(|r| r.len() != cols) {
            return Err(Error::invalid(
                format!("correspondence[{i}]"),
                format!("row has {} entries, expected {cols}", entries[i].len()),
            ));
        }
        Self::from_mask(rows, cols, entries.into_iter().flatten().collect())
    }

    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut mask = vec![false; rows * cols];
        for (k, &(h, g)) in pairs.iter().enumerate() {
            if h >= rows || g >= cols {
                return Err(Error::invalid(
                    format!("pairs[{k}]"),
                    format!("({h}, {g}) outside {rows}x{cols}"),
                ));
            }
            mask[h * cols + g] = true;
        }
        Self::from_mask(rows, cols, mask)
    }

    pub(crate) fn from_mask(rows: usize, cols: usize, mask: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("correspondence", "predictor sets must be nonempty"));
        }
        if let Some(h) = (0..rows).find(|&h| !(0..cols).any(|g| mask[h * cols + g])) {
            return Err(Error::invalid(
                format!("correspondence[{h}]"),
                "left predictor has no partner",
            ));
        }
        if let Some(g) = (0..cols).find(|&g| !(0..rows).any(|h| mask[h * cols + g])) {
            return Err(Error::invalid(
                format!("correspondence[..][{g}]"),
                "right predictor has no partner",
            ));
        }
        Ok(Correspondence { rows, cols, mask })
    }

    /// The full relation `H × H′`.
    pub fn full(rows: usize, cols: usize) -> Self {
        Correspondence {
            rows,
            cols,
            mask: vec![true; rows * cols],
        }
    }

    pub fn diagonal(n: usize) -> Self {
        Correspondence {
            rows: n,
            cols: n,
            mask: (0..n * n).map(|k| k / n == k % n).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn contains(&self, h: usize, g: usize) -> bool {
        self.mask[h * self.cols + g]
    }

    /// Related pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|h| (0..self.cols).map(move |g| (h, g)))
            .filter(|&(h, g)| self.contains(h, g))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transpose(&self) -> Self {
        Correspondence {
            rows: self.cols,
            cols: self.rows,
            mask: (0..self.rows * self.cols)
                .map(|k| self.contains(k % self.rows, k / self.rows))
                .collect(),
        }
    }
}

/// Coupling of two joint laws, stored as a matrix indexed by the flattened
/// cells `x·|Y| + y` and `x′·|Y′| + y′`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductCoupling<T> {
    nx: usize,
    ny: usize,
    nx2: usize,
    ny2: usize,
    matrix: Matrix<T>,
}

impl<T: Scalar> ProductCoupling<T> {
    /// Checks the marginals against `η` and `η′` within `METRIC_TOL`.
    pub fn new(p: &FiniteProblem<T>, q: &FiniteProblem<T>, matrix: Matrix<T>) -> Result<Self> {
        let c = Self::new_unchecked(p, q, matrix);
        c.check(p, q)?;
        Ok(c)
    }

    pub(crate) fn new_unchecked(p: &FiniteProblem<T>, q: &FiniteProblem<T>, matrix: Matrix<T>) -> Self {
        ProductCoupling {
            nx: p.nx(),
            ny: p.ny(),
            nx2: q.nx(),
            ny2: q.ny(),
            matrix,
        }
    }

    /// `γ = η ⊗ η′`.
    pub fn independent(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> Self {
        let (a, b) = (p.eta().as_slice(), q.eta().as_slice());
        Self::new_unchecked(p, q, Matrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j]))
    }

    /// `(id × id)♯η` for two problems on the same spaces with the same joint law.
    pub fn diagonal(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> Result<Self> {
        if p.eta() != q.eta() {
            return Err(Error::invalid("eta", "diagonal coupling needs identical joint laws"));
        }
        let a = p.eta().as_slice();
        Ok(Self::new_unchecked(
            p,
            q,
            Matrix::from_fn(a.len(), a.len(), |i, j| if i == j { a[i] } else { T::zero() }),
        ))
    }

    pub fn check(&self, p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> Result<()> {
        if (self.nx, self.ny, self.nx2, self.ny2) != (p.nx(), p.ny(), q.nx(), q.ny()) {
            return Err(Error::invalid(
                "gamma",
                format!(
                    "coupling is {}x{} by {}x{}, problems are {}x{} and {}x{}",
                    self.nx,
                    self.ny,
                    self.nx2,
                    self.ny2,
                    p.nx(),
                    p.ny(),
                    q.nx(),
                    q.ny()
                ),
            ));
        }
        for (i, j, &v) in self.matrix.indexed() {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(
                    format!("gamma[{i}][{j}]"),
                    format!("{v} is not a finite nonnegative mass"),
                ));
            }
        }
        let tol = T::metric_tol();
        for (k, (&r, &m)) in row_sums(&self.matrix).iter().zip(p.eta().as_slice()).enumerate() {
            if (r - m).abs() > tol {
                return Err(Error::invalid(
                    format!("gamma marginal ({}, {})", k / self.ny, k % self.ny),
                    format!("is {r}, joint law has {m}"),
                ));
            }
        }
        for (k, (&c, &m)) in col_sums(&self.matrix).iter().zip(q.eta().as_slice()).enumerate() {
            if (c - m).abs() > tol {
                return Err(Error::invalid(
                    format!("gamma marginal′ ({}, {})", k / self.ny2, k % self.ny2),
                    format!("is {c}, joint law has {m}"),
                ));
            }
        }
        Ok(())
    }

    pub fn get(&self, x: usize, y: usize, x2: usize, y2: usize) -> T {
        self.matrix[(x * self.ny + y, x2 * self.ny2 + y2)]
    }

    /// Flattened-cell matrix.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    /// `(nx, ny, nx′, ny′)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.nx, self.ny, self.nx2, self.ny2)
    }

    /// Nested `[x][y][x′][y′]` arrays.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<T>>>> {
        (0..self.nx)
            .map(|x| {
                (0..self.ny)
                    .map(|y| {
                        (0..self.nx2)
                            .map(|x2| (0..self.ny2).map(|y2| self.get(x, y, x2, y2)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        ProductCoupling {
            nx: self.nx2,
            ny: self.ny2,
            nx2: self.nx,
            ny2: self.ny,
            matrix: self.matrix.transpose(),
        }
    }
}

/// `c(h, h′) = ∫ |ℓ_h − ℓ′_{h′}| dγ` for a fixed coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCostMatrix<T>(pub Matrix<T>);

impl<T: Scalar> PairCostMatrix<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceStatus {
    Exact,
    UpperBound,
}

impl DistanceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceStatus::Exact => "exact",
            DistanceStatus::UpperBound => "upper_bound",
        }
    }
}

/// A distance value with the coupling and correspondence that attain it.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceResult<T> {
    pub value: T,
    pub coupling: ProductCoupling<T>,
    pub correspondence: Correspondence,
    pub status: DistanceStatus,
}

impl<T: Scalar> DistanceResult<T> {
    pub(crate) fn transpose(&self) -> Self {
        DistanceResult {
            value: self.value,
            coupling: self.coupling.transpose(),
            correspondence: self.correspondence.transpose(),
            status: self.status,
        }
    }
}

pub fn pair_cost_matrix<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    gamma: &ProductCoupling<T>,
) -> Result<PairCostMatrix<T>> {
    gamma.check(p, q)?;
    Ok(pair_cost_unchecked(p, q, gamma))
}

pub(crate) fn pair_cost_unchecked<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    gamma: &ProductCoupling<T>,
) -> PairCostMatrix<T> {
    let mass: Vec<(usize, usize, usize, usize, T)> = gamma
        .matrix
        .indexed()
        .filter(|(_, _, &v)| v > T::zero())
        .map(|(i, j, &v)| (i / p.ny(), i % p.ny(), j / q.ny(), j % q.ny(), v))
        .collect();
    PairCostMatrix(Matrix::from_fn(p.num_predictors(), q.num_predictors(), |h, g| {
        mass.iter()
            .map(|&(x, y, x2, y2, v)| v * (p.loss_of(h, x, y) - q.loss_of(g, x2, y2)).abs())
            .sum()
    }))
}

/// `max_{(h,h′) ∈ R} ∫ |ℓ_h − ℓ′_{h′}| dγ`.
pub fn risk_distortion<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    r: &Correspondence,
    gamma: &ProductCoupling<T>,
) -> Result<T> {
    if r.shape() != (p.num_predictors(), q.num_predictors()) {
        return Err(Error::invalid(
            "correspondence",
            format!(
                "shape {:?}, predictor sets have sizes ({}, {})",
                r.shape(),
                p.num_predictors(),
                q.num_predictors()
            ),
        ));
    }
    let c = pair_cost_matrix(p, q, gamma)?;
    Ok(distortion_of(&c, r))
}

pub(crate) fn distortion_of<T: Scalar>(c: &PairCostMatrix<T>, r: &Correspondence) -> T {
    max_of(r.pairs().into_iter().map(|(h, g)| c.0[(h, g)]))
}

/// Hausdorff value of the pair costs and the witness `{(h, h′) : c ≤ value}`.
pub fn hausdorff_reduction<T: Scalar>(c: &PairCostMatrix<T>) -> (T, Correspondence) {
    let m = &c.0;
    let value = crate::transport::hausdorff_unchecked(m);
    let mask = m.iter().map(|&v| v <= value).collect();
    let r = Correspondence::from_mask(m.rows(), m.cols(), mask)
        .expect("every row and column minimum is at most the Hausdorff value");
    (value, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{all_predictors, zero_one_loss};
    use proptest::prelude::*;

    fn sample_problem() -> FiniteProblem<f64> {
        FiniteProblem::from_parts(
            Matrix::from_rows("eta", vec![vec![0.1, 0.3], vec![0.4, 0.2]]).unwrap(),
            Matrix::from_rows("loss", vec![vec![0.0, 2.0], vec![1.0, 0.5]]).unwrap(),
            all_predictors(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn correspondence_validation() {
        assert!(Correspondence::from_pairs(2, 2, &[(0, 0)]).is_err());
        let r = Correspondence::from_pairs(2, 3, &[(0, 0), (1, 1), (1, 2)]).unwrap();
        assert_eq!(r.transpose().pairs(), vec![(0, 0), (1, 1), (2, 1)]);
        assert_eq!(r.len(), 3);
        let err = Correspondence::from_matrix(vec![vec![true, false], vec![true, false]]).unwrap_err();
        assert!(err.to_string().contains("[..][1]"));
    }

    #[test]
    fn diagonal_coupling_gives_pseudometric() {
        let p = sample_problem();
        let gamma = ProductCoupling::diagonal(&p, &p).unwrap();
        let c = pair_cost_matrix(&p, &p, &gamma).unwrap();
        let d = p.predictor_pseudometric();
        for (a, b) in c.matrix().iter().zip(d.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = Correspondence::diagonal(p.num_predictors());
        assert_eq!(risk_distortion(&p, &p, &r, &gamma).unwrap(), 0.0);
    }

    #[test]
    fn one_point_target_gives_risks() {
        let p = sample_problem();
        let point = FiniteProblem::one_point(0.0).unwrap();
        let gamma = ProductCoupling::independent(&p, &point);
        let c = pair_cost_matrix(&p, &point, &gamma).unwrap();
        for (h, risk) in p.risks().into_iter().enumerate() {
            assert!((c.matrix()[(h, 0)] - risk).abs() < 1e-15);
        }
        let r = Correspondence::full(p.num_predictors(), 1);
        let worst = p.risks().into_iter().fold(0.0, f64::max);
        assert!((risk_distortion(&p, &point, &r, &gamma).unwrap() - worst).abs() < 1e-15);

        let lmax = p.max_loss();
        let top = FiniteProblem::one_point(lmax).unwrap();
        let gamma = ProductCoupling::independent(&p, &top);
        let v = risk_distortion(&p, &top, &r, &gamma).unwrap();
        assert!((v - (lmax - p.constrained_bayes_risk())).abs() < 1e-15);
    }

    #[test]
    fn zero_losses_give_zero_costs() {
        let zero = FiniteProblem::from_parts(
            Matrix::from_rows("eta", vec![vec![0.5, 0.5]]).unwrap(),
            Matrix::filled(2, 2, 0.0),
            all_predictors(1, 2),
        )
        .unwrap();
        let gamma = ProductCoupling::independent(&zero, &zero);
        assert!(pair_cost_matrix(&zero, &zero, &gamma).unwrap().matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bad_coupling_is_rejected() {
        let p = sample_problem();
        let q = FiniteProblem::from_parts(
            Matrix::from_rows("eta", vec![vec![1.0]]).unwrap(),
            zero_one_loss(1),
            vec![vec![0]],
        )
        .unwrap();
        let mut m = ProductCoupling::independent(&p, &q).matrix().clone();
        m[(0, 0)] += 0.1;
        m[(1, 0)] -= 0.1;
        let err = ProductCoupling::new(&p, &q, m).unwrap_err();
        assert!(err.to_string().contains("marginal (0, 0)"));
        assert!(pair_cost_matrix(&p, &p, &ProductCoupling::independent(&p, &q)).is_err());
    }

    #[test]
    fn hausdorff_reduction_cases() {
        let zero_diag = PairCostMatrix(Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 }));
        let (v, r) = hausdorff_reduction(&zero_diag);
        assert_eq!(v, 0.0);
        assert!((0..3).all(|i| r.contains(i, i)));
        let column = PairCostMatrix(Matrix::from_vec(3, 1, vec![0.2, 0.9, 0.4]));
        assert_eq!(hausdorff_reduction(&column).0, 0.9);
    }

    fn small_matrix() -> impl Strategy<Value = Matrix<f64>> {
        (1usize..=3, 1usize..=3).prop_flat_map(|(k, l)| {
            prop::collection::vec(0u32..6, k * l)
                .prop_map(move |v| Matrix::from_vec(k, l, v.into_iter().map(|x| x as f64 * 0.5).collect()))
        })
    }

    proptest! {
        #[test]
        fn reduction_is_optimal_over_all_relations(m in small_matrix()) {
            let c = PairCostMatrix(m.clone());
            let (value, witness) = hausdorff_reduction(&c);
            prop_assert_eq!(distortion_of(&c, &witness), value);
            let (k, l) = m.shape();
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << (k * l)) {
                let bits = (0..k * l).map(|b| mask & (1 << b) != 0).collect();
                if let Ok(r) = Correspondence::from_mask(k, l, bits) {
                    let d = distortion_of(&c, &r);
                    prop_assert!(value <= d);
                    best = best.min(d);
                }
            }
            prop_assert_eq!(value, best);
        }
    }
}
