//! Corruptions of a problem together with bounds on how far they move it.
//!
//! Each transform returns the corrupted problem and a certificate: an upper
//! bound on the Risk distance (or the weighted `L^p` variant) between input
//! and output. Chaining stages and summing certificates bounds the distance
//! between the endpoints by the triangle inequality; see [`pipeline`].

pub mod pipeline;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{FiniteProblem, Predictor, WeightedProblem};
use crate::scalar::{max_of, Scalar};
use crate::transport::{
    kernel_w1, ot_unchecked, DiscreteDistribution, FiniteMarkovKernel,
};

/// `η = α ⊗ β`: the input marginal and the conditional label law.
#[derive(Clone, Debug, PartialEq)]
pub struct Disintegration<T> {
    pub alpha: DiscreteDistribution<T>,
    pub beta: FiniteMarkovKernel<T>,
}

impl<T: Scalar> Disintegration<T> {
    /// `η(x, y) = α(x)·β(x)(y)`.
    pub fn recompose(&self) -> Matrix<T> {
        let alpha = self.alpha.masses();
        Matrix::from_fn(alpha.len(), self.beta.num_targets(), |x, y| alpha[x] * self.beta.row(x)[y])
    }
}

/// Rows of `β` at inputs of zero mass are uniform.
pub fn disintegrate<T: Scalar>(problem: &FiniteProblem<T>) -> Disintegration<T> {
    let eta = problem.eta();
    let alpha: Vec<T> = (0..eta.rows()).map(|x| eta.row(x).iter().copied().sum()).collect();
    let uniform = T::one() / T::lit(eta.cols() as f64);
    let beta = Matrix::from_fn(eta.rows(), eta.cols(), |x, y| {
        if alpha[x] > T::zero() {
            eta[(x, y)] / alpha[x]
        } else {
            uniform
        }
    });
    Disintegration {
        alpha: DiscreteDistribution::new(alpha).expect("marginal of a joint law"),
        beta: FiniteMarkovKernel::new(beta).expect("normalized rows"),
    }
}

/// Reweights `η` by a density `f` with `Σ f·η = 1`. The bound is
/// `ℓmax · ½ Σ |1 − f|·η`, the total-variation bound for the reweighted law.
pub fn apply_bias_density<T: Scalar>(
    problem: &FiniteProblem<T>,
    f: &Matrix<T>,
) -> Result<(FiniteProblem<T>, T)> {
    let eta = problem.eta();
    if f.shape() != eta.shape() {
        return Err(Error::invalid(
            "f",
            format!("shape {:?}, expected {:?}", f.shape(), eta.shape()),
        ));
    }
    if let Some((x, y, v)) = f.indexed().find(|(_, _, v)| !v.is_finite() || **v < T::zero()) {
        return Err(Error::invalid(format!("f[{x}][{y}]"), format!("{v} is not a finite nonnegative density")));
    }
    let biased = Matrix::from_fn(eta.rows(), eta.cols(), |x, y| f[(x, y)] * eta[(x, y)]);
    let total: T = biased.iter().copied().sum();
    if (total - T::one()).abs() > T::metric_tol() {
        return Err(Error::invalid("f", format!("Σ f·η = {total}, expected 1")));
    }
    let slack: T = f
        .iter()
        .zip(eta.iter())
        .map(|(&fv, &e)| (T::one() - fv).abs() * e)
        .sum();
    let bound = problem.max_loss() * slack * T::lit(0.5);
    let renormalized = biased.map(|v| v / total);
    Ok((problem.with_eta(renormalized)?, bound))
}

/// Conditions `η` on the cells `A`. The bound is `ℓmax · (1 − η(A))`.
pub fn restrict<T: Scalar>(
    problem: &FiniteProblem<T>,
    cells: &[(usize, usize)],
) -> Result<(FiniteProblem<T>, T)> {
    let eta = problem.eta();
    let mut inside = Matrix::filled(eta.rows(), eta.cols(), false);
    for (k, &(x, y)) in cells.iter().enumerate() {
        if x >= eta.rows() || y >= eta.cols() {
            return Err(Error::invalid(
                format!("cells[{k}]"),
                format!("({x}, {y}) outside {}x{}", eta.rows(), eta.cols()),
            ));
        }
        inside[(x, y)] = true;
    }
    let mass: T = eta.indexed().filter(|(x, y, _)| inside[(*x, *y)]).map(|(_, _, &v)| v).sum();
    if mass <= T::zero() {
        return Err(Error::invalid("cells", "restricted set has zero mass"));
    }
    let conditioned = Matrix::from_fn(eta.rows(), eta.cols(), |x, y| {
        if inside[(x, y)] {
            eta[(x, y)] / mass
        } else {
            T::zero()
        }
    });
    let bound = problem.max_loss() * (T::one() - mass).max(T::zero());
    Ok((problem.with_eta(conditioned)?, bound))
}

/// Ground cost on `X × Y`: either `s_{ℓ,H}` or its `λ`-weighted `L^p` form.
#[derive(Clone, Debug, PartialEq)]
pub struct SMetric<T>(pub Matrix<T>);

impl<T: Scalar> SMetric<T> {
    /// Indexed by flattened cells `x·|Y| + y`.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }
}

/// `s((x,y), (x′,y′)) = max_h |ℓ_h(x,y) − ℓ_h(x′,y′)|`.
pub fn s_metric<T: Scalar>(problem: &FiniteProblem<T>) -> SMetric<T> {
    let table = loss_table(problem);
    let cells = problem.nx() * problem.ny();
    SMetric(Matrix::from_fn(cells, cells, |a, b| {
        max_of(table.iter().map(|l| (l[a] - l[b]).abs()))
    }))
}

/// `s((x,y), (x′,y′)) = ‖h ↦ |ℓ_h(x,y) − ℓ_h(x′,y′)|‖_{L^p(λ)}`.
pub fn s_metric_weighted<T: Scalar>(wp: &WeightedProblem<T>, p: T) -> Result<SMetric<T>> {
    check_p(p)?;
    let problem = wp.problem();
    let table = loss_table(problem);
    let lambda = wp.lambda();
    let cells = problem.nx() * problem.ny();
    Ok(SMetric(Matrix::from_fn(cells, cells, |a, b| {
        let diffs = table
            .iter()
            .zip(lambda)
            .filter(|(_, &w)| w > T::zero())
            .map(|(l, &w)| (w, (l[a] - l[b]).abs()));
        if p.is_infinite() {
            max_of(diffs.map(|(_, d)| d))
        } else {
            diffs.map(|(w, d)| w * d.powf(p)).sum::<T>().powf(T::one() / p)
        }
    })))
}

pub(crate) fn check_p<T: Scalar>(p: T) -> Result<()> {
    if p.is_nan() || p < T::one() {
        return Err(Error::invalid("p", format!("{p} is not in [1, ∞]")));
    }
    Ok(())
}

fn loss_table<T: Scalar>(problem: &FiniteProblem<T>) -> Vec<Vec<T>> {
    (0..problem.num_predictors())
        .map(|h| {
            (0..problem.nx() * problem.ny())
                .map(|k| problem.loss_of(h, k / problem.ny(), k % problem.ny()))
                .collect()
        })
        .collect()
}

/// Errors unless `p` and `q` differ at most in their joint laws.
pub(crate) fn check_same_but_eta<T: Scalar>(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> Result<()> {
    if (p.nx(), p.ny()) != (q.nx(), q.ny()) {
        return Err(Error::invalid(
            "eta",
            format!(
                "spaces differ: {}x{} and {}x{}",
                p.nx(),
                p.ny(),
                q.nx(),
                q.ny()
            ),
        ));
    }
    if p.loss() != q.loss() {
        return Err(Error::invalid("loss", "problems must share the loss"));
    }
    if p.predictors() != q.predictors() {
        return Err(Error::invalid("predictors", "problems must share the predictor set"));
    }
    Ok(())
}

/// `ℓmax · d_TV(η, η′)` for problems that differ only in their joint laws.
pub fn tv_bound<T: Scalar>(p: &FiniteProblem<T>, q: &FiniteProblem<T>, ell_max: T) -> Result<T> {
    check_same_but_eta(p, q)?;
    let top = p.max_loss();
    if ell_max < top {
        return Err(Error::invalid(
            "ell_max",
            format!("{ell_max} is below the largest loss {top}"),
        ));
    }
    Ok(ell_max * crate::transport::tv_unchecked(p.eta().as_slice(), q.eta().as_slice()))
}

/// `W1` between the joint laws under the ground cost `s_{ℓ,H}`.
pub fn w1_eta_bound<T: Scalar>(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> Result<T> {
    check_same_but_eta(p, q)?;
    let s = s_metric(p);
    Ok(ot_unchecked(s.matrix(), p.eta().as_slice(), q.eta().as_slice())?.1)
}

/// Resamples labels: `η′(x, y′) = Σ_y η(x, y)·N((x, y), y′)`. Kernel rows are
/// indexed by flattened cells `x·|Y| + y`.
pub fn apply_label_noise<T: Scalar>(
    problem: &FiniteProblem<T>,
    kernel: &FiniteMarkovKernel<T>,
) -> Result<FiniteProblem<T>> {
    let (nx, ny) = (problem.nx(), problem.ny());
    check_label_kernel(kernel, nx, ny)?;
    let eta = problem.eta();
    let noisy = Matrix::from_fn(nx, ny, |x, y2| {
        (0..ny).map(|y| eta[(x, y)] * kernel.row(x * ny + y)[y2]).sum()
    });
    problem.with_eta(noisy)
}

fn check_label_kernel<T: Scalar>(kernel: &FiniteMarkovKernel<T>, nx: usize, ny: usize) -> Result<()> {
    if (kernel.num_sources(), kernel.num_targets()) != (nx * ny, ny) {
        return Err(Error::invalid(
            "kernel",
            format!(
                "shape ({}, {}), expected ({}, {ny})",
                kernel.num_sources(),
                kernel.num_targets(),
                nx * ny
            ),
        ));
    }
    Ok(())
}

/// The noiseless label kernel `(x, y) ↦ δ_y`.
pub fn no_noise_kernel<T: Scalar>(nx: usize, ny: usize) -> FiniteMarkovKernel<T> {
    let m = Matrix::from_fn(nx * ny, ny, |k, y| if k % ny == y { T::one() } else { T::zero() });
    FiniteMarkovKernel::new(m).expect("point-mass rows")
}

/// With probability `ε(x)` the label at `x` is redrawn uniformly.
pub fn uniform_label_noise<T: Scalar>(ny: usize, epsilon: &[T]) -> Result<FiniteMarkovKernel<T>> {
    let mut rows = Vec::with_capacity(epsilon.len() * ny);
    for (x, &e) in epsilon.iter().enumerate() {
        let mix = FiniteMarkovKernel::uniform_mixing(ny, e)
            .map_err(|err| Error::invalid(format!("epsilon[{x}]"), err.to_string()))?;
        rows.extend((0..ny).map(|y| mix.row(y).to_vec()));
    }
    FiniteMarkovKernel::new(Matrix::from_rows("kernel", rows)?)
}

/// Checks `|ℓ(z, y) − ℓ(z, y′)| ≤ C·d_Y(y, y′)` for every prediction `z`.
pub fn check_lipschitz<T: Scalar>(loss: &Matrix<T>, d_y: &Matrix<T>, c: T) -> Result<()> {
    let ny = loss.cols();
    for z in 0..loss.rows() {
        for y in 0..ny {
            for y2 in 0..ny {
                let gap = (loss[(z, y)] - loss[(z, y2)]).abs();
                if gap > c * d_y[(y, y2)] + T::metric_tol() {
                    return Err(Error::invalid(
                        "lipschitz",
                        format!(
                            "|ℓ({z},{y}) − ℓ({z},{y2})| = {gap} exceeds {c}·d_Y({y},{y2}) = {}",
                            c * d_y[(y, y2)]
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// `C · W1(N, δ_{π₂})` over the base law `η`, for a loss that is
/// `C`-Lipschitz in the label with respect to `d_Y`.
pub fn noise_bound_metric<T: Scalar>(
    problem: &FiniteProblem<T>,
    kernel: &FiniteMarkovKernel<T>,
    d_y: &Matrix<T>,
    c: T,
) -> Result<T> {
    let (nx, ny) = (problem.nx(), problem.ny());
    check_label_kernel(kernel, nx, ny)?;
    if d_y.shape() != (ny, ny) {
        return Err(Error::invalid(
            "metric",
            format!("shape {:?}, expected ({ny}, {ny})", d_y.shape()),
        ));
    }
    crate::problem::check_pseudometric("metric", d_y)?;
    if !(c >= T::zero()) || !c.is_finite() {
        return Err(Error::invalid("lipschitz", format!("{c} is not a finite nonnegative constant")));
    }
    check_lipschitz(problem.loss(), d_y, c)?;
    let base = DiscreteDistribution::new(problem.eta().as_slice().to_vec())?;
    Ok(c * kernel_w1(kernel, &no_noise_kernel(nx, ny), &base, d_y)?)
}

/// Moves mass along `N` on the whole of `X × Y`: `η′ = η·N`. The bound is
/// `Σ η(z)·W1(δ_z, N(z))` under the ground cost `s_{ℓ,λ,p}`.
pub fn apply_general_noise<T: Scalar>(
    wp: &WeightedProblem<T>,
    kernel: &FiniteMarkovKernel<T>,
    p: T,
) -> Result<(WeightedProblem<T>, T)> {
    let problem = wp.problem();
    let cells = problem.nx() * problem.ny();
    if (kernel.num_sources(), kernel.num_targets()) != (cells, cells) {
        return Err(Error::invalid(
            "kernel",
            format!(
                "shape ({}, {}), expected ({cells}, {cells})",
                kernel.num_sources(),
                kernel.num_targets()
            ),
        ));
    }
    let s = s_metric_weighted(wp, p)?;
    let eta = problem.eta().as_slice();
    let mut moved = vec![T::zero(); cells];
    let mut bound = T::zero();
    for (z, &mass) in eta.iter().enumerate() {
        if mass <= T::zero() {
            continue;
        }
        let row = kernel.row(z);
        for (w, &k) in row.iter().enumerate() {
            moved[w] += mass * k;
            // transport from a point mass is forced
            bound += mass * k * s.matrix()[(z, w)];
        }
    }
    let eta2 = Matrix::from_vec(problem.nx(), problem.ny(), moved);
    let corrupted = WeightedProblem::new(problem.with_eta(eta2)?, wp.lambda().to_vec())?;
    Ok((corrupted, bound))
}

/// Replaces the loss. The bound is `max_h ∫ |ℓ_h − ℓ′_h| dη`.
pub fn loss_swap<T: Scalar>(problem: &FiniteProblem<T>, loss: Matrix<T>) -> Result<(FiniteProblem<T>, T)> {
    let swapped = problem.with_loss(loss)?;
    let bound = max_of((0..problem.num_predictors()).map(|h| problem.l1_distance(&swapped, h, h)));
    Ok((swapped, bound))
}

/// Replaces the predictor set. The bound is the Hausdorff distance between
/// the two sets under `d_{ℓ,η}`.
pub fn predictor_set_bound<T: Scalar>(
    problem: &FiniteProblem<T>,
    predictors: Vec<Predictor>,
) -> Result<(FiniteProblem<T>, T)> {
    if predictors.is_empty() {
        return Err(Error::invalid("predictors", "new predictor set is empty"));
    }
    let swapped = problem.with_predictors(predictors)?;
    let cross = Matrix::from_fn(problem.num_predictors(), swapped.num_predictors(), |h, g| {
        problem.l1_distance(&swapped, h, g)
    });
    Ok((swapped, crate::transport::hausdorff_unchecked(&cross)))
}

#[cfg(test)]
mod tests;
