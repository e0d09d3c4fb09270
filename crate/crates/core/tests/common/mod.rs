#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use riskspace::matrix::Matrix;
use riskspace::problem::{all_predictors, FiniteProblem};

/// Probability vector with random small-integer weights; `zeros` allows
/// zero entries (at least one entry stays positive).
pub fn masses(rng: &mut impl Rng, n: usize, zeros: bool) -> Vec<f64> {
    loop {
        let lo = if zeros { 0 } else { 1 };
        let w: Vec<u32> = (0..n).map(|_| rng.random_range(lo..=6)).collect();
        let total: u32 = w.iter().sum();
        if total > 0 {
            return w.iter().map(|&v| v as f64 / total as f64).collect();
        }
    }
}

/// Random problem with `|X| ≤ max_x`, `|Y| ≤ max_y`, `|H| ≤ max_h`, losses on
/// a quarter grid in `[0, 2]`.
pub fn problem(rng: &mut impl Rng, max_x: usize, max_y: usize, max_h: usize) -> FiniteProblem<f64> {
    let nx = rng.random_range(1..=max_x);
    let ny = rng.random_range(1..=max_y);
    let eta = Matrix::from_vec(nx, ny, masses(rng, nx * ny, true));
    let loss = Matrix::from_fn(ny, ny, |_, _| rng.random_range(0..=8) as f64 * 0.25);
    let all = all_predictors(nx, ny);
    let k = rng.random_range(1..=max_h.min(all.len()));
    let predictors = all.choose_multiple(rng, k).cloned().collect();
    FiniteProblem::from_parts(eta, loss, predictors).unwrap()
}

/// Like [`problem`] but with the given spaces and joint law kept fixed.
pub fn problem_on(rng: &mut impl Rng, eta: Matrix<f64>, max_h: usize) -> FiniteProblem<f64> {
    let (nx, ny) = eta.shape();
    let loss = Matrix::from_fn(ny, ny, |_, _| rng.random_range(0..=8) as f64 * 0.25);
    let all = all_predictors(nx, ny);
    let k = rng.random_range(1..=max_h.min(all.len()));
    let predictors = all.choose_multiple(rng, k).cloned().collect();
    FiniteProblem::from_parts(eta, loss, predictors).unwrap()
}
