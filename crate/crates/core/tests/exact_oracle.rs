//! The exact Risk distance against a grid search over the coupling polytope.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskspace::distance::{risk_distance_exact, DistanceLimits};
use riskspace::matrix::Matrix;
use riskspace::problem::FiniteProblem;

const STEP: f64 = 1e-3;

fn support(p: &FiniteProblem<f64>) -> Vec<(usize, usize, f64)> {
    p.eta().indexed().filter(|(_, _, &m)| m > 0.0).map(|(x, y, &m)| (x, y, m)).collect()
}

/// Hausdorff value of the pair costs under the coupling `g` of the supports.
fn hausdorff_at(p: &FiniteProblem<f64>, q: &FiniteProblem<f64>, a: &[(usize, usize, f64)], b: &[(usize, usize, f64)], g: &[Vec<f64>]) -> f64 {
    let cost = |h: usize, k: usize| -> f64 {
        let mut s = 0.0;
        for (i, &(x, y, _)) in a.iter().enumerate() {
            for (j, &(x2, y2, _)) in b.iter().enumerate() {
                s += g[i][j] * (p.loss_of(h, x, y) - q.loss_of(k, x2, y2)).abs();
            }
        }
        s
    };
    let c = Matrix::from_fn(p.num_predictors(), q.num_predictors(), cost);
    let rows = (0..c.rows()).map(|h| c.row(h).iter().cloned().fold(f64::INFINITY, f64::min));
    let cols = (0..c.cols()).map(|k| (0..c.rows()).map(|h| c[(h, k)]).fold(f64::INFINITY, f64::min));
    rows.chain(cols).fold(0.0, f64::max)
}

/// Minimum over the grid of free entries `g[0][0..n-1]`, `n ≤ 3`, of a
/// `2 × n` coupling; the remaining entries are determined by the marginals.
fn grid_search(p: &FiniteProblem<f64>, q: &FiniteProblem<f64>) -> f64 {
    let (a, b) = (support(p), support(q));
    assert_eq!(a.len(), 2);
    let n = b.len();
    let mu0 = a[0].2;
    let steps = |cap: f64| (cap / STEP).floor() as usize;
    let mut best = f64::INFINITY;
    let mut eval = |free: &[f64]| {
        let last = mu0 - free.iter().sum::<f64>();
        if last < -1e-12 || last > b[n - 1].2 + 1e-12 {
            return;
        }
        let mut top: Vec<f64> = free.to_vec();
        top.push(last.max(0.0));
        let bottom: Vec<f64> = (0..n).map(|j| b[j].2 - top[j]).collect();
        if bottom.iter().any(|&v| v < -1e-12) {
            return;
        }
        let g = vec![top, bottom.iter().map(|v| v.max(0.0)).collect()];
        best = best.min(hausdorff_at(p, q, &a, &b, &g));
    };
    match n {
        1 => eval(&[]),
        2 => {
            for i in 0..=steps(b[0].2.min(mu0)) {
                eval(&[i as f64 * STEP]);
            }
        }
        3 => {
            for i in 0..=steps(b[0].2.min(mu0)) {
                for j in 0..=steps(b[1].2.min(mu0)) {
                    eval(&[i as f64 * STEP, j as f64 * STEP]);
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

fn with_support(rng: &mut ChaCha8Rng, cells: usize) -> FiniteProblem<f64> {
    loop {
        let p = common::problem(rng, 2, 3, 3);
        if support(&p).len() == cells {
            return p;
        }
    }
}

#[test]
fn exact_distance_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for trial in 0..24 {
        let p = with_support(&mut rng, 2);
        let q = with_support(&mut rng, 1 + trial % 3);
        let exact = risk_distance_exact(&p, &q, &DistanceLimits::default()).unwrap().value;
        let grid = grid_search(&p, &q);
        // the grid contains the optimum up to a step of 1e-3 per free entry,
        // and losses are at most 2
        assert!(exact <= grid + 1e-9, "trial {trial}: exact {exact} above grid {grid}");
        assert!(grid - exact <= 2.0 * 2.0 * 3.0 * STEP, "trial {trial}: grid {grid} far above exact {exact}");
    }
}
