//! Empirical problems, convergence experiments and Rademacher complexity.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. Trial `t` at sample size `n` of an
//! experiment with seed `s` runs on its own sub-seed: the `t`-th `u64` of
//! the ChaCha8 stream `n` keyed by `s`. The identifier [`PRNG_ID`] is
//! echoed in every report.

mod rademacher;

pub use rademacher::{
    rademacher_exact_small, rademacher_gap_bound, rademacher_mc, RademacherGap,
    RADEMACHER_MAX_TERMS,
};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corruption::tv_bound;
use crate::distance::{risk_distance_exact, DistanceLimits};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::FiniteProblem;
use crate::scalar::Scalar;

/// Generator identifier reported alongside seeds.
pub const PRNG_ID: &str = "chacha8/rand_chacha-0.9/seed_from_u64";

/// Generator for trial `trial` at sample size `n`.
pub fn trial_rng(seed: u64, n: usize, trial: usize) -> (u64, ChaCha8Rng) {
    let sub = sub_seed(seed, n, trial);
    (sub, ChaCha8Rng::seed_from_u64(sub))
}

pub(crate) fn sub_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng.set_word_pos(2 * trial as u128);
    rng.next_u64()
}

/// Weighted sampler over the flattened cells of `η`.
pub(crate) fn cell_sampler<T: Scalar>(eta: &Matrix<T>) -> WeightedIndex<f64> {
    WeightedIndex::new(eta.iter().map(|m| m.as_f64())).expect("η is a probability matrix")
}

/// The `n`-th empirical problem: `η_n` is the average of `n` point masses
/// drawn i.i.d. from `η`, everything else is shared.
pub fn sample_empirical<T: Scalar>(problem: &FiniteProblem<T>, n: usize, seed: u64) -> Result<FiniteProblem<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(problem, n, &mut rng)
}

pub(crate) fn sample_with<T: Scalar>(
    problem: &FiniteProblem<T>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FiniteProblem<T>> {
    if n == 0 {
        return Err(Error::invalid("n", "sample size must be at least 1"));
    }
    let sampler = cell_sampler(problem.eta());
    let mut counts = vec![0usize; problem.nx() * problem.ny()];
    for _ in 0..n {
        counts[sampler.sample(rng)] += 1;
    }
    let total = T::lit(n as f64);
    let eta = Matrix::from_fn(problem.nx(), problem.ny(), |x, y| {
        T::lit(counts[x * problem.ny() + y] as f64) / total
    });
    problem.with_eta(eta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub trial: usize,
    /// Sub-seed the trial's generator was built from.
    pub seed: u64,
    pub tv_bound: f64,
    pub exact_distance: Option<f64>,
    pub bound_used: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub prng: String,
    pub seed: u64,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// Median `tv_bound` over the trials at sample size `n`.
    pub fn median_bound(&self, n: usize) -> Option<f64> {
        let mut v: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.tv_bound).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite bounds"));
        let k = v.len();
        Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
    }

    /// Rows whose exact distance exceeds the bound by more than `tol`.
    pub fn violations(&self, tol: f64) -> Vec<&ExperimentRow> {
        self.rows
            .iter()
            .filter(|r| r.exact_distance.is_some_and(|d| d > r.tv_bound + tol))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,trial,seed,tv_bound,exact_distance,bound_used,prng\n");
        for r in &self.rows {
            let exact = r.exact_distance.map(|d| format!("{d:.17e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{:.17e},{},{},{}\n",
                r.n, r.trial, r.seed, r.tv_bound, exact, r.bound_used, self.prng
            ));
        }
        out
    }
}

/// Samples `trials` empirical problems per size in `ns` and records
/// `ℓmax·TV(η, η_n)` together with the exact distance when it fits `limits`.
/// Trials run in parallel; rows come back ordered by `(n, trial)`.
pub fn convergence_experiment<T: Scalar>(
    problem: &FiniteProblem<T>,
    ns: &[usize],
    trials: usize,
    seed: u64,
    limits: &DistanceLimits,
) -> Result<ExperimentReport> {
    if let Some(k) = ns.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!("ns[{k}]"), "sample size must be at least 1"));
    }
    let strict = DistanceLimits {
        fallback: false,
        ..*limits
    };
    let jobs: Vec<(usize, usize)> = ns.iter().flat_map(|&n| (0..trials).map(move |t| (n, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let (sub, mut rng) = trial_rng(seed, n, trial);
            let empirical = sample_with(problem, n, &mut rng)?;
            let bound = tv_bound(problem, &empirical, problem.max_loss())?;
            let exact = match risk_distance_exact(problem, &empirical, &strict) {
                Ok(r) => Some(r.value.as_f64()),
                Err(Error::Capacity { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(ExperimentRow {
                n,
                trial,
                seed: sub,
                tv_bound: bound.as_f64(),
                exact_distance: exact,
                bound_used: "tv".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        prng: PRNG_ID.into(),
        seed,
        rows,
    })
}
