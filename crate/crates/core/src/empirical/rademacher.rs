use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cell_sampler;
use crate::distance::{risk_distortion, Correspondence, ProductCoupling};
use crate::error::{Error, Result};
use crate::problem::FiniteProblem;
use crate::scalar::Scalar;

/// Largest `s^m · 2^m` accepted by the exhaustive Rademacher routines, with
/// `s` the number of supported observations.
pub const RADEMACHER_MAX_TERMS: usize = 1_000_000;

/// `E_σ E_{z ~ μ^m} sup_f (1/m) Σ σ_i f(z_i)` for a finite class tabulated as
/// `table[f][cell]` over cells with masses `mu`.
fn class_rademacher<T: Scalar>(table: &[Vec<T>], mu: &[T], m: usize) -> Result<T> {
    let s = mu.len();
    let terms = (s as f64).powi(m as i32) * 2f64.powi(m as i32);
    if m == 0 {
        return Err(Error::invalid("m", "sample size must be at least 1"));
    }
    if terms > RADEMACHER_MAX_TERMS as f64 {
        return Err(Error::capacity(
            "rademacher_terms",
            RADEMACHER_MAX_TERMS,
            terms.min(usize::MAX as f64) as usize,
            format!("{s}^{m} supported observation tuples · 2^{m} sign vectors"),
        ));
    }
    let inv_m = T::one() / T::lit(m as f64);
    let sign_weight = T::one() / T::lit(2f64.powi(m as i32));
    let mut tuple = vec![0usize; m];
    let mut total = T::zero();
    loop {
        let weight: T = tuple.iter().map(|&c| mu[c]).fold(T::one(), |a, b| a * b);
        let best = |signs: u32| -> T {
            table
                .iter()
                .map(|f| {
                    tuple
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| if signs & (1 << i) != 0 { f[c] } else { -f[c] })
                        .sum::<T>()
                })
                .fold(T::neg_infinity(), T::max)
        };
        // pairing σ with −σ keeps every partial sum exactly nonnegative
        let full = (1u32 << m) - 1;
        let mut inner = T::zero();
        for signs in 0u32..(1 << (m - 1)) {
            inner += best(signs) + best(full ^ signs);
        }
        total += weight * inner * sign_weight * inv_m;
        // odometer over observation tuples
        let mut k = 0;
        while k < m {
            tuple[k] += 1;
            if tuple[k] < s {
                break;
            }
            tuple[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    Ok(total)
}

fn problem_table<T: Scalar>(p: &FiniteProblem<T>) -> (Vec<Vec<T>>, Vec<T>) {
    let cells = p.support();
    let mu = cells.iter().map(|&(x, y)| p.eta()[(x, y)]).collect();
    let table = (0..p.num_predictors())
        .map(|h| cells.iter().map(|&(x, y)| p.loss_of(h, x, y)).collect())
        .collect();
    (table, mu)
}

/// Exact `m`-th Rademacher complexity of `{ℓ_h : h ∈ H}` by summing over
/// every supported observation tuple and sign vector.
pub fn rademacher_exact_small<T: Scalar>(p: &FiniteProblem<T>, m: usize) -> Result<T> {
    let (table, mu) = problem_table(p);
    class_rademacher(&table, &mu, m)
}

/// Monte-Carlo estimate `(mean, standard error)` of the `m`-th Rademacher
/// complexity from `num_samples` joint draws of observations and signs.
pub fn rademacher_mc<T: Scalar>(p: &FiniteProblem<T>, m: usize, num_samples: usize, seed: u64) -> Result<(T, T)> {
    if m == 0 {
        return Err(Error::invalid("m", "sample size must be at least 1"));
    }
    if num_samples == 0 {
        return Err(Error::invalid("num_samples", "need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = cell_sampler(p.eta());
    let ny = p.ny();
    let inv_m = T::one() / T::lit(m as f64);
    let mut obs = vec![(0usize, 0usize, true); m];
    let mut values = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        for slot in obs.iter_mut() {
            let c = sampler.sample(&mut rng);
            *slot = (c / ny, c % ny, rng.random::<bool>());
        }
        let best = (0..p.num_predictors())
            .map(|h| {
                obs.iter()
                    .map(|&(x, y, plus)| {
                        let l = p.loss_of(h, x, y);
                        if plus {
                            l
                        } else {
                            -l
                        }
                    })
                    .sum::<T>()
            })
            .fold(T::neg_infinity(), T::max);
        values.push(best * inv_m);
    }
    let n = T::lit(num_samples as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    let se = if num_samples > 1 {
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one());
        (var / n).sqrt()
    } else {
        T::zero()
    };
    Ok((mean, se))
}

/// Both sides of the Rademacher stability inequality at a witness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RademacherGap<T> {
    /// `|R_m(P) − R_m(P′)|`.
    pub gap: T,
    /// `dis(R, γ)`.
    pub distortion: T,
    /// `R_m(ℱ)` for `ℱ = {|ℓ_h − ℓ′_{h′}|}` under `γ`.
    pub family: T,
    /// `distortion + 2·family`.
    pub bound: T,
    pub holds: bool,
}

/// Evaluates `|R_m(P) − R_m(P′)| ≤ dis(R, γ) + 2·R_m(ℱ)` with every
/// Rademacher term computed exactly. `ℱ` ranges over all of `H × H′` and
/// lives on the support of `γ`.
pub fn rademacher_gap_bound<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    r: &Correspondence,
    gamma: &ProductCoupling<T>,
    m: usize,
) -> Result<RademacherGap<T>> {
    let distortion = risk_distortion(p, q, r, gamma)?;
    let cells: Vec<(usize, usize, T)> = gamma
        .matrix()
        .indexed()
        .filter(|&(_, _, &w)| w > T::zero())
        .map(|(a, b, &w)| (a, b, w))
        .collect();
    let mu: Vec<T> = cells.iter().map(|c| c.2).collect();
    let (ny, ny2) = (p.ny(), q.ny());
    let mut table = Vec::with_capacity(p.num_predictors() * q.num_predictors());
    for h in 0..p.num_predictors() {
        for g in 0..q.num_predictors() {
            table.push(
                cells
                    .iter()
                    .map(|&(a, b, _)| (p.loss_of(h, a / ny, a % ny) - q.loss_of(g, b / ny2, b % ny2)).abs())
                    .collect(),
            );
        }
    }
    let family = class_rademacher(&table, &mu, m)?;
    let gap = (rademacher_exact_small(p, m)? - rademacher_exact_small(q, m)?).abs();
    let bound = distortion + T::lit(2.0) * family;
    Ok(RademacherGap {
        gap,
        distortion,
        family,
        bound,
        holds: gap <= bound + T::metric_tol(),
    })
}
