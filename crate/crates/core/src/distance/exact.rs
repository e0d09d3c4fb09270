use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    hausdorff_reduction, pair_cost_unchecked, Correspondence, DistanceResult, DistanceStatus,
    PairCostMatrix, ProductCoupling,
};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::matrix::Matrix;
use crate::problem::FiniteProblem;
use crate::scalar::Scalar;
use crate::transport::ot_unchecked;

/// Size caps for [`risk_distance_exact`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistanceLimits {
    /// Largest `|H|·|H′|` solved exactly.
    pub max_pairs: usize,
    /// Largest `|supp η|·|supp η′|` solved exactly.
    pub max_support: usize,
    /// Past a cap, return an alternating-minimization upper bound instead of
    /// a capacity error.
    pub fallback: bool,
}

impl Default for DistanceLimits {
    fn default() -> Self {
        DistanceLimits {
            max_pairs: 12,
            max_support: 256,
            fallback: true,
        }
    }
}

/// Random coupling starts tried by the fallback heuristic.
/// Edge covers are enumerated over all `2^(|H|·|H′|)` edge subsets.
pub const MAX_ENUMERABLE_PAIRS: usize = 20;

const HEURISTIC_STARTS: usize = 4;
const HEURISTIC_ROUNDS: usize = 100;

/// The problems restricted to the supports of their joint laws, with the
/// loss of every predictor tabulated on supported cells.
pub(crate) struct PairContext<'a, T> {
    pub p: &'a FiniteProblem<T>,
    pub q: &'a FiniteProblem<T>,
    /// Flattened supported cells of `η` and `η′`.
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub mu: Vec<T>,
    pub nu: Vec<T>,
    loss_p: Vec<Vec<T>>,
    loss_q: Vec<Vec<T>>,
}

impl<'a, T: Scalar> PairContext<'a, T> {
    pub fn new(p: &'a FiniteProblem<T>, q: &'a FiniteProblem<T>) -> Self {
        let support = |f: &FiniteProblem<T>| -> Vec<usize> {
            (0..f.nx() * f.ny())
                .filter(|&k| f.eta().as_slice()[k] > T::zero())
                .collect()
        };
        let rows = support(p);
        let cols = support(q);
        let table = |f: &FiniteProblem<T>, cells: &[usize]| -> Vec<Vec<T>> {
            (0..f.num_predictors())
                .map(|h| cells.iter().map(|&k| f.loss_of(h, k / f.ny(), k % f.ny())).collect())
                .collect()
        };
        PairContext {
            p,
            q,
            mu: rows.iter().map(|&k| p.eta().as_slice()[k]).collect(),
            nu: cols.iter().map(|&k| q.eta().as_slice()[k]).collect(),
            loss_p: table(p, &rows),
            loss_q: table(q, &cols),
            rows,
            cols,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn num_left(&self) -> usize {
        self.loss_p.len()
    }

    pub fn num_right(&self) -> usize {
        self.loss_q.len()
    }

    /// `|ℓ_h − ℓ′_g|` on supported cell pairs, row-major.
    pub fn diff(&self, h: usize, g: usize) -> Vec<T> {
        let (a, b) = (&self.loss_p[h], &self.loss_q[g]);
        a.iter().flat_map(|&u| b.iter().map(move |&v| (u - v).abs())).collect()
    }

    pub fn pair_cost(&self, gamma: &[T], h: usize, g: usize) -> T {
        let (a, b) = (&self.loss_p[h], &self.loss_q[g]);
        let n = b.len();
        let mut total = T::zero();
        for (i, &u) in a.iter().enumerate() {
            for (j, &v) in b.iter().enumerate() {
                let w = gamma[i * n + j];
                if w > T::zero() {
                    total += w * (u - v).abs();
                }
            }
        }
        total
    }

    pub fn pair_costs(&self, gamma: &[T]) -> Matrix<T> {
        Matrix::from_fn(self.num_left(), self.num_right(), |h, g| self.pair_cost(gamma, h, g))
    }

    pub fn independent(&self) -> Vec<T> {
        self.mu
            .iter()
            .flat_map(|&a| self.nu.iter().map(move |&b| a * b))
            .collect()
    }

    /// Minimizing coupling of an arbitrary cost on supported cell pairs.
    pub fn transport(&self, cost: &[T]) -> Result<Vec<T>> {
        let cost = Matrix::from_vec(self.rows.len(), self.cols.len(), cost.to_vec());
        Ok(ot_unchecked(&cost, &self.mu, &self.nu)?.0.as_slice().to_vec())
    }

    /// `min_γ max_{(h,g) ∈ edges} c_{hg}(γ)` as a linear program in `(γ, t)`.
    pub fn minimax(&self, edges: &[(usize, usize)]) -> Result<(T, Vec<T>)> {
        let (m, n) = (self.rows.len(), self.cols.len());
        let cells = m * n;
        let t = cells;
        let mut objective = vec![T::zero(); cells + 1];
        objective[t] = T::one();
        let mut lp = LinearProgram::new(objective);
        for a in 0..m {
            lp.add_row((0..n).map(|b| (a * n + b, T::one())).collect(), Relation::Eq, self.mu[a]);
        }
        for b in 0..n.saturating_sub(1) {
            lp.add_row((0..m).map(|a| (a * n + b, T::one())).collect(), Relation::Eq, self.nu[b]);
        }
        for &(h, g) in edges {
            let mut row: Vec<(usize, T)> = self.diff(h, g).into_iter().enumerate().collect();
            row.push((t, -T::one()));
            lp.add_row(row, Relation::Le, T::zero());
        }
        let mut solution = lp.solve()?;
        solution.x.truncate(cells);
        Ok((solution.value, solution.x))
    }

    pub fn expand(&self, gamma: &[T]) -> ProductCoupling<T> {
        let (p, q) = (self.p, self.q);
        let mut full = Matrix::filled(p.nx() * p.ny(), q.nx() * q.ny(), T::zero());
        let n = self.cols.len();
        for (a, &i) in self.rows.iter().enumerate() {
            for (b, &j) in self.cols.iter().enumerate() {
                full[(i, j)] = gamma[a * n + b];
            }
        }
        ProductCoupling::new_unchecked(p, q, full)
    }
}

/// `min_γ max_{(h,h′) ∈ R} ∫ |ℓ_h − ℓ′_{h′}| dγ` for a fixed relation, with
/// the minimizing coupling.
pub fn minimax_over_relation<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    r: &Correspondence,
) -> Result<(T, ProductCoupling<T>)> {
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
    let ctx = PairContext::new(p, q);
    let (_, gamma) = ctx.minimax(&r.pairs())?;
    let costs = ctx.pair_costs(&gamma);
    let value = super::distortion_of(&PairCostMatrix(costs), r);
    Ok((value, ctx.expand(&gamma)))
}

/// The Risk distance, exactly when the problems fit `limits`.
///
/// The argument order is canonicalized first, so swapping `p` and `q`
/// returns the same value and transposed witnesses.
pub fn risk_distance_exact<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    limits: &DistanceLimits,
) -> Result<DistanceResult<T>> {
    if canonical_cmp(p, q) == Ordering::Greater {
        return Ok(risk_distance_exact(q, p, limits)?.transpose());
    }
    let ctx = PairContext::new(p, q);
    let pairs = ctx.num_left() * ctx.num_right();
    let cells = ctx.num_cells();
    let pair_cap = limits.max_pairs.min(MAX_ENUMERABLE_PAIRS);
    let over = if pairs > pair_cap {
        Some(Error::capacity(
            "cap_pairs",
            pair_cap,
            pairs,
            format!("|H|·|H′| = {}·{}", ctx.num_left(), ctx.num_right()),
        ))
    } else if cells > limits.max_support {
        Some(Error::capacity(
            "cap_support",
            limits.max_support,
            cells,
            format!("|supp η|·|supp η′| = {}·{}", ctx.rows.len(), ctx.cols.len()),
        ))
    } else {
        None
    };
    if let Some(err) = over {
        if !limits.fallback {
            return Err(err);
        }
        let gamma = heuristic(&ctx)?;
        return Ok(finish(&ctx, &gamma, DistanceStatus::UpperBound));
    }

    let covers = minimal_edge_covers(ctx.num_left(), ctx.num_right());
    let solved: Vec<(T, Vec<T>)> = covers
        .par_iter()
        .map(|edges| ctx.minimax(edges))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, s) in solved.iter().enumerate() {
        if s.0 < solved[best].0 {
            best = k;
        }
    }
    Ok(finish(&ctx, &solved[best].1, DistanceStatus::Exact))
}

fn finish<T: Scalar>(ctx: &PairContext<T>, gamma: &[T], status: DistanceStatus) -> DistanceResult<T> {
    let coupling = ctx.expand(gamma);
    let (value, correspondence) = hausdorff_reduction(&pair_cost_unchecked(ctx.p, ctx.q, &coupling));
    DistanceResult {
        value,
        coupling,
        correspondence,
        status,
    }
}

/// Edge sets of `K_{m,n}` touching every vertex such that no edge can be
/// dropped, in increasing bitmask order.
fn minimal_edge_covers(m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let k = m * n;
    assert!(k < 32, "edge cover enumeration needs |H|·|H′| < 32");
    let mut covers = Vec::new();
    for mask in 1u32..(1u32 << k) {
        let has = |h: usize, g: usize| mask & (1 << (h * n + g)) != 0;
        let row_deg: Vec<usize> = (0..m).map(|h| (0..n).filter(|&g| has(h, g)).count()).collect();
        let col_deg: Vec<usize> = (0..n).map(|g| (0..m).filter(|&h| has(h, g)).count()).collect();
        if row_deg.contains(&0) || col_deg.contains(&0) {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..m)
            .flat_map(|h| (0..n).map(move |g| (h, g)))
            .filter(|&(h, g)| has(h, g))
            .collect();
        if edges.iter().all(|&(h, g)| row_deg[h] == 1 || col_deg[g] == 1) {
            covers.push(edges);
        }
    }
    covers
}

/// Alternates between the Hausdorff-optimal assignment pattern for the
/// current coupling and the minimax coupling for that pattern. Each round
/// can only lower the Hausdorff value.
fn heuristic<T: Scalar>(ctx: &PairContext<T>) -> Result<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut starts = vec![ctx.independent()];
    for _ in 0..HEURISTIC_STARTS {
        let cost: Vec<T> = (0..ctx.num_cells()).map(|_| T::lit(rng.random::<f64>())).collect();
        starts.push(ctx.transport(&cost)?);
    }
    let runs: Vec<(T, Vec<T>)> = starts
        .into_par_iter()
        .map(|start| descend(ctx, start))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.0 < runs[best].0 {
            best = k;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one start").1)
}

fn descend<T: Scalar>(ctx: &PairContext<T>, mut gamma: Vec<T>) -> Result<(T, Vec<T>)> {
    let mut value = crate::transport::hausdorff_unchecked(&ctx.pair_costs(&gamma));
    for _ in 0..HEURISTIC_ROUNDS {
        let c = ctx.pair_costs(&gamma);
        let mut edges: Vec<(usize, usize)> = (0..c.rows()).map(|h| (h, argmin(c.row(h)))).collect();
        for g in 0..c.cols() {
            let column: Vec<T> = (0..c.rows()).map(|h| c[(h, g)]).collect();
            edges.push((argmin(&column), g));
        }
        edges.sort_unstable();
        edges.dedup();
        let (_, next) = ctx.minimax(&edges)?;
        let next_value = crate::transport::hausdorff_unchecked(&ctx.pair_costs(&next));
        if next_value < value - T::lit(1e-12) {
            value = next_value;
            gamma = next;
        } else {
            break;
        }
    }
    Ok((value, gamma))
}

fn argmin<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = k;
        }
    }
    best
}

/// Total order on problems by shape, then joint law, loss and predictors.
fn canonical_cmp<T: Scalar>(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> Ordering {
    let floats = |a: &[T], b: &[T]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.as_f64().total_cmp(&y.as_f64()))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    (p.nx(), p.ny(), p.num_predictors())
        .cmp(&(q.nx(), q.ny(), q.num_predictors()))
        .then_with(|| floats(p.eta().as_slice(), q.eta().as_slice()))
        .then_with(|| floats(p.loss().as_slice(), q.loss().as_slice()))
        .then_with(|| p.predictors().cmp(q.predictors()))
}

/// Witnesses of distance zero, when the exact distance is at most `1e-9`.
pub fn weak_isomorphism_witness<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    limits: &DistanceLimits,
) -> Result<Option<(Correspondence, ProductCoupling<T>)>> {
    let limits = DistanceLimits {
        fallback: false,
        ..*limits
    };
    let result = risk_distance_exact(p, q, &limits)?;
    Ok((result.value <= T::metric_tol()).then_some((result.correspondence, result.coupling)))
}
