//! Risk landscapes on graph-structured predictor sets.
//!
//! A [`PredictorGraph`] equips `H` with an adjacency relation that stands in
//! for a topology. A correspondence `R ⊆ H × H′` gets the induced subgraph of
//! the strong product: two related pairs are adjacent when each coordinate
//! is equal or adjacent.
//!
//! # Inverse connectivity
//!
//! A projection `π: R → H` is inverse connected when the preimage of every
//! connected vertex set is connected. It suffices to check preimages of
//! single vertices and of the two endpoints of every edge. Take a connected
//! `S`, a spanning tree of it, and grow `S` one leaf `v` at a time, attached
//! to `u`. The preimage of `S ∪ {v}` is the union of the preimage of `S`
//! (connected by induction) and the preimage of `{u, v}` (connected by
//! hypothesis). Both contain the nonempty preimage of `u`, so the union is
//! connected.

mod reeb;

pub use reeb::{reeb_graph, ReebGraph, ReebNode};

use rayon::prelude::*;

use crate::distance::{
    risk_distance_lower, Correspondence, DistanceLimits, DistanceResult, DistanceStatus,
    PairContext,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{FiniteProblem, Predictor};
use crate::scalar::{max_of, Scalar};

/// Largest `|H|·|H′|` accepted by [`connected_risk_distance_exact`]; all
/// `2^(|H|·|H′|)` relations are enumerated.
pub const CONNECTED_MAX_PAIRS: usize = 16;
/// Default pair cap for the connected distance.
pub const CONNECTED_DEFAULT_PAIRS: usize = 9;

/// A problem with an undirected simple graph on its predictors.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorGraph<T> {
    problem: FiniteProblem<T>,
    edges: Vec<(usize, usize)>,
}

impl<T: Scalar> PredictorGraph<T> {
    /// Edges are stored as `(min, max)` pairs, sorted and deduplicated.
    pub fn new(problem: FiniteProblem<T>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = problem.num_predictors();
        let mut normalized = Vec::with_capacity(edges.len());
        for (k, (a, b)) in edges.into_iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::invalid(
                    format!("edges[{k}]"),
                    format!("({a}, {b}) outside 0..{n}"),
                ));
            }
            if a == b {
                return Err(Error::invalid(format!("edges[{k}]"), "self-loop"));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(PredictorGraph {
            problem,
            edges: normalized,
        })
    }

    /// Path `0 - 1 - … - (n−1)` in predictor order.
    pub fn path(problem: FiniteProblem<T>) -> Self {
        let n = problem.num_predictors();
        let edges = (1..n).map(|k| (k - 1, k)).collect();
        Self::new(problem, edges).expect("path edges are valid")
    }

    /// Joins predictors at `d_{ℓ,η}` distance in `(0, radius]`.
    pub fn from_pseudometric(problem: FiniteProblem<T>, radius: T) -> Self {
        let d = problem.predictor_pseudometric();
        let n = problem.num_predictors();
        let tol = T::metric_tol();
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| d[(a, b)] > tol && d[(a, b)] <= radius + tol)
            .collect();
        Self::new(problem, edges).expect("pairs are in range")
    }

    pub fn problem(&self) -> &FiniteProblem<T> {
        &self.problem
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.problem.num_predictors()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn adjacency(&self) -> Matrix<bool> {
        let n = self.len();
        let mut adj = Matrix::filled(n, n, false);
        for &(a, b) in &self.edges {
            adj[(a, b)] = true;
            adj[(b, a)] = true;
        }
        adj
    }
}

/// Risk of every predictor, in predictor order.
pub fn risk_landscape<T: Scalar>(pg: &PredictorGraph<T>) -> Vec<T> {
    pg.problem.risks()
}

/// Discretized landscape pair on `N = cells` equal input cells with every
/// label 0 and 0-1 loss. `H` holds the prefix indicators `1_{[0,k)}` and
/// suffix indicators `1_{[N−j,N)}`, joined at `d_{ℓ,η}` distance `1/N` into a
/// circle whose only local minimum is `h ≡ 0`. The second problem drops the
/// prefixes with `0 < k < t·N`, cutting the circle into a path with a local
/// minimum at each end.
pub fn landscape_example<T: Scalar>(cells: usize, t: T) -> Result<(PredictorGraph<T>, PredictorGraph<T>)> {
    if cells < 2 {
        return Err(Error::invalid("cells", "need at least two cells"));
    }
    if !(t > T::zero() && t <= T::one()) {
        return Err(Error::invalid("t", format!("{t} is outside (0, 1]")));
    }
    let n = cells;
    let prefix = |k: usize| -> Predictor { (0..n).map(|x| usize::from(x < k)).collect() };
    let suffix = |j: usize| -> Predictor { (0..n).map(|x| usize::from(x >= n - j)).collect() };
    // 0, prefixes 1..n−1, all ones, suffixes n−1..1: consecutive entries are neighbors
    let mut circle: Vec<Predictor> = vec![prefix(0)];
    circle.extend((1..n).map(prefix));
    circle.push(prefix(n));
    circle.extend((1..n).rev().map(suffix));
    let eta = Matrix::from_fn(n, 2, |_, y| if y == 0 { T::one() / T::lit(n as f64) } else { T::zero() });
    let labels = |count: usize, tag: &str| -> Vec<String> { (0..count).map(|i| format!("{tag}{i}")).collect() };
    let build = |predictors: Vec<Predictor>| -> Result<PredictorGraph<T>> {
        let problem = FiniteProblem::new(
            labels(n, "c"),
            vec!["0".into(), "1".into()],
            eta.clone(),
            crate::problem::zero_one_loss(2),
            predictors,
        )?;
        let step = T::one() / T::lit(n as f64);
        Ok(PredictorGraph::from_pseudometric(problem, step))
    };
    let full = build(circle.clone())?;
    let cut = T::lit(n as f64) * t;
    let kept = circle
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| !(1..n).contains(&i) || T::lit(i as f64) >= cut)
        .map(|(_, h)| h)
        .collect();
    Ok((full, build(kept)?))
}

/// Whether both projections of `R` are inverse connected, with `R` carrying
/// the strong-product adjacency.
pub fn is_inverse_connected<T: Scalar>(
    r: &Correspondence,
    left: &PredictorGraph<T>,
    right: &PredictorGraph<T>,
) -> Result<bool> {
    if r.shape() != (left.len(), right.len()) {
        return Err(Error::invalid(
            "correspondence",
            format!(
                "shape {:?}, graphs have {} and {} nodes",
                r.shape(),
                left.len(),
                right.len()
            ),
        ));
    }
    Ok(inverse_connected_unchecked(r, &left.adjacency(), &right.adjacency()))
}

pub(crate) fn inverse_connected_unchecked(r: &Correspondence, adj_l: &Matrix<bool>, adj_r: &Matrix<bool>) -> bool {
    let pairs = r.pairs();
    let near = |adj: &Matrix<bool>, a: usize, b: usize| a == b || adj[(a, b)];
    let linked = |i: usize, j: usize| {
        let ((h, g), (h2, g2)) = (pairs[i], pairs[j]);
        near(adj_l, h, h2) && near(adj_r, g, g2)
    };
    let connected = |members: &[usize]| -> bool {
        if members.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; members.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..members.len() {
                if !seen[j] && linked(members[i], members[j]) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    let fiber = |side: usize, nodes: &[usize]| -> Vec<usize> {
        (0..pairs.len())
            .filter(|&i| {
                let v = if side == 0 { pairs[i].0 } else { pairs[i].1 };
                nodes.contains(&v)
            })
            .collect()
    };
    for (side, adj) in [(0, adj_l), (1, adj_r)] {
        let n = adj.rows();
        for v in 0..n {
            if !connected(&fiber(side, &[v])) {
                return false;
            }
            for w in v + 1..n {
                if adj[(v, w)] && !connected(&fiber(side, &[v, w])) {
                    return false;
                }
            }
        }
    }
    true
}

/// The Risk distance restricted to inverse-connected correspondences,
/// by enumerating every relation.
///
/// Only minimal admissible relations are solved: dropping pairs can only
/// lower the minimax value. The returned correspondence is the admissible
/// relation attaining the value, not a Hausdorff witness.
pub fn connected_risk_distance_exact<T: Scalar>(
    pg: &PredictorGraph<T>,
    pq: &PredictorGraph<T>,
    limits: &DistanceLimits,
) -> Result<DistanceResult<T>> {
    let (m, n) = (pg.len(), pq.len());
    let cap = limits.max_pairs.min(CONNECTED_MAX_PAIRS);
    if m * n > cap {
        return Err(Error::capacity(
            "cap_pairs",
            cap,
            m * n,
            format!("|H|·|H′| = {m}·{n} relations to enumerate"),
        ));
    }
    let ctx = PairContext::new(pg.problem(), pq.problem());
    if ctx.num_cells() > limits.max_support {
        return Err(Error::capacity(
            "cap_support",
            limits.max_support,
            ctx.num_cells(),
            format!("|supp η|·|supp η′| = {}·{}", ctx.rows.len(), ctx.cols.len()),
        ));
    }
    let (adj_l, adj_r) = (pg.adjacency(), pq.adjacency());
    let admissible: Vec<u32> = (1u32..(1u32 << (m * n)))
        .into_par_iter()
        .filter(|&mask| {
            let bits = (0..m * n).map(|b| mask & (1 << b) != 0).collect();
            Correspondence::from_mask(m, n, bits)
                .map(|r| inverse_connected_unchecked(&r, &adj_l, &adj_r))
                .unwrap_or(false)
        })
        .collect();
    if admissible.is_empty() {
        return Err(Error::invalid(
            "graphs",
            "no inverse-connected correspondence exists between these predictor graphs",
        ));
    }
    let mut by_size = admissible;
    by_size.sort_by_key(|m| (m.count_ones(), *m));
    let mut minimal: Vec<u32> = Vec::new();
    for r in by_size {
        if !minimal.iter().any(|&s| s & r == s) {
            minimal.push(r);
        }
    }
    let solved: Vec<(T, Vec<T>, u32)> = minimal
        .par_iter()
        .map(|&mask| {
            let edges: Vec<(usize, usize)> = (0..m * n)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| (b / n, b % n))
                .collect();
            let (_, gamma) = ctx.minimax(&edges)?;
            let value = max_of(edges.iter().map(|&(h, g)| ctx.pair_cost(&gamma, h, g)));
            Ok((value, gamma, mask))
        })
        .collect::<Result<_>>()?;
    let best = solved
        .iter()
        .enumerate()
        .fold(0, |best, (k, s)| if s.0 < solved[best].0 { k } else { best });
    let (value, gamma, mask) = &solved[best];
    let bits = (0..m * n).map(|b| mask & (1 << b) != 0).collect();
    Ok(DistanceResult {
        value: *value,
        coupling: ctx.expand(gamma),
        correspondence: Correspondence::from_mask(m, n, bits)?,
        status: DistanceStatus::Exact,
    })
}

/// The computable ends `(|B − B′|, d_Rcon)` of the Reeb-graph stability
/// sandwich; the universal distance between the Reeb graphs lies between.
pub fn reeb_sandwich<T: Scalar>(
    pg: &PredictorGraph<T>,
    pq: &PredictorGraph<T>,
    limits: &DistanceLimits,
) -> Result<(T, T)> {
    let lower = (pg.problem().constrained_bayes_risk() - pq.problem().constrained_bayes_risk()).abs();
    let upper = connected_risk_distance_exact(pg, pq, limits)?.value;
    Ok((lower, upper))
}

/// Lower bound on the connected distance that needs no enumeration.
pub fn connected_distance_lower<T: Scalar>(pg: &PredictorGraph<T>, pq: &PredictorGraph<T>) -> T {
    risk_distance_lower(pg.problem(), pq.problem())
}
