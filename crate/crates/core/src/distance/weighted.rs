use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{pair_cost_unchecked, DistanceStatus, PairContext, ProductCoupling};
use crate::corruption::check_p;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{MmSpace, WeightedProblem};
use crate::scalar::{max_of, Scalar};
use crate::transport::{binomial, ot_unchecked, vertices_unchecked, CouplingMatrix};

const MAX_ROUNDS: usize = 100;
const STOP_DECREASE: f64 = 1e-10;
/// Largest number of candidate bases for which every vertex of the
/// predictor-coupling polytope is used as a start.
const VERTEX_START_BASES: u128 = 5_000;
const LINE_SEARCH_STEPS: usize = 60;

/// Output of the weighted solver: the couplings found, their objective and
/// the objective after every alternating round of the winning start.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedDistanceResult<T> {
    pub value: T,
    pub gamma: ProductCoupling<T>,
    pub rho: CouplingMatrix<T>,
    pub status: DistanceStatus,
    pub history: Vec<T>,
}

/// `(Σ ρ(h,h′)·c(h,h′)^p)^{1/p}`, or for `p = ∞` the largest pair cost on the
/// support of `ρ`.
pub fn lp_risk_distortion<T: Scalar>(
    wp: &WeightedProblem<T>,
    wq: &WeightedProblem<T>,
    rho: &CouplingMatrix<T>,
    gamma: &ProductCoupling<T>,
    p: T,
) -> Result<T> {
    check_p(p)?;
    let (a, b) = (wp.problem(), wq.problem());
    gamma.check(a, b)?;
    CouplingMatrix::new(rho.matrix().clone(), wp.lambda(), wq.lambda())?;
    let c = pair_cost_unchecked(a, b, gamma).0;
    let weighted = rho.matrix().iter().zip(c.iter()).filter(|(&r, _)| r > T::zero());
    if p.is_infinite() {
        return Ok(max_of(weighted.map(|(_, &v)| v)));
    }
    let total: T = weighted.map(|(&r, &v)| r * v.powf(p)).sum();
    Ok(total.powf(T::one() / p))
}

/// The weighted `L^p` Risk distance by alternating exact transport steps.
///
/// The predictor coupling `ρ` is always an exact minimizer for the current
/// `γ`. For `p = 1` the `γ`-step is exact as well, so every round is
/// nonincreasing; when the predictor-coupling polytope is small every one of
/// its vertices seeds a run, which makes the `p = 1` value the global
/// minimum of the bilinear objective. For `p > 1` the `γ`-step tries the
/// transport minimizer of `Σ ρ |Δ|^p` and a Frank–Wolfe step on the true
/// objective and keeps whichever is best. `p = ∞` is only supported when one
/// weighting is a point mass.
pub fn lp_risk_distance<T: Scalar>(
    wp: &WeightedProblem<T>,
    wq: &WeightedProblem<T>,
    p: T,
    restarts: usize,
    seed: u64,
) -> Result<WeightedDistanceResult<T>> {
    check_p(p)?;
    let solver = Solver::new(wp, wq, p);
    if p.is_infinite() {
        return solver.infinite();
    }
    if solver.hs.len() == 1 && solver.gs.len() == 1 {
        let (g, rho, value) = solver.singletons()?;
        return Ok(solver.result(value, &g, &rho, DistanceStatus::Exact, vec![value]));
    }

    let mut starts: Vec<Start<T>> = vec![Start::Gamma(solver.ctx.independent())];
    let (a, b) = (wp.problem(), wq.problem());
    if a.nx() == b.nx() && a.ny() == b.ny() && a.eta() == b.eta() {
        let n = solver.ctx.cols.len();
        let diagonal = (0..solver.ctx.num_cells())
            .map(|k| if k / n == k % n { solver.ctx.mu[k / n] } else { T::zero() })
            .collect();
        starts.push(Start::Gamma(diagonal));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let cost: Vec<T> = (0..solver.ctx.num_cells()).map(|_| T::lit(rng.random::<f64>())).collect();
        starts.push(Start::Gamma(solver.ctx.transport(&cost)?));
    }
    let (m, n) = (solver.hs.len(), solver.gs.len());
    if binomial(m * n, m + n - 1) <= VERTEX_START_BASES {
        for v in vertices_unchecked(&solver.lam, &solver.lam2) {
            starts.push(Start::Rho(v));
        }
    }

    let runs: Vec<Run<T>> = starts
        .into_par_iter()
        .map(|s| solver.run(s))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.objective < runs[best].objective {
            best = k;
        }
    }
    let run = &runs[best];
    let history = run.history.iter().map(|&g| solver.root(g)).collect();
    Ok(solver.result(solver.root(run.objective), &run.gamma, &run.rho, DistanceStatus::UpperBound, history))
}

enum Start<T> {
    Gamma(Vec<T>),
    Rho(Matrix<T>),
}

struct Run<T> {
    objective: T,
    gamma: Vec<T>,
    rho: Matrix<T>,
    history: Vec<T>,
}

struct Solver<'a, T> {
    ctx: PairContext<'a, T>,
    wp: &'a WeightedProblem<T>,
    wq: &'a WeightedProblem<T>,
    /// Predictors with positive weight and their weights.
    hs: Vec<usize>,
    gs: Vec<usize>,
    lam: Vec<T>,
    lam2: Vec<T>,
    p: T,
}

impl<'a, T: Scalar> Solver<'a, T> {
    fn new(wp: &'a WeightedProblem<T>, wq: &'a WeightedProblem<T>, p: T) -> Self {
        let support = |l: &[T]| -> Vec<usize> { (0..l.len()).filter(|&h| l[h] > T::zero()).collect() };
        let hs = support(wp.lambda());
        let gs = support(wq.lambda());
        Solver {
            ctx: PairContext::new(wp.problem(), wq.problem()),
            lam: hs.iter().map(|&h| wp.lambda()[h]).collect(),
            lam2: gs.iter().map(|&g| wq.lambda()[g]).collect(),
            hs,
            gs,
            wp,
            wq,
            p,
        }
    }

    fn root(&self, objective: T) -> T {
        objective.max(T::zero()).powf(T::one() / self.p)
    }

    fn costs(&self, gamma: &[T]) -> Matrix<T> {
        Matrix::from_fn(self.hs.len(), self.gs.len(), |a, b| {
            self.ctx.pair_cost(gamma, self.hs[a], self.gs[b])
        })
    }

    /// `Σ ρ c^p`.
    fn objective(&self, gamma: &[T], rho: &Matrix<T>) -> T {
        rho.indexed()
            .filter(|(_, _, &r)| r > T::zero())
            .map(|(a, b, &r)| r * self.ctx.pair_cost(gamma, self.hs[a], self.gs[b]).powf(self.p))
            .sum()
    }

    fn rho_step(&self, gamma: &[T]) -> Result<(Matrix<T>, T)> {
        let cost = self.costs(gamma).map(|c| c.powf(self.p));
        ot_unchecked(&cost, &self.lam, &self.lam2)
    }

    /// Cell cost `Σ ρ(h,g)·w(h,g)·|ℓ_h − ℓ′_g|`.
    fn weighted_diff(&self, rho: &Matrix<T>, weight: impl Fn(usize, usize) -> T) -> Vec<T> {
        let mut cost = vec![T::zero(); self.ctx.num_cells()];
        for (a, b, &r) in rho.indexed() {
            if r > T::zero() {
                let w = r * weight(a, b);
                for (c, d) in cost.iter_mut().zip(self.ctx.diff(self.hs[a], self.gs[b])) {
                    *c += w * d;
                }
            }
        }
        cost
    }

    fn gamma_step(&self, gamma: &[T], rho: &Matrix<T>) -> Result<(Vec<T>, T)> {
        if self.p == T::one() {
            let next = self.ctx.transport(&self.weighted_diff(rho, |_, _| T::one()))?;
            let value = self.objective(&next, rho);
            return Ok((next, value));
        }
        let mut best = (gamma.to_vec(), self.objective(gamma, rho));
        let mut surrogate = vec![T::zero(); self.ctx.num_cells()];
        for (a, b, &r) in rho.indexed() {
            if r > T::zero() {
                for (c, d) in surrogate.iter_mut().zip(self.ctx.diff(self.hs[a], self.gs[b])) {
                    *c += r * d.powf(self.p);
                }
            }
        }
        let costs = self.costs(gamma);
        let linear = self.weighted_diff(rho, |a, b| self.p * costs[(a, b)].powf(self.p - T::one()));
        for cost in [surrogate, linear] {
            let vertex = self.ctx.transport(&cost)?;
            let candidate = self.line_search(gamma, &vertex, rho);
            let value = self.objective(&candidate, rho);
            if value < best.1 {
                best = (candidate, value);
            }
        }
        Ok(best)
    }

    /// Golden-section search of the convex objective on the segment `[from, to]`.
    fn line_search(&self, from: &[T], to: &[T], rho: &Matrix<T>) -> Vec<T> {
        let mix = |s: T| -> Vec<T> {
            from.iter().zip(to).map(|(&u, &v)| u + s * (v - u)).collect()
        };
        let f = |s: T| self.objective(&mix(s), rho);
        let ratio = T::lit(0.618_033_988_749_894_9);
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..LINE_SEARCH_STEPS {
            let m1 = hi - ratio * (hi - lo);
            let m2 = lo + ratio * (hi - lo);
            if f(m1) <= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let mid = (lo + hi) * T::lit(0.5);
        let mut best = (mid, f(mid));
        for s in [T::zero(), T::one()] {
            let v = f(s);
            if v < best.1 {
                best = (s, v);
            }
        }
        mix(best.0)
    }

    fn run(&self, start: Start<T>) -> Result<Run<T>> {
        let (mut gamma, mut rho, mut objective) = match start {
            Start::Gamma(g) => {
                let (rho, value) = self.rho_step(&g)?;
                (g, rho, value)
            }
            Start::Rho(rho) => {
                let (g, _) = self.gamma_step(&self.ctx.independent(), &rho)?;
                let (rho, value) = self.rho_step(&g)?;
                (g, rho, value)
            }
        };
        let mut history = vec![objective];
        for _ in 0..MAX_ROUNDS {
            let (g, _) = self.gamma_step(&gamma, &rho)?;
            let (r, value) = self.rho_step(&g)?;
            if value >= objective {
                break;
            }
            let decrease = self.root(objective) - self.root(value);
            gamma = g;
            rho = r;
            objective = value;
            history.push(objective);
            if decrease < T::lit(STOP_DECREASE) {
                break;
            }
        }
        Ok(Run {
            objective,
            gamma,
            rho,
            history,
        })
    }

    /// Both weightings are point masses: `ρ` is forced and the best `γ`
    /// minimizes a single pair cost.
    fn singletons(&self) -> Result<(Vec<T>, Matrix<T>, T)> {
        let gamma = self.ctx.transport(&self.ctx.diff(self.hs[0], self.gs[0]))?;
        let value = self.ctx.pair_cost(&gamma, self.hs[0], self.gs[0]);
        Ok((gamma, Matrix::filled(1, 1, T::one()), value))
    }

    fn infinite(&self) -> Result<WeightedDistanceResult<T>> {
        let (m, n) = (self.hs.len(), self.gs.len());
        if m != 1 && n != 1 {
            return Err(Error::invalid(
                "p",
                "p = ∞ is only supported when one weighting is a point mass",
            ));
        }
        // `ρ` is forced, so the problem is a minimax over all supported pairs
        let rho = Matrix::from_fn(m, n, |a, b| if m == 1 { self.lam2[b] } else { self.lam[a] });
        let edges: Vec<(usize, usize)> = (0..m)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| (self.hs[a], self.gs[b]))
            .collect();
        let (_, gamma) = self.ctx.minimax(&edges)?;
        let value = max_of(edges.iter().map(|&(h, g)| self.ctx.pair_cost(&gamma, h, g)));
        Ok(self.result(value, &gamma, &rho, DistanceStatus::Exact, vec![value]))
    }

    fn result(
        &self,
        value: T,
        gamma: &[T],
        rho: &Matrix<T>,
        status: DistanceStatus,
        history: Vec<T>,
    ) -> WeightedDistanceResult<T> {
        let (nh, ng) = (self.wp.lambda().len(), self.wq.lambda().len());
        let mut full = Matrix::filled(nh, ng, T::zero());
        for (a, b, &r) in rho.indexed() {
            full[(self.hs[a], self.gs[b])] = r;
        }
        WeightedDistanceResult {
            value,
            gamma: self.ctx.expand(gamma),
            rho: CouplingMatrix::new_unchecked(full),
            status,
            history,
        }
    }
}

/// `min ∬ |d_X(x₂,x₁) − d_Y(y₂,y₁)| dγ(x₁,y₁) dρ(x₂,y₂)` over pairs of
/// couplings of `μ_X` and `μ_Y`.
///
/// With at most three supported points on each side every pair of vertices
/// of the transportation polytope is evaluated; a bilinear form over a
/// product of polytopes attains its minimum at such a pair. Larger inputs use
/// alternating exact transport from every vertex (when few) plus seeded
/// random starts, which gives an upper bound.
pub fn bilinear_gw<T: Scalar>(a: &MmSpace<T>, b: &MmSpace<T>) -> Result<T> {
    let keep = |s: &MmSpace<T>| -> Vec<usize> { (0..s.len()).filter(|&i| s.mu()[i] > T::zero()).collect() };
    let (ia, ib) = (keep(a), keep(b));
    let (m, n) = (ia.len(), ib.len());
    let mu: Vec<T> = ia.iter().map(|&i| a.mu()[i]).collect();
    let nu: Vec<T> = ib.iter().map(|&j| b.mu()[j]).collect();
    let da = Matrix::from_fn(m, m, |i, k| a.dist()[(ia[i], ia[k])]);
    let db = Matrix::from_fn(n, n, |j, l| b.dist()[(ib[j], ib[l])]);
    // `cost(ρ)[x₁][y₁] = Σ ρ(x₂,y₂)·|d_X(x₂,x₁) − d_Y(y₂,y₁)|`
    let step = |rho: &Matrix<T>| -> Matrix<T> {
        Matrix::from_fn(m, n, |x1, y1| {
            rho.indexed()
                .filter(|(_, _, &r)| r > T::zero())
                .map(|(x2, y2, &r)| r * (da[(x2, x1)] - db[(y2, y1)]).abs())
                .sum()
        })
    };
    let objective = |gamma: &Matrix<T>, rho: &Matrix<T>| -> T {
        crate::transport::coupling_cost(gamma, &step(rho))
    };

    if m <= 3 && n <= 3 {
        let vertices = vertices_unchecked(&mu, &nu);
        let mut best = T::infinity();
        for g in &vertices {
            for r in &vertices {
                best = best.min(objective(g, r));
            }
        }
        return Ok(best);
    }

    let mut starts: Vec<Matrix<T>> = vec![Matrix::from_fn(m, n, |i, j| mu[i] * nu[j])];
    if binomial(m * n, m + n - 1) <= VERTEX_START_BASES {
        starts.extend(vertices_unchecked(&mu, &nu));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..8 {
        let cost = Matrix::from_fn(m, n, |_, _| T::lit(rng.random::<f64>()));
        starts.push(ot_unchecked(&cost, &mu, &nu)?.0);
    }
    let values: Vec<T> = starts
        .into_par_iter()
        .map(|mut rho| -> Result<T> {
            let (mut gamma, mut value) = ot_unchecked(&step(&rho), &mu, &nu)?;
            for _ in 0..MAX_ROUNDS {
                // the objective is symmetric in the two couplings
                let (r, v) = ot_unchecked(&step(&gamma), &mu, &nu)?;
                let decrease = value - v;
                if v >= value {
                    break;
                }
                rho = r;
                value = v;
                std::mem::swap(&mut gamma, &mut rho);
                if decrease < T::lit(STOP_DECREASE) {
                    break;
                }
            }
            Ok(value)
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(T::infinity(), T::min))
}
