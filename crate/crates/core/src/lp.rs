//! Dense two-phase primal simplex.
//!
//! Solves `min c·x` subject to linear rows (`≤`, `=`, `≥`) and `x ≥ 0`.
//! Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
//! to Bland's rule, which cannot cycle. Sizes in this crate are tiny (a few
//! hundred columns), so a dense tableau is the simplest exact method.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
struct Row<T> {
    coeffs: Vec<(usize, T)>,
    relation: Relation,
    rhs: T,
}

#[derive(Clone, Debug)]
pub(crate) struct LinearProgram<T> {
    num_vars: usize,
    objective: Vec<T>,
    rows: Vec<Row<T>>,
}

#[derive(Clone, Debug)]
pub(crate) struct LpSolution<T> {
    pub x: Vec<T>,
    pub value: T,
}

const DEGENERATE_STREAK: usize = 32;

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>) -> Self {
        LinearProgram {
            num_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    /// Adds `Σ coeff·x[var] (relation) rhs`. Zero coefficients are dropped.
    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) {
        let coeffs = coeffs.into_iter().filter(|(_, a)| !a.is_zero()).collect::<Vec<_>>();
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution<T>> {
        Tableau::build(self).solve(self)
    }
}

struct Tableau<T> {
    /// `m` constraint rows, each of width `width + 1` (last entry is the rhs).
    a: Vec<Vec<T>>,
    /// Reduced-cost row, same width; last entry is minus the objective value.
    cost: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    num_vars: usize,
    first_artificial: usize,
    eps: T,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let m = lp.rows.len();
        // rows with negative rhs are negated so the initial basis is feasible
        let effective: Vec<(bool, Relation)> = lp
            .rows
            .iter()
            .map(|row| {
                let flip = row.rhs < T::zero();
                let relation = match (row.relation, flip) {
                    (Relation::Le, true) => Relation::Ge,
                    (Relation::Ge, true) => Relation::Le,
                    (r, _) => r,
                };
                (flip, relation)
            })
            .collect();
        let num_slack = effective.iter().filter(|(_, r)| *r != Relation::Eq).count();
        let num_artificial = effective.iter().filter(|(_, r)| *r != Relation::Le).count();
        let first_slack = lp.num_vars;
        let first_artificial = first_slack + num_slack;
        let width = first_artificial + num_artificial;

        let mut a = vec![vec![T::zero(); width + 1]; m];
        let mut basis = vec![0; m];
        let mut next_slack = first_slack;
        let mut next_art = first_artificial;
        for (i, (row, &(flip, relation))) in lp.rows.iter().zip(&effective).enumerate() {
            let sign = if flip { -T::one() } else { T::one() };
            for &(j, v) in &row.coeffs {
                a[i][j] += sign * v;
            }
            a[i][width] = sign * row.rhs;
            match relation {
                Relation::Le => {
                    a[i][next_slack] = T::one();
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    a[i][next_slack] = -T::one();
                    next_slack += 1;
                    a[i][next_art] = T::one();
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    a[i][next_art] = T::one();
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        debug_assert_eq!(next_art, width);

        // phase-one reduced costs: 1 on artificials, priced out of the basis
        let mut cost = vec![T::zero(); width + 1];
        for c in cost.iter_mut().take(width).skip(first_artificial) {
            *c = T::one();
        }
        for (i, &b) in basis.iter().enumerate() {
            if b >= first_artificial {
                for (c, v) in cost.iter_mut().zip(&a[i]) {
                    *c -= *v;
                }
            }
        }

        Tableau {
            a,
            cost,
            basis,
            width,
            num_vars: lp.num_vars,
            first_artificial,
            eps: T::pivot_tol(),
        }
    }

    fn solve(mut self, lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
        if self.first_artificial < self.width {
            self.run(self.width)?;
            let infeasibility = -self.cost[self.width];
            let scale = T::one() + max_abs_rhs(lp);
            if infeasibility > T::metric_tol() * scale {
                return Err(Error::Solver(format!(
                    "linear program infeasible (phase-one residual {infeasibility})"
                )));
            }
            self.expel_artificials();
        }

        // phase two
        let limit = self.first_artificial;
        for c in self.cost.iter_mut() {
            *c = T::zero();
        }
        for (j, &c) in lp.objective.iter().enumerate() {
            self.cost[j] = c;
        }
        for i in 0..self.a.len() {
            let cb = if self.basis[i] < lp.num_vars {
                lp.objective[self.basis[i]]
            } else {
                T::zero()
            };
            if !cb.is_zero() {
                for j in 0..=self.width {
                    let v = self.a[i][j];
                    self.cost[j] -= cb * v;
                }
            }
        }
        self.run(limit)?;

        let mut x = vec![T::zero(); self.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = self.a[i][self.width].max(T::zero());
            }
        }
        let value = lp.objective.iter().zip(&x).map(|(&c, &v)| c * v).sum();
        Ok(LpSolution { x, value })
    }

    /// Pivots until optimal, considering entering columns `< limit`.
    fn run(&mut self, limit: usize) -> Result<()> {
        let mut degenerate_run = 0usize;
        let max_iter = 50_000 + 100 * (self.a.len() + self.width);
        for _ in 0..max_iter {
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let Some(enter) = self.entering(limit, bland) else {
                return Ok(());
            };
            let Some(leave) = self.leaving(enter) else {
                return Err(Error::Solver("linear program unbounded".into()));
            };
            if self.a[leave][self.width] <= self.eps {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(leave, enter);
        }
        Err(Error::Solver("simplex iteration limit reached".into()))
    }

    fn entering(&self, limit: usize, bland: bool) -> Option<usize> {
        let threshold = -self.eps;
        if bland {
            return (0..limit).find(|&j| self.cost[j] < threshold);
        }
        let mut best = None;
        let mut best_val = threshold;
        for j in 0..limit {
            if self.cost[j] < best_val {
                best_val = self.cost[j];
                best = Some(j);
            }
        }
        best
    }

    fn leaving(&self, enter: usize) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, row) in self.a.iter().enumerate() {
            let coef = row[enter];
            if coef > self.eps {
                let ratio = row[self.width].max(T::zero()) / coef;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - self.eps
                            || (ratio <= br + self.eps && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = T::one() / self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v *= inv;
        }
        self.a[r][c] = T::one();
        let pivot_row = std::mem::take(&mut self.a[r]);
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f.is_zero() {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * *p;
            }
            row[c] = T::zero();
        }
        let f = self.cost[c];
        if !f.is_zero() {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * *p;
            }
            self.cost[c] = T::zero();
        }
        self.a[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly redundant and are dropped.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.a[i][j].abs() > self.eps);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.a.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}

fn max_abs_rhs<T: Scalar>(lp: &LinearProgram<T>) -> T {
    lp.rows.iter().map(|r| r.rhs.abs()).fold(T::zero(), T::max)
}
