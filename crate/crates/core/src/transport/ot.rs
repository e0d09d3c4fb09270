use super::{CouplingMatrix, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Bases examined by [`transport_vertices`] before giving up.
pub const VERTEX_BASIS_CAP: usize = 250_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OtSolution<T> {
    pub coupling: CouplingMatrix<T>,
    pub value: T,
}

/// Exact minimizer of `⟨cost, γ⟩` over couplings of `mu` and `nu`.
pub fn solve_ot_exact<T: Scalar>(
    cost: &Matrix<T>,
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
) -> Result<OtSolution<T>> {
    if cost.shape() != (mu.len(), nu.len()) {
        return Err(Error::invalid(
            "cost",
            format!(
                "shape {:?} does not match marginals of lengths ({}, {})",
                cost.shape(),
                mu.len(),
                nu.len()
            ),
        ));
    }
    if let Some((i, j, v)) = cost.indexed().find(|(_, _, v)| !v.is_finite()) {
        return Err(Error::invalid(format!("cost[{i}][{j}]"), format!("{v} is not finite")));
    }
    let (gamma, value) = ot_unchecked(cost, mu.masses(), nu.masses())?;
    Ok(OtSolution {
        coupling: CouplingMatrix::new_unchecked(gamma),
        value,
    })
}


/// [`solve_ot_exact`] without input validation. Zero-mass rows and columns are
/// removed before solving and come back as zero rows and columns.
pub(crate) fn ot_unchecked<T: Scalar>(cost: &Matrix<T>, mu: &[T], nu: &[T]) -> Result<(Matrix<T>, T)> {
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > T::zero()).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu[j] > T::zero()).collect();
    let mut gamma = Matrix::filled(mu.len(), nu.len(), T::zero());
    if rows.len() == 1 || cols.len() == 1 {
        // the coupling is forced
        for &i in &rows {
            for &j in &cols {
                gamma[(i, j)] = if rows.len() == 1 { nu[j] } else { mu[i] };
            }
        }
    } else if !rows.is_empty() && !cols.is_empty() {
        let n = cols.len();
        let objective = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| cost[(i, j)])
            .collect();
        let mut lp = LinearProgram::new(objective);
        for (a, &i) in rows.iter().enumerate() {
            lp.add_row((0..n).map(|b| (a * n + b, T::one())).collect(), Relation::Eq, mu[i]);
        }
        // the last column constraint is implied by the others
        for (b, &j) in cols.iter().enumerate().take(n - 1) {
            lp.add_row(
                (0..rows.len()).map(|a| (a * n + b, T::one())).collect(),
                Relation::Eq,
                nu[j],
            );
        }
        let solution = lp.solve()?;
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                gamma[(i, j)] = solution.x[a * n + b];
            }
        }
    }
    let value = coupling_cost(&gamma, cost);
    Ok((gamma, value))
}

pub(crate) fn coupling_cost<T: Scalar>(gamma: &Matrix<T>, cost: &Matrix<T>) -> T {
    gamma
        .iter()
        .zip(cost.iter())
        .filter(|(g, _)| **g > T::zero())
        .map(|(&g, &c)| g * c)
        .sum()
}

/// Every vertex of the transportation polytope of `mu` and `nu`, found by
/// enumerating spanning-tree bases of the bipartite support graph.
pub fn transport_vertices<T: Scalar>(
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
) -> Result<Vec<CouplingMatrix<T>>> {
    let m = mu.masses().iter().filter(|&&v| v > T::zero()).count();
    let n = nu.masses().iter().filter(|&&v| v > T::zero()).count();
    let bases = binomial(m * n, m + n - 1);
    if bases > VERTEX_BASIS_CAP as u128 {
        return Err(Error::capacity(
            "vertex_bases",
            VERTEX_BASIS_CAP,
            usize::try_from(bases).unwrap_or(usize::MAX),
            format!("{m}x{n} supported marginals"),
        ));
    }
    Ok(vertices_unchecked(mu.masses(), nu.masses())
        .into_iter()
        .map(CouplingMatrix::new_unchecked)
        .collect())
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Vertices of the transportation polytope, deduplicated. Callers bound the size.
pub(crate) fn vertices_unchecked<T: Scalar>(mu: &[T], nu: &[T]) -> Vec<Matrix<T>> {
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > T::zero()).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu[j] > T::zero()).collect();
    let (m, n) = (rows.len(), cols.len());
    let k = m + n - 1;
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let mut found: Vec<Matrix<T>> = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    let mut visit = |basis: &[usize]| {
        let edges: Vec<(usize, usize)> = basis.iter().map(|&c| cells[c]).collect();
        let Some(values) = solve_tree(&edges, &rows, &cols, mu, nu) else {
            return;
        };
        let mut gamma = Matrix::filled(mu.len(), nu.len(), T::zero());
        for (&(a, b), v) in edges.iter().zip(values) {
            gamma[(rows[a], cols[b])] = v;
        }
        let tol = T::mass_tol();
        let duplicate = found
            .iter()
            .any(|g| g.iter().zip(gamma.iter()).all(|(&p, &q)| (p - q).abs() <= tol));
        if !duplicate {
            found.push(gamma);
        }
    };
    combinations(cells.len(), k, 0, &mut chosen, &mut visit);
    found
}

fn combinations(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let remaining = k - chosen.len();
    for c in start..=n.saturating_sub(remaining) {
        if n - c < remaining {
            break;
        }
        chosen.push(c);
        combinations(n, k, c + 1, chosen, visit);
        chosen.pop();
    }
}

/// Solves the basis equations when `edges` form a spanning tree of the
/// bipartite graph on supported rows and columns; `None` for cyclic sets or
/// negative solutions.
fn solve_tree<T: Scalar>(
    edges: &[(usize, usize)],
    rows: &[usize],
    cols: &[usize],
    mu: &[T],
    nu: &[T],
) -> Option<Vec<T>> {
    let m = rows.len();
    let nodes = m + cols.len();
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, m + b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }
    let mut residual: Vec<T> = rows.iter().map(|&i| mu[i]).chain(cols.iter().map(|&j| nu[j])).collect();
    let mut degree = vec![0usize; nodes];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[m + b] += 1;
    }
    let mut values = vec![T::zero(); edges.len()];
    let mut done = vec![false; edges.len()];
    for _ in 0..edges.len() {
        let (e, leaf) = edges.iter().enumerate().filter(|(e, _)| !done[*e]).find_map(|(e, &(a, b))| {
            if degree[a] == 1 {
                Some((e, a))
            } else if degree[m + b] == 1 {
                Some((e, m + b))
            } else {
                None
            }
        })?;
        let (a, b) = edges[e];
        let other = if leaf == a { m + b } else { a };
        let v = residual[leaf];
        if v < -T::mass_tol() {
            return None;
        }
        let v = v.max(T::zero());
        values[e] = v;
        done[e] = true;
        residual[leaf] = T::zero();
        residual[other] -= v;
        degree[a] -= 1;
        degree[m + b] -= 1;
    }
    Some(values)
}
