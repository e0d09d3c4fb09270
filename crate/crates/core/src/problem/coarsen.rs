use super::{FiniteProblem, Predictor, WeightedProblem};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{max_of, min_of, Scalar};

/// A partition of the response indices `0..ny` into nonempty disjoint blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, ny: usize) -> Result<Self> {
        let mut block_of = vec![usize::MAX; ny];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::invalid(format!("blocks[{b}]"), "block is empty"));
            }
            for &y in block {
                if y >= ny {
                    return Err(Error::invalid(
                        format!("blocks[{b}]"),
                        format!("label index {y} out of range 0..{ny}"),
                    ));
                }
                if block_of[y] != usize::MAX {
                    return Err(Error::invalid(
                        format!("blocks[{b}]"),
                        format!("label index {y} already in block {}", block_of[y]),
                    ));
                }
                block_of[y] = b;
            }
        }
        if let Some(y) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::invalid("blocks", format!("label index {y} is not covered")));
        }
        Ok(Partition { blocks, block_of })
    }

    pub fn singletons(ny: usize) -> Self {
        Partition {
            blocks: (0..ny).map(|y| vec![y]).collect(),
            block_of: (0..ny).collect(),
        }
    }

    pub fn single_block(ny: usize) -> Self {
        Partition {
            blocks: vec![(0..ny).collect()],
            block_of: vec![0; ny],
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Quotient map `π_Q` as a lookup table.
    pub fn block_of(&self, y: usize) -> usize {
        self.block_of[y]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn check_size(&self, ny: usize) -> Result<()> {
        if self.block_of.len() != ny {
            return Err(Error::invalid(
                "partition",
                format!("covers {} labels, problem has {ny}", self.block_of.len()),
            ));
        }
        Ok(())
    }
}

/// Coarsening `P_Q`: responses become the blocks of `q`, the joint law is
/// pushed forward, block-to-block loss is the largest member loss, and
/// predictors are composed with `π_Q` (duplicates removed, first occurrence kept).
pub fn coarsen<T: Scalar>(problem: &FiniteProblem<T>, q: &Partition) -> Result<FiniteProblem<T>> {
    coarsen_indexed(problem, q).map(|(p, _)| p)
}

/// Weighted coarsening: `λ` is pushed forward onto the deduplicated predictors.
pub fn coarsen_weighted<T: Scalar>(wp: &WeightedProblem<T>, q: &Partition) -> Result<WeightedProblem<T>> {
    let (problem, origin) = coarsen_indexed(wp.problem(), q)?;
    let mut lambda = vec![T::zero(); problem.num_predictors()];
    for (h, &w) in wp.lambda().iter().enumerate() {
        lambda[origin[h]] += w;
    }
    WeightedProblem::new(problem, lambda)
}

/// Returns the coarsened problem and, for each original predictor, the index
/// of its image in the coarsened predictor list.
fn coarsen_indexed<T: Scalar>(
    problem: &FiniteProblem<T>,
    q: &Partition,
) -> Result<(FiniteProblem<T>, Vec<usize>)> {
    q.check_size(problem.ny())?;
    let nb = q.len();
    let mut eta = Matrix::filled(problem.nx(), nb, T::zero());
    for (x, y, &m) in problem.eta().indexed() {
        eta[(x, q.block_of(y))] += m;
    }
    let loss = Matrix::from_fn(nb, nb, |b, c| {
        max_of(
            q.blocks[b]
                .iter()
                .flat_map(|&y| q.blocks[c].iter().map(move |&z| (y, z)))
                .map(|(y, z)| problem.loss()[(y, z)]),
        )
    });
    let mut predictors: Vec<Predictor> = Vec::new();
    let mut origin = Vec::with_capacity(problem.num_predictors());
    for h in problem.predictors() {
        let image: Predictor = h.iter().map(|&y| q.block_of(y)).collect();
        let idx = match predictors.iter().position(|g| *g == image) {
            Some(i) => i,
            None => {
                predictors.push(image);
                predictors.len() - 1
            }
        };
        origin.push(idx);
    }
    let y_labels = q
        .blocks
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|&y| problem.y_labels()[y].as_str())
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    let coarse = FiniteProblem::new(problem.x_labels().to_vec(), y_labels, eta, loss, predictors)?;
    Ok((coarse, origin))
}

/// Largest loss oscillation within any (predicted block, true block) pair:
/// `max_{b,b'} [max ℓ − min ℓ]` over `y ∈ b, y' ∈ b'`. Upper-bounds the Risk
/// distance between a problem and its coarsening.
pub fn coarsening_bound<T: Scalar>(problem: &FiniteProblem<T>, q: &Partition) -> Result<T> {
    q.check_size(problem.ny())?;
    let loss = problem.loss();
    let mut bound = T::zero();
    for b in &q.blocks {
        for c in &q.blocks {
            let values = || b.iter().flat_map(move |&y| c.iter().map(move |&z| loss[(y, z)]));
            bound = bound.max(max_of(values()) - min_of(values()));
        }
    }
    Ok(bound)
}
