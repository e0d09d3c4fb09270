use crate::corruption::{check_same_but_eta, w1_eta_bound};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::FiniteProblem;
use crate::scalar::{max_of, Scalar};
use crate::transport::{hausdorff_loss_profiles, hausdorff_unchecked};

/// Which components two problems share, selecting the matching upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharedMode {
    /// Same `X`, `Y`, `η` and `H`; only the loss differs.
    SharedEtaH,
    /// Same `X`, `Y`, `ℓ` and `H`; only the joint law differs.
    SharedAllButEta,
    /// Same `X`, `Y`, `η` and `ℓ`; only the predictor set differs.
    SharedAllButH,
}

impl SharedMode {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "shared_eta_H" | "loss_swap" => Some(SharedMode::SharedEtaH),
            "shared_all_but_eta" | "eta_swap" => Some(SharedMode::SharedAllButEta),
            "shared_all_but_H" | "predictor_swap" => Some(SharedMode::SharedAllButH),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SharedMode::SharedEtaH => "shared_eta_H",
            SharedMode::SharedAllButEta => "shared_all_but_eta",
            SharedMode::SharedAllButH => "shared_all_but_H",
        }
    }
}

/// Upper bound on the Risk distance between problems sharing all components
/// but one.
pub fn risk_distance_upper_shared<T: Scalar>(
    p: &FiniteProblem<T>,
    q: &FiniteProblem<T>,
    mode: SharedMode,
) -> Result<T> {
    let same_spaces = (p.nx(), p.ny()) == (q.nx(), q.ny());
    match mode {
        SharedMode::SharedEtaH => {
            if !same_spaces || p.eta() != q.eta() || p.predictors() != q.predictors() {
                return Err(Error::invalid(
                    "mode",
                    "shared_eta_H needs identical spaces, joint law and predictors",
                ));
            }
            Ok(max_of((0..p.num_predictors()).map(|h| p.l1_distance(q, h, h))))
        }
        SharedMode::SharedAllButEta => {
            check_same_but_eta(p, q)
                .map_err(|e| Error::invalid("mode", format!("shared_all_but_eta: {e}")))?;
            w1_eta_bound(p, q)
        }
        SharedMode::SharedAllButH => {
            if !same_spaces || p.eta() != q.eta() || p.loss() != q.loss() {
                return Err(Error::invalid(
                    "mode",
                    "shared_all_but_H needs identical spaces, joint law and loss",
                ));
            }
            let cross = Matrix::from_fn(p.num_predictors(), q.num_predictors(), |h, g| {
                p.l1_distance(q, h, g)
            });
            Ok(hausdorff_unchecked(&cross))
        }
    }
}

/// `max(|B(P) − B(P′)|, d_H^{W1}(L(P), L(P′)))`.
pub fn risk_distance_lower<T: Scalar>(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> T {
    let gap = (p.constrained_bayes_risk() - q.constrained_bayes_risk()).abs();
    gap.max(hausdorff_loss_profiles(p, q))
}
