use super::{FiniteProblem, WeightedProblem};
use crate::error::Result;
use crate::scalar::Scalar;

/// Finite distribution of losses: `(value, mass)` atoms, strictly increasing
/// in value, masses summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct LossProfile<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> LossProfile<T> {
    /// Sorts the atoms and merges equal values. Zero-mass atoms are dropped.
    pub fn from_atoms(mut atoms: Vec<(T, T)>) -> Self {
        atoms.retain(|&(_, m)| m > T::zero());
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite loss values"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(atoms.len());
        for (v, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += m,
                _ => merged.push((v, m)),
            }
        }
        LossProfile { atoms: merged }
    }

    pub fn point_mass(value: T) -> Self {
        LossProfile {
            atoms: vec![(value, T::one())],
        }
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().map(|&(v, m)| v * m).sum()
    }

    /// Equal atoms, masses compared within `MASS_TOL`.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= T::mass_tol())
    }
}

/// Distribution over loss profiles: the pushforward of `λ` along `h ↦ (ℓ_h)♯η`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileDistribution<T> {
    pub atoms: Vec<(LossProfile<T>, T)>,
}

impl<T: Scalar> FiniteProblem<T> {
    /// Pushforward of `η` along `(x, y) ↦ ℓ_h(x, y)`.
    pub fn loss_profile(&self, h: usize) -> Result<LossProfile<T>> {
        self.check_predictor(h)?;
        Ok(self.loss_profile_unchecked(h))
    }

    pub(crate) fn loss_profile_unchecked(&self, h: usize) -> LossProfile<T> {
        LossProfile::from_atoms(
            self.eta()
                .indexed()
                .map(|(x, y, &m)| (self.loss_of(h, x, y), m))
                .collect(),
        )
    }

    /// One profile per predictor, in predictor order; duplicates retained.
    pub fn loss_profile_set(&self) -> Vec<LossProfile<T>> {
        (0..self.num_predictors())
            .map(|h| self.loss_profile_unchecked(h))
            .collect()
    }
}

impl<T: Scalar> WeightedProblem<T> {
    /// Merges predictors with identical profiles, summing their weights.
    /// Atoms appear in order of first occurrence; zero-weight predictors are skipped.
    pub fn loss_profile_distribution(&self) -> ProfileDistribution<T> {
        let mut atoms: Vec<(LossProfile<T>, T)> = Vec::new();
        for (profile, &w) in self.problem().loss_profile_set().into_iter().zip(self.lambda()) {
            if w <= T::zero() {
                continue;
            }
            match atoms.iter_mut().find(|(p, _)| p.approx_eq(&profile)) {
                Some(slot) => slot.1 += w,
                None => atoms.push((profile, w)),
            }
        }
        ProfileDistribution { atoms }
    }
}
