use super::ot::ot_unchecked;
use super::{DiscreteDistribution, FiniteMarkovKernel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{FiniteProblem, LossProfile, WeightedProblem};
use crate::scalar::{max_of, min_of, Scalar};

/// 1-Wasserstein distance on the real line, `∫ |F_a − F_b|`.
pub fn w1_real_line<T: Scalar>(a: &LossProfile<T>, b: &LossProfile<T>) -> T {
    let (a, b) = (a.atoms(), b.atoms());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (T::zero(), T::zero());
    let mut last: Option<T> = None;
    let mut total = T::zero();
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.min(y.0),
            (Some(x), None) => x.0,
            (None, Some(y)) => y.0,
            (None, None) => unreachable!(),
        };
        if let Some(prev) = last {
            total += (fa - fb).abs() * (next - prev);
        }
        while i < a.len() && a[i].0 == next {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == next {
            fb += b[j].1;
            j += 1;
        }
        last = Some(next);
    }
    total
}

/// `½ Σ |μ_i − ν_i|`.
pub fn total_variation<T: Scalar>(mu: &DiscreteDistribution<T>, nu: &DiscreteDistribution<T>) -> Result<T> {
    if mu.len() != nu.len() {
        return Err(Error::invalid(
            "nu",
            format!("length {} differs from {}", nu.len(), mu.len()),
        ));
    }
    Ok(tv_unchecked(mu.masses(), nu.masses()))
}

pub(crate) fn tv_unchecked<T: Scalar>(mu: &[T], nu: &[T]) -> T {
    mu.iter().zip(nu).map(|(&a, &b)| (a - b).abs()).sum::<T>() * T::lit(0.5)
}

/// Hausdorff distance from a cross-distance matrix: the larger of the two
/// directed `max min` values.
pub fn hausdorff<T: Scalar>(dist: &Matrix<T>) -> Result<T> {
    if dist.rows() == 0 || dist.cols() == 0 {
        return Err(Error::invalid("dist", "Hausdorff distance of an empty set"));
    }
    Ok(hausdorff_unchecked(dist))
}

pub(crate) fn hausdorff_unchecked<T: Scalar>(dist: &Matrix<T>) -> T {
    let forward = max_of((0..dist.rows()).map(|i| min_of(dist.row(i).iter().copied())));
    let backward = max_of((0..dist.cols()).map(|j| min_of((0..dist.rows()).map(|i| dist[(i, j)]))));
    forward.max(backward)
}

/// Hausdorff distance between the loss-profile sets under `W1`.
pub fn hausdorff_loss_profiles<T: Scalar>(p: &FiniteProblem<T>, q: &FiniteProblem<T>) -> T {
    let a = p.loss_profile_set();
    let b = q.loss_profile_set();
    let cross = Matrix::from_fn(a.len(), b.len(), |i, j| w1_real_line(&a[i], &b[j]));
    hausdorff_unchecked(&cross)
}

/// `p`-Wasserstein distance between loss-profile distributions, with `W1` as
/// ground metric. `p = ∞` is accepted when one side is a single profile.
pub fn wasserstein_profile_distributions<T: Scalar>(
    wp: &WeightedProblem<T>,
    wq: &WeightedProblem<T>,
    p: T,
) -> Result<T> {
    if p.is_nan() || p < T::one() {
        return Err(Error::invalid("p", format!("{p} is not in [1, ∞]")));
    }
    let a = wp.loss_profile_distribution().atoms;
    let b = wq.loss_profile_distribution().atoms;
    let w1 = Matrix::from_fn(a.len(), b.len(), |i, j| w1_real_line(&a[i].0, &b[j].0));
    if p.is_infinite() {
        if a.len() != 1 && b.len() != 1 {
            return Err(Error::invalid(
                "p",
                "p = ∞ needs a single-profile distribution on one side",
            ));
        }
        return Ok(max_of(w1.iter().copied()));
    }
    let mu: Vec<T> = a.iter().map(|(_, m)| *m).collect();
    let nu: Vec<T> = b.iter().map(|(_, m)| *m).collect();
    let (_, value) = ot_unchecked(&w1.map(|v| v.powf(p)), &mu, &nu)?;
    Ok(value.max(T::zero()).powf(T::one() / p))
}

/// `Σ_i base_mu[i] · W1(M(i), N(i))` with `ground_metric` on the target space.
pub fn kernel_w1<T: Scalar>(
    m: &FiniteMarkovKernel<T>,
    n: &FiniteMarkovKernel<T>,
    base_mu: &DiscreteDistribution<T>,
    ground_metric: &Matrix<T>,
) -> Result<T> {
    let (s, t) = (m.num_sources(), m.num_targets());
    if n.num_sources() != s || n.num_targets() != t {
        return Err(Error::invalid(
            "kernels",
            format!(
                "shapes ({s}, {t}) and ({}, {}) differ",
                n.num_sources(),
                n.num_targets()
            ),
        ));
    }
    if base_mu.len() != s {
        return Err(Error::invalid(
            "base_mu",
            format!("length {}, expected {s}", base_mu.len()),
        ));
    }
    if ground_metric.shape() != (t, t) {
        return Err(Error::invalid(
            "ground_metric",
            format!("shape {:?}, expected ({t}, {t})", ground_metric.shape()),
        ));
    }
    let mut total = T::zero();
    for (i, &w) in base_mu.masses().iter().enumerate() {
        if w > T::zero() {
            total += w * ot_unchecked(ground_metric, m.row(i), n.row(i))?.1;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::zero_one_loss;
    use crate::transport::solve_ot_exact;
    use proptest::prelude::*;

    fn profile(atoms: &[(f64, f64)]) -> LossProfile<f64> {
        LossProfile::from_atoms(atoms.to_vec())
    }

    fn dist(v: &[f64]) -> DiscreteDistribution<f64> {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn w1_basic_cases() {
        let d0 = LossProfile::point_mass(0.0);
        assert_eq!(w1_real_line(&d0, &LossProfile::point_mass(1.0)), 1.0);
        assert_eq!(w1_real_line(&d0, &profile(&[(0.0, 0.5), (1.0, 0.5)])), 0.5);
        assert_eq!(w1_real_line(&d0, &d0), 0.0);
    }

    #[test]
    fn tv_cases() {
        assert_eq!(total_variation(&dist(&[0.3, 0.7]), &dist(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(total_variation(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap(), 0.5);
        assert_eq!(total_variation(&dist(&[0.0, 1.0]), &dist(&[1.0, 0.0])).unwrap(), 1.0);
        assert!(total_variation(&dist(&[1.0]), &dist(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn hausdorff_cases() {
        let d = Matrix::from_rows("d", vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(hausdorff(&d).unwrap(), 1.0);
        assert!(hausdorff(&Matrix::<f64>::filled(0, 2, 0.0)).is_err());
    }

    #[test]
    fn loss_profile_hausdorff_against_point_problem() {
        let p = FiniteProblem::from_parts(
            Matrix::from_rows("eta", vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap(),
            zero_one_loss(2),
            crate::problem::all_predictors(2, 2),
        )
        .unwrap();
        assert_eq!(hausdorff_loss_profiles(&p, &p), 0.0);
        let point = FiniteProblem::one_point(0.0).unwrap();
        // every profile is uniform on {0, 1}, at W1 distance ½ from δ_0
        assert_eq!(hausdorff_loss_profiles(&p, &point), 0.5);
    }

    #[test]
    fn mixing_kernel_against_identity() {
        let id = FiniteMarkovKernel::identity(2);
        for eps in [0.05, 0.2, 0.5] {
            let mix = FiniteMarkovKernel::uniform_mixing(2, eps).unwrap();
            for base in [[1.0, 0.0], [0.3, 0.7]] {
                let v = kernel_w1(&mix, &id, &dist(&base), &zero_one_loss(2)).unwrap();
                assert!((v - eps / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_source_kernel_is_plain_w1() {
        let a = FiniteMarkovKernel::new(Matrix::from_rows("m", vec![vec![0.2, 0.3, 0.5]]).unwrap()).unwrap();
        let b = FiniteMarkovKernel::new(Matrix::from_rows("n", vec![vec![0.6, 0.4, 0.0]]).unwrap()).unwrap();
        let ground = Matrix::from_fn(3, 3, |i, j| (i as f64 - j as f64).abs());
        let plain = solve_ot_exact(&ground, &dist(&[0.2, 0.3, 0.5]), &dist(&[0.6, 0.4, 0.0])).unwrap();
        let k = kernel_w1(&a, &b, &dist(&[1.0]), &ground).unwrap();
        assert!((k - plain.value).abs() < 1e-12);
        assert!((k - 0.9).abs() < 1e-12);
    }

    #[test]
    fn profile_distribution_distance_point_mass_weights() {
        let p = FiniteProblem::one_point(0.0).unwrap();
        let q = FiniteProblem::one_point(2.0).unwrap();
        let (wp, wq) = (WeightedProblem::uniform(p), WeightedProblem::uniform(q));
        for pp in [1.0, 2.0, f64::INFINITY] {
            assert_eq!(wasserstein_profile_distributions(&wp, &wq, pp).unwrap(), 2.0);
        }
        assert!(wasserstein_profile_distributions(&wp, &wq, 0.5).is_err());
    }

    fn random_profile() -> impl Strategy<Value = LossProfile<f64>> {
        prop::collection::vec((0u32..8, 1u32..5), 1..5).prop_map(|atoms| {
            let total: u32 = atoms.iter().map(|a| a.1).sum();
            LossProfile::from_atoms(
                atoms
                    .iter()
                    .map(|&(v, w)| (v as f64 * 0.37, w as f64 / total as f64))
                    .collect(),
            )
        })
    }

    fn support_lp(a: &LossProfile<f64>, b: &LossProfile<f64>) -> f64 {
        let cost = Matrix::from_fn(a.atoms().len(), b.atoms().len(), |i, j| {
            (a.atoms()[i].0 - b.atoms()[j].0).abs()
        });
        let mu = dist(&a.atoms().iter().map(|x| x.1).collect::<Vec<_>>());
        let nu = dist(&b.atoms().iter().map(|x| x.1).collect::<Vec<_>>());
        solve_ot_exact(&cost, &mu, &nu).unwrap().value
    }

    fn random_masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1u32..6, n).prop_map(|w| {
            let t: u32 = w.iter().sum();
            w.iter().map(|&v| v as f64 / t as f64).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn w1_matches_lp(a in random_profile(), b in random_profile()) {
            prop_assert!((w1_real_line(&a, &b) - support_lp(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn tv_is_ot_under_discrete_metric(mu in random_masses(4), nu in random_masses(4)) {
            let tv = total_variation(&dist(&mu), &dist(&nu)).unwrap();
            let ot = solve_ot_exact(&zero_one_loss(4), &dist(&mu), &dist(&nu)).unwrap().value;
            prop_assert!((tv - ot).abs() < 1e-9);
        }

        #[test]
        fn hausdorff_triangle(
            pts in prop::collection::vec(-5.0..5.0f64, 3..9),
            split in (1usize..3, 1usize..3, 1usize..3),
        ) {
            let (ka, kb, kc) = split;
            prop_assume!(ka + kb + kc <= pts.len());
            let a = &pts[..ka];
            let b = &pts[ka..ka + kb];
            let c = &pts[ka + kb..ka + kb + kc];
            let cross = |u: &[f64], v: &[f64]| {
                hausdorff(&Matrix::from_fn(u.len(), v.len(), |i, j| (u[i] - v[j]).abs())).unwrap()
            };
            prop_assert!(cross(a, c) <= cross(a, b) + cross(b, c) + 1e-12);
        }

        #[test]
        fn hausdorff_matches_relation_enumeration(
            d in (1usize..=3, 1usize..=3).prop_flat_map(|(k, l)| {
                prop::collection::vec(0.0..4.0f64, k * l).prop_map(move |v| Matrix::from_vec(k, l, v))
            })
        ) {
            let (k, l) = d.shape();
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << (k * l)) {
                let has = |i: usize, j: usize| mask & (1 << (i * l + j)) != 0;
                let covers = (0..k).all(|i| (0..l).any(|j| has(i, j)))
                    && (0..l).all(|j| (0..k).any(|i| has(i, j)));
                if covers {
                    let worst = d.indexed().filter(|(i, j, _)| has(*i, *j)).map(|(_, _, &v)| v).fold(0.0, f64::max);
                    best = best.min(worst);
                }
            }
            prop_assert_eq!(hausdorff(&d).unwrap(), best);
        }

        #[test]
        fn kernel_w1_below_worst_row(
            rows in prop::collection::vec((random_masses(3), random_masses(3)), 1..4),
            seed in 1u32..100,
        ) {
            let s = rows.len();
            let m = FiniteMarkovKernel::new(Matrix::from_rows("m", rows.iter().map(|r| r.0.clone()).collect()).unwrap()).unwrap();
            let n = FiniteMarkovKernel::new(Matrix::from_rows("n", rows.iter().map(|r| r.1.clone()).collect()).unwrap()).unwrap();
            let base: Vec<f64> = (0..s).map(|i| ((seed as usize * (i + 3)) % 7 + 1) as f64).collect();
            let t: f64 = base.iter().sum();
            let base = dist(&base.iter().map(|v| v / t).collect::<Vec<_>>());
            let ground = Matrix::from_fn(3, 3, |i, j| (i as f64 - j as f64).abs());
            let k = kernel_w1(&m, &n, &base, &ground).unwrap();
            let worst = (0..s)
                .map(|i| solve_ot_exact(&ground, &dist(m.row(i)), &dist(n.row(i))).unwrap().value)
                .fold(0.0, f64::max);
            prop_assert!(k <= worst + 1e-12);
        }
    }
}
