use super::pipeline::{run_pipeline, Pipeline};
use super::*;
use crate::distance::{risk_distance_exact, DistanceLimits};
use crate::problem::{all_predictors, zero_one_loss};
use crate::transport::{solve_ot_exact, total_variation};

fn rows(r: Vec<Vec<f64>>) -> Matrix<f64> {
    Matrix::from_rows("m", r).unwrap()
}

fn base() -> FiniteProblem<f64> {
    FiniteProblem::from_parts(
        rows(vec![vec![0.1, 0.3], vec![0.4, 0.2]]),
        rows(vec![vec![0.0, 2.0], vec![1.0, 0.5]]),
        all_predictors(2, 2),
    )
    .unwrap()
}

fn binary(eta: Vec<Vec<f64>>) -> FiniteProblem<f64> {
    let nx = eta.len();
    FiniteProblem::from_parts(rows(eta), zero_one_loss(2), all_predictors(nx, 2)).unwrap()
}

fn exact(p: &FiniteProblem<f64>, q: &FiniteProblem<f64>) -> f64 {
    risk_distance_exact(p, q, &DistanceLimits::default()).unwrap().value
}

#[test]
fn disintegration_examples() {
    let product = binary(vec![vec![0.12, 0.28], vec![0.18, 0.42]]);
    let d = disintegrate(&product);
    for x in 0..2 {
        assert!((d.beta.row(x)[0] - 0.3).abs() < 1e-12);
    }
    let diagonal = binary(vec![vec![0.4, 0.0], vec![0.0, 0.6]]);
    let d = disintegrate(&diagonal);
    assert_eq!(d.beta.row(0), &[1.0, 0.0]);
    assert_eq!(d.beta.row(1), &[0.0, 1.0]);
    let empty_row = binary(vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
    assert_eq!(disintegrate(&empty_row).beta.row(0), &[0.5, 0.5]);
    for p in [base(), product, empty_row] {
        let back = disintegrate(&p).recompose();
        for (a, b) in back.iter().zip(p.eta().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn bias_density_bounds() {
    let p = binary(vec![vec![0.4, 0.4], vec![0.1, 0.1]]);
    let (same, bound) = apply_bias_density(&p, &Matrix::filled(2, 2, 1.0)).unwrap();
    assert_eq!(bound, 0.0);
    assert_eq!(same.eta(), p.eta());
    // restriction density to A = first row, η(A) = 0.8
    let f = rows(vec![vec![1.25, 1.25], vec![0.0, 0.0]]);
    let (biased, bound) = apply_bias_density(&p, &f).unwrap();
    assert!((bound - 0.2).abs() < 1e-12);
    assert!(exact(&p, &biased) <= bound + 1e-9);
    let not_density = Matrix::filled(2, 2, 2.0);
    assert!(apply_bias_density(&p, &not_density).is_err());
}

#[test]
fn restriction_bounds() {
    let p = binary(vec![vec![0.25, 0.25], vec![0.3, 0.2]]);
    let all: Vec<(usize, usize)> = (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).collect();
    assert_eq!(restrict(&p, &all).unwrap().1, 0.0);
    let (half, bound) = restrict(&p, &[(0, 0), (0, 1)]).unwrap();
    assert_eq!(bound, 0.5);
    assert!(exact(&p, &half) <= bound + 1e-9);
    let zero = binary(vec![vec![0.0, 1.0]]);
    assert!(restrict(&zero, &[(0, 0)]).is_err());
}

#[test]
fn restriction_bound_scales_with_the_largest_loss() {
    // one input, fair labels, loss 10 for predicting 0 on label 1
    let p = FiniteProblem::from_parts(
        rows(vec![vec![0.5, 0.5]]),
        rows(vec![vec![0.0, 10.0], vec![10.0, 0.0]]),
        vec![vec![0]],
    )
    .unwrap();
    let (q, bound) = restrict(&p, &[(0, 0)]).unwrap();
    let d = exact(&p, &q);
    assert!((d - 5.0).abs() < 1e-9);
    assert!(d <= bound + 1e-9);
}

#[test]
fn tv_and_wasserstein_joint_law_bounds() {
    let p = base();
    assert_eq!(tv_bound(&p, &p, 2.0).unwrap(), 0.0);
    assert_eq!(w1_eta_bound(&p, &p).unwrap(), 0.0);
    let q = p.with_eta(rows(vec![vec![0.4, 0.1], vec![0.1, 0.4]])).unwrap();
    let tv = tv_bound(&p, &q, 2.0).unwrap();
    let w1 = w1_eta_bound(&p, &q).unwrap();
    assert!(w1 <= tv + 1e-9);
    assert!(exact(&p, &q) <= w1 + 1e-9);
    assert!(tv_bound(&p, &q, 1.0).is_err());
    let a = binary(vec![vec![1.0, 0.0]]);
    let b = binary(vec![vec![0.0, 1.0]]);
    assert_eq!(tv_bound(&a, &b, 1.0).unwrap(), 1.0);
    assert!(tv_bound(&p, &a, 2.0).is_err());
}

#[test]
fn s_metric_cases() {
    let single = FiniteProblem::from_parts(
        rows(vec![vec![0.5, 0.5]]),
        zero_one_loss(2),
        vec![vec![0]],
    )
    .unwrap();
    let s = s_metric(&single);
    // ℓ_h(x0, y) = 1[y ≠ 0]
    assert_eq!(s.matrix().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    let weighted = s_metric_weighted(&WeightedProblem::uniform(single), 1.0).unwrap();
    assert_eq!(weighted, s);
    let s = s_metric(&base());
    for i in 0..4 {
        assert_eq!(s.matrix()[(i, i)], 0.0);
    }
    assert!(crate::problem::check_pseudometric("s", s.matrix()).is_ok());
}

#[test]
fn label_noise_kernels() {
    let p = binary(vec![vec![0.3, 0.1], vec![0.2, 0.4]]);
    let same = apply_label_noise(&p, &no_noise_kernel(2, 2)).unwrap();
    assert_eq!(same.eta(), p.eta());

    let eps = 0.2;
    let noisy = apply_label_noise(&p, &uniform_label_noise(2, &[eps, eps]).unwrap()).unwrap();
    for x in 0..2 {
        // ε/2 of each label's mass flips
        let (a, b) = (p.eta()[(x, 0)], p.eta()[(x, 1)]);
        let expected = a * (1.0 - eps / 2.0) + b * eps / 2.0;
        assert!((noisy.eta()[(x, 0)] - expected).abs() < 1e-15);
    }

    let swap = FiniteMarkovKernel::new(Matrix::from_fn(4, 2, |k, y| if k % 2 != y { 1.0 } else { 0.0 })).unwrap();
    let swapped = apply_label_noise(&p, &swap).unwrap();
    assert_eq!(swapped.eta().to_rows(), vec![vec![0.1, 0.3], vec![0.4, 0.2]]);
    assert!(apply_label_noise(&p, &FiniteMarkovKernel::identity(2)).is_err());
}

#[test]
fn noise_bounds() {
    let p = binary(vec![vec![0.25, 0.25], vec![0.25, 0.25]]);
    let d = zero_one_loss(2);
    assert_eq!(noise_bound_metric(&p, &no_noise_kernel(2, 2), &d, 1.0).unwrap(), 0.0);
    for eps in [0.05, 0.2, 0.5] {
        let k = uniform_label_noise(2, &[eps, eps]).unwrap();
        let b = noise_bound_metric(&p, &k, &d, 1.0).unwrap();
        assert!((b - eps / 2.0).abs() < 1e-15);
    }
    let q = binary(vec![vec![0.3, 0.1], vec![0.2, 0.4]]);
    let k = uniform_label_noise(2, &[0.1, 0.4]).unwrap();
    let b = noise_bound_metric(&q, &k, &d, 1.0).unwrap();
    // half the α-average of ε(x)
    assert!((b - 0.5 * (0.4 * 0.1 + 0.6 * 0.4)).abs() < 1e-15);
    assert!(exact(&q, &apply_label_noise(&q, &k).unwrap()) <= b + 1e-9);
}

#[test]
fn lipschitz_premise_is_checked() {
    let p = base();
    let k = uniform_label_noise(2, &[0.1, 0.1]).unwrap();
    let err = noise_bound_metric(&p, &k, &zero_one_loss(2), 1.0).unwrap_err();
    assert!(err.to_string().contains("ℓ(0,0)"), "{err}");
    assert!(noise_bound_metric(&p, &k, &zero_one_loss(2), 2.0).is_ok());
}

#[test]
fn general_noise_cases() {
    let wp = WeightedProblem::uniform(base());
    let (same, bound) = apply_general_noise(&wp, &FiniteMarkovKernel::identity(4), 1.0).unwrap();
    assert_eq!(bound, 0.0);
    assert_eq!(same.problem().eta(), wp.problem().eta());

    let nu = vec![0.1, 0.2, 0.3, 0.4];
    let constant = FiniteMarkovKernel::new(Matrix::from_fn(4, 4, |_, j| nu[j])).unwrap();
    let (moved, bound) = apply_general_noise(&wp, &constant, 2.0).unwrap();
    for (a, b) in moved.problem().eta().iter().zip(&nu) {
        assert!((a - b).abs() < 1e-15);
    }
    let s = s_metric_weighted(&wp, 2.0).unwrap();
    let nu_d = crate::transport::DiscreteDistribution::new(nu.clone()).unwrap();
    let oracle: f64 = wp
        .problem()
        .eta()
        .iter()
        .enumerate()
        .map(|(z, &m)| {
            let delta = crate::transport::DiscreteDistribution::point_mass(4, z);
            m * solve_ot_exact(s.matrix(), &delta, &nu_d).unwrap().value
        })
        .sum();
    assert!((bound - oracle).abs() < 1e-12);
}

#[test]
fn predictor_set_cases() {
    let p = base();
    assert_eq!(predictor_set_bound(&p, p.predictors().to_vec()).unwrap().1, 0.0);
    let mut doubled = p.predictors().to_vec();
    doubled.extend_from_slice(&p.predictors()[..2]);
    assert_eq!(predictor_set_bound(&p, doubled).unwrap().1, 0.0);
    let kept = p.predictors()[..3].to_vec();
    let (q, bound) = predictor_set_bound(&p, kept).unwrap();
    let d = p.predictor_pseudometric();
    let expected = (0..3).map(|h| d[(3, h)]).fold(f64::INFINITY, f64::min);
    assert_eq!(bound, expected);
    assert!(exact(&p, &q) <= bound + 1e-9);
    assert!(predictor_set_bound(&p, vec![]).is_err());
}

#[test]
fn pipeline_bias_then_label_noise() {
    let p = binary(vec![vec![0.4, 0.4], vec![0.1, 0.1]]);
    let p = p.with_predictors(p.predictors()[..3].to_vec()).unwrap();
    let text = r#"[
        {"kind": "bias_density", "f": [[1.25, 1.25], [0.0, 0.0]]},
        {"kind": "label_noise", "epsilon": 0.1}
    ]"#;
    let ledger = run_pipeline(&WeightedProblem::uniform(p), &Pipeline::from_json(text).unwrap(), &DistanceLimits::default()).unwrap();
    let bounds: Vec<f64> = ledger.entries.iter().map(|e| e.bound).collect();
    assert!((bounds[0] - 0.2).abs() < 1e-12 && (bounds[1] - 0.05).abs() < 1e-12, "{bounds:?}");
    assert!((ledger.cumulative - 0.25).abs() < 1e-12);
    let (d, _) = ledger.endpoint.unwrap();
    assert!(d <= ledger.cumulative + 1e-9);
}

#[test]
fn pipeline_errors_name_the_stage() {
    let p = WeightedProblem::uniform(base());
    let err = Pipeline::from_json(r#"[{"kind": "teleport"}]"#).unwrap_err();
    assert!(err.to_string().contains("stages[0]"));
    let bad = Pipeline::from_json(r#"[{"kind": "restrict", "cells": [[0, 0]]}, {"kind": "restrict", "cells": [[5, 0]]}]"#).unwrap();
    let err = run_pipeline(&p, &bad, &DistanceLimits::default()).unwrap_err();
    assert!(err.to_string().contains("stages[1].cells[0]"), "{err}");
    let lp = Pipeline::from_json(r#"{"p": 2, "stages": [{"kind": "predictor_swap", "predictors": [[0, 0]]}]}"#).unwrap();
    assert!(run_pipeline(&p, &lp, &DistanceLimits::default()).is_err());
}

#[test]
fn weighted_pipeline_bounds_the_alternating_value() {
    let wp = WeightedProblem::new(base(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let text = r#"{"p": 2, "stages": [
        {"kind": "restrict", "cells": [[0, 1], [1, 0], [1, 1]]},
        {"kind": "loss_swap", "loss": [[0.0, 1.5], [1.0, 0.25]]},
        {"kind": "general_noise", "kernel": [[0.5, 0.5, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0.5, 0.5]]}
    ]}"#;
    let ledger = run_pipeline(&wp, &Pipeline::from_json(text).unwrap(), &DistanceLimits::default()).unwrap();
    let (d, _) = ledger.endpoint.unwrap();
    assert!(d <= ledger.cumulative + 1e-9, "{d} > {}", ledger.cumulative);
}

#[test]
fn chained_bounds_dominate_exact_distances() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let eta: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..2).map(|_| rng.random_range(1..5) as f64).collect())
            .collect();
        let total: f64 = eta.iter().flatten().sum();
        let eta = eta.into_iter().map(|r| r.into_iter().map(|v| v / total).collect()).collect();
        let loss: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(0..5) as f64 * 0.5).collect()).collect();
        let p = FiniteProblem::from_parts(rows(eta), rows(loss), all_predictors(2, 2)[..3].to_vec()).unwrap();
        let eps: f64 = rng.random_range(0.0..1.0);
        let text = format!(
            r#"[{{"kind": "label_noise", "epsilon": {eps}}},
                {{"kind": "restrict", "cells": [[0, 0], [1, 0], [1, 1]]}},
                {{"kind": "predictor_swap", "predictors": [[0, 0], [1, 1]]}}]"#
        );
        let ledger = run_pipeline(&WeightedProblem::uniform(p), &Pipeline::from_json(&text).unwrap(), &DistanceLimits::default()).unwrap();
        let (d, _) = ledger.endpoint.unwrap();
        assert!(d <= ledger.cumulative + 1e-9);
    }
}

#[test]
fn tv_of_point_masses() {
    let a = crate::transport::DiscreteDistribution::<f64>::point_mass(3, 0);
    let b = crate::transport::DiscreteDistribution::point_mass(3, 2);
    assert_eq!(total_variation(&a, &b).unwrap(), 1.0);
}
