//! Algebraic identities and invariants of the estimators, checked against
//! independent routes (eigendecompositions, explicit inverses, hand formulas).

use bcreg_core::experiments::{compute_metrics, synth_block, ModelId, SyntheticSpec};
use bcreg_core::kernel::{fit_kernel_regularized, gram_matrix, kernel_matrix, KernelSpec};
use bcreg_core::linear::{self, asymptotic_bias, center, filter_factor, fit_regularized};
use bcreg_core::seeding::rng_from_seed;
use bcreg_core::streaming::{
    average_update, fold_assignment, ridge_cv_errors, run_block_stream, select_lambda_cv,
    Algorithm, CvConfig, FittedModel, LambdaPolicy, StreamConfig,
};
use bcreg_core::{Dataset, SpectrumProfile};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let scales: Vec<f64> = (0..p)
        .map(|_| 10f64.powf(rng.random_range(-1.5..1.0)))
        .collect();
    let x = DMatrix::from_fn(n, p, |_, j| {
        let z: f64 = rng.sample(StandardNormal);
        z * scales[j] + 0.5
    });
    let w = DVector::from_fn(p, |_, _| rng.random_range(-2.0..2.0));
    let y = DVector::from_fn(n, |i, _| {
        let e: f64 = rng.sample(StandardNormal);
        x.row(i).transpose().dot(&w) + 0.3 * e - 1.0
    });
    Dataset::new(x, y).unwrap()
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `(λI + Σ̂)⁻²(2λI + Σ̂) · cross` through the eigendecomposition of Σ̂.
fn order_one_oracle(stats: &linear::CenteredStats, lambda: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(stats.cov.clone());
    let coef = eig.eigenvectors.transpose() * &stats.cross;
    let scaled = DVector::from_iterator(
        coef.len(),
        coef.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, s)| c * (2.0 * lambda + s) / ((lambda + s) * (lambda + s))),
    );
    &eig.eigenvectors * scaled
}

/// Centered design whose covariance is exactly diagonal: column `j` is
/// nonzero only on rows `2j` and `2j+1`, with opposite signs.
fn diagonal_design(amplitudes: &[f64], targets: &[f64]) -> Dataset {
    let p = amplitudes.len();
    let n = 2 * p;
    let mut x = DMatrix::zeros(n, p);
    for (j, a) in amplitudes.iter().enumerate() {
        x[(2 * j, j)] = *a;
        x[(2 * j + 1, j)] = -*a;
    }
    Dataset::new(x, DVector::from_column_slice(&targets[..n])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_one_closed_form(n in 5usize..80, p in 1usize..12, log_l in -4.0f64..2.0, seed in any::<u64>()) {
        let d = random_dataset(n, p, seed);
        let lambda = 10f64.powf(log_l);
        let stats = center(&d);
        let w = fit_regularized(&d, lambda, 1).unwrap().weights;
        prop_assert!(rel(&w, &order_one_oracle(&stats, lambda)) <= 1e-8);
    }

    #[test]
    fn covariance_is_symmetric_psd(n in 1usize..60, p in 1usize..10, seed in any::<u64>()) {
        let s = center(&random_dataset(n, p, seed));
        prop_assert_eq!(&s.cov, &s.cov.transpose());
        let eig = SymmetricEigen::new(s.cov.clone());
        let norm = s.cov.norm();
        prop_assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-8 * norm));
    }

    #[test]
    fn diagonal_design_filter_law(
        amps in prop::collection::vec(0.05f64..5.0, 1..8),
        targets in prop::collection::vec(-3.0f64..3.0, 16),
        log_l in -3.0f64..1.0,
        order in 0u32..5,
    ) {
        let d = diagonal_design(&amps, &targets);
        let lambda = 10f64.powf(log_l);
        let s = center(&d);
        let w = fit_regularized(&d, lambda, order).unwrap().weights;
        for j in 0..amps.len() {
            let sigma = s.cov[(j, j)];
            let expect = filter_factor(sigma, lambda, order).unwrap() * s.cross[j] / sigma;
            prop_assert!((w[j] - expect).abs() <= 1e-10 * expect.abs().max(1e-12),
                "j={} w={} expect={}", j, w[j], expect);
        }
    }

    #[test]
    fn shrinkage_ordering_on_diagonal_designs(
        amps in prop::collection::vec(0.05f64..5.0, 1..8),
        targets in prop::collection::vec(-3.0f64..3.0, 16),
        log_l in -3.0f64..1.0,
    ) {
        let d = diagonal_design(&amps, &targets);
        let lambda = 10f64.powf(log_l);
        let path = linear::fit_path(&d, lambda, 5).unwrap();
        for pair in path.windows(2) {
            for j in 0..amps.len() {
                prop_assert!(pair[0].weights[j].abs() <= pair[1].weights[j].abs() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn filter_factor_increases_with_order(sigma in 1e-6f64..1e3, lambda in 1e-6f64..1e3, k in 0u32..20) {
        let a = filter_factor(sigma, lambda, k).unwrap();
        let b = filter_factor(sigma, lambda, k + 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        // strict until the factor rounds to 1.0
        prop_assert!(b > a || b == 1.0);
    }

    #[test]
    fn translation_invariance(n in 3usize..50, p in 1usize..8, seed in any::<u64>(),
                              shift in -50.0f64..50.0, yshift in -50.0f64..50.0, order in 0u32..3) {
        let d = random_dataset(n, p, seed);
        let lambda = 0.05;
        let base = fit_regularized(&d, lambda, order).unwrap();
        let shifted = Dataset::new(d.features().add_scalar(shift), d.targets().add_scalar(yshift)).unwrap();
        let moved = fit_regularized(&shifted, lambda, order).unwrap();
        let scale = base.weights.norm().max(1.0);
        prop_assert!((&moved.weights - &base.weights).norm() <= 1e-10 * scale * (1.0 + shift.abs()));
        let expect_b = base.intercept + yshift - shift * base.weights.sum();
        prop_assert!((moved.intercept - expect_b).abs() <= 1e-8 * (1.0 + expect_b.abs()));
    }

    #[test]
    fn kernel_coefficient_identity(n in 1usize..40, seed in any::<u64>(), log_l in -4.0f64..2.0, h in 0.2f64..3.0) {
        let d = random_dataset(n, 3, seed);
        let lambda = 10f64.powf(log_l);
        let spec = KernelSpec::gaussian(h).unwrap();
        let c = fit_kernel_regularized(&d, &spec, lambda, 0).unwrap().coeffs;
        let c_sharp = fit_kernel_regularized(&d, &spec, lambda, 1).unwrap().coeffs;
        let k = gram_matrix(&spec, d.features()) / n as f64;
        let eye = DMatrix::<f64>::identity(n, n);
        let inv = (&eye * lambda + &k).try_inverse().unwrap();
        let oracle = inv * (&eye * (2.0 * lambda) + &k) * &c;
        prop_assert!(rel(&c_sharp, &oracle) <= 1e-8);
    }

    #[test]
    fn gaussian_gram_is_psd(n in 2usize..200, seed in any::<u64>(), h in 0.1f64..5.0) {
        let d = random_dataset(n, 4, seed);
        let k = gram_matrix(&KernelSpec::gaussian(h).unwrap(), d.features());
        prop_assert_eq!(&k, &k.transpose());
        let eig = SymmetricEigen::new(k).eigenvalues;
        let max = eig.max();
        prop_assert!(eig.min() >= -1e-8 * max);
    }

    #[test]
    fn linear_average_is_mean_of_predictions(ws in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..12),
                                             seed in any::<u64>()) {
        let x = random_dataset(15, 3, seed).features().clone();
        let models: Vec<linear::LinearModel> = ws.iter().map(|w| {
            linear::LinearModel::new(DVector::from_column_slice(&w[..3]), w[3], 1.0, 0).unwrap()
        }).collect();
        let mut avg = None;
        for (i, m) in models.iter().enumerate() {
            avg = Some(average_update(avg, FittedModel::Linear(m.clone()), i + 1).unwrap());
        }
        let got = avg.unwrap().predict(&x).unwrap();
        let mut want = DVector::zeros(x.nrows());
        for m in &models {
            want += m.predict(&x).unwrap();
        }
        want /= models.len() as f64;
        prop_assert!((&got - &want).norm() <= 1e-10 * want.norm().max(1.0));
    }
}

#[test]
fn kernel_average_is_mean_of_predictions() {
    let spec = KernelSpec::gaussian(0.8).unwrap();
    let test = random_dataset(30, 2, 99);
    let mut avg = None;
    let mut models = Vec::new();
    for t in 1..=6 {
        let block = random_dataset(12, 2, t);
        let m = fit_kernel_regularized(&block, &spec, 0.01, (t % 2) as u32).unwrap();
        models.push(m.clone());
        avg = Some(average_update(avg, FittedModel::Kernel(m), t as usize).unwrap());
    }
    let got = avg.unwrap().predict(test.features()).unwrap();
    let mut want = DVector::zeros(test.n());
    for m in &models {
        want += m.predict(test.features()).unwrap();
    }
    want /= models.len() as f64;
    assert!(rel(&got, &want) <= 1e-10);
}

#[test]
fn kernel_interpolates_as_lambda_vanishes() {
    let rows: Vec<Vec<f64>> = (0..15)
        .map(|i| vec![i as f64, (i * i % 7) as f64])
        .collect();
    let y: Vec<f64> = (0..15).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
    let d = Dataset::from_rows(&rows, y).unwrap();
    let spec = KernelSpec::gaussian(0.6).unwrap();
    let m = fit_kernel_regularized(&d, &spec, 1e-10, 0).unwrap();
    let pred = m.predict(d.features()).unwrap();
    assert!(rel(&pred, d.targets()) <= 1e-4);
}

#[test]
fn linear_kernel_matches_intercept_free_ridge() {
    for seed in 0..5 {
        let raw = random_dataset(25, 4, seed);
        let stats = center(&raw);
        let mut xc = raw.features().clone();
        for (mut col, m) in xc.column_iter_mut().zip(stats.x_mean.iter()) {
            col.add_scalar_mut(-m);
        }
        let yc = raw.targets().add_scalar(-stats.y_mean);
        let d = Dataset::new(xc, yc).unwrap();
        for lambda in [1e-3, 0.1, 2.0] {
            let ridge = fit_regularized(&d, lambda, 0).unwrap();
            let rkn = fit_kernel_regularized(&d, &KernelSpec::Linear, lambda, 0).unwrap();
            let a = ridge.predict(d.features()).unwrap();
            let b = rkn.predict(d.features()).unwrap();
            assert!((&a - &b).amax() <= 1e-6, "seed {seed} λ {lambda}");
        }
    }
}

#[test]
fn kernel_matrix_of_self_is_exactly_symmetric() {
    let d = random_dataset(40, 3, 5);
    for spec in [
        KernelSpec::gaussian(1.1).unwrap(),
        KernelSpec::Linear,
        KernelSpec::polynomial(3, 0.5).unwrap(),
    ] {
        let k = gram_matrix(&spec, d.features());
        assert_eq!(k, k.transpose());
        let cross = kernel_matrix(&spec, d.features(), d.features()).unwrap();
        assert!((k - cross).amax() <= 1e-9);
    }
}

#[test]
fn monotone_asymptotic_bias_in_order() {
    let profile = SyntheticSpec::new(ModelId::Model1, 10).profile();
    for lambda in [1e-3, 0.1, 1.0, 10.0] {
        let b: Vec<f64> = (0..6)
            .map(|k| asymptotic_bias(&profile, lambda, k).unwrap())
            .collect();
        assert!(b.windows(2).all(|w| w[1] < w[0]), "{lambda}: {b:?}");
    }
    let profile = SpectrumProfile::new(vec![2.0, 0.5, 0.01], vec![0.0, 1.0, -3.0]).unwrap();
    let b0 = asymptotic_bias(&profile, 0.2, 0).unwrap();
    let b1 = asymptotic_bias(&profile, 0.2, 1).unwrap();
    assert!(b1 < b0);
}

/// Per-fold 1-D ridge written out by hand.
fn scalar_ridge_fold_mse(x: &[f64], y: &[f64], valid: &[bool], lambda: f64) -> f64 {
    let train: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .zip(valid)
        .filter(|(_, v)| !**v)
        .map(|((a, b), _)| (*a, *b))
        .collect();
    let n = train.len() as f64;
    let mx = train.iter().map(|p| p.0).sum::<f64>() / n;
    let my = train.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = train.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n;
    let sxy = train.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
    let w = sxy / (sxx + lambda);
    let b = my - w * mx;
    let errs: Vec<f64> = x
        .iter()
        .zip(y)
        .zip(valid)
        .filter(|(_, v)| **v)
        .map(|((a, t), _)| (w * a + b - t).powi(2))
        .collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

#[test]
fn cv_prefers_tiny_lambda_on_noiseless_line() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0 - 2.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let d = Dataset::from_rows(&x.iter().map(|v| vec![*v]).collect::<Vec<_>>(), y.clone()).unwrap();
    let cv = CvConfig {
        grid: vec![1e-6, 1e3],
        folds: 10,
    };
    let seed = 17;
    let assignment = fold_assignment(50, 10, seed);
    let oracle: Vec<f64> = cv
        .grid
        .iter()
        .map(|&l| {
            (0..10)
                .map(|f| {
                    let valid: Vec<bool> = assignment.iter().map(|&a| a == f).collect();
                    scalar_ridge_fold_mse(&x, &y, &valid, l)
                })
                .sum::<f64>()
                / 10.0
        })
        .collect();
    let errors = ridge_cv_errors(&d, &cv, seed).unwrap();
    for (a, b) in errors.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-9 * b.max(1e-12), "{a} vs {b}");
    }
    assert!(oracle[0] < oracle[1]);
    assert_eq!(select_lambda_cv(&d, &cv, seed).unwrap(), 1e-6);
    assert_eq!(
        select_lambda_cv(&d, &cv, seed).unwrap(),
        select_lambda_cv(&d, &cv, seed).unwrap()
    );
}

#[test]
fn single_block_stream_equals_single_fits() {
    let spec = SyntheticSpec::new(ModelId::Model1, 100);
    let mut rng = rng_from_seed(21);
    let block = synth_block(&spec, &mut rng);
    let test = spec.sample(300, &mut rng);
    let mut config = StreamConfig::new(vec![
        Algorithm::linear(0),
        Algorithm::linear(1),
        Algorithm::linear(3),
    ]);
    config.lambda = LambdaPolicy::CrossValidated(CvConfig::default());
    let report = run_block_stream(std::slice::from_ref(&block), &test, &config, 4).unwrap();
    assert_eq!(report.per_step.len(), 1);

    let lambda = report.per_step[0].lambda[&bcreg_core::streaming::Family::Linear];
    for (alg, got) in config.algorithms.iter().zip(&report.per_step[0].metrics) {
        let m = fit_regularized(&block, lambda, alg.order).unwrap();
        let pred = m.predict(test.features()).unwrap();
        let want = compute_metrics(pred.as_slice(), test.targets().as_slice(), false).unwrap();
        assert!(
            (got.mse - want.mse).abs() <= 1e-12 * want.mse,
            "{}",
            got.name
        );
    }
}

#[test]
fn stream_is_deterministic_and_annotates_errors() {
    let spec = SyntheticSpec::new(ModelId::Model2, 40);
    let mut rng = rng_from_seed(3);
    let blocks: Vec<Dataset> = (0..4).map(|_| synth_block(&spec, &mut rng)).collect();
    let test = spec.sample(100, &mut rng);
    let config = StreamConfig::new(vec![Algorithm::linear(0), Algorithm::linear(1)]);
    let a = run_block_stream(&blocks, &test, &config, 8).unwrap();
    let b = run_block_stream(&blocks, &test, &config, 8).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_step.len(), 4);
    assert!(a.per_step.iter().enumerate().all(|(i, s)| s.t == i + 1));

    let mut bad = blocks.clone();
    bad[2] = bad[2].select_rows(&[0, 1, 2]).unwrap();
    match run_block_stream(&bad, &test, &config, 8).unwrap_err() {
        bcreg_core::Error::Block { index, source } => {
            assert_eq!(index, 2);
            assert!(matches!(
                *source,
                bcreg_core::Error::InsufficientData { .. }
            ));
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn kernel_stream_runs_with_median_bandwidth() {
    use bcreg_core::experiments::SineTask;
    let task = SineTask::default();
    let mut rng = rng_from_seed(12);
    let blocks: Vec<Dataset> = (0..3).map(|_| task.sample(30, &mut rng).unwrap()).collect();
    let test = task.sample(60, &mut rng).unwrap();
    let config = StreamConfig::new(vec![Algorithm::kernel(0), Algorithm::kernel(1)]);
    let r = run_block_stream(&blocks, &test, &config, 0).unwrap();
    assert_eq!(r.per_step.len(), 3);
    assert!(r
        .per_step
        .iter()
        .all(|s| s.metrics.iter().all(|m| m.mse.is_finite())));

    let bad = StreamConfig::new(vec![Algorithm::kernel(2)]);
    assert!(run_block_stream(&blocks, &test, &bad, 0).is_err());
}
