//! Monte-Carlo estimates of bias, variance and mean squared error.
//!
//! Repetition `r` draws its data from a generator keyed by `(seed, r)`, so
//! every fit configuration sees the same datasets and results do not depend
//! on thread scheduling.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};
use crate::experiments::synthetic::SyntheticSpec;
use crate::linear;
use crate::seeding::derived_rng;
use crate::streaming::{average_update, AveragedModel, FittedModel};

/// Weight-space decomposition `mse = bias_norm² + variance` over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceReport {
    pub bias_norm: f64,
    pub variance: f64,
    pub mse: f64,
    pub reps: usize,
    pub n: usize,
    pub lambda: f64,
    pub order: u32,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 repetitions, got {reps}"
        )));
    }
    Ok(())
}

/// Estimates the bias norm, variance and mse of the order-k weights.
///
/// The intercept is excluded; all three quantities are computed on the
/// weight vector only.
pub fn monte_carlo_bias_variance(
    spec: &SyntheticSpec,
    lambda: f64,
    order: u32,
    reps: usize,
) -> Result<BiasVarianceReport> {
    let mut out = monte_carlo_sweep(spec, &[lambda], &[order], reps)?;
    Ok(out.remove(0))
}

/// Runs every `(λ, order)` pair on the same `reps` datasets.
///
/// Reports are ordered λ-major: all orders of `lambdas[0]` first.
pub fn monte_carlo_sweep(
    spec: &SyntheticSpec,
    lambdas: &[f64],
    orders: &[u32],
    reps: usize,
) -> Result<Vec<BiasVarianceReport>> {
    spec.validate()?;
    check_reps(reps)?;
    if lambdas.is_empty() || orders.is_empty() {
        return Err(Error::InvalidParameter("empty λ or order list".into()));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    let max_order = *orders.iter().max().expect("orders is non-empty");

    let per_rep: Vec<Vec<DVector<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<DVector<f64>>> {
            let data = spec.sample(spec.n, &mut derived_rng(spec.seed, r as u64));
            let stats = linear::center(&data);
            let mut weights = Vec::with_capacity(lambdas.len() * orders.len());
            for &l in lambdas {
                let path = linear::fit_path_from_stats(&stats, l, max_order)?;
                weights.extend(orders.iter().map(|&k| path[k as usize].weights.clone()));
            }
            Ok(weights)
        })
        .collect::<Result<_>>()?;

    let truth = spec.true_weights();
    let rf = reps as f64;
    let mut reports = Vec::with_capacity(lambdas.len() * orders.len());
    for (li, &lambda) in lambdas.iter().enumerate() {
        for (oi, &order) in orders.iter().enumerate() {
            let c = li * orders.len() + oi;
            let mut mean = DVector::zeros(truth.len());
            for w in &per_rep {
                mean += &w[c];
            }
            mean /= rf;
            let variance = per_rep
                .iter()
                .map(|w| (&w[c] - &mean).norm_squared())
                .sum::<f64>()
                / rf;
            let mse = per_rep
                .iter()
                .map(|w| (&w[c] - &truth).norm_squared())
                .sum::<f64>()
                / rf;
            reports.push(BiasVarianceReport {
                bias_norm: (&mean - &truth).norm(),
                variance,
                mse,
                reps,
                n: spec.n,
                lambda,
                order,
            });
        }
    }
    Ok(reports)
}

/// Prediction-space decomposition of the running average after `t` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPoint {
    pub t: usize,
    /// Mean over test points of `(E[f̄_t(x)] - f*(x))²`.
    pub bias_sq: f64,
    /// Mean over test points of the across-repetition variance of `f̄_t(x)`.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCurve {
    pub order: u32,
    pub points: Vec<DecompositionPoint>,
}

/// Streams `max_t` blocks of `spec.n` rows with a fixed λ and estimates the
/// squared bias and variance of each order's averaged predictor over `reps`
/// independent streams, on a fixed noiseless test design of `test_size` rows.
pub fn averaged_decomposition(
    spec: &SyntheticSpec,
    lambda: f64,
    orders: &[u32],
    max_t: usize,
    reps: usize,
    test_size: usize,
) -> Result<Vec<DecompositionCurve>> {
    spec.validate()?;
    check_reps(reps)?;
    check_lambda(lambda)?;
    if orders.is_empty() || max_t == 0 || test_size == 0 {
        return Err(Error::InvalidParameter(
            "orders, max_t and test_size must be non-empty".into(),
        ));
    }
    let max_order = *orders.iter().max().expect("orders is non-empty");
    let test_x: DMatrix<f64> = spec
        .sample(test_size, &mut derived_rng(spec.seed, u64::MAX))
        .into_parts()
        .0;
    let truth = &test_x * spec.true_weights();

    // per_rep[r][order index][t - 1] = predictions of f̄_t at the test design
    let per_rep: Vec<Vec<Vec<DVector<f64>>>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<DVector<f64>>>> {
            let mut rng = derived_rng(spec.seed, r as u64);
            let mut averages: Vec<Option<AveragedModel>> = vec![None; orders.len()];
            let mut preds = vec![Vec::with_capacity(max_t); orders.len()];
            for t in 1..=max_t {
                let block = spec.sample(spec.n, &mut rng);
                let path = linear::fit_path(&block, lambda, max_order)?;
                for (oi, &k) in orders.iter().enumerate() {
                    let fresh = FittedModel::Linear(path[k as usize].clone());
                    let avg = average_update(averages[oi].take(), fresh, t)?;
                    preds[oi].push(avg.predict(&test_x)?);
                    averages[oi] = Some(avg);
                }
            }
            Ok(preds)
        })
        .collect::<Result<_>>()?;

    let rf = reps as f64;
    let m = test_size as f64;
    Ok(orders
        .iter()
        .enumerate()
        .map(|(oi, &order)| {
            let points = (0..max_t)
                .map(|ti| {
                    let mut mean = DVector::zeros(test_size);
                    for r in &per_rep {
                        mean += &r[oi][ti];
                    }
                    mean /= rf;
                    let variance = per_rep
                        .iter()
                        .map(|r| (&r[oi][ti] - &mean).norm_squared())
                        .sum::<f64>()
                        / (rf * m);
                    let bias_sq = (&mean - &truth).norm_squared() / m;
                    DecompositionPoint {
                        t: ti + 1,
                        bias_sq,
                        variance,
                    }
                })
                .collect();
            DecompositionCurve { order, points }
        })
        .collect())
}
