//! Ridge regression and its iterated bias corrections.
//!
//! With centered data the ridge weights are `ŵ = (λI + Σ̂)⁻¹ (1/n) X̃ᵀỸ`.
//! The order-k corrected weights add back successive plug-in estimates of
//! the asymptotic bias:
//!
//! ```text
//! ŵ_0 = ŵ
//! ŵ_k = ŵ_{k-1} + λᵏ (λI + Σ̂)⁻ᵏ ŵ
//! ```
//!
//! In an eigen-direction of Σ̂ with eigenvalue σ this multiplies the
//! least-squares component by the filter factor `1 - (λ/(λ+σ))^{k+1}`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_lambda, Error, Result};

/// Means, covariance and cross-covariance of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredStats {
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
    /// `(1/n) X̃ᵀX̃`, symmetric by construction.
    pub cov: DMatrix<f64>,
    /// `(1/n) X̃ᵀỸ`.
    pub cross: DVector<f64>,
    pub n: usize,
}

/// Computes the centered second-moment statistics of `dataset`.
///
/// Non-finite values are rejected when the [`Dataset`] is built, so this
/// cannot fail.
pub fn center(dataset: &Dataset) -> CenteredStats {
    let x = dataset.features();
    let y = dataset.targets();
    let n = dataset.n();
    let nf = n as f64;

    let x_mean = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()));
    let y_mean = y.mean();

    let mut xc = x.clone();
    for (mut col, mean) in xc.column_iter_mut().zip(x_mean.iter()) {
        col.add_scalar_mut(-mean);
    }
    let yc = y.add_scalar(-y_mean);

    let mut cov = xc.tr_mul(&xc) / nf;
    // gemm does not guarantee bitwise symmetry
    let p = cov.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let cross = xc.tr_mul(&yc) / nf;

    CenteredStats {
        x_mean,
        y_mean,
        cov,
        cross,
        n,
    }
}

/// An affine predictor `x ↦ wᵀx + b` produced by (corrected) ridge regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: DVector<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// 0 is plain ridge, 1 the bias-corrected estimator, higher values iterate.
    pub order: u32,
}

impl LinearModel {
    pub fn new(weights: DVector<f64>, intercept: f64, lambda: f64, order: u32) -> Result<Self> {
        check_lambda(lambda)?;
        if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidData("model parameters must be finite".into()));
        }
        Ok(Self {
            weights,
            intercept,
            lambda,
            order,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<DVector<f64>> {
        if features.ncols() != self.weights.len() {
            return Err(Error::Shape(format!(
                "model has {} weights but input has {} columns",
                self.weights.len(),
                features.ncols()
            )));
        }
        Ok((features * &self.weights).add_scalar(self.intercept))
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Shape(format!(
                "model has {} weights but input has {} entries",
                self.weights.len(),
                x.len()
            )));
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept)
    }
}

/// The factored ridge system `(λI + Σ̂)` for one dataset and one λ.
///
/// Corrections of any order reuse the single Cholesky factor.
pub struct RidgeSystem<'a> {
    stats: &'a CenteredStats,
    lambda: f64,
    factor: Cholesky<f64, Dyn>,
    ridge: DVector<f64>,
}

impl<'a> RidgeSystem<'a> {
    pub fn new(stats: &'a CenteredStats, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let p = stats.cov.nrows();
        let system = &stats.cov + DMatrix::from_diagonal_element(p, p, lambda);
        let factor = Cholesky::new(system)
            .ok_or_else(|| Error::NotPositiveDefinite(format!("λI + Σ̂ with λ = {lambda}")))?;
        let ridge = factor.solve(&stats.cross);
        Ok(Self {
            stats,
            lambda,
            factor,
            ridge,
        })
    }

    /// Plain ridge weights `ŵ`.
    pub fn ridge_weights(&self) -> &DVector<f64> {
        &self.ridge
    }

    /// Corrected weights for every order `0..=max_order`.
    pub fn weight_path(&self, max_order: u32) -> Vec<DVector<f64>> {
        let mut path = Vec::with_capacity(max_order as usize + 1);
        let mut acc = self.ridge.clone();
        let mut term = self.ridge.clone();
        path.push(acc.clone());
        for _ in 0..max_order {
            // term_k = λ (λI + Σ̂)⁻¹ term_{k-1} = λᵏ (λI + Σ̂)⁻ᵏ ŵ
            term = self.factor.solve(&term) * self.lambda;
            acc += &term;
            path.push(acc.clone());
        }
        path
    }

    pub fn weights(&self, order: u32) -> DVector<f64> {
        self.weight_path(order).pop().expect("path is never empty")
    }

    /// Wraps weights into a model, recomputing the intercept at the centroid.
    pub fn model(&self, weights: DVector<f64>, order: u32) -> Result<LinearModel> {
        let intercept = self.stats.y_mean - weights.dot(&self.stats.x_mean);
        LinearModel::new(weights, intercept, self.lambda, order)
    }
}

fn check_fit_inputs(dataset: &Dataset, lambda: f64) -> Result<()> {
    check_lambda(lambda)?;
    if dataset.n() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: dataset.n(),
        });
    }
    Ok(())
}

/// Fits ridge regression (`order = 0`) or the order-k bias-corrected variant.
///
/// The intercept is `ȳ - wᵀx̄` computed with the returned (corrected) weights.
pub fn fit_regularized(dataset: &Dataset, lambda: f64, order: u32) -> Result<LinearModel> {
    check_fit_inputs(dataset, lambda)?;
    let stats = center(dataset);
    let system = RidgeSystem::new(&stats, lambda)?;
    system.model(system.weights(order), order)
}

/// Fits every order `0..=max_order` from one factorization.
pub fn fit_path(dataset: &Dataset, lambda: f64, max_order: u32) -> Result<Vec<LinearModel>> {
    check_fit_inputs(dataset, lambda)?;
    let stats = center(dataset);
    fit_path_from_stats(&stats, lambda, max_order)
}

pub fn fit_path_from_stats(
    stats: &CenteredStats,
    lambda: f64,
    max_order: u32,
) -> Result<Vec<LinearModel>> {
    if stats.n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: stats.n,
        });
    }
    let system = RidgeSystem::new(stats, lambda)?;
    system
        .weight_path(max_order)
        .into_iter()
        .zip(0..)
        .map(|(w, k)| system.model(w, k))
        .collect()
}

pub fn predict_linear(model: &LinearModel, features: &DMatrix<f64>) -> Result<DVector<f64>> {
    model.predict(features)
}

/// Spectral filter factor `1 - (λ/(λ+σ))^{k+1}` of the order-k estimator.
pub fn filter_factor(sigma: f64, lambda: f64, order: u32) -> Result<f64> {
    check_lambda(lambda)?;
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue must be nonnegative and finite, got {sigma}"
        )));
    }
    Ok(1.0 - shrink_ratio_pow(sigma, lambda, order + 1))
}

fn shrink_ratio_pow(sigma: f64, lambda: f64, exponent: u32) -> f64 {
    let ratio = lambda / (lambda + sigma);
    ratio.powi(exponent as i32)
}

/// Population eigenvalues with the true weights expressed in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProfile {
    eigenvalues: Vec<f64>,
    coords: Vec<f64>,
}

impl SpectrumProfile {
    pub fn new(eigenvalues: Vec<f64>, coords: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != coords.len() {
            return Err(Error::Shape(format!(
                "{} eigenvalues but {} coordinates",
                eigenvalues.len(),
                coords.len()
            )));
        }
        if eigenvalues.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be strictly positive and finite".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("coordinates must be finite".into()));
        }
        Ok(Self {
            eigenvalues,
            coords,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Large-sample limit of the bias norm of the order-k estimator,
/// `sqrt(Σ c_i² (λ/(λ+σ_i))^{2(k+1)})`.
pub fn asymptotic_bias(profile: &SpectrumProfile, lambda: f64, order: u32) -> Result<f64> {
    check_lambda(lambda)?;
    let sum: f64 = profile
        .eigenvalues
        .iter()
        .zip(&profile.coords)
        .map(|(&sigma, &c)| c * c * shrink_ratio_pow(sigma, lambda, 2 * (order + 1)))
        .sum();
    Ok(sum.sqrt())
}
