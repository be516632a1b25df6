//! Mercer kernels and the regularization kernel network.
//!
//! The network solves `(λnI + K) c = Y` and predicts with
//! `f(x) = Σ c_i K(x_i, x)`. The bias-corrected coefficients are
//! `c♯ = c + λ (λI + K/n)⁻¹ c`. Neither fit centers the data or carries an
//! intercept.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_lambda, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-‖a-b‖² / (2h²))`
    Gaussian { bandwidth: f64 },
    /// `aᵀb`
    Linear,
    /// `(aᵀb + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::Gaussian { bandwidth }.validated()
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        Self::Polynomial { degree, offset }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Gaussian { bandwidth } if !(bandwidth.is_finite() && bandwidth > 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "gaussian bandwidth must be positive, got {bandwidth}"
                )))
            }
            Self::Polynomial { degree: 0, .. } => Err(Error::InvalidParameter(
                "polynomial degree must be at least 1".into(),
            )),
            Self::Polynomial { offset, .. } if !offset.is_finite() => Err(Error::InvalidParameter(
                "polynomial offset must be finite".into(),
            )),
            spec => Ok(spec),
        }
    }

    #[inline]
    fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Self::Gaussian { bandwidth } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            Self::Linear => dot(a, b),
            Self::Polynomial { degree, offset } => (dot(a, b) + offset).powi(degree as i32),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Shape(format!(
                "kernel arguments have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(self.eval_unchecked(a, b))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.eval(a, b)
}

/// Rows of a matrix stored contiguously, one after the other.
struct RowMajor {
    data: Vec<f64>,
    p: usize,
}

impl RowMajor {
    fn new(m: &DMatrix<f64>) -> Self {
        // the transpose's column-major storage is the row-major layout of `m`
        Self {
            data: m.transpose().as_slice().to_vec(),
            p: m.ncols(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    fn nrows(&self) -> usize {
        self.data.len().checked_div(self.p).unwrap_or(0)
    }
}

/// Cross kernel matrix, entry `(i, j) = K(a_i, b_j)`.
pub fn kernel_matrix(
    spec: &KernelSpec,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "row dimensions differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let ra = RowMajor::new(a);
    let rb = RowMajor::new(b);
    Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        spec.eval_unchecked(ra.row(i), rb.row(j))
    }))
}

/// Kernel matrix of a set of rows with itself. Each unordered pair is
/// evaluated once, so the result is exactly symmetric.
pub fn gram_matrix(spec: &KernelSpec, rows: &DMatrix<f64>) -> DMatrix<f64> {
    let r = RowMajor::new(rows);
    let n = rows.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(r.row(i), r.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Median of the `n(n-1)/2` pairwise Euclidean distances between rows.
pub fn median_bandwidth(rows: &DMatrix<f64>) -> Result<f64> {
    let n = rows.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let r = RowMajor::new(rows);
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..r.nrows() {
        for j in (i + 1)..n {
            let sq: f64 = r
                .row(i)
                .iter()
                .zip(r.row(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    let len = dists.len();
    let mid = len / 2;
    let (lower, upper, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    let median = if len % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + upper)
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::DegenerateData(
            "median pairwise distance is zero".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthPolicy {
    /// Median pairwise distance of the rows being fitted.
    Median,
    Fixed(f64),
}

/// A kernel family whose Gaussian bandwidth may be resolved from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelChoice {
    Gaussian { bandwidth: BandwidthPolicy },
    Linear,
    Polynomial { degree: u32, offset: f64 },
}

impl Default for KernelChoice {
    fn default() -> Self {
        Self::Gaussian {
            bandwidth: BandwidthPolicy::Median,
        }
    }
}

impl KernelChoice {
    pub fn resolve(&self, rows: &DMatrix<f64>) -> Result<KernelSpec> {
        match *self {
            Self::Gaussian {
                bandwidth: BandwidthPolicy::Median,
            } => KernelSpec::gaussian(median_bandwidth(rows)?),
            Self::Gaussian {
                bandwidth: BandwidthPolicy::Fixed(h),
            } => KernelSpec::gaussian(h),
            Self::Linear => Ok(KernelSpec::Linear),
            Self::Polynomial { degree, offset } => KernelSpec::polynomial(degree, offset),
        }
    }
}

/// A fitted kernel expansion `x ↦ Σ c_i K(center_i, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub centers: DMatrix<f64>,
    pub coeffs: DVector<f64>,
    pub spec: KernelSpec,
    pub lambda: f64,
    /// 0 is the plain network, 1 the bias-corrected one.
    pub order: u32,
}

impl KernelModel {
    pub fn predict(&self, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
        if rows.ncols() != self.centers.ncols() {
            return Err(Error::Shape(format!(
                "model centers have {} columns but input has {}",
                self.centers.ncols(),
                rows.ncols()
            )));
        }
        let k = kernel_matrix(&self.spec, rows, &self.centers)?;
        Ok(k * &self.coeffs)
    }

    pub fn n_centers(&self) -> usize {
        self.centers.nrows()
    }
}

fn spd_factor(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Solved kernel system for one block of data, reusable across λ values.
///
/// Holding the Gram matrix lets cross-validation refit with many λ while
/// evaluating the kernel only once.
pub struct KernelSystem {
    centers: DMatrix<f64>,
    gram: DMatrix<f64>,
    spec: KernelSpec,
}

impl KernelSystem {
    pub fn new(features: &DMatrix<f64>, spec: KernelSpec) -> Result<Self> {
        let spec = spec.validated()?;
        let gram = gram_matrix(&spec, features);
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "kernel matrix has non-finite entries".into(),
            ));
        }
        Ok(Self {
            centers: features.clone(),
            gram,
            spec,
        })
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn fit(&self, targets: &DVector<f64>, lambda: f64, order: u32) -> Result<KernelModel> {
        check_lambda(lambda)?;
        if order > 1 {
            return Err(Error::InvalidParameter(format!(
                "kernel models support correction order 0 or 1, got {order}"
            )));
        }
        let n = self.gram.nrows();
        if targets.len() != n {
            return Err(Error::Shape(format!(
                "{n} centers but {} targets",
                targets.len()
            )));
        }
        let nf = n as f64;
        let mut system = self.gram.clone();
        for i in 0..n {
            system[(i, i)] += lambda * nf;
        }
        let mut coeffs = spd_factor(system, &format!("λnI + K with λ = {lambda}"))?.solve(targets);
        if order == 1 {
            let mut scaled = &self.gram / nf;
            for i in 0..n {
                scaled[(i, i)] += lambda;
            }
            let correction =
                spd_factor(scaled, &format!("λI + K/n with λ = {lambda}"))?.solve(&coeffs);
            coeffs += correction * lambda;
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidData(
                "kernel coefficients are not finite".into(),
            ));
        }
        Ok(KernelModel {
            centers: self.centers.clone(),
            coeffs,
            spec: self.spec,
            lambda,
            order,
        })
    }
}

/// Fits the regularization kernel network (`order = 0`) or its
/// bias-corrected variant (`order = 1`).
pub fn fit_kernel_regularized(
    dataset: &Dataset,
    spec: &KernelSpec,
    lambda: f64,
    order: u32,
) -> Result<KernelModel> {
    check_lambda(lambda)?;
    KernelSystem::new(dataset.features(), *spec)?.fit(dataset.targets(), lambda, order)
}

pub fn predict_kernel(model: &KernelModel, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
    model.predict(rows)
}
