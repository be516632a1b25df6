//! Synthetic regression tasks.
//!
//! The two linear models use 20 independent Gaussian features, feature `i`
//! (1-based) having variance `2^{-i}`, so the coordinate axes are the
//! principal components. Model 1 loads on the first four components, model 2
//! on the last four. Noise is Gaussian with `Var(signal) / Var(noise) = snr`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linear::SpectrumProfile;

pub const SYNTHETIC_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Model1,
    Model2,
}

impl ModelId {
    pub fn from_index(i: u32) -> Result<Self> {
        match i {
            1 => Ok(Self::Model1),
            2 => Ok(Self::Model2),
            _ => Err(Error::InvalidParameter(format!(
                "synthetic model must be 1 or 2, got {i}"
            ))),
        }
    }

    pub fn true_weights(self) -> DVector<f64> {
        let mut w = DVector::zeros(SYNTHETIC_DIM);
        let loads = [1.0, 1.0, -1.0, -1.0];
        let start = match self {
            Self::Model1 => 0,
            Self::Model2 => SYNTHETIC_DIM - loads.len(),
        };
        for (i, v) in loads.iter().enumerate() {
            w[start + i] = *v;
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub model: ModelId,
    pub n: usize,
    pub snr: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Spec with the default signal-to-noise ratio of 10 and seed 0.
    pub fn new(model: ModelId, n: usize) -> Self {
        Self {
            model,
            n,
            snr: 10.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_snr(mut self, snr: f64) -> Self {
        self.snr = snr;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "sample size must be positive".into(),
            ));
        }
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal-to-noise ratio must be positive, got {}",
                self.snr
            )));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        SYNTHETIC_DIM
    }

    pub fn true_weights(&self) -> DVector<f64> {
        self.model.true_weights()
    }

    pub fn feature_variances(&self) -> Vec<f64> {
        (1..=SYNTHETIC_DIM as i32).map(|i| 2f64.powi(-i)).collect()
    }

    /// `Var(wᵀx) = Σ w_i² σ_i`.
    pub fn signal_variance(&self) -> f64 {
        self.true_weights()
            .iter()
            .zip(self.feature_variances())
            .map(|(w, s)| w * w * s)
            .sum()
    }

    pub fn noise_variance(&self) -> f64 {
        self.signal_variance() / self.snr
    }

    /// Population spectrum; the covariance is diagonal so the eigenbasis is
    /// the standard basis and the coordinates are the true weights.
    pub fn profile(&self) -> SpectrumProfile {
        SpectrumProfile::new(
            self.feature_variances(),
            self.true_weights().as_slice().to_vec(),
        )
        .expect("synthetic spectrum is valid")
    }

    /// Draws `n` rows from the model.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let sds: Vec<f64> = self.feature_variances().iter().map(|v| v.sqrt()).collect();
        let w = self.true_weights();
        let noise_sd = self.noise_variance().sqrt();
        // row by row so that a prefix of a larger draw equals a smaller draw
        let mut x = DMatrix::zeros(n, SYNTHETIC_DIM);
        let mut y = DVector::zeros(n);
        for i in 0..n {
            for (j, sd) in sds.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                x[(i, j)] = z * sd;
            }
            let eps: f64 = rng.sample(StandardNormal);
            y[i] = x.row(i).dot(&w.transpose()) + noise_sd * eps;
        }
        Dataset::new(x, y).expect("generated data is finite")
    }
}

/// Draws one dataset of `spec.n` rows.
pub fn synth_block<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Dataset {
    spec.sample(spec.n, rng)
}

/// One-dimensional nonlinear task `y = sin(3x) / (1 + x²) + ε`, x uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTask {
    pub lo: f64,
    pub hi: f64,
    pub snr: f64,
}

impl Default for SineTask {
    fn default() -> Self {
        Self {
            lo: -3.0,
            hi: 3.0,
            snr: 10.0,
        }
    }
}

impl SineTask {
    pub fn truth(x: f64) -> f64 {
        (3.0 * x).sin() / (1.0 + x * x)
    }

    /// Variance of `truth(x)` under the uniform input law (composite Simpson).
    pub fn signal_variance(&self) -> f64 {
        let intervals = 4000;
        let h = (self.hi - self.lo) / intervals as f64;
        let simpson = |f: &dyn Fn(f64) -> f64| -> f64 {
            let mut s = f(self.lo) + f(self.hi);
            for i in 1..intervals {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(self.lo + i as f64 * h);
            }
            s * h / 3.0 / (self.hi - self.lo)
        };
        let mean = simpson(&Self::truth);
        let second = simpson(&|x| Self::truth(x).powi(2));
        second - mean * mean
    }

    pub fn noise_variance(&self) -> f64 {
        self.signal_variance() / self.snr
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        if !self.lo.is_finite()
            || !self.hi.is_finite()
            || self.lo >= self.hi
            || self.snr.is_nan()
            || self.snr <= 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "invalid sine task {self:?}"
            )));
        }
        let ux =
            Uniform::new(self.lo, self.hi).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let noise = Normal::new(0.0, self.noise_variance().sqrt())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi = ux.sample(rng);
            x.push(xi);
            y.push(Self::truth(xi) + noise.sample(rng));
        }
        Dataset::new(DMatrix::from_vec(n, 1, x), DVector::from_vec(y))
    }
}
