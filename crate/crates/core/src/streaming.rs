//! Incremental learning on block-wise streaming data.
//!
//! Each incoming block is fitted by a base algorithm and the predictor is the
//! running average `f̄_t = ((t-1)/t) f̄_{t-1} + (1/t) f̂_t` of all block fits.
//! The regularization parameter is re-selected on every block by k-fold cross
//! validation of the uncorrected estimator and shared by all orders of that
//! family.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{check_lambda, Error, Result};
use crate::experiments::metrics::{compute_metrics, Metrics};
use crate::kernel::{kernel_matrix, KernelChoice, KernelModel, KernelSpec, KernelSystem};
use crate::linear::{self, LinearModel, RidgeSystem};
use crate::seeding::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Kernel,
}

/// One competing base algorithm: a model family and its correction order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Algorithm {
    pub family: Family,
    pub order: u32,
}

impl Algorithm {
    pub fn linear(order: u32) -> Self {
        Self {
            family: Family::Linear,
            order,
        }
    }

    pub fn kernel(order: u32) -> Self {
        Self {
            family: Family::Kernel,
            order,
        }
    }

    /// `rr`, `bcrr`, `bcrr-k` for ridge; `rkn`, `bcrkn` for kernel networks.
    pub fn name(&self) -> String {
        match (self.family, self.order) {
            (Family::Linear, 0) => "rr".into(),
            (Family::Linear, 1) => "bcrr".into(),
            (Family::Linear, k) => format!("bcrr-{k}"),
            (Family::Kernel, 0) => "rkn".into(),
            (Family::Kernel, 1) => "bcrkn".into(),
            (Family::Kernel, k) => format!("bcrkn-{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Kernel(KernelModel),
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self {
            Self::Linear(_) => Family::Linear,
            Self::Kernel(_) => Family::Kernel,
        }
    }

    pub fn predict(&self, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self {
            Self::Linear(m) => m.predict(rows),
            Self::Kernel(m) => m.predict(rows),
        }
    }
}

/// Running average of the models fitted on blocks `1..=count`.
#[derive(Debug, Clone, PartialEq)]
pub enum AveragedModel {
    Linear {
        weights: DVector<f64>,
        intercept: f64,
        count: usize,
    },
    /// Every block model is kept with weight `1/count`.
    Kernel {
        members: Vec<(KernelModel, f64)>,
        count: usize,
    },
}

impl AveragedModel {
    pub fn count(&self) -> usize {
        match self {
            Self::Linear { count, .. } | Self::Kernel { count, .. } => *count,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Linear { .. } => Family::Linear,
            Self::Kernel { .. } => Family::Kernel,
        }
    }

    pub fn predict(&self, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self {
            Self::Linear {
                weights, intercept, ..
            } => {
                if rows.ncols() != weights.len() {
                    return Err(Error::Shape(format!(
                        "model has {} weights but input has {} columns",
                        weights.len(),
                        rows.ncols()
                    )));
                }
                Ok((rows * weights).add_scalar(*intercept))
            }
            Self::Kernel { members, .. } => {
                let mut out = DVector::zeros(rows.nrows());
                for (model, w) in members {
                    out += model.predict(rows)? * *w;
                }
                Ok(out)
            }
        }
    }
}

/// Folds `fresh` into the running average as the `t`-th model.
pub fn average_update(
    current: Option<AveragedModel>,
    fresh: FittedModel,
    t: usize,
) -> Result<AveragedModel> {
    let expected = current.as_ref().map_or(1, |c| c.count() + 1);
    if t != expected {
        return Err(Error::Sequencing { expected, got: t });
    }
    let tf = t as f64;
    match (current, fresh) {
        (None, FittedModel::Linear(m)) => Ok(AveragedModel::Linear {
            weights: m.weights,
            intercept: m.intercept,
            count: 1,
        }),
        (None, FittedModel::Kernel(m)) => Ok(AveragedModel::Kernel {
            members: vec![(m, 1.0)],
            count: 1,
        }),
        (
            Some(AveragedModel::Linear {
                weights, intercept, ..
            }),
            FittedModel::Linear(m),
        ) => {
            if weights.len() != m.weights.len() {
                return Err(Error::Shape(format!(
                    "averaged model has {} weights, fresh model {}",
                    weights.len(),
                    m.weights.len()
                )));
            }
            let keep = (tf - 1.0) / tf;
            let add = 1.0 / tf;
            Ok(AveragedModel::Linear {
                weights: weights * keep + m.weights * add,
                intercept: keep * intercept + add * m.intercept,
                count: t,
            })
        }
        (Some(AveragedModel::Kernel { mut members, .. }), FittedModel::Kernel(m)) => {
            members.push((m, 0.0));
            let w = 1.0 / tf;
            for member in &mut members {
                member.1 = w;
            }
            Ok(AveragedModel::Kernel { members, count: t })
        }
        (Some(cur), fresh) => Err(Error::InvalidState(format!(
            "cannot average a {:?} model into a {:?} average",
            fresh.family(),
            cur.family()
        ))),
    }
}

/// `count` values spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub grid: Vec<f64>,
    pub folds: usize,
}

impl Default for CvConfig {
    /// 25 log-spaced values in `[1e-6, 1e2]`, 10 folds.
    fn default() -> Self {
        Self {
            grid: log_grid(1e-6, 1e2, 25),
            folds: 10,
        }
    }
}

impl CvConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("λ grid is empty".into()));
        }
        for &l in &self.grid {
            check_lambda(l)?;
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "cross validation needs at least 2 folds, got {}",
                self.folds
            )));
        }
        if n < self.folds {
            return Err(Error::InsufficientData {
                needed: self.folds,
                got: n,
            });
        }
        Ok(())
    }
}

/// Random partition of `0..n` into `folds` parts whose sizes differ by at most one.
/// Entry `i` is the fold of row `i`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % folds;
    }
    fold
}

fn split_fold(dataset: &Dataset, assignment: &[usize], fold: usize) -> Result<(Dataset, Dataset)> {
    let (valid, train): (Vec<usize>, Vec<usize>) =
        (0..dataset.n()).partition(|&i| assignment[i] == fold);
    Ok((dataset.select_rows(&train)?, dataset.select_rows(&valid)?))
}

fn squared_error(pred: &DVector<f64>, target: &DVector<f64>) -> f64 {
    (pred - target).norm_squared() / target.len() as f64
}

/// Mean validation error of each grid value (in grid order), computed by
/// `fold_errors(train, valid)` on every fold.
fn cv_curve<F>(dataset: &Dataset, cv: &CvConfig, seed: u64, mut fold_errors: F) -> Result<Vec<f64>>
where
    F: FnMut(&Dataset, &Dataset) -> Result<Vec<f64>>,
{
    cv.validate(dataset.n())?;
    let assignment = fold_assignment(dataset.n(), cv.folds, seed);
    let mut total = vec![0.0; cv.grid.len()];
    for fold in 0..cv.folds {
        let (train, valid) = split_fold(dataset, &assignment, fold)?;
        for (acc, e) in total.iter_mut().zip(fold_errors(&train, &valid)?) {
            *acc += e;
        }
    }
    Ok(total.into_iter().map(|e| e / cv.folds as f64).collect())
}

/// Cross-validated mean squared error of plain ridge for each grid value.
pub fn ridge_cv_errors(dataset: &Dataset, cv: &CvConfig, seed: u64) -> Result<Vec<f64>> {
    cv_curve(dataset, cv, seed, |train, valid| {
        let stats = linear::center(train);
        cv.grid
            .iter()
            .map(|&lambda| {
                let system = RidgeSystem::new(&stats, lambda)?;
                let model = system.model(system.ridge_weights().clone(), 0)?;
                Ok(squared_error(
                    &model.predict(valid.features())?,
                    valid.targets(),
                ))
            })
            .collect()
    })
}

/// Cross-validated mean squared error of the plain kernel network for each grid value.
pub fn kernel_cv_errors(
    dataset: &Dataset,
    spec: &KernelSpec,
    cv: &CvConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    cv_curve(dataset, cv, seed, |train, valid| {
        let system = KernelSystem::new(train.features(), *spec)?;
        let cross = kernel_matrix(spec, valid.features(), train.features())?;
        cv.grid
            .iter()
            .map(|&lambda| {
                let model = system.fit(train.targets(), lambda, 0)?;
                Ok(squared_error(&(&cross * &model.coeffs), valid.targets()))
            })
            .collect()
    })
}

/// Grid value with the smallest error; ties go to the largest λ.
fn argmin_lambda(grid: &[f64], errors: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let mut best = order[0];
    for &i in &order[1..] {
        if errors[i] <= errors[best] || errors[best].is_nan() {
            best = i;
        }
    }
    grid[best]
}

/// Selects λ for ridge regression by `cv.folds`-fold cross validation.
pub fn select_lambda_cv(dataset: &Dataset, cv: &CvConfig, seed: u64) -> Result<f64> {
    let errors = ridge_cv_errors(dataset, cv, seed)?;
    Ok(argmin_lambda(&cv.grid, &errors))
}

/// Selects λ for the kernel network by `cv.folds`-fold cross validation.
pub fn select_lambda_cv_kernel(
    dataset: &Dataset,
    spec: &KernelSpec,
    cv: &CvConfig,
    seed: u64,
) -> Result<f64> {
    let errors = kernel_cv_errors(dataset, spec, cv, seed)?;
    Ok(argmin_lambda(&cv.grid, &errors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    CrossValidated(CvConfig),
    Fixed(f64),
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        Self::CrossValidated(CvConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub algorithms: Vec<Algorithm>,
    pub lambda: LambdaPolicy,
    /// Used by kernel-family algorithms; the bandwidth is resolved per block.
    pub kernel: KernelChoice,
    /// Also report sign-threshold classification error against ±1 labels.
    pub classification: bool,
}

impl StreamConfig {
    pub fn new(algorithms: Vec<Algorithm>) -> Self {
        Self {
            algorithms,
            lambda: LambdaPolicy::default(),
            kernel: KernelChoice::default(),
            classification: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmMetrics {
    pub name: String,
    pub mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// λ used on this block, per family.
    pub lambda: BTreeMap<Family, f64>,
    /// Test metrics of each algorithm's averaged model, in configuration order.
    pub metrics: Vec<AlgorithmMetrics>,
}

impl StepRecord {
    pub fn metric(&self, name: &str) -> Option<&AlgorithmMetrics> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamReport {
    pub seed: u64,
    pub config: StreamConfig,
    /// Number of independent streams averaged into `per_step`.
    pub repetitions: usize,
    pub per_step: Vec<StepRecord>,
}

impl StreamReport {
    pub fn final_mse(&self, name: &str) -> Option<f64> {
        self.mse_at(self.per_step.len(), name)
    }

    /// Test mse of `name` after block `t` (1-based).
    pub fn mse_at(&self, t: usize, name: &str) -> Option<f64> {
        let step = self.per_step.get(t.checked_sub(1)?)?;
        step.metric(name).map(|m| m.mse)
    }

    /// Element-wise mean of reports produced with the same configuration.
    pub fn mean(reports: &[StreamReport], seed: u64) -> Result<StreamReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::InvalidParameter("no reports to average".into()))?;
        let steps = first.per_step.len();
        if reports
            .iter()
            .any(|r| r.per_step.len() != steps || r.config != first.config)
        {
            return Err(Error::InvalidState("reports have different shapes".into()));
        }
        let count = reports.len() as f64;
        let per_step = (0..steps)
            .map(|s| {
                let template = &first.per_step[s];
                let lambda = template
                    .lambda
                    .keys()
                    .map(|fam| {
                        let sum: f64 = reports.iter().map(|r| r.per_step[s].lambda[fam]).sum();
                        (*fam, sum / count)
                    })
                    .collect();
                let metrics = template
                    .metrics
                    .iter()
                    .enumerate()
                    .map(|(a, m)| {
                        let mse = reports
                            .iter()
                            .map(|r| r.per_step[s].metrics[a].mse)
                            .sum::<f64>()
                            / count;
                        let classification_error = m.classification_error.map(|_| {
                            reports
                                .iter()
                                .map(|r| {
                                    r.per_step[s].metrics[a].classification_error.unwrap_or(0.0)
                                })
                                .sum::<f64>()
                                / count
                        });
                        AlgorithmMetrics {
                            name: m.name.clone(),
                            mse,
                            classification_error,
                        }
                    })
                    .collect();
                StepRecord {
                    t: template.t,
                    lambda,
                    metrics,
                }
            })
            .collect();
        Ok(StreamReport {
            seed,
            config: first.config.clone(),
            repetitions: reports.iter().map(|r| r.repetitions).sum(),
            per_step,
        })
    }
}

struct Track {
    algorithm: Algorithm,
    name: String,
    average: Option<AveragedModel>,
    // test predictions of `average`, maintained by the same recurrence
    test_pred: DVector<f64>,
}

/// Stateful driver for one stream: push blocks in arrival order.
pub struct BlockStream<'a> {
    config: &'a StreamConfig,
    test: &'a Dataset,
    seed: u64,
    tracks: Vec<Track>,
    per_step: Vec<StepRecord>,
}

impl<'a> BlockStream<'a> {
    pub fn new(config: &'a StreamConfig, test: &'a Dataset, seed: u64) -> Result<Self> {
        if config.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms configured".into()));
        }
        if let Some(bad) = config
            .algorithms
            .iter()
            .find(|a| a.family == Family::Kernel && a.order > 1)
        {
            return Err(Error::InvalidParameter(format!(
                "kernel models support correction order 0 or 1, got {}",
                bad.order
            )));
        }
        if let LambdaPolicy::Fixed(l) = config.lambda {
            check_lambda(l)?;
        }
        let tracks = config
            .algorithms
            .iter()
            .map(|&algorithm| Track {
                algorithm,
                name: algorithm.name(),
                average: None,
                test_pred: DVector::zeros(test.n()),
            })
            .collect();
        Ok(Self {
            config,
            test,
            seed,
            tracks,
            per_step: Vec::new(),
        })
    }

    pub fn steps(&self) -> usize {
        self.per_step.len()
    }

    /// Averaged model of each configured algorithm, in configuration order.
    pub fn models(&self) -> Vec<Option<&AveragedModel>> {
        self.tracks.iter().map(|t| t.average.as_ref()).collect()
    }

    pub fn push(&mut self, block: &Dataset) -> Result<&StepRecord> {
        let index = self.per_step.len();
        self.push_inner(block, index)
            .map_err(|e| e.at_block(index))?;
        Ok(self.per_step.last().expect("record was just pushed"))
    }

    fn choose_lambda(
        &self,
        block: &Dataset,
        family: Family,
        kernel: Option<&KernelSpec>,
        index: usize,
    ) -> Result<f64> {
        let cv = match &self.config.lambda {
            LambdaPolicy::Fixed(l) => return Ok(*l),
            LambdaPolicy::CrossValidated(cv) => cv,
        };
        let seed = derive_seed(self.seed, index as u64);
        match (family, kernel) {
            (Family::Kernel, Some(spec)) => select_lambda_cv_kernel(block, spec, cv, seed),
            _ => select_lambda_cv(block, cv, seed),
        }
    }

    fn push_inner(&mut self, block: &Dataset, index: usize) -> Result<()> {
        if block.p() != self.test.p() {
            return Err(Error::Shape(format!(
                "block has {} features but the test set has {}",
                block.p(),
                self.test.p()
            )));
        }
        let t = index + 1;
        let mut lambda = BTreeMap::new();
        let mut fresh: Vec<Option<FittedModel>> = vec![None; self.tracks.len()];

        if self
            .tracks
            .iter()
            .any(|tr| tr.algorithm.family == Family::Linear)
        {
            let l = self.choose_lambda(block, Family::Linear, None, index)?;
            let max_order = self
                .tracks
                .iter()
                .filter(|tr| tr.algorithm.family == Family::Linear)
                .map(|tr| tr.algorithm.order)
                .max()
                .unwrap_or(0);
            let path = linear::fit_path(block, l, max_order)?;
            for (slot, tr) in fresh.iter_mut().zip(&self.tracks) {
                if tr.algorithm.family == Family::Linear {
                    *slot = Some(FittedModel::Linear(
                        path[tr.algorithm.order as usize].clone(),
                    ));
                }
            }
            lambda.insert(Family::Linear, l);
        }

        if self
            .tracks
            .iter()
            .any(|tr| tr.algorithm.family == Family::Kernel)
        {
            let spec = self.config.kernel.resolve(block.features())?;
            let l = self.choose_lambda(block, Family::Kernel, Some(&spec), index)?;
            let system = KernelSystem::new(block.features(), spec)?;
            for (slot, tr) in fresh.iter_mut().zip(&self.tracks) {
                if tr.algorithm.family == Family::Kernel {
                    *slot = Some(FittedModel::Kernel(system.fit(
                        block.targets(),
                        l,
                        tr.algorithm.order,
                    )?));
                }
            }
            lambda.insert(Family::Kernel, l);
        }

        let tf = t as f64;
        let mut metrics = Vec::with_capacity(self.tracks.len());
        for (tr, model) in self.tracks.iter_mut().zip(fresh) {
            let model = model.expect("every track is fitted");
            let pred = model.predict(self.test.features())?;
            tr.test_pred = &tr.test_pred * ((tf - 1.0) / tf) + pred * (1.0 / tf);
            tr.average = Some(average_update(tr.average.take(), model, t)?);
            let m: Metrics = compute_metrics(
                tr.test_pred.as_slice(),
                self.test.targets().as_slice(),
                self.config.classification,
            )?;
            metrics.push(AlgorithmMetrics {
                name: tr.name.clone(),
                mse: m.mse,
                classification_error: m.classification_error,
            });
        }
        self.per_step.push(StepRecord { t, lambda, metrics });
        Ok(())
    }

    pub fn finish(self) -> StreamReport {
        StreamReport {
            seed: self.seed,
            config: self.config.clone(),
            repetitions: 1,
            per_step: self.per_step,
        }
    }
}

/// Runs every block through the stream and reports test metrics after each.
pub fn run_block_stream(
    blocks: &[Dataset],
    test: &Dataset,
    config: &StreamConfig,
    seed: u64,
) -> Result<StreamReport> {
    if blocks.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut stream = BlockStream::new(config, test, seed)?;
    for block in blocks {
        stream.push(block)?;
    }
    Ok(stream.finish())
}
