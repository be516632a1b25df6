use std::collections::BTreeMap;
use std::fs;

use bcreg_core::experiments::{
    chunked_stream, compute_metrics, monte_carlo_sweep, sine_stream, slice_into_chunks,
    synthetic_stream, Metrics, ModelId, SineTask, SyntheticSpec,
};
use bcreg_core::kernel::{self, BandwidthPolicy, KernelChoice};
use bcreg_core::linear;
use bcreg_core::seeding::rng_from_seed;
use bcreg_core::streaming::{
    log_grid, select_lambda_cv, select_lambda_cv_kernel, Algorithm, CvConfig, LambdaPolicy,
    StreamConfig, StreamReport,
};
use bcreg_core::Dataset;
use serde_json::{json, Value};

use crate::args::{
    BiasVarianceArgs, ChunksArgs, Command, CvArgs, FamilyArg, FitArgs, KernelArgs, KernelKindArg,
    KernelStreamArgs, StreamArgs,
};
use crate::csvio::{parse_csv_dataset, read_csv_dataset, write_csv_dataset};
use crate::error::{CliError, Result};
use crate::output::{num, Outcome, Table};

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Fit(a) => fit(a),
        Command::BiasVariance(a) => bias_variance(a),
        Command::Stream(a) => stream(a),
        Command::KernelStream(a) => kernel_stream(a),
        Command::Chunks(a) => chunks(a, command),
    }
}

fn cv_config(cv: &CvArgs) -> Result<CvConfig> {
    Ok(CvConfig {
        grid: grid_from(&cv.grid, "--grid")?,
        folds: cv.folds,
    })
}

fn grid_from(spec: &[f64], flag: &str) -> Result<Vec<f64>> {
    match spec {
        &[lo, hi, count] if lo > 0.0 && hi >= lo && count >= 1.0 && count.fract() == 0.0 => {
            Ok(log_grid(lo, hi, count as usize))
        }
        _ => Err(CliError::Argument(format!(
            "{flag} expects lo,hi,count with 0 < lo <= hi and an integer count"
        ))),
    }
}

fn kernel_choice(k: &KernelArgs) -> Result<KernelChoice> {
    Ok(match k.kind {
        KernelKindArg::Gaussian => {
            let bandwidth = if k.bandwidth.eq_ignore_ascii_case("median") {
                BandwidthPolicy::Median
            } else {
                let h: f64 = k.bandwidth.parse().map_err(|_| {
                    CliError::Argument(format!(
                        "--bandwidth must be `median` or a number, got {:?}",
                        k.bandwidth
                    ))
                })?;
                BandwidthPolicy::Fixed(h)
            };
            KernelChoice::Gaussian { bandwidth }
        }
        KernelKindArg::Linear => KernelChoice::Linear,
        KernelKindArg::Polynomial => KernelChoice::Polynomial {
            degree: k.degree,
            offset: k.offset,
        },
    })
}

fn lambda_policy(fixed: Option<f64>, cv: &CvArgs) -> Result<LambdaPolicy> {
    Ok(match fixed {
        Some(l) => LambdaPolicy::Fixed(l),
        None => LambdaPolicy::CrossValidated(cv_config(cv)?),
    })
}

fn metrics_json(m: &Metrics) -> Value {
    serde_json::to_value(m).expect("metrics serialize")
}

fn push_metrics(table: &mut Table, prefix: &str, m: &Metrics) {
    table.push(vec![format!("{prefix}_mse"), num(m.mse)]);
    if let Some(c) = m.classification_error {
        table.push(vec![format!("{prefix}_classification_error"), num(c)]);
    }
}

fn fit(a: &FitArgs) -> Result<Outcome> {
    let data = match (&a.input, a.model) {
        (Some(path), _) => parse_csv_dataset(path)?,
        (None, Some(model)) => {
            let spec = SyntheticSpec::new(ModelId::from_index(model)?, a.n).with_snr(a.snr);
            spec.validate()?;
            spec.sample(a.n, &mut rng_from_seed(a.seed))
        }
        (None, None) => {
            return Err(CliError::Argument(
                "either --input or --model is required".into(),
            ))
        }
    };
    let test = a.test.as_deref().map(parse_csv_dataset).transpose()?;
    let mut table = Table::new(["name", "value"]);

    let (results, train_pred, test_pred) = match a.family {
        FamilyArg::Linear => {
            let lambda = match a.lambda {
                Some(l) => l,
                None => select_lambda_cv(&data, &cv_config(&a.cv)?, a.seed)?,
            };
            let model = linear::fit_regularized(&data, lambda, a.order)?;
            table.push(vec!["lambda".into(), num(lambda)]);
            table.push(vec!["order".into(), a.order.to_string()]);
            table.push(vec!["intercept".into(), num(model.intercept)]);
            for (i, w) in model.weights.iter().enumerate() {
                table.push(vec![format!("w{}", i + 1), num(*w)]);
            }
            let train_pred = model.predict(data.features())?;
            let test_pred = test
                .as_ref()
                .map(|t| model.predict(t.features()))
                .transpose()?;
            let results = json!({
                "family": "linear",
                "name": Algorithm::linear(a.order).name(),
                "lambda": lambda,
                "order": a.order,
                "intercept": model.intercept,
                "weights": model.weights.as_slice(),
            });
            (results, train_pred, test_pred)
        }
        FamilyArg::Kernel => {
            let spec = kernel_choice(&a.kernel)?.resolve(data.features())?;
            let lambda = match a.lambda {
                Some(l) => l,
                None => select_lambda_cv_kernel(&data, &spec, &cv_config(&a.cv)?, a.seed)?,
            };
            let model = kernel::fit_kernel_regularized(&data, &spec, lambda, a.order)?;
            table.push(vec!["lambda".into(), num(lambda)]);
            table.push(vec!["order".into(), a.order.to_string()]);
            for (i, c) in model.coeffs.iter().enumerate() {
                table.push(vec![format!("c{}", i + 1), num(*c)]);
            }
            let train_pred = model.predict(data.features())?;
            let test_pred = test
                .as_ref()
                .map(|t| model.predict(t.features()))
                .transpose()?;
            let results = json!({
                "family": "kernel",
                "name": Algorithm::kernel(a.order).name(),
                "kernel": spec,
                "lambda": lambda,
                "order": a.order,
                "coefficients": model.coeffs.as_slice(),
            });
            (results, train_pred, test_pred)
        }
    };

    let mut results = results;
    let train = compute_metrics(
        train_pred.as_slice(),
        data.targets().as_slice(),
        a.classification,
    )?;
    push_metrics(&mut table, "train", &train);
    results["train"] = metrics_json(&train);
    if let (Some(t), Some(pred)) = (&test, &test_pred) {
        let m = compute_metrics(pred.as_slice(), t.targets().as_slice(), a.classification)?;
        push_metrics(&mut table, "test", &m);
        results["test"] = metrics_json(&m);
    }
    Ok(Outcome { results, table })
}

fn bias_variance(a: &BiasVarianceArgs) -> Result<Outcome> {
    let lambdas = match &a.lambda_grid {
        Some(g) => grid_from(g, "--lambda-grid")?,
        None => a.lambda.clone(),
    };
    let spec = SyntheticSpec::new(ModelId::from_index(a.model)?, a.n)
        .with_snr(a.snr)
        .with_seed(a.seed);
    let reports = monte_carlo_sweep(&spec, &lambdas, &a.order, a.reps)?;
    let profile = spec.profile();

    let mut table = Table::new([
        "lambda",
        "order",
        "n",
        "reps",
        "bias_norm",
        "variance",
        "mse",
        "asymptotic_bias",
    ]);
    let mut rows = Vec::with_capacity(reports.len());
    for r in &reports {
        let limit = linear::asymptotic_bias(&profile, r.lambda, r.order)?;
        table.push(vec![
            num(r.lambda),
            r.order.to_string(),
            r.n.to_string(),
            r.reps.to_string(),
            num(r.bias_norm),
            num(r.variance),
            num(r.mse),
            num(limit),
        ]);
        let mut v = serde_json::to_value(r).expect("report serializes");
        v["name"] = json!(Algorithm::linear(r.order).name());
        v["asymptotic_bias"] = json!(limit);
        rows.push(v);
    }
    Ok(Outcome {
        results: json!({ "reports": rows }),
        table,
    })
}

/// Plot-ready layout: one array per algorithm indexed by `t - 1`.
pub fn stream_results(report: &StreamReport) -> (Value, Table) {
    let mut series = serde_json::Map::new();
    let names: Vec<String> = report
        .per_step
        .first()
        .map(|s| s.metrics.iter().map(|m| m.name.clone()).collect())
        .unwrap_or_default();
    for (a, name) in names.iter().enumerate() {
        let mse: Vec<f64> = report.per_step.iter().map(|s| s.metrics[a].mse).collect();
        let mut entry = json!({ "mse": mse });
        if report.per_step[0].metrics[a].classification_error.is_some() {
            let ce: Vec<f64> = report
                .per_step
                .iter()
                .map(|s| s.metrics[a].classification_error.unwrap_or(f64::NAN))
                .collect();
            entry["classification_error"] = json!(ce);
        }
        series.insert(name.clone(), entry);
    }
    let mut lambda: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for step in &report.per_step {
        for (fam, l) in &step.lambda {
            let key = serde_json::to_value(fam)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            lambda.entry(key).or_default().push(*l);
        }
    }

    let mut table = Table::new(["t", "algorithm", "mse", "classification_error", "lambda"]);
    for step in &report.per_step {
        let l = step.lambda.values().next().copied().unwrap_or(f64::NAN);
        for m in &step.metrics {
            table.push(vec![
                step.t.to_string(),
                m.name.clone(),
                num(m.mse),
                m.classification_error.map(num).unwrap_or_default(),
                num(l),
            ]);
        }
    }

    let results = json!({
        "steps": report.per_step.len(),
        "repetitions": report.repetitions,
        "series": series,
        "lambda": lambda,
        "report": report,
    });
    (results, table)
}

fn stream(a: &StreamArgs) -> Result<Outcome> {
    let mut config = StreamConfig::new(a.orders.iter().map(|&k| Algorithm::linear(k)).collect());
    config.lambda = lambda_policy(a.lambda, &a.cv)?;
    config.classification = a.classification;

    let report = match &a.input {
        Some(path) => {
            let data = parse_csv_dataset(path)?;
            let test = a.test.as_deref().map(parse_csv_dataset).transpose()?;
            chunked_stream(
                &data,
                test.as_ref(),
                a.chunks,
                a.reps.unwrap_or(20),
                &config,
                a.seed,
            )?
        }
        None => {
            let model = a.model.ok_or_else(|| {
                CliError::Argument("either --input or --model is required".into())
            })?;
            let spec = SyntheticSpec::new(ModelId::from_index(model)?, a.block_size)
                .with_snr(a.snr)
                .with_seed(a.seed);
            synthetic_stream(&spec, a.blocks, a.test_size, &config, a.reps.unwrap_or(100))?
        }
    };
    let (results, table) = stream_results(&report);
    Ok(Outcome { results, table })
}

fn kernel_stream(a: &KernelStreamArgs) -> Result<Outcome> {
    let mut config = StreamConfig::new(a.orders.iter().map(|&k| Algorithm::kernel(k)).collect());
    config.lambda = lambda_policy(a.lambda, &a.cv)?;
    config.kernel = kernel_choice(&a.kernel)?;
    config.classification = a.classification;

    let report = match &a.input {
        Some(path) => {
            let data = parse_csv_dataset(path)?;
            let test = a.test.as_deref().map(parse_csv_dataset).transpose()?;
            chunked_stream(&data, test.as_ref(), a.chunks, a.reps, &config, a.seed)?
        }
        None => {
            let task = SineTask {
                snr: a.snr,
                ..SineTask::default()
            };
            sine_stream(
                &task,
                a.block_size,
                a.blocks,
                a.test_size,
                &config,
                a.reps,
                a.seed,
            )?
        }
    };
    let (results, table) = stream_results(&report);
    Ok(Outcome { results, table })
}

fn chunks(a: &ChunksArgs, command: &Command) -> Result<Outcome> {
    let (header, data): (Vec<String>, Dataset) = read_csv_dataset(&a.input)?;
    let parts = slice_into_chunks(&data, a.m, &mut rng_from_seed(a.seed))?;
    fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    let mut table = Table::new(["chunk", "file", "rows"]);
    let mut files = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let name = format!("chunk_{i:03}.csv");
        write_csv_dataset(&a.out.join(&name), &header, part)?;
        table.push(vec![i.to_string(), name.clone(), part.n().to_string()]);
        files.push(json!({ "file": name, "rows": part.n() }));
    }
    let results = json!({
        "chunks": files,
        "rows_per_chunk": data.n() / a.m,
        "dropped_rows": data.n() % a.m,
    });
    let outcome = Outcome { results, table };
    let manifest = crate::output::render(command, &outcome, crate::args::OutputFormat::Json)?;
    let path = a.out.join("manifest.json");
    fs::write(&path, manifest).map_err(|source| CliError::Io { path, source })?;
    Ok(outcome)
}
