//! Repeated streaming experiments on synthetic and user-supplied data.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::experiments::synthetic::{SineTask, SyntheticSpec};
use crate::seeding::{derive_seed, derived_rng, rng_from_seed};
use crate::streaming::{run_block_stream, StreamConfig, StreamReport};

/// Randomly permutes the rows and cuts them into `m` chunks of `⌊n/m⌋` rows.
/// The `n mod m` leftover rows are dropped.
pub fn slice_into_chunks<R: Rng + ?Sized>(
    dataset: &Dataset,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Dataset>> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "chunk count must be positive".into(),
        ));
    }
    if dataset.n() < m {
        return Err(Error::InsufficientData {
            needed: m,
            got: dataset.n(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.n()).collect();
    order.shuffle(rng);
    let size = dataset.n() / m;
    order
        .chunks_exact(size)
        .take(m)
        .map(|rows| dataset.select_rows(rows))
        .collect()
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidParameter(
            "repetitions must be positive".into(),
        ));
    }
    Ok(())
}

/// Averages `reps` independent synthetic streams of `blocks` blocks with
/// `spec.n` rows each, evaluated on a fresh noisy test set per repetition.
pub fn synthetic_stream(
    spec: &SyntheticSpec,
    blocks: usize,
    test_size: usize,
    config: &StreamConfig,
    reps: usize,
) -> Result<StreamReport> {
    spec.validate()?;
    check_reps(reps)?;
    let reports: Vec<StreamReport> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(spec.seed, r as u64);
            let mut rng = rng_from_seed(rep_seed);
            let data: Vec<Dataset> = (0..blocks).map(|_| spec.sample(spec.n, &mut rng)).collect();
            let test = spec.sample(test_size, &mut rng);
            run_block_stream(&data, &test, config, derive_seed(rep_seed, 1))
        })
        .collect::<Result<_>>()?;
    StreamReport::mean(&reports, spec.seed)
}

/// Same protocol as [`synthetic_stream`] on the one-dimensional sine task.
pub fn sine_stream(
    task: &SineTask,
    block_size: usize,
    blocks: usize,
    test_size: usize,
    config: &StreamConfig,
    reps: usize,
    seed: u64,
) -> Result<StreamReport> {
    check_reps(reps)?;
    let reports: Vec<StreamReport> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r as u64);
            let mut rng = rng_from_seed(rep_seed);
            let data = (0..blocks)
                .map(|_| task.sample(block_size, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let test = task.sample(test_size, &mut rng)?;
            run_block_stream(&data, &test, config, derive_seed(rep_seed, 1))
        })
        .collect::<Result<_>>()?;
    StreamReport::mean(&reports, seed)
}

/// Real-data protocol: each run slices the data into `chunks` equal chunks
/// and streams them in order. Without a separate `test` set one random chunk
/// per run is held out for testing.
pub fn chunked_stream(
    dataset: &Dataset,
    test: Option<&Dataset>,
    chunks: usize,
    runs: usize,
    config: &StreamConfig,
    seed: u64,
) -> Result<StreamReport> {
    check_reps(runs)?;
    if test.is_none() && chunks < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 chunks: one for testing, one to stream".into(),
        ));
    }
    let reports: Vec<StreamReport> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = derived_rng(seed, r as u64);
            let mut parts = slice_into_chunks(dataset, chunks, &mut rng)?;
            let stream_seed = derive_seed(seed, r as u64 ^ (1 << 63));
            match test {
                Some(test) => run_block_stream(&parts, test, config, stream_seed),
                None => {
                    let held_out = rng.random_range(0..parts.len());
                    let test = parts.remove(held_out);
                    run_block_stream(&parts, &test, config, stream_seed)
                }
            }
        })
        .collect::<Result<_>>()?;
    StreamReport::mean(&reports, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::synthetic::ModelId;
    use crate::streaming::{Algorithm, CvConfig, LambdaPolicy};

    fn numbered(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        Dataset::from_rows(&rows, (0..n).map(|i| i as f64 * 10.0).collect()).unwrap()
    }

    fn row_ids(chunks: &[Dataset]) -> Vec<usize> {
        let mut ids: Vec<usize> = chunks
            .iter()
            .flat_map(|c| {
                c.features()
                    .column(0)
                    .iter()
                    .map(|v| *v as usize)
                    .collect::<Vec<_>>()
            })
            .collect();
        ids.sort_unstable();
        ids
    }

    #[test]
    fn chunk_sizes() {
        let c = slice_into_chunks(&numbered(200), 20, &mut rng_from_seed(0)).unwrap();
        assert_eq!(c.len(), 20);
        assert!(c.iter().all(|d| d.n() == 10));

        let c = slice_into_chunks(&numbered(203), 20, &mut rng_from_seed(0)).unwrap();
        assert_eq!(c.len(), 20);
        assert!(c.iter().all(|d| d.n() == 10));
        let ids = row_ids(&c);
        assert_eq!(ids.len(), 200);
        ids.windows(2).for_each(|w| assert!(w[0] < w[1]));
        assert!(ids.iter().all(|&i| i < 203));
    }

    #[test]
    fn single_chunk_is_a_permutation() {
        let c = slice_into_chunks(&numbered(17), 1, &mut rng_from_seed(3)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(row_ids(&c), (0..17).collect::<Vec<_>>());
        for (x, y) in c[0].features().iter().zip(c[0].targets().iter()) {
            assert_eq!(*y, *x * 10.0);
        }
    }

    #[test]
    fn too_many_chunks() {
        assert!(matches!(
            slice_into_chunks(&numbered(5), 6, &mut rng_from_seed(0)),
            Err(Error::InsufficientData { needed: 6, got: 5 })
        ));
    }

    #[test]
    fn chunked_stream_runs() {
        let spec = SyntheticSpec::new(ModelId::Model1, 400);
        let data = spec.sample(400, &mut rng_from_seed(8));
        let mut config = StreamConfig::new(vec![Algorithm::linear(0), Algorithm::linear(1)]);
        config.lambda = LambdaPolicy::CrossValidated(CvConfig {
            grid: vec![1e-3, 1e-2, 1e-1],
            folds: 5,
        });
        let report = chunked_stream(&data, None, 10, 3, &config, 1).unwrap();
        assert_eq!(report.per_step.len(), 9);
        assert_eq!(report.repetitions, 3);
        assert_eq!(
            report,
            chunked_stream(&data, None, 10, 3, &config, 1).unwrap()
        );

        let test = spec.sample(50, &mut rng_from_seed(9));
        let report = chunked_stream(&data, Some(&test), 10, 2, &config, 1).unwrap();
        assert_eq!(report.per_step.len(), 10);
    }
}
