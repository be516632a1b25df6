//! Seeded inputs shared by the benchmarks.

use bcreg_core::experiments::{synth_block, ModelId, SineTask, SyntheticSpec};
use bcreg_core::seeding::rng_from_seed;
use bcreg_core::Dataset;

/// `blocks` Model 1 blocks of `n` rows plus a 1000-row test set.
pub fn linear_stream(n: usize, blocks: usize) -> (Vec<Dataset>, Dataset) {
    let spec = SyntheticSpec::new(ModelId::Model1, n);
    let mut rng = rng_from_seed(42);
    let data = (0..blocks).map(|_| synth_block(&spec, &mut rng)).collect();
    (data, spec.sample(1000, &mut rng))
}

/// `blocks` sine-task blocks of `n` rows plus a 500-row test set.
pub fn sine_stream(n: usize, blocks: usize) -> (Vec<Dataset>, Dataset) {
    let task = SineTask::default();
    let mut rng = rng_from_seed(42);
    let data = (0..blocks)
        .map(|_| task.sample(n, &mut rng).expect("valid task"))
        .collect();
    (data, task.sample(500, &mut rng).expect("valid task"))
}
