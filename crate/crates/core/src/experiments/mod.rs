//! Synthetic data, Monte-Carlo estimation and evaluation protocols.

pub mod metrics;
pub mod montecarlo;
pub mod protocol;
pub mod synthetic;

pub use metrics::{compute_metrics, Metrics};
pub use montecarlo::{
    averaged_decomposition, monte_carlo_bias_variance, monte_carlo_sweep, BiasVarianceReport,
    DecompositionPoint,
};
pub use protocol::{chunked_stream, sine_stream, slice_into_chunks, synthetic_stream};
pub use synthetic::{synth_block, ModelId, SineTask, SyntheticSpec, SYNTHETIC_DIM};
