//! Sum augmentation: mixing K samples per input, the gradually cascading
//! coefficient function, and the cascade / gradual training schedules.

mod coefficients;
mod domain;
mod gcc;
mod mix;
mod schedule;

pub use coefficients::{sample_coefficients, CoefficientSource};
pub use domain::{domain_size, total_domain_size};
pub use gcc::{gcc, CoefficientVector};
pub use mix::{mix_batch_average, mix_batch_weighted, MixedBatch};
pub use schedule::{
    run_cascade, run_gradual_cascade, spike_flags, CascadeConfig, CascadeOutcome, GradualConfig, StageSummary,
};
