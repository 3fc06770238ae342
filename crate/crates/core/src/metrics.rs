use alloc::string::String;

/// One row of a run's metrics stream. Regular rows have an empty `event`;
/// schedule transitions are recorded as extra rows with `event` set.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub epoch: u64,
    pub step: u64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub l2_norm: f64,
    pub k_current: usize,
    /// Gradual-cascade progress; 0 for runs without a gradual schedule.
    pub t: f64,
    pub wall_seconds: f64,
    pub event: String,
}

impl MetricsRecord {
    pub fn is_event(&self) -> bool {
        !self.event.is_empty()
    }
}

/// Source of elapsed time for the `wall_seconds` column.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Always reports zero; keeps runs byte-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}
