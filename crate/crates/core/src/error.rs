use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("rejected input: {0}")]
    InvalidInput(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("checkpoint integrity: {0}")]
    Integrity(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate score: {0}")]
    DegenerateScore(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("training diverged: non-finite loss at step {step}")]
    Diverged { step: u64 },
    #[error("run budget exceeded: {required} runs required, budget is {budget}")]
    Budget { required: u128, budget: u128 },
}

#[macro_export]
#[doc(hidden)]
macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
