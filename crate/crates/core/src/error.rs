use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no retained days left after cleaning")]
    EmptyDataset,
    #[error("day {day}: {present} glucose readings, at least 2 needed to interpolate")]
    Interpolation { day: i64, present: usize },
    #[error("{days} retained days, at least 4 needed for a train/valid/test split")]
    InsufficientDays { days: usize },
    #[error("channel `{0}` has zero variance on the training days")]
    DegenerateScale(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("matrix is not positive definite (pivot {pivot}); try a larger noise/penalty")]
    NotPositiveDefinite { pivot: usize },
    #[error("SMO did not converge in {iterations} iterations (max KKT violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
}
