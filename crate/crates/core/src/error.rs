use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "gibbs rejection budget of {attempts} attempts exhausted (estimated acceptance {acceptance:.3e})"
    )]
    RejectionBudget { attempts: u64, acceptance: f64 },

    #[error("event cap of {cap} collisions exceeded before t = {time} (replica seed {seed:?})")]
    EventCap {
        cap: usize,
        time: f64,
        seed: Option<u64>,
    },

    #[error("triple contact at t = {time}: pairs {first:?} and {second:?} share a particle")]
    TripleContact {
        time: f64,
        first: (usize, usize),
        second: (usize, usize),
    },

    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    #[error("truncated series tail bound {bound:.3e} above tolerance {tolerance:.1e}; use at least {required} terms")]
    SeriesTail {
        bound: f64,
        tolerance: f64,
        required: usize,
    },

    #[error("non-finite weight in tree sample {sample}")]
    NonFiniteWeight { sample: usize },

    #[error("{failed} of {total} replicas aborted (more than 1%): first error: {first}")]
    TooManyAborts {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
