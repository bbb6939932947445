use thiserror::Error;

use crate::tensor::VectorType;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("PDB parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no ATOM records found")]
    NoAtoms,

    #[error("residue {residue} lacks atom {atom} needed for {context}")]
    MissingAtom {
        residue: i32,
        atom: &'static str,
        context: &'static str,
    },

    #[error("residue {0} not present in structure")]
    UnknownResidue(i32),

    #[error("structures differ: {0}")]
    Mismatch(String),

    #[error("too few matched RDCs: need at least {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("no observations for vector type {0}")]
    EmptyType(VectorType),

    #[error(
        "infeasible model: {media} media give {} equations but {states} states need {} parameters (require 5m >= 4n - 1)",
        5 * media,
        (4 * states).saturating_sub(1)
    )]
    Infeasible { media: usize, states: usize },

    #[error("no optimizer start converged ({tried} tried, best objective {best_objective:e})")]
    NoConvergence { tried: usize, best_objective: f64 },

    #[error("entry {0} not found in remote repository")]
    NotFound(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("network access disabled and {0} is not cached")]
    Offline(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
