use thiserror::Error;

use crate::model::TxId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown transaction id `{0}`")]
    UnknownTransaction(TxId),

    #[error("duplicate transaction id `{0}`")]
    DuplicateTransaction(TxId),

    #[error("invalid transaction: {0}")]
    InvalidTransaction(String),

    #[error("no local orderings supplied")]
    NoOrderings,

    #[error("local orderings disagree on the transaction set (node {node})")]
    MismatchedOrderings { node: usize },

    #[error("not a tournament: {0}")]
    NotTournament(String),

    #[error("component of size {0} is not strongly connected")]
    NotStronglyConnected(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid attack plan: {0}")]
    InvalidPlan(String),

    #[error("committee too small: need at least {needed} nodes, got {got}")]
    CommitteeTooSmall { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown batch-ordering scheme `{0}`")]
    UnknownScheme(String),

    #[error("post-decryption ordering needs the transaction registry")]
    MissingRegistry,

    #[error("malformed record: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
