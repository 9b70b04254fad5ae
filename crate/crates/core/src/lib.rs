//! Batch-order-fair transaction ordering, the Condorcet attack against it,
//! and three mitigations, together with a seeded discrete-event simulator
//! for measuring all of them.

pub mod attack;
pub mod batchorder;
pub mod depgraph;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod netsim;

pub use error::{Error, Result};
