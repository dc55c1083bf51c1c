//! Library identification for vulnerability reports.

pub mod config;
pub mod corpus;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod features;
pub mod learner;
pub mod pipeline;
pub mod service;
pub mod synthetic;
pub mod temporal;

pub use corpus::{Dataset, Label, LabelId, VulnerabilityReport};
pub use error::{Error, Result};
