//! Directed information-flow networks among financial time series.
//!
//! Daily prices are turned into log returns, discretised into equal-width
//! symbols, and compared pairwise with symbolic transfer entropy. The net flow
//! between each pair orients one weighted edge of an information-flow network,
//! from which the outgoing and incoming maximum spanning arborescences and
//! their heaviest paths are extracted. The [`analysis`] module repeats this
//! over calendar years and around market turmoil windows.

pub mod analysis;
pub mod arborescence;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod network;
pub mod symbolize;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
