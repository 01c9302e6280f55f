//! Stigmergic ant-colony clustering of web-usage statistics combined with
//! linear genetic programming for traffic trend prediction.
//!
//! The crate is organized along the processing chain:
//!
//! * [`weblog`]: ingestion, normalization, cluster re-indexing, splitting,
//!   synthetic data.
//! * [`grid`]: the toroidal substrate with its pheromone field.
//! * [`antcluster`]: the colony simulation and cluster read-off.
//! * [`lgp`]: 32-bit instruction register machine and deme-based
//!   steady-state evolution.
//! * [`pipeline`]: end-to-end orchestration and ablation comparison.
//!
//! With the default `parallel` feature, multi-seed sweeps, deme evolution
//! and population evaluation run on rayon; results are identical either way.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antcluster;
pub mod config;
pub mod error;
pub mod grid;
pub mod lgp;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod weblog;

pub use error::{Error, Result};
