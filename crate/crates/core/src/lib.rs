//! Deterministic federated-learning simulator for studying robust
//! aggregation under adversarial clients.
//!
//! The crate provides a tabular data pipeline, logistic-regression local
//! training, five attack behaviors, classical robust aggregators (Krum,
//! Multi-Krum, Bulyan, coordinate median, trimmed mean, geometric median),
//! a hybrid reputation-weighted aggregator, and an experiment harness with
//! sweeps, ablations, paired t-tests, and CSV result emission. Every
//! source of randomness derives from an explicit master seed, so any
//! experiment re-runs bit-identically.

pub mod adversary;
pub mod aggregators;
pub mod config;
pub mod data;
pub mod error;
pub mod hra;
pub mod metrics;
pub mod model;
pub mod report;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
