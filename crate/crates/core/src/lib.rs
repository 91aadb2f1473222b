//! Simulation and analysis of PP84, a two-way deterministic quantum
//! communication protocol built on the four BB84 states.
//!
//! The crate has two independent halves that are checked against each
//! other: a state-vector Monte Carlo engine ([`protocol`], [`attacks`],
//! [`qmath`]) and the closed-form security results ([`analytics`]).
//! [`stats`] and [`validation`] turn simulated counts into estimates and
//! compare them with the formulas.

pub mod alphabet;
pub mod analytics;
pub mod attacks;
pub mod cli;
pub mod error;
pub mod protocol;
pub mod qmath;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
