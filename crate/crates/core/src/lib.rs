//! Ordinal category estimation by noisy binary search.
//!
//! The library breaks the problem into small pieces: a boundary scale and
//! item model ([`domain`]), noisy pairwise comparison oracles ([`oracle`]),
//! a trainable comparator that backs the interesting oracle
//! ([`comparator`]), the two search algorithms plus comparison budget
//! allocation ([`search`]), synthetic data ([`datagen`]), linear reference
//! models ([`baselines`]), ordinal metrics ([`metrics`]), and a
//! reproducible experiment harness with CSV reports ([`experiment`]).

pub mod baselines;
pub mod comparator;
mod csvfmt;
pub mod datagen;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod search;

pub use error::{Error, Result};
