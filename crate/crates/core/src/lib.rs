//! Numerical laboratory for fractional-volume probabilities, the entropy and
//! information calculus of coarse-grained descriptions, and ensemble models of
//! quantum measurement, plus two classical companion experiments (a toppling
//! balanced body and a spin echo).
//!
//! Entropies are in nats throughout and Boltzmann's constant is 1.
//!
//! | module | contents |
//! |--------|----------|
//! | [`probcore`] | discrete distributions, entropy, hierarchical decomposition, information, canonical distribution |
//! | [`randomfield`] | homogeneous Gaussian random fields, indicator fields, hierarchical averages, one- and two-point probabilities |
//! | [`quantum`] | state vectors, observables, density operators, macrostate projectors |
//! | [`measurement`] | random-phase apparatus ensembles, premeasurement, outcome fractions, entropy ledger |
//! | [`conefall`] | inverted spherical pendulum ensembles and a Liouville volume check |
//! | [`spinecho`] | dephasing and refocusing of phase oscillators |

pub mod conefall;
pub mod error;
pub mod measurement;
pub mod probcore;
pub mod quantum;
pub mod randomfield;
pub mod rng;
pub mod spinecho;
pub mod stats;

pub use error::{Error, Result};

/// Logarithm base used for every entropy and information value.
pub const LOG_BASE: &str = "e (nats)";
