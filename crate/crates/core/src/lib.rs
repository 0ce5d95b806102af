//! Random key graphs as produced by Eschenauer–Gligor key predistribution.
//!
//! Each of `n` nodes draws a ring of `K` distinct keys uniformly from a pool of
//! `P` keys; two nodes are adjacent when their rings share a key. The crate
//! provides:
//!
//! * [`model`]: parameters, ring sampling and graph construction,
//! * [`analysis`]: connectivity, isolated nodes and subset events on one graph,
//! * [`combinatorics`]: exact and log-space probabilities and finite-n bounds,
//! * [`scaling`]: parameter scalings, deviation function and reduction,
//! * [`montecarlo`]: seeded parallel estimators, enumeration oracle and sweeps,
//! * [`audit`]: a grid audit of every implemented inequality.

pub mod analysis;
pub mod audit;
pub mod combinatorics;
mod dsu;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod scaling;

pub use error::{Error, Result};
pub use model::{KeyGraph, KeyRing, Seed, Theta};
