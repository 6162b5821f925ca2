//! Uplink spectral efficiency of multi-cell massive MIMO networks under four
//! interference-handling schemes: treating intercell interference as noise,
//! simultaneous decoding, time division, and an optimized hybrid, plus a
//! separate-linear-decoding baseline.
//!
//! Rates are computed in two regimes:
//!
//! * finite antennas — Monte Carlo over channel and attenuation realizations
//!   ([`finite`]);
//! * the massive-MIMO limit — closed fixed-point formulas driven by the
//!   asymptotic log-determinant functional V(A, beta) ([`rmt`], [`asymptotic`]).
//!
//! [`optimizer`] searches exhaustively over transmission-interval partitions
//! and per-interval decoding clusters for the hybrid scheme. All randomness is
//! drawn from counter-based substreams ([`rng`]), so every result is
//! reproducible from a single seed, serially or in parallel.

pub mod asymptotic;
pub mod error;
pub mod finite;
pub mod linalg;
pub mod network;
pub mod optimizer;
pub mod rmt;
pub mod rng;

pub use error::{Error, Result};
pub use network::{
    generate_attenuation, generate_attenuation_indexed, AttenuationDraw, NetworkConfig,
    ScenarioSpec, ScenarioVariant,
};
pub use rmt::{mp_value, solve_eta, EmpiricalDistribution, MpResult};
