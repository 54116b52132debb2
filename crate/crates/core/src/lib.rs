//! Simulation and large-deviation analysis of monitored quantum East circuits.
//!
//! The model is a brickwork circuit of kinetically constrained East gates
//! `exp(-i ω n_{i-1} σ^x_i)` interleaved with weak ancilla-assisted measurements of
//! strength `γ` on every qubit. At `γ = π/2` the measurements are projective and
//! the dynamics reduce to the classical stochastic Floquet-East chain; at `γ = 0`
//! the evolution is purely unitary.
//!
//! Everything here is dense and exact: state vectors up to ~12 qubits and density
//! matrices up to ~10 qubits (see [`DenseLimits`]).
//!
//! Module map:
//! - [`params`], [`basis`], [`record`], [`rng`], [`state`], [`io`]: shared types.
//! - [`circuit`]: gates, Kraus operators, trajectory sampling and channels.
//! - [`large_deviations`]: tilted partition functions, SCGF, activity and `s*`.
//! - [`classical`]: the `γ = π/2` Markov chain, tilted matrices and power iteration.
//! - [`clusters`]: inactive space-time cluster free energies and the crossover time.
//! - [`effective`]: the perturbative classical East model near `γ = π/2`.

pub mod basis;
pub mod circuit;
pub mod classical;
pub mod clusters;
pub mod effective;
mod error;
pub mod io;
pub mod large_deviations;
pub mod linalg;
pub mod params;
pub mod record;
pub mod rng;
pub mod state;

pub use basis::{occupation_count, BasisConfiguration};
pub use error::{Error, Result};
pub use params::{CircuitParams, DenseLimits};
pub use record::{activity, MeasurementRecord};
pub use state::{maximally_mixed_state, DensityMatrix, StateVector};
