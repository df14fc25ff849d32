//! Quantum annealing of a uniformly coupled spin ensemble in a transverse field,
//! and the analysis needed to use its near-critical ground states as probes for
//! noisy phase estimation.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs, so parameter sweeps can fan out freely from a std front end.
//!
//! Module map:
//!
//! - [`spin`]: the (N+1)-dimensional symmetric-sector Hamiltonian, its
//!   parity-split tridiagonal diagonalization and ground-state moments.
//! - [`continuum`]: the variable-mass 1D Schrödinger mapping, the scale-free
//!   quartic oscillator and the critical landmarks `a_0`, `a_F`.
//! - [`metrology`]: collective dephasing, exact QFI by density-matrix
//!   diagonalization, the asymptotic action and closed-form error bounds.
//! - [`anneal`]: Crank–Nicolson evolution under a linear schedule and the
//!   adiabatic time estimate.
//! - [`entanglement`]: global geometric entanglement against spin-coherent states.
//! - [`quench`]: sudden-quench probes, QFI landscapes and seeded global search.
#![no_std]
// `num_traits::Float` supplies float math without std. When another crate in
// the build enables num-traits' `std` feature those imports become redundant.
#![allow(unused_imports)]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is deliberate: it rejects NaN too. Matrix kernels index by
// row and column.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod anneal;
pub mod continuum;
pub mod entanglement;
mod error;
pub mod linalg;
pub mod metrology;
pub mod optimize;
pub mod quench;
pub mod spin;

pub use error::{Error, Result};
pub use spin::{AnnealPoint, EnsembleParams, Parity, SpectrumResult, TridiagonalHamiltonian};
