//! Simulation and verification kernels for stochastic delay differential
//! equations with infinite fading-memory delay, driven by symmetric pure-jump
//! Lévy noise.
//!
//! The state of such an equation at time `t` is the whole history segment
//! `x_t(θ) = x(t + θ)`, `θ ≤ 0`, measured in the weighted sup-norm
//! `‖φ‖_r = sup e^{rθ}|φ(θ)|`. This crate provides the pieces needed to
//! simulate and probe these systems:
//!
//! * [`levy`]: symmetric Lévy measures, tail masses and band sampling;
//! * [`memory`]: history segments, delay measures and distributed-delay integrals;
//! * [`dynamics`]: drift functionals and the deterministic, truncated and
//!   interlaced integrators;
//! * [`conditions`]: checks of the dissipativity hypotheses and moment conditions;
//! * [`probes`]: Monte Carlo experiments producing structured reports.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod conditions;
pub mod dynamics;
mod error;
pub mod levy;
pub mod maps;
pub mod memory;
pub mod probes;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
