//! Entanglement classification of real pure qudit states.
//!
//! Two routes are provided and kept deliberately separate:
//!
//! - exact algebraic oracles in [`tensor`]: 1-flattenings, multilinear rank,
//!   the 2×2 determinant and the Cayley 2×2×2 hyperdeterminant;
//! - learned classifiers: seeded samplers for every labeled class
//!   ([`sampling`]), a dense feed-forward engine with Nadam ([`nn`]), a
//!   training harness with the experiment registry ([`training`]) and the
//!   SLOCC orbit-vote prediction protocol ([`classify`]).
//!
//! Datasets and models are persisted in a line-oriented text format, see [`io`].
//!
//! States are stored in row-major order: the leftmost ket digit is the first
//! particle and the slowest-varying index, so `|i₁i₂…iₙ⟩` sits at
//! `i₁·dⁿ⁻¹ + … + iₙ`.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod io;
pub mod linalg;
pub mod nn;
pub mod sampling;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{QuditState, Shape};
