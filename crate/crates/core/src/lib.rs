//! Exact statevector simulation of block-structured variational and reservoir
//! quantum circuits whose parameters are drawn by Fourier sampling, together
//! with the norms, bounds and Monte-Carlo harness needed to check the
//! `O(n^{-1/2})` approximation rates empirically.
//!
//! The crate is organised bottom-up:
//!
//! - [`statevector`]: amplitudes, block-diagonal unitaries, Born-rule
//!   distributions and shot sampling.
//! - [`gates`]: single-qubit gates, the trainable and reservoir block
//!   unitaries and the state-preparation reflection.
//! - [`circuit`]: the trainable circuit, its residue probabilities and output
//!   function.
//! - [`fourier`]: target functions with known Fourier transforms and their
//!   norms.
//! - [`sampling`]: random parameter constructions for both circuit families.
//! - [`reservoir`]: the frozen random circuit and its linear readout.
//! - [`bounds`]: right-hand sides of the approximation bounds.
//! - [`harness`]: error metrics, experiments, CSV output and the CLI.
//!
//! Data-parallel loops (seed sweeps, batch evaluation) go through [`par`],
//! which uses rayon when the `parallel` feature is enabled and a plain
//! iterator otherwise.

pub mod bounds;
pub mod circuit;
mod error;
pub mod fourier;
pub mod gates;
pub mod harness;
pub mod par;
pub mod reservoir;
pub mod rng;
pub mod sampling;
pub mod statevector;

pub use error::{Error, Result};

pub use num_complex::Complex64;
