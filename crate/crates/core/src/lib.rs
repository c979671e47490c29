//! Level densities of su(m) spin chains of Haldane–Shastry type.
//!
//! The spectrum of the Haldane–Shastry (HS), Polychronakos–Frahm (PF) and
//! Frahm–Inozemtsev (FI) chains is given by motifs: each spin configuration
//! maps to a binary vector whose weighted sum against the chain's dispersion
//! relation is the energy. This crate computes
//!
//! * exact level densities by transfer-matrix dynamic programming, brute-force
//!   enumeration, or the composition expansion of the partition function
//!   ([`density`], [`motif`]);
//! * the closed-form mean and variance ([`moments`]);
//! * the exact and asymptotic characteristic function and Gaussian
//!   convergence sweeps ([`transfer`]);
//! * a dense-Hamiltonian oracle for small chains ([`oracle`]);
//! * spacing statistics and Kolmogorov–Smirnov distances ([`stats`]).
//!
//! Exact quantities are kept as big integers or rationals; energies on a
//! fractional grid (FI with non-integer `α`) are stored as integers over a
//! common scale.

pub mod chain;
pub mod cli;
pub mod density;
mod error;
pub mod moments;
pub mod motif;
pub mod oracle;
pub mod stats;
pub mod svg;
pub mod transfer;
mod wide;

pub use error::{Error, Result};
