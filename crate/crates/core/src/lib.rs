//! Numerical laboratory for Loewner evolution in doubly connected domains.
//!
//! The crate is organized around five subsystems:
//!
//! - [`kernel`] — the annulus Schwarz kernel, its reflected and covering-space
//!   variants, and the radial (disc) kernel, evaluated to a controlled
//!   truncation tolerance through two independent representations.
//! - [`loewner`] — adaptive integration of the annulus, radial and disc
//!   Loewner differential equations for sampled driving processes, with hull
//!   tracking via swallow flags and backward-flow trace extraction.
//! - [`grid`] — square-lattice approximations of doubly connected domains,
//!   boundary classification, reachability pruning, and the periodic cylinder
//!   lattice.
//! - [`harmonic`] — exact discrete-harmonic machinery on those graphs:
//!   Dirichlet solvers, flux functionals, martingale checks, and a discrete
//!   uniformization (modulus + harmonic conjugate) of annular grids.
//! - [`lerw`] — conditioned random walks sampled by Doob transform,
//!   chronological loop erasure, capacity-time parameterization and driving
//!   function extraction.

pub mod grid;
pub mod harmonic;
pub mod kernel;
pub mod lerw;
pub mod loewner;
pub mod stats;

pub use num_complex::Complex64;
