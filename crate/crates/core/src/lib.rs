//! Pseudospectral laboratory for the vibrating-plate equation
//! `u_tt + Δ²u + V(t,x)u = F`.
//!
//! The crate provides periodic-box spectral machinery ([`grid`]), Lebesgue,
//! Sobolev and space-time norms ([`norms`]), exact-in-time propagators
//! ([`propagators`]), a Picard solver for time-dependent potentials
//! ([`solver`]), numerical checks of dispersive and Strichartz estimates
//! ([`estimates`]), Kato-Ponce and Hölder-type inequality ensembles
//! ([`kato_ponce`]), the ground-state construction ([`ground_state`]) and
//! the sharpness counterexample schedule ([`counterexample`]).

pub mod counterexample;
pub mod error;
pub mod estimates;
pub mod exponent;
pub mod grid;
pub mod kato_ponce;
pub mod ground_state;
pub mod norms;
pub mod propagators;
pub mod solver;
pub mod testfn;

pub use error::{Error, Result};
pub use exponent::{dual_exponent, Exponent, Rational};
pub use grid::{Field, Grid, Rep};
