//! Traveling waves of the semi-discrete inviscid Burgers lattice
//! `du_j/dt = -(u_{j+1}^2 - u_{j-1}^2)/4` computed through two dual
//! concave-maximization formulations:
//!
//! * [`dde`]: a finite-element Newton solver for the dual of the
//!   advance-delay profile equation `f' + (f(x+1)^2 - f(x-1)^2)/2 = 0`,
//!   with step-size control and base-state resets;
//! * [`nie`]: a quasi-Newton maximizer for the dual of the integral
//!   equation `w + u K w + K(w^2)/2 = 0` on a periodic grid, with
//!   path-following in the far-field value `u`.
//!
//! Supporting modules provide the lattice itself ([`lattice`]), the
//! convolution operator `K` ([`kernel`]), Petviashvili iteration
//! ([`petviashvili`]), a BFGS minimizer ([`quasi_newton`]) and independent
//! verification tools ([`verify`]).

pub mod banded;
pub mod dde;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod nie;
pub mod petviashvili;
pub mod profile;
pub mod quasi_newton;
pub mod verify;

pub use error::{Error, Result};
pub use profile::{BaseState, Provenance, SolverReport, WaveProfile};
