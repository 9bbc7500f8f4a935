//! Spectral fundamental solutions for two-point boundary value problems of
//! the 1-D wave equation, obtained from a stationary-action optimal control
//! formulation.
//!
//! Fields on `[0, L]` with Dirichlet ends are represented by their
//! coefficients in the energy-space sine basis; every operator involved is
//! diagonal in that basis, so all solves reduce to independent per-mode
//! scalar formulas.

pub mod error;
pub mod long_horizon;
pub mod payoff;
pub mod propagator;
pub mod riccati;
pub mod spectral;
pub mod tpbvp;
pub mod tridiag;

pub use error::{Error, Result};
pub use spectral::{BasisConfig, SpectralVector};
pub use long_horizon::ConcatenationPlan;
pub use propagator::WaveState;
pub use riccati::{FundamentalSolution, ModeParams, Pqr};
pub use tpbvp::{Segments, Terminal, TpbvpProblem, TpbvpSolution};
