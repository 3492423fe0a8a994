//! A numerical laboratory for the one-dimensional semilinear wave equation
//! with a spatially weighted source,
//!
//! ```text
//! u_tt - u_xx = F(u) / (1 + x^2)^{(1+a)/2},   u(0) = eps f,  u_t(0) = eps g,
//! ```
//!
//! built around the light-cone integral form of the problem:
//!
//! - [`problem`]: problem specifications, the initial-data library, data
//!   norms, and the lifespan scale `phi(s) = s log(2+s)`;
//! - [`quadrature`]: free waves, the Duhamel operator over backward cones,
//!   the weighted cone mass `I(x,t)`, and the damping profile `D(tau)`;
//! - [`picard`]: the fixed-point iteration with a measured contraction
//!   certificate and the certified existence horizon;
//! - [`blowup`]: iteration sequences and constants, pointwise lower-bound
//!   envelopes in the three weight regimes, divergence functionals, and the
//!   upper lifespan predictor;
//! - [`harness`]: characteristic-grid time marching with blow-up detection,
//!   amplitude sweeps, scaling-exponent fits, and envelope/sandwich audits;
//! - [`io`]: solution export (CSV and a compact binary dump).
//!
//! Everything is deterministic: identical inputs reproduce identical bytes.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the sign.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod error;
pub mod harness;
mod integrate;
pub mod io;
pub mod picard;
pub mod problem;
pub mod quadrature;

pub use error::{Error, Result};
pub use picard::{sup_norm, GridFunction};
pub use problem::{
    builtin_blowup_data, data_norms, phi, phi_inverse, validate_spec, InitialData, Mode,
    Nonlinearity, ProblemSpec,
};
