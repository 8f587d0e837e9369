//! Large-deviation rates for weighted sums of i.i.d. variables with
//! stretched-exponential tails `P(X ≥ t) ≈ c(t)·exp(−b(t)·tʳ)`, `0 < r < 1`.
//!
//! The crate is split along the objects the theory talks about:
//!
//! * [`svf`]: slowly varying envelope functions `b`, `c₁`, `c₂`.
//! * [`tail_models`]: concrete distributions inside the tail sandwich, with
//!   exact inverse-survival sampling, moments and quadrature self-tests.
//! * [`weight_schemes`]: triangular weight arrays `a_j(n)` and finite-grid
//!   validators for the weight regularity conditions.
//! * [`rate_functions`]: closed-form stretched-exponential rates and the
//!   Legendre–Fenchel machinery for the light-tailed comparison.
//! * [`rare_event_mc`]: naive and single-big-jump Monte Carlo estimators of
//!   `P(S̄ₙ ≥ x)` with a counter-addressed, worker-count-independent RNG.
//! * [`export`]: CSV writers shared by the command-line front end.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub(crate) mod quad;
pub mod rare_event_mc;
pub mod rate_functions;
pub mod stream;
pub mod svf;
pub mod tail_models;
pub mod weight_schemes;

pub use error::{Error, Result};
