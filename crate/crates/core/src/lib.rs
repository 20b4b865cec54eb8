//! Simulation and verification toolkit for singular stochastic delay
//! differential equations
//!
//! ```text
//! dx(t) = Σ_i b_i(<x_t, e_i> + ε w_i B^{H_i}(t)) dt + dW(t),   x_0 = η ∈ M2
//! ```
//!
//! where `M2 = R × L²([-r, 0])` is the Delfour–Mitter segment space, `W` is a
//! Brownian motion and the `B^{H_i}` are independent fractional Brownian
//! motions with small Hurst parameters.
//!
//! The crate is organised by subsystem:
//!
//! * [`segment`]: discretised `M2` elements, the cosine basis, segment
//!   extraction and the coefficient functionals `χ_j`, `F_i`.
//! * [`noise`]: exact Brownian / fBm sampling, the truncated perturbation and
//!   the local non-determinism constant.
//! * [`drift`]: singular drift components, mollification and truncation.
//! * [`solver`]: Euler–Maruyama for the regularised delay equation, the first
//!   variation (Malliavin derivative) and coupled ensembles.
//! * [`girsanov`]: stochastic exponentials, reweighting identities, the Wiener
//!   transform and the weak-solution construction.
//! * [`kernels`]: shuffle identities, simplex integrals, the iteration
//!   kernels, assumption checks and the explicit Malliavin bounds.
//! * [`harness`]: experiment configuration and the batch pipelines behind the
//!   `sdde` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod error;
pub mod girsanov;
pub mod harness;
pub mod kernels;
pub mod noise;
pub mod quadrature;
pub mod segment;
pub mod solver;
pub mod stats;

pub use error::{Result, SddeError};
