//! Pseudospectral laboratory for the derivative nonlinear Schrödinger equation
//!
//! ```text
//! i u_t − u_xx + i λ |u|^k u_x = 0
//! ```
//!
//! on a large periodic box standing in for the real line: spectral calculus,
//! Littlewood–Paley projectors, mixed space-time norms, the frequency-localized
//! gauge transform, an integrating-factor RK4 solver, and a harness that
//! measures LHS/RHS ratios of the linear, bilinear and nonlinear estimates used
//! in the local well-posedness theory.

pub mod error;
pub mod estimates;
pub mod gauge;
pub mod littlewood_paley;
pub mod norms;
pub mod solver;
pub mod spectral;

pub use error::{LabError, Result};
pub use num_complex::Complex64;
