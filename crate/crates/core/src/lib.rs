//! Integrable-symmetry machinery of the nonstationary Schrödinger equation:
//! exact spectral-data flows, the symmetry algebra and its commutation
//! identities, a small-data nonlocal Riemann-Hilbert solver with potential
//! reconstruction, explicit resolvent/Green's-function kernels, the weighted
//! dual-variable transformation, and finite-difference KPI residual checks.
//!
//! The `nsflows` binary wires these modules into batch verification suites
//! and data-production pipelines driven by a JSON config.

pub mod algebra;
pub mod cli;
pub mod dual;
pub mod error;
pub mod fields;
pub mod flows;
pub mod green;
pub mod inverse;
pub mod par;
pub mod pde;

pub use error::{NsError, Result};
