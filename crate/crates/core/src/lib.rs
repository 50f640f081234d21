//! Stability of periodized random-phase sea states.
//!
//! The crate is organised around the pipeline it implements:
//!
//! * [`spectrum`]: continuous power spectra and their discretization on a torus.
//! * [`seastate`]: random-phase realizations and ensemble statistics.
//! * [`alber`]: the periodized stability kernel, its infinite-line limit, and
//!   three independent ways of deciding instability (argument principle, grid
//!   scan, truncated-operator eigenvalues).
//! * [`nlssim`]: a mass-conserving relaxation solver for the periodic cubic NLS,
//!   plus linear modulation-instability analysis.
//! * [`experiments`]: scripted studies with provenance records.
//! * [`io`]: the file formats shared by the above.
//!
//! Wavenumbers are in cycles per unit length throughout (`e^{2πikx}`).

// Range checks are written `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alber;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod nlssim;
pub mod quad;
pub mod seastate;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
