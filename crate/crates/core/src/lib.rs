//! Numerical spectral analysis of constant-coefficient differential operators
//! on an interval, carried out on the localized Sobolev scale.
//!
//! The crate is organized around five pieces:
//!
//! * [`symbol`] — polynomial symbols a(ξ), the operators a(D) they induce,
//!   transposes, characteristic roots and ellipticity certificates;
//! * [`sobolev`] — FFT-based H^s norms, smooth cutoffs, interval exhaustions
//!   and the seminorm family of H^s_loc(I), plus the duality pairing;
//! * [`mollify`] — null extensions, mollifiers, distributional derivatives
//!   with endpoint delta terms, and the closure-construction checks;
//! * [`spectra`] — boundary-condition systems, kernel dimensions, per-λ
//!   spectrum classification over the domain variants, and witnesses;
//! * [`profiles`] — named smooth functions with exact derivatives, shared by
//!   the drivers and the test suites.

pub mod error;
pub mod jet;
pub mod mollify;
pub mod profiles;
pub mod sobolev;
pub mod spectra;
pub mod symbol;

pub use error::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
