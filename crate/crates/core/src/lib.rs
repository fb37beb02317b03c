//! Metastable bound-state decay in nonlinear Klein-Gordon equations with a potential.
//!
//! All profiles are radial and stored as `w = r u`, so the 3D operator `-Delta + V + m^2`
//! becomes `-d^2/dr^2 + V + m^2` on `(0, r_max)` with Dirichlet ends. Inner products are
//! `sum a_i b_i dr`, which is the 3D pairing divided by `4 pi`; Hamiltonians follow the same
//! per-steradian normalization.

pub mod dynamics;
pub mod envelope;
pub mod error;
pub mod fgr;
pub mod normal_form;
pub mod numerics;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
