//! Exact symbolic deformation quantization on polynomial phase-space symbols.
//!
//! Symbols are sparse polynomials with Gaussian-rational coefficients
//! ([`PhasePoly`]) and truncated ℏ-series of them ([`HbarSeries`]). On top of
//! those the crate provides the Moyal and truncated Fedosov star products,
//! Darboux charts and their s'Darboux corrections, ladder and number symbols,
//! the second-order Bohr–Sommerfeld (EBK) rule, and a Weyl-quantization
//! matrix oracle for checking predicted spectra.

pub mod action;
pub mod bracket;
pub mod chart;
pub mod error;
pub mod fedosov;
pub mod forms;
pub mod io;
pub mod ladder;
pub mod moyal;
pub mod number;
pub mod oracle;
pub mod parse;
pub mod poly;
pub mod sdarboux;
pub mod scalar;
pub mod series;

pub use action::ActionPoly;
pub use chart::{DarbouxChart, GammaTensor};
pub use error::{Error, Result};
pub use moyal::{moyal_star, star_commutator, StarDefect};
pub use poly::{Basis, Monomial, PhasePoly};
pub use scalar::GaussianRational;
pub use series::HbarSeries;
