//! rootflow: a numerical laboratory for the radial transport of polynomial
//! roots under repeated differentiation.

pub mod grid;
pub mod linear_stability;
pub mod polyroots;
pub mod radial_pde;
