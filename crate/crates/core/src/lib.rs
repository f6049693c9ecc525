//! Boundary element toolkit for two-dimensional Helmholtz transmission
//! problems posed in local multi-trace form.

pub mod assembly;
mod dd;
pub mod geometry;
pub mod linalg;
pub mod mtf;
pub mod quadrature;
pub mod specfun;
pub mod spectrum;
