//! Numerical core for the linearized two-species Vlasov-Maxwell-Landau
//! system: velocity lattice, Landau collision operators, macro projection,
//! weighted energy functionals and a per-Fourier-mode time stepper.

pub mod collision;
pub mod error;
mod fft3;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod macro_structure;
pub mod mode;
pub mod quadrature;
pub mod stencil;
pub mod weights;

pub use error::{Result, VmlError};
pub use field::{inner_product, Species, TwoSpeciesField, C64, Q0, Q1};
pub use grid::{maxwellian, VelocityGrid, Vec3};
