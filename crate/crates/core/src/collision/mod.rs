//! Landau collision machinery on the velocity lattice.
//!
//! Everything here shares one discretization. The velocity gradient inside
//! the collision bracket is taken in Maxwellian-weighted form,
//! `mu^a D (mu^{-a} .)`, with `D` the lattice gradient, and the outer
//! divergence is the trapezoid-weighted adjoint `-D^dagger`. The
//! convolution with `phi` is the lattice sum over all nodes, the coincident
//! node carrying an isotropic weight fixed by the lattice zeta function so
//! the singular sum stays high-order accurate. With these
//! choices the linearized operator is exactly symmetric and nonnegative,
//! annihilates the six collision invariants to rounding, and `Q`
//! conserves mass, momentum and energy to rounding.

mod direct;
pub mod kernel;
mod operator;
mod params;
mod sigma;

pub use direct::{apply_q, gamma_bilinear, DirectCollision, DEFAULT_DIRECT_BUDGET};
pub use kernel::{p_xi_projection, phi_kernel, CoincidentRule, KernelTable, Mat3, Sym3};
pub use operator::{assemble_l, LinearizedOperator, DEFAULT_ASSEMBLY_BUDGET};
pub use params::CollisionParams;
pub use sigma::{sigma_field, CollisionFrequencyField};
