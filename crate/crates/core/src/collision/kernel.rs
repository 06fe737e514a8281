//! The Landau kernel, its lattice table and the `P_xi` projection.

use crate::error::{Result, VmlError};
use crate::grid::{norm_sq, Vec3, VelocityGrid};
use crate::quadrature::{lattice_zeta, unit_cube_power_integral};

use super::CollisionParams;

/// 3x3 real matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Packed symmetric matrix `[xx, yy, zz, xy, xz, yz]`.
pub type Sym3 = [f64; 6];

/// Position of entry `(i, j)` in a [`Sym3`].
#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

pub fn unpack(s: &Sym3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = s[sym_index(i, j)];
        }
    }
    m
}

/// `phi^{ij}(xi) = C_phi |xi|^{gamma+2} (delta_ij - xi_i xi_j / |xi|^2)`.
pub fn phi_kernel(xi: Vec3, p: &CollisionParams) -> Result<Mat3> {
    let r2 = norm_sq(xi);
    if r2 == 0.0 {
        return Err(VmlError::SingularPoint);
    }
    Ok(unpack(&phi_packed(xi, r2, p)))
}

#[inline]
fn phi_packed(xi: Vec3, r2: f64, p: &CollisionParams) -> Sym3 {
    let scale = p.c_phi() * r2.powf(0.5 * (p.gamma() + 2.0));
    let inv = 1.0 / r2;
    [
        scale * (1.0 - xi[0] * xi[0] * inv),
        scale * (1.0 - xi[1] * xi[1] * inv),
        scale * (1.0 - xi[2] * xi[2] * inv),
        -scale * xi[0] * xi[1] * inv,
        -scale * xi[0] * xi[2] * inv,
        -scale * xi[1] * xi[2] * inv,
    ]
}

/// Average of `phi` over the cube of side `h` centred at the origin. By cubic
/// symmetry it is isotropic: `(2/3) C_phi h^{gamma+2} c(gamma) I` with
/// `c(gamma)` the unit-cube integral of `|u|^{gamma+2}`.
pub fn self_cell_average(h: f64, p: &CollisionParams) -> f64 {
    let s = p.gamma() + 2.0;
    (2.0 / 3.0) * p.c_phi() * h.powf(s) * unit_cube_power_integral(s)
}

/// Coincident-node weight that makes the punctured lattice sum of
/// `phi(xi_m - .)` exact up to `O(h^{gamma+7})` on smooth integrands:
/// `-(2/3) C_phi h^{gamma+2} Z(gamma+2) I` with `Z` the lattice zeta function.
pub fn self_lattice_correction(h: f64, p: &CollisionParams) -> f64 {
    let s = p.gamma() + 2.0;
    -(2.0 / 3.0) * p.c_phi() * h.powf(s) * lattice_zeta(s)
}

/// How the coincident node of the kernel sum is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoincidentRule {
    /// Mean of `phi` over the lattice cell; error `O(h^{gamma+5})`.
    CellAverage,
    /// Lattice-zeta correction of the punctured trapezoid sum.
    #[default]
    LatticeZeta,
}

impl CoincidentRule {
    pub fn weight(self, h: f64, p: &CollisionParams) -> f64 {
        match self {
            Self::CellAverage => self_cell_average(h, p),
            Self::LatticeZeta => self_lattice_correction(h, p),
        }
    }
}

/// `P_xi u = (xi (x) xi / |xi|^2) u`, with the zero map at `xi = 0`.
pub fn p_xi_projection(xi: Vec3, u: Vec3) -> Vec3 {
    let r2 = norm_sq(xi);
    if r2 == 0.0 {
        return [0.0; 3];
    }
    let c = (xi[0] * u[0] + xi[1] * u[1] + xi[2] * u[2]) / r2;
    [c * xi[0], c * xi[1], c * xi[2]]
}

/// Kernel values at every lattice offset `o in [-(n-1), n-1]^3`, with the
/// coincident offset replaced by an isotropic weight (see [`CoincidentRule`]).
#[derive(Debug, Clone)]
pub struct KernelTable {
    n: usize,
    span: usize,
    values: Vec<Sym3>,
}

impl KernelTable {
    pub fn new(grid: &VelocityGrid, p: &CollisionParams) -> Self {
        Self::with_rule(grid, p, CoincidentRule::default())
    }

    pub fn with_rule(grid: &VelocityGrid, p: &CollisionParams, rule: CoincidentRule) -> Self {
        let n = grid.points_per_axis();
        let h = grid.spacing();
        let span = 2 * n - 1;
        let mut values = Vec::with_capacity(span * span * span);
        let c = (n - 1) as isize;
        let diag = rule.weight(h, p);
        for a in 0..span {
            for b in 0..span {
                for d in 0..span {
                    let o = [a as isize - c, b as isize - c, d as isize - c];
                    if o == [0, 0, 0] {
                        values.push([diag, diag, diag, 0.0, 0.0, 0.0]);
                    } else {
                        let v = [o[0] as f64 * h, o[1] as f64 * h, o[2] as f64 * h];
                        values.push(phi_packed(v, norm_sq(v), p));
                    }
                }
            }
        }
        Self { n, span, values }
    }

    /// Kernel at integer offset `o` (each component in `-(n-1)..=(n-1)`).
    #[inline]
    pub fn at(&self, o: [isize; 3]) -> &Sym3 {
        let c = (self.n - 1) as isize;
        let s = self.span;
        let idx = (((o[0] + c) as usize) * s + (o[1] + c) as usize) * s + (o[2] + c) as usize;
        &self.values[idx]
    }

    /// Kernel between nodes `m` and `q` of the grid, `phi(xi_m - xi_q)`.
    #[inline]
    pub fn between(&self, m: [usize; 3], q: [usize; 3]) -> &Sym3 {
        self.at([
            m[0] as isize - q[0] as isize,
            m[1] as isize - q[1] as isize,
            m[2] as isize - q[2] as isize,
        ])
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }
}
