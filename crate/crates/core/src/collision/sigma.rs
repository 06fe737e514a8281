use std::sync::Arc;

use crate::fft3::KernelConvolver;
use crate::grid::{Vec3, VelocityGrid};

use super::kernel::{unpack, KernelTable, Mat3, Sym3};
use super::CollisionParams;

/// `sigma^{ij} = phi^{ij} * mu` at every node.
#[derive(Debug, Clone)]
pub struct CollisionFrequencyField {
    grid: Arc<VelocityGrid>,
    params: CollisionParams,
    values: Vec<Sym3>,
}

impl CollisionFrequencyField {
    pub(crate) fn from_convolver(grid: &Arc<VelocityGrid>, conv: &KernelConvolver, params: &CollisionParams) -> Self {
        let wm: Vec<f64> = grid
            .weights()
            .iter()
            .zip(grid.mu())
            .map(|(w, m)| w * m)
            .collect();
        Self {
            grid: grid.clone(),
            params: *params,
            values: conv.convolve_scalar(&wm),
        }
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    pub fn params(&self) -> &CollisionParams {
        &self.params
    }

    /// Packed `[xx, yy, zz, xy, xz, yz]` value at node `m`.
    #[inline]
    pub fn packed(&self, m: usize) -> &Sym3 {
        &self.values[m]
    }

    pub fn matrix(&self, m: usize) -> Mat3 {
        unpack(&self.values[m])
    }

    /// `sigma(xi_m) u`.
    #[inline]
    pub fn apply<T>(&self, m: usize, u: [T; 3]) -> [T; 3]
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let s = &self.values[m];
        [
            u[0] * s[0] + u[1] * s[3] + u[2] * s[4],
            u[0] * s[3] + u[1] * s[1] + u[2] * s[5],
            u[0] * s[4] + u[1] * s[5] + u[2] * s[2],
        ]
    }

    /// `xi . sigma xi` at node `m`.
    pub fn quadratic(&self, m: usize, xi: Vec3) -> f64 {
        let v = self.apply(m, xi);
        v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Lattice quadrature of `sigma^{ij}(xi) = int phi^{ij}(xi - xi_*) mu(xi_*) dxi_*`.
pub fn sigma_field(grid: &Arc<VelocityGrid>, p: &CollisionParams) -> CollisionFrequencyField {
    let table = KernelTable::new(grid, p);
    let conv = KernelConvolver::new(&table);
    CollisionFrequencyField::from_convolver(grid, &conv, p)
}
