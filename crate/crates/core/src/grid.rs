//! Truncated tensor velocity lattice with trapezoidal quadrature.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, VmlError};

/// Velocity vector.
pub type Vec3 = [f64; 3];

/// Normalized global Maxwellian `(2 pi)^{-3/2} exp(-|xi|^2 / 2)`.
pub fn maxwellian(xi: Vec3) -> f64 {
    (2.0 * PI).powf(-1.5) * (-0.5 * norm_sq(xi)).exp()
}

#[inline]
pub fn norm_sq(v: Vec3) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Uniform lattice on `[-R, R]^3` with `n` points per axis (`n` odd so the
/// origin is a node). Node `(i, j, l)` is stored at `(i * n + j) * n + l`.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    half_width: f64,
    n: usize,
    h: f64,
    axis: Vec<f64>,
    axis_weights: Vec<f64>,
    weights: Vec<f64>,
    mu: Vec<f64>,
    sqrt_mu: Vec<f64>,
}

impl VelocityGrid {
    /// Builds the lattice and its trapezoidal weights.
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(VmlError::Parameter(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if n % 2 == 0 || n < 3 {
            return Err(VmlError::Parameter(format!(
                "points per axis must be odd and >= 3, got {n}"
            )));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        let c = (n / 2) as isize;
        let axis: Vec<f64> = (0..n).map(|i| (i as isize - c) as f64 * h).collect();
        let axis_weights: Vec<f64> = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect();
        let total = n * n * n;
        let mut weights = Vec::with_capacity(total);
        let mut mu = Vec::with_capacity(total);
        let mut sqrt_mu = Vec::with_capacity(total);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    weights.push(axis_weights[i] * axis_weights[j] * axis_weights[l]);
                    let m = maxwellian([axis[i], axis[j], axis[l]]);
                    mu.push(m);
                    sqrt_mu.push(m.sqrt());
                }
            }
        }
        Ok(Self {
            half_width,
            n,
            h,
            axis,
            axis_weights,
            weights,
            mu,
            sqrt_mu,
        })
    }

    /// Same as [`VelocityGrid::new`] but shared.
    pub fn shared(half_width: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(half_width, n).map(Arc::new)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Number of lattice nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// 1-D node coordinates, shared by the three axes.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `mu` sampled at the nodes.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `mu^{1/2}` sampled at the nodes.
    pub fn sqrt_mu(&self) -> &[f64] {
        &self.sqrt_mu
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n + j) * self.n + l
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Vec3 {
        let [i, j, l] = self.multi_index(idx);
        [self.axis[i], self.axis[j], self.axis[l]]
    }

    /// Index of the node mirrored through the origin.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let [i, j, l] = self.multi_index(idx);
        self.index(n - 1 - i, n - 1 - j, n - 1 - l)
    }

    /// Index of the origin node.
    pub fn origin(&self) -> usize {
        let c = self.n / 2;
        self.index(c, c, c)
    }

    /// Samples a real function at every node.
    pub fn sample<F: Fn(Vec3) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|m| f(self.node(m))).collect()
    }

    /// Quadrature of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Two grids are interchangeable when their defining parameters agree.
    pub fn same_as(&self, other: &VelocityGrid) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}
