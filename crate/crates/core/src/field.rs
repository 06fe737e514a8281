//! Two-species complex fields on a velocity grid.
//!
//! Species are ordered `[+, -]`. The sign conventions used by the coupled
//! system are `q0 = diag(1, -1)` (charge sign per species) and
//! `q1 = [1, -1]` (the column vector multiplying `E . xi mu^{1/2}`).

use std::ops::{Add, Index, IndexMut, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, VmlError};
use crate::grid::{Vec3, VelocityGrid};

pub type C64 = Complex64;

/// Charge sign of each species, the diagonal of `q0`.
pub const Q0: [f64; 2] = [1.0, -1.0];
/// Entries of `q1`.
pub const Q1: [f64; 2] = [1.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Plus = 0,
    Minus = 1,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::Plus, Species::Minus];

    pub fn other(self) -> Self {
        match self {
            Species::Plus => Species::Minus,
            Species::Minus => Species::Plus,
        }
    }
}

/// `[f_+, f_-]` sampled on a [`VelocityGrid`].
#[derive(Debug, Clone)]
pub struct TwoSpeciesField {
    grid: Arc<VelocityGrid>,
    values: Vec<C64>,
}

impl TwoSpeciesField {
    pub fn zeros(grid: &Arc<VelocityGrid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); 2 * grid.len()],
        }
    }

    /// Wraps raw values laid out as `[plus nodes.., minus nodes..]`.
    pub fn from_values(grid: &Arc<VelocityGrid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != 2 * grid.len() {
            return Err(VmlError::Parameter(format!(
                "expected {} values, got {}",
                2 * grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(VmlError::Parameter("field entries must be finite".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f(species, xi)` at every node.
    pub fn from_fn<F: Fn(Species, Vec3) -> C64>(grid: &Arc<VelocityGrid>, f: F) -> Self {
        let mut values = Vec::with_capacity(2 * grid.len());
        for s in Species::BOTH {
            values.extend((0..grid.len()).map(|m| f(s, grid.node(m))));
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Samples a real profile times `mu^{1/2}`, with per-species coefficients.
    /// `[c_+, c_-] p(xi) mu^{1/2}`.
    pub fn maxwellian_weighted<F: Fn(Vec3) -> f64>(
        grid: &Arc<VelocityGrid>,
        coeffs: [f64; 2],
        p: F,
    ) -> Self {
        let sm = grid.sqrt_mu();
        let profile: Vec<f64> = (0..grid.len()).map(|m| p(grid.node(m)) * sm[m]).collect();
        let mut values = Vec::with_capacity(2 * grid.len());
        for c in coeffs {
            values.extend(profile.iter().map(|v| C64::new(c * v, 0.0)));
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn species(&self, s: Species) -> &[C64] {
        let n = self.grid.len();
        &self.values[s as usize * n..(s as usize + 1) * n]
    }

    pub fn species_mut(&mut self, s: Species) -> &mut [C64] {
        let n = self.grid.len();
        &mut self.values[s as usize * n..(s as usize + 1) * n]
    }

    pub fn check_same_grid(&self, other: &TwoSpeciesField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(VmlError::GridMismatch)
        }
    }

    pub fn scale(&mut self, a: C64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: C64, x: &TwoSpeciesField) {
        debug_assert_eq!(self.values.len(), x.values.len());
        for (y, xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }

    /// Discrete `<f, g> = sum_s sum_m w_m f conj(g)`.
    pub fn inner(&self, other: &TwoSpeciesField) -> Result<C64> {
        self.check_same_grid(other)?;
        Ok(inner_unchecked(&self.grid, &self.values, &other.values))
    }

    /// `<f, f>`.
    pub fn norm_sq(&self) -> f64 {
        let w = self.grid.weights();
        let n = self.grid.len();
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| w[k % n] * v.norm_sqr())
            .sum()
    }

    /// Unconjugated moment `sum_m w_m psi(xi_m) f_s(xi_m)` of one species,
    /// the discrete form of `<psi, f_s>` for a real test function `psi`.
    pub fn moment(&self, s: Species, psi: &[f64]) -> C64 {
        let w = self.grid.weights();
        self.species(s)
            .iter()
            .zip(psi)
            .zip(w)
            .map(|((f, p), w)| *f * (p * w))
            .sum()
    }

    /// Nodewise product with a real profile, both species.
    pub fn mul_profile(&self, p: &[f64]) -> Self {
        let n = self.grid.len();
        let mut out = self.clone();
        for (k, v) in out.values.iter_mut().enumerate() {
            *v *= p[k % n];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn inner_unchecked(grid: &VelocityGrid, a: &[C64], b: &[C64]) -> C64 {
    let w = grid.weights();
    let n = grid.len();
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| x * y.conj() * w[k % n])
        .sum()
}

/// Free-function form of [`TwoSpeciesField::inner`].
pub fn inner_product(f: &TwoSpeciesField, g: &TwoSpeciesField) -> Result<C64> {
    f.inner(g)
}

impl Index<usize> for TwoSpeciesField {
    type Output = C64;
    fn index(&self, k: usize) -> &C64 {
        &self.values[k]
    }
}

impl IndexMut<usize> for TwoSpeciesField {
    fn index_mut(&mut self, k: usize) -> &mut C64 {
        &mut self.values[k]
    }
}

impl Add for &TwoSpeciesField {
    type Output = TwoSpeciesField;
    fn add(self, rhs: &TwoSpeciesField) -> TwoSpeciesField {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), rhs);
        out
    }
}

impl Sub for &TwoSpeciesField {
    type Output = TwoSpeciesField;
    fn sub(self, rhs: &TwoSpeciesField) -> TwoSpeciesField {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), rhs);
        out
    }
}
