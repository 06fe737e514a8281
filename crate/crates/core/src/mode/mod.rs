//! One spatial Fourier mode of the linearized system: state, right-hand
//! side, implicit stepper and per-mode energy diagnostics.
//!
//! With `S = 0` and `grad_x -> i k` the mode obeys
//!
//! ```text
//! d_t f = -(L + i xi.k) f + (E . xi) mu^{1/2} q1
//! d_t E = i k x B - j,        j = <xi mu^{1/2}, f_+ - f_->
//! d_t B = -i k x E
//! ```

mod diagnostics;
mod stepper;

pub use diagnostics::{
    energy_identity_check, envelope_fit, mode_energy_report, rho, EnergyIdentityReport, EnvelopeFit, ModeEnergyReport,
    ModeEnergyRow, ModeReporter,
};
pub use stepper::{integrate_mode, integrate_mode_with, ModeRun, ModeStepper, RunSummary, Scheme, StepperConfig};

use std::sync::Arc;

use crate::collision::LinearizedOperator;
use crate::error::{Result, VmlError};
use crate::field::{Species, TwoSpeciesField, C64, Q1};
use crate::grid::{Vec3, VelocityGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `(k, f, E, B, t)` of one Fourier mode.
#[derive(Debug, Clone)]
pub struct ModeState {
    pub k: Vec3,
    pub f: TwoSpeciesField,
    pub e: [C64; 3],
    pub b: [C64; 3],
    pub t: f64,
}

/// Time derivative of a [`ModeState`].
#[derive(Debug, Clone)]
pub struct ModeRate {
    pub f: TwoSpeciesField,
    pub e: [C64; 3],
    pub b: [C64; 3],
}

pub(crate) fn cross(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn ik(k: Vec3) -> [C64; 3] {
    [I * k[0], I * k[1], I * k[2]]
}

fn sq3(v: &[C64; 3]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `xi_i mu^{1/2}` profiles, used for the current and the field forcing.
pub(crate) fn current_profiles(grid: &VelocityGrid) -> [Vec<f64>; 3] {
    let sm = grid.sqrt_mu();
    std::array::from_fn(|i| (0..grid.len()).map(|m| grid.node(m)[i] * sm[m]).collect())
}

/// `j = <xi mu^{1/2}, f_+ - f_->` (unconjugated moments).
pub(crate) fn current(f: &TwoSpeciesField, xi_mu: &[Vec<f64>; 3]) -> [C64; 3] {
    std::array::from_fn(|i| f.moment(Species::Plus, &xi_mu[i]) - f.moment(Species::Minus, &xi_mu[i]))
}

impl ModeState {
    pub fn new(k: Vec3, f: TwoSpeciesField, e: [C64; 3], b: [C64; 3]) -> Self {
        Self { k, f, e, b, t: 0.0 }
    }

    pub fn zero(grid: &Arc<VelocityGrid>, k: Vec3) -> Self {
        Self::new(k, TwoSpeciesField::zeros(grid), [ZERO; 3], [ZERO; 3])
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        self.f.grid()
    }

    /// `|f|^2 + |E|^2 + |B|^2`.
    pub fn energy(&self) -> f64 {
        self.f.norm_sq() + sq3(&self.e) + sq3(&self.b)
    }

    /// `|E|^2 + |B|^2`.
    pub fn field_energy(&self) -> f64 {
        sq3(&self.e) + sq3(&self.b)
    }

    /// `(|i k . E - <mu^{1/2}, f_+ - f_->|, |i k . B|)`.
    pub fn gauss_residuals(&self) -> (f64, f64) {
        let sm = self.grid().sqrt_mu();
        let charge = self.f.moment(Species::Plus, sm) - self.f.moment(Species::Minus, sm);
        let k = ik(self.k);
        let div_e = k[0] * self.e[0] + k[1] * self.e[1] + k[2] * self.e[2];
        let div_b = k[0] * self.b[0] + k[1] * self.b[1] + k[2] * self.b[2];
        ((div_e - charge).norm(), div_b.norm())
    }

    /// Rejects `k = 0` data carrying net charge.
    pub fn check_neutral_zero_mode(&self, tol: f64) -> Result<()> {
        if self.k == [0.0; 3] {
            let sm = self.grid().sqrt_mu();
            let charge = self.f.moment(Species::Plus, sm) - self.f.moment(Species::Minus, sm);
            if charge.norm() > tol {
                return Err(VmlError::NonNeutralZeroMode);
            }
        }
        Ok(())
    }
}

/// The collisionless part of the right-hand side: transport, field forcing
/// of `f`, Ampere and Faraday.
pub fn transport_coupling_rhs(s: &ModeState) -> ModeRate {
    let grid = s.grid().clone();
    let xi_mu = current_profiles(&grid);
    let k = s.k;
    let mut df = s.f.clone();
    for sp in Species::BOTH {
        let q = Q1[sp as usize];
        for (m, v) in df.species_mut(sp).iter_mut().enumerate() {
            let x = grid.node(m);
            let forcing = (s.e[0] * xi_mu[0][m] + s.e[1] * xi_mu[1][m] + s.e[2] * xi_mu[2][m]) * q;
            *v = -I * (x[0] * k[0] + x[1] * k[1] + x[2] * k[2]) * *v + forcing;
        }
    }
    let j = current(&s.f, &xi_mu);
    let kb = cross(ik(k), s.b);
    let ke = cross(ik(k), s.e);
    ModeRate {
        f: df,
        e: std::array::from_fn(|i| kb[i] - j[i]),
        b: std::array::from_fn(|i| -ke[i]),
    }
}

/// Full right-hand side with the collision term `-L f`.
pub fn mode_rhs(s: &ModeState, l: &LinearizedOperator) -> Result<ModeRate> {
    let lf = l.apply(&s.f)?;
    let mut r = transport_coupling_rhs(s);
    r.f.axpy(C64::new(-1.0, 0.0), &lf);
    Ok(r)
}

/// `Re <rate, state>` in the mode energy inner product.
pub fn energy_pairing(rate: &ModeRate, s: &ModeState) -> Result<f64> {
    let mut v = rate.f.inner(&s.f)?.re;
    for i in 0..3 {
        v += (rate.e[i] * s.e[i].conj()).re + (rate.b[i] * s.b[i].conj()).re;
    }
    Ok(v)
}
