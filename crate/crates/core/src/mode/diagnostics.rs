use crate::collision::{CollisionFrequencyField, LinearizedOperator};
use crate::error::{Result, VmlError};
use crate::grid::{norm_sq, Vec3};
use crate::macro_structure::MacroProjector;
use crate::weights::{dissipation_norm, weight_profile, WeightSpec};

use super::ModeState;

/// `rho(k) = |k|^2 / (1 + |k|^2)^2`.
pub fn rho(k: Vec3) -> f64 {
    let k2 = norm_sq(k);
    k2 / ((1.0 + k2) * (1.0 + k2))
}

/// Discrete energy balance `Delta(|f|^2 + |E|^2 + |B|^2) + 2 int Re<Lf, f> dt`
/// over each interval of a history, with the trapezoid rule in time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyIdentityReport {
    pub residuals: Vec<f64>,
    pub max: f64,
    /// Sum of absolute interval residuals.
    pub cumulative: f64,
    pub initial_energy: f64,
    /// Largest energy increase between consecutive frames (0 when monotone).
    pub max_increase: f64,
    pub energies: Vec<f64>,
}

pub fn energy_identity_check(history: &[ModeState], l: &LinearizedOperator) -> Result<EnergyIdentityReport> {
    if history.len() < 2 {
        return Err(VmlError::TooFewFrames {
            needed: 2,
            got: history.len(),
        });
    }
    let mut energies = Vec::with_capacity(history.len());
    let mut diss = Vec::with_capacity(history.len());
    for s in history {
        energies.push(s.energy());
        diss.push(l.rayleigh(&s.f)?);
    }
    let residuals: Vec<f64> = (0..history.len() - 1)
        .map(|i| {
            let dt = history[i + 1].t - history[i].t;
            (energies[i + 1] - energies[i] + dt * (diss[i] + diss[i + 1])).abs()
        })
        .collect();
    let max_increase = energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(EnergyIdentityReport {
        max: residuals.iter().cloned().fold(0.0, f64::max),
        cumulative: residuals.iter().sum(),
        initial_energy: energies[0],
        max_increase,
        residuals,
        energies,
    })
}

/// The components of `M_ell` and `D_ell` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEnergyRow {
    pub t: f64,
    pub k: Vec3,
    /// `|f|^2`.
    pub f_l2sq: f64,
    /// `|E|^2 + |B|^2`.
    pub em_sq: f64,
    /// `|{I-P}f|_D^2`.
    pub micro_d: f64,
    /// `|w^ell {I-P}f|_D^2`.
    pub weighted_micro_d: f64,
    /// `|w^ell f|^2`.
    pub weighted_l2sq: f64,
    /// `|k|^2/(1+|k|^2) (|a_+ + a_-|^2 + |b|^2 + |c|^2)`.
    pub macro_abc: f64,
    /// `|a_+ - a_-|^2`.
    pub a_diff: f64,
    /// `|E|^2 / (1+|k|^2)`.
    pub e_term: f64,
    /// `|k|^2 |B|^2 / (1+|k|^2)^2`.
    pub b_term: f64,
    pub rho_k: f64,
    pub gauss_e: f64,
    pub gauss_b: f64,
}

impl ModeEnergyRow {
    /// `|f|^2 + |E|^2 + |B|^2`, the computable part of `M_ell`.
    pub fn m(&self) -> f64 {
        self.f_l2sq + self.em_sq
    }

    /// `|w^ell f|^2 + |E|^2 + |B|^2`.
    pub fn m_tilde(&self) -> f64 {
        self.weighted_l2sq + self.em_sq
    }

    pub fn d(&self) -> f64 {
        let k2 = norm_sq(self.k);
        self.micro_d + self.weighted_micro_d / (1.0 + k2) + self.macro_abc + self.a_diff + self.e_term + self.b_term
    }
}

/// Evaluates [`ModeEnergyRow`]s for a fixed `ell`.
pub struct ModeReporter<'a> {
    sigma: &'a CollisionFrequencyField,
    projector: MacroProjector,
    weight: WeightSpec,
}

impl<'a> ModeReporter<'a> {
    pub fn new(sigma: &'a CollisionFrequencyField, ell: f64) -> Self {
        Self {
            sigma,
            projector: MacroProjector::new(sigma.grid()),
            weight: WeightSpec::linear_power(ell),
        }
    }

    pub fn row(&self, s: &ModeState) -> Result<ModeEnergyRow> {
        let grid = s.grid();
        if !grid.same_as(self.sigma.grid()) {
            return Err(VmlError::GridMismatch);
        }
        let p = self.sigma.params();
        let proj = self.projector.project(&s.f)?;
        let unit = WeightSpec::unit();
        let w = weight_profile(grid, &self.weight, s.t, p);
        let weighted_micro = proj.micro.mul_profile(&w);
        let weighted = s.f.mul_profile(&w);
        let st = proj.state;
        let k2 = norm_sq(s.k);
        let e2: f64 = s.e.iter().map(|z| z.norm_sqr()).sum();
        let b2: f64 = s.b.iter().map(|z| z.norm_sqr()).sum();
        let abc = (st.a_plus + st.a_minus).norm_sqr() + st.b.iter().map(|z| z.norm_sqr()).sum::<f64>() + st.c.norm_sqr();
        let (gauss_e, gauss_b) = s.gauss_residuals();
        Ok(ModeEnergyRow {
            t: s.t,
            k: s.k,
            f_l2sq: s.f.norm_sq(),
            em_sq: e2 + b2,
            micro_d: dissipation_norm(&proj.micro, &unit, s.t, self.sigma)?,
            weighted_micro_d: dissipation_norm(&weighted_micro, &unit, s.t, self.sigma)?,
            weighted_l2sq: weighted.norm_sq(),
            macro_abc: k2 / (1.0 + k2) * abc,
            a_diff: st.charge().norm_sqr(),
            e_term: e2 / (1.0 + k2),
            b_term: k2 * b2 / ((1.0 + k2) * (1.0 + k2)),
            rho_k: rho(s.k),
            gauss_e,
            gauss_b,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeEnergyReport {
    pub ell: f64,
    pub rows: Vec<ModeEnergyRow>,
}

impl ModeEnergyReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn m_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.m()).collect()
    }

    pub fn m_tilde_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.m_tilde()).collect()
    }

    pub fn d_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.d()).collect()
    }

    pub fn rho(&self) -> f64 {
        self.rows.first().map_or(0.0, |r| r.rho_k)
    }
}

pub fn mode_energy_report(
    history: &[ModeState],
    ell: f64,
    sigma: &CollisionFrequencyField,
) -> Result<ModeEnergyReport> {
    let rep = ModeReporter::new(sigma, ell);
    let rows = history.iter().map(|s| rep.row(s)).collect::<Result<Vec<_>>>()?;
    Ok(ModeEnergyReport { ell, rows })
}

/// Least-squares fit of `log M(t) = c - J log(1 + eps rho t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub eps: f64,
    pub j: f64,
    pub log_prefactor: f64,
    /// Root-mean-square residual in `log M`.
    pub resid: f64,
    /// Set when the series decays by less than 10x or cannot be fitted.
    pub inconclusive: bool,
}

impl EnvelopeFit {
    fn inconclusive() -> Self {
        Self {
            eps: f64::NAN,
            j: f64::NAN,
            log_prefactor: f64::NAN,
            resid: f64::NAN,
            inconclusive: true,
        }
    }

    /// `eps J rho`, the small-time decay rate of the envelope.
    pub fn rate(&self, rho: f64) -> f64 {
        self.eps * self.j * rho
    }
}

/// Linear regression of `y` on `x`: `(intercept, slope, sse)`.
fn regress(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let sse = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (icpt, slope, sse)
}

/// Fits the algebraic envelope to `(t, M)` samples at frequency weight `rho`.
pub fn envelope_fit(times: &[f64], series: &[f64], rho: f64) -> EnvelopeFit {
    if times.len() != series.len() || times.len() < 3 || !(rho > 0.0) {
        return EnvelopeFit::inconclusive();
    }
    let first = series[0];
    let last = *series.last().unwrap();
    if !(first > 0.0) || series.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || last > 0.1 * first {
        return EnvelopeFit::inconclusive();
    }
    let y: Vec<f64> = series.iter().map(|v| v.ln()).collect();
    let tmax = times.iter().cloned().fold(0.0, f64::max);
    let fit_at = |log_eps: f64| {
        let e = log_eps.exp();
        let x: Vec<f64> = times.iter().map(|t| -(1.0 + e * rho * t).ln()).collect();
        regress(&x, &y)
    };
    // eps rho tmax spans [1e-4, 1e8]
    let lo = (1e-4 / (rho * tmax)).ln();
    let hi = (1e8 / (rho * tmax)).ln();
    let samples = 240;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=samples {
        let le = lo + (hi - lo) * i as f64 / samples as f64;
        let sse = fit_at(le).2;
        if sse < best.0 {
            best = (sse, le);
        }
    }
    let step = (hi - lo) / samples as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (fit_at(c).2, fit_at(d).2);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fit_at(c).2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fit_at(d).2;
        }
    }
    let le = 0.5 * (a + b);
    let (icpt, slope, sse) = fit_at(le);
    if !(slope > 0.0) || !sse.is_finite() {
        return EnvelopeFit::inconclusive();
    }
    EnvelopeFit {
        eps: le.exp(),
        j: slope,
        log_prefactor: icpt,
        resid: (sse / times.len() as f64).sqrt(),
        inconclusive: false,
    }
}
