//! Initial-data families with a Gaussian envelope in `|k|`.

use std::sync::Arc;

use vml_core::grid::norm_sq;
use vml_core::macro_structure::{MacroProjector, MacroState};
use vml_core::mode::ModeState;
use vml_core::{Species, TwoSpeciesField, Vec3, VelocityGrid, C64};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    MacroGaussian,
    MicroOnly,
    Mixed,
    MaxwellVacuum,
}

impl Family {
    pub const ALL: [Family; 4] = [Self::MacroGaussian, Self::MicroOnly, Self::Mixed, Self::MaxwellVacuum];

    pub fn tag(self) -> &'static str {
        match self {
            Self::MacroGaussian => "macro-gaussian",
            Self::MicroOnly => "micro-only",
            Self::Mixed => "mixed",
            Self::MaxwellVacuum => "maxwell-vacuum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.tag() == s)
    }
}

/// Shape parameters shared by every mode of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataSpec {
    pub family: Family,
    pub amplitude: f64,
    pub envelope: f64,
}

impl DataSpec {
    /// `amplitude exp(-|k|^2 / (2 envelope^2))`.
    pub fn envelope_at(&self, k: Vec3) -> f64 {
        self.amplitude * (-0.5 * norm_sq(k) / (self.envelope * self.envelope)).exp()
    }
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Unit vector along `k` (the first axis at `k = 0`) and a fixed unit
/// vector orthogonal to it.
pub fn frame(k: Vec3) -> (Vec3, Vec3) {
    let r = norm_sq(k).sqrt();
    if r == 0.0 {
        return ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    }
    let u = k.map(|x| x / r);
    // Gram-Schmidt on the axis least aligned with u
    let a = (0..3).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()).then(i.cmp(&j))).unwrap();
    let mut t = [0.0; 3];
    t[a] = 1.0;
    let d = u[a];
    for i in 0..3 {
        t[i] -= d * u[i];
    }
    let tn = norm_sq(t).sqrt();
    (u, t.map(|x| x / tn))
}

fn scale3(v: Vec3, a: f64) -> [C64; 3] {
    v.map(|x| C64::new(a * x, 0.0))
}

fn cross_real(k: Vec3, e: [C64; 3]) -> [C64; 3] {
    [
        e[2] * k[1] - e[1] * k[2],
        e[0] * k[2] - e[2] * k[0],
        e[1] * k[0] - e[0] * k[1],
    ]
}

fn micro_profile(grid: &Arc<VelocityGrid>, u: Vec3, t: Vec3, amp: f64) -> TwoSpeciesField {
    let g = TwoSpeciesField::from_fn(grid, |s, x| {
        let xu = x[0] * u[0] + x[1] * u[1] + x[2] * u[2];
        let xt = x[0] * t[0] + x[1] * t[1] + x[2] * t[2];
        let r2 = norm_sq(x);
        let p = match s {
            Species::Plus => xu * xu * xu - 0.5 * xu * xt + 0.2 * r2 * xt,
            Species::Minus => 0.3 * xu * xu - 0.4 * xt * xt * xu + 0.1 * r2 * r2,
        };
        C64::new(amp * p * (-0.25 * r2).exp(), 0.0)
    });
    g
}

/// The macro part, the micro part and the transverse field amplitude of each family.
fn ingredients(family: Family, kabs: f64) -> (Option<[f64; 4]>, f64, f64) {
    match family {
        // a_+ = a_-, b, c, then transverse E
        Family::MacroGaussian => (Some([1.0, 1.0, 0.5, 0.3]), 0.0, 0.5),
        Family::MicroOnly => (None, 0.5, 0.0),
        Family::Mixed => {
            let q = 0.2 * kabs / (1.0 + kabs);
            (Some([1.0 + q, 1.0 - q, 0.5, 0.3]), 0.5, 0.3)
        }
        Family::MaxwellVacuum => (None, 0.0, 1.0),
    }
}

/// A mode state of the family at `k`, satisfying both Gauss laws.
pub fn init_data(spec: &DataSpec, k: Vec3, grid: &Arc<VelocityGrid>, projector: &MacroProjector) -> Result<ModeState> {
    if !grid.same_as(projector.grid()) {
        return Err(LabError::Invalid("projector built on another grid".into()));
    }
    let amp = spec.envelope_at(k);
    let kabs = norm_sq(k).sqrt();
    let (u, t) = frame(k);
    let (macro_coeffs, micro_amp, e_amp) = ingredients(spec.family, kabs);
    let mut f = TwoSpeciesField::zeros(grid);
    if let Some([ap, am, bb, c]) = macro_coeffs {
        let b: [C64; 3] = std::array::from_fn(|i| C64::new(amp * bb * (u[i] + t[i]), 0.0));
        let st = MacroState {
            a_plus: C64::new(amp * ap, 0.0),
            a_minus: C64::new(amp * am, 0.0),
            b,
            c: C64::new(amp * c, 0.0),
        };
        f = st.to_field(grid);
    }
    if micro_amp != 0.0 {
        let g = micro_profile(grid, u, t, amp * micro_amp);
        let micro = projector.micro(&g)?;
        f.axpy(I, &micro);
    }
    let mut e = scale3(t, amp * e_amp);
    let sm = grid.sqrt_mu();
    let charge = f.moment(Species::Plus, sm) - f.moment(Species::Minus, sm);
    if kabs > 0.0 {
        let k2 = kabs * kabs;
        for i in 0..3 {
            e[i] += -I * charge * (k[i] / k2);
        }
    }
    let b = if kabs > 0.0 {
        cross_real(k, e).map(|z| z / kabs)
    } else {
        [ZERO; 3]
    };
    let s = ModeState::new(k, f, e, b);
    if kabs == 0.0 {
        s.check_neutral_zero_mode(1e-12)?;
    }
    Ok(s)
}
