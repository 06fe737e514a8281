//! Null-space projection, macro coefficients, high-order moments and the
//! macro balance laws of the linearized system.

use std::sync::Arc;

use crate::collision::{DirectCollision, LinearizedOperator};
use crate::error::{Result, VmlError};
use crate::field::{Species, TwoSpeciesField, C64, Q0};
use crate::grid::{norm_sq, VelocityGrid};
use crate::linalg::solve_dense;
use crate::mode::ModeState;
use crate::stencil::AxisStencil;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Macro coefficients of `Pf = a_+ [1,0] mu^{1/2} + a_- [0,1] mu^{1/2}
/// + b . xi [1,1] mu^{1/2} + c (|xi|^2 - 3) [1,1] mu^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MacroState {
    pub a_plus: C64,
    pub a_minus: C64,
    pub b: [C64; 3],
    pub c: C64,
}

impl MacroState {
    fn to_coeffs(self) -> [C64; 6] {
        [self.a_plus, self.a_minus, self.b[0], self.b[1], self.b[2], self.c]
    }

    fn from_coeffs(v: [C64; 6]) -> Self {
        Self {
            a_plus: v[0],
            a_minus: v[1],
            b: [v[2], v[3], v[4]],
            c: v[5],
        }
    }

    /// `a_+` or `a_-`.
    pub fn a(&self, s: Species) -> C64 {
        match s {
            Species::Plus => self.a_plus,
            Species::Minus => self.a_minus,
        }
    }

    /// Charge moment `a_+ - a_-`.
    pub fn charge(&self) -> C64 {
        self.a_plus - self.a_minus
    }

    /// The macro field `Pf` with these coefficients.
    pub fn to_field(&self, grid: &Arc<VelocityGrid>) -> TwoSpeciesField {
        let sm = grid.sqrt_mu();
        fill(grid, |s, m| {
            let x = grid.node(m);
            let shared = self.b[0] * x[0] + self.b[1] * x[1] + self.b[2] * x[2] + self.c * (norm_sq(x) - 3.0);
            (self.a(s) + shared) * sm[m]
        })
    }
}

fn fill<F: Fn(Species, usize) -> C64>(grid: &Arc<VelocityGrid>, f: F) -> TwoSpeciesField {
    let mut out = TwoSpeciesField::zeros(grid);
    for s in Species::BOTH {
        for (m, v) in out.species_mut(s).iter_mut().enumerate() {
            *v = f(s, m);
        }
    }
    out
}

/// Orthogonal projection onto the discrete null space, built from the six
/// basis vectors by a Gram solve in the quadrature inner product.
#[derive(Debug, Clone)]
pub struct MacroProjector {
    grid: Arc<VelocityGrid>,
    /// `mu^{1/2}`, `xi_i mu^{1/2}`, `(|xi|^2 - 3) mu^{1/2}` at every node.
    profiles: [Vec<f64>; 5],
    gram: [f64; 36],
}

/// Result of [`MacroProjector::project`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub state: MacroState,
    pub macro_part: TwoSpeciesField,
    pub micro: TwoSpeciesField,
}

impl MacroProjector {
    pub fn new(grid: &Arc<VelocityGrid>) -> Self {
        let sm = grid.sqrt_mu();
        let profiles: [Vec<f64>; 5] = std::array::from_fn(|k| {
            (0..grid.len())
                .map(|m| {
                    let x = grid.node(m);
                    let p = match k {
                        0 => 1.0,
                        1..=3 => x[k - 1],
                        _ => norm_sq(x) - 3.0,
                    };
                    p * sm[m]
                })
                .collect()
        });
        let w = grid.weights();
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum() };
        // basis j = (species mask, profile index)
        let spec = Self::basis_spec();
        let mut gram = [0.0; 36];
        for (r, (mr, pr)) in spec.iter().enumerate() {
            for (c, (mc, pc)) in spec.iter().enumerate() {
                let overlap = mr[0] * mc[0] + mr[1] * mc[1];
                gram[r * 6 + c] = overlap * dot(&profiles[*pr], &profiles[*pc]);
            }
        }
        Self {
            grid: grid.clone(),
            profiles,
            gram,
        }
    }

    fn basis_spec() -> [([f64; 2], usize); 6] {
        [
            ([1.0, 0.0], 0),
            ([0.0, 1.0], 0),
            ([1.0, 1.0], 1),
            ([1.0, 1.0], 2),
            ([1.0, 1.0], 3),
            ([1.0, 1.0], 4),
        ]
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    /// The six null-space basis vectors in the order `a_+, a_-, b_1..3, c`.
    pub fn basis(&self) -> Vec<TwoSpeciesField> {
        Self::basis_spec()
            .iter()
            .map(|(mask, p)| {
                let prof = &self.profiles[*p];
                fill(&self.grid, |s, m| C64::new(mask[s as usize] * prof[m], 0.0))
            })
            .collect()
    }

    /// Macro coefficients of `f`.
    pub fn coefficients(&self, f: &TwoSpeciesField) -> Result<MacroState> {
        if !self.grid.same_as(f.grid()) {
            return Err(VmlError::GridMismatch);
        }
        let mut rhs = [ZERO; 6];
        for (j, (mask, p)) in Self::basis_spec().iter().enumerate() {
            for s in Species::BOTH {
                if mask[s as usize] != 0.0 {
                    rhs[j] += f.moment(s, &self.profiles[*p]) * mask[s as usize];
                }
            }
        }
        let mut a: Vec<C64> = self.gram.iter().map(|&g| C64::new(g, 0.0)).collect();
        let mut b = rhs.to_vec();
        solve_dense(&mut a, &mut b)?;
        Ok(MacroState::from_coeffs([b[0], b[1], b[2], b[3], b[4], b[5]]))
    }

    /// `Pf` for given coefficients, using the stored profiles.
    pub fn macro_field(&self, st: &MacroState) -> TwoSpeciesField {
        let c = st.to_coeffs();
        let p = &self.profiles;
        fill(&self.grid, |s, m| {
            let own = if s == Species::Plus { c[0] } else { c[1] };
            own * p[0][m] + c[2] * p[1][m] + c[3] * p[2][m] + c[4] * p[3][m] + c[5] * p[4][m]
        })
    }

    /// `f = Pf + {I-P}f`.
    pub fn project(&self, f: &TwoSpeciesField) -> Result<Projection> {
        let state = self.coefficients(f)?;
        let macro_part = self.macro_field(&state);
        let micro = f - &macro_part;
        Ok(Projection {
            state,
            macro_part,
            micro,
        })
    }

    /// `{I-P}f`.
    pub fn micro(&self, f: &TwoSpeciesField) -> Result<TwoSpeciesField> {
        Ok(self.project(f)?.micro)
    }
}

/// `(MacroState, Pf, {I-P}f)` of `f`.
pub fn project_p(f: &TwoSpeciesField) -> Result<(MacroState, TwoSpeciesField, TwoSpeciesField)> {
    let p = MacroProjector::new(f.grid()).project(f)?;
    Ok((p.state, p.macro_part, p.micro))
}

/// `Theta_ij(f_s) = <(xi_i xi_j - 1) mu^{1/2}, f_s>` and
/// `Lambda_i(f_s) = (1/10) <(|xi|^2 - 5) xi_i mu^{1/2}, f_s>`, per species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub theta: [[[C64; 3]; 3]; 2],
    pub lambda: [[C64; 3]; 2],
}

/// Test-function profiles shared by the moment and residual code.
#[derive(Debug, Clone)]
struct MomentProfiles {
    theta: [[Vec<f64>; 3]; 3],
    lambda: [Vec<f64>; 3],
}

impl MomentProfiles {
    fn new(grid: &VelocityGrid) -> Self {
        let sm = grid.sqrt_mu();
        let mk = |f: &dyn Fn([f64; 3]) -> f64| -> Vec<f64> { (0..grid.len()).map(|m| f(grid.node(m)) * sm[m]).collect() };
        Self {
            theta: std::array::from_fn(|i| std::array::from_fn(|j| mk(&|x| x[i] * x[j] - 1.0))),
            lambda: std::array::from_fn(|i| mk(&|x| 0.1 * (norm_sq(x) - 5.0) * x[i])),
        }
    }

    fn report(&self, f: &TwoSpeciesField) -> MomentReport {
        let mut theta = [[[ZERO; 3]; 3]; 2];
        let mut lambda = [[ZERO; 3]; 2];
        for s in Species::BOTH {
            for i in 0..3 {
                for j in 0..3 {
                    theta[s as usize][i][j] = f.moment(s, &self.theta[i][j]);
                }
                lambda[s as usize][i] = f.moment(s, &self.lambda[i]);
            }
        }
        MomentReport { theta, lambda }
    }
}

pub fn theta_lambda(f: &TwoSpeciesField) -> MomentReport {
    MomentProfiles::new(f.grid()).report(f)
}

/// The five families of macro balance laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BalanceLaw {
    Mass,
    Momentum,
    Energy,
    Theta,
    Lambda,
}

impl BalanceLaw {
    pub const ALL: [BalanceLaw; 5] = [Self::Mass, Self::Momentum, Self::Energy, Self::Theta, Self::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mass => "a",
            Self::Momentum => "b",
            Self::Energy => "c",
            Self::Theta => "theta",
            Self::Lambda => "lambda",
        }
    }
}

/// Residual statistics of one law family over the interior frames.
#[derive(Debug, Clone, PartialEq)]
pub struct LawResidual {
    pub law: BalanceLaw,
    /// Largest residual component per interior frame.
    pub series: Vec<f64>,
    pub max: f64,
    /// Root-mean-square over interior frames.
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub laws: Vec<LawResidual>,
}

impl ResidualReport {
    pub fn get(&self, law: BalanceLaw) -> &LawResidual {
        self.laws.iter().find(|r| r.law == law).expect("all laws are reported")
    }
}

/// Per-frame quantities entering the balance laws. "Time-differenced"
/// entries are differentiated by centered differences; "flux" entries are
/// evaluated at the frame.
struct FrameTerms {
    /// per species: mass, momentum (3), energy, theta (3x3), lambda (3)
    dt_part: [Vec<C64>; 2],
    flux: [Vec<C64>; 2],
}

const TERMS: usize = 1 + 3 + 1 + 9 + 3;

/// Evaluates all balance laws of a uniformly sampled linear history.
pub fn macro_residuals(history: &[ModeState], l: &LinearizedOperator) -> Result<ResidualReport> {
    if history.len() < 3 {
        return Err(VmlError::TooFewFrames {
            needed: 3,
            got: history.len(),
        });
    }
    let grid = l.grid().clone();
    let proj = MacroProjector::new(&grid);
    let mp = MomentProfiles::new(&grid);
    let sm = grid.sqrt_mu();
    let xi_mu: [Vec<f64>; 3] = std::array::from_fn(|i| (0..grid.len()).map(|m| grid.node(m)[i] * sm[m]).collect());
    let xixj_mu: [[Vec<f64>; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| (0..grid.len()).map(|m| grid.node(m)[i] * grid.node(m)[j] * sm[m]).collect()));
    let e_mu: Vec<f64> = (0..grid.len()).map(|m| (norm_sq(grid.node(m)) - 3.0) * sm[m]).collect();
    let exi_mu: [Vec<f64>; 3] =
        std::array::from_fn(|i| (0..grid.len()).map(|m| (norm_sq(grid.node(m)) - 3.0) * grid.node(m)[i] * sm[m]).collect());

    let frames: Vec<FrameTerms> = history
        .iter()
        .map(|st| -> Result<FrameTerms> {
            let k = st.k;
            let pr = proj.project(&st.f)?;
            let g = &pr.micro;
            let lf = l.apply(&st.f)?;
            // r = -i xi.k {I-P}f - L f
            let mut r = g.clone();
            for s in Species::BOTH {
                for (m, v) in r.species_mut(s).iter_mut().enumerate() {
                    let x = grid.node(m);
                    *v *= -I * (x[0] * k[0] + x[1] * k[1] + x[2] * k[2]);
                }
            }
            r.axpy(C64::new(-1.0, 0.0), &lf);
            let mom_r = mp.report(&r);
            let mom_g = mp.report(g);
            let ms = pr.state;
            let ik = [I * k[0], I * k[1], I * k[2]];
            let mut dt_part = [Vec::with_capacity(TERMS), Vec::with_capacity(TERMS)];
            let mut flux = [Vec::with_capacity(TERMS), Vec::with_capacity(TERMS)];
            for s in Species::BOTH {
                let si = s as usize;
                let sign = Q0[si];
                let gx: [C64; 3] = std::array::from_fn(|i| g.moment(s, &xi_mu[i]));
                // mass
                dt_part[si].push(ms.a(s));
                flux[si].push(dot3(ik, ms.b) + dot3(ik, gx));
                // momentum
                for i in 0..3 {
                    dt_part[si].push(ms.b[i] + gx[i]);
                    let gxx: [C64; 3] = std::array::from_fn(|j| g.moment(s, &xixj_mu[j][i]));
                    flux[si].push(
                        ik[i] * (ms.a(s) + ms.c * 2.0) - st.e[i] * sign + dot3(ik, gxx) + lf.moment(s, &xi_mu[i]),
                    );
                }
                // energy
                dt_part[si].push(ms.c + g.moment(s, &e_mu) / 6.0);
                let gex: [C64; 3] = std::array::from_fn(|j| g.moment(s, &exi_mu[j]));
                flux[si].push(dot3(ik, ms.b) / 3.0 + dot3(ik, gex) / 6.0 + lf.moment(s, &e_mu) / 6.0);
                // theta
                for i in 0..3 {
                    for j in 0..3 {
                        let th = mom_g.theta[si][i][j];
                        if i == j {
                            dt_part[si].push(th + ms.c * 2.0);
                            flux[si].push(ik[i] * ms.b[i] * 2.0 - mom_r.theta[si][i][j]);
                        } else {
                            dt_part[si].push(th);
                            flux[si].push(ik[j] * ms.b[i] + ik[i] * ms.b[j] + dot3(ik, gx) - mom_r.theta[si][i][j]);
                        }
                    }
                }
                // lambda
                for i in 0..3 {
                    dt_part[si].push(mom_g.lambda[si][i]);
                    flux[si].push(ik[i] * ms.c - mom_r.lambda[si][i]);
                }
            }
            Ok(FrameTerms { dt_part, flux })
        })
        .collect::<Result<_>>()?;

    let ranges: [(BalanceLaw, std::ops::Range<usize>); 5] = [
        (BalanceLaw::Mass, 0..1),
        (BalanceLaw::Momentum, 1..4),
        (BalanceLaw::Energy, 4..5),
        (BalanceLaw::Theta, 5..14),
        (BalanceLaw::Lambda, 14..17),
    ];
    let mut laws = Vec::new();
    for (law, range) in ranges {
        let mut series = Vec::with_capacity(frames.len() - 2);
        for n in 1..frames.len() - 1 {
            let dt = history[n + 1].t - history[n - 1].t;
            let mut worst = 0.0f64;
            for si in 0..2 {
                for q in range.clone() {
                    let d = (frames[n + 1].dt_part[si][q] - frames[n - 1].dt_part[si][q]) / dt;
                    worst = worst.max((d + frames[n].flux[si][q]).norm());
                }
            }
            series.push(worst);
        }
        let max = series.iter().cloned().fold(0.0, f64::max);
        let l2 = (series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64).sqrt();
        laws.push(LawResidual { law, series, max, l2 });
    }
    Ok(ResidualReport { laws })
}

fn dot3(a: [C64; 3], b: [C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Both sides of the source-moment identities, per species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceMoments {
    /// `<mu^{1/2}, S_s>` by direct quadrature (identity: 0).
    pub mass: [C64; 2],
    /// `<xi mu^{1/2}, S_s>` by direct quadrature.
    pub momentum: [[C64; 3]; 2],
    /// `+/- E a + /- b x B +/- <xi mu^{1/2}, {I-P}f> x B + <xi mu^{1/2}, Gamma(f, f)>`.
    pub momentum_identity: [[C64; 3]; 2],
    /// `(1/6) <(|xi|^2 - 3) mu^{1/2}, S_s>` by direct quadrature.
    pub energy: [C64; 2],
    /// `+/- (1/3) b . E +/- (1/3) <xi mu^{1/2}, {I-P}f> . E + (1/6) <(|xi|^2 - 3) mu^{1/2}, Gamma>`.
    pub energy_identity: [C64; 2],
}

/// Evaluates the moments of
/// `S_(+/-) = +/- (1/2) E . xi f_(+/-) -/+ (E + xi x B) . grad f_(+/-) + Gamma_(+/-)(f, f)`
/// and the closed forms they reduce to.
///
/// The velocity gradient in `S` is `-G^dagger + xi / 2` with
/// `G = mu^{1/2} D mu^{-1/2}`, a consistent gradient whose moments against
/// quadratic polynomials times `mu^{1/2}` integrate by parts exactly.
pub fn source_moments(
    f: &TwoSpeciesField,
    e: [C64; 3],
    b: [C64; 3],
    collision: &DirectCollision,
) -> Result<SourceMoments> {
    let grid = f.grid().clone();
    if !grid.same_as(collision.grid()) {
        return Err(VmlError::GridMismatch);
    }
    let proj = MacroProjector::new(&grid);
    let pr = proj.project(f)?;
    let gamma = collision.gamma(f, f)?;
    let st = AxisStencil::weighted_gradient(&grid, 0.25);
    let sm = grid.sqrt_mu();
    let nodes = grid.len();
    let one: Vec<f64> = sm.to_vec();
    let xi_mu: [Vec<f64>; 3] = std::array::from_fn(|i| (0..nodes).map(|m| grid.node(m)[i] * sm[m]).collect());
    let e_mu: Vec<f64> = (0..nodes).map(|m| (norm_sq(grid.node(m)) - 3.0) * sm[m]).collect();

    let mut out = SourceMoments {
        mass: [ZERO; 2],
        momentum: [[ZERO; 3]; 2],
        momentum_identity: [[ZERO; 3]; 2],
        energy: [ZERO; 2],
        energy_identity: [ZERO; 2],
    };
    for s in Species::BOTH {
        let si = s as usize;
        let sign = Q0[si];
        let fs = f.species(s);
        // grad_j f = -G_j^dagger f + xi_j f / 2
        let grad: [Vec<C64>; 3] = std::array::from_fn(|ax| {
            let mut o = vec![ZERO; nodes];
            st.apply_adjoint_add(ax, fs, &mut o);
            for (m, v) in o.iter_mut().enumerate() {
                *v = -*v + fs[m] * (0.5 * grid.node(m)[ax]);
            }
            o
        });
        let mut src = TwoSpeciesField::zeros(&grid);
        {
            let dst = src.species_mut(s);
            let gs = gamma.species(s);
            for m in 0..nodes {
                let x = grid.node(m);
                let xc = [C64::new(x[0], 0.0), C64::new(x[1], 0.0), C64::new(x[2], 0.0)];
                let force = cross(xc, b);
                let mut drift = ZERO;
                for j in 0..3 {
                    drift += (e[j] + force[j]) * grad[j][m];
                }
                let ex = e[0] * x[0] + e[1] * x[1] + e[2] * x[2];
                dst[m] = (ex * fs[m] * 0.5 - drift) * sign + gs[m];
            }
        }
        out.mass[si] = src.moment(s, &one);
        for i in 0..3 {
            out.momentum[si][i] = src.moment(s, &xi_mu[i]);
        }
        out.energy[si] = src.moment(s, &e_mu) / 6.0;

        let gx: [C64; 3] = std::array::from_fn(|i| pr.micro.moment(s, &xi_mu[i]));
        let bxb = cross(pr.state.b, b);
        let gxb = cross(gx, b);
        for i in 0..3 {
            out.momentum_identity[si][i] = (e[i] * pr.state.a(s) + bxb[i] + gxb[i]) * sign + gamma.moment(s, &xi_mu[i]);
        }
        out.energy_identity[si] =
            (dot3(pr.state.b, e) + dot3(gx, e)) * (sign / 3.0) + gamma.moment(s, &e_mu) / 6.0;
    }
    Ok(out)
}
