use crate::collision::LinearizedOperator;
use crate::error::{Result, VmlError};
use crate::field::{Species, TwoSpeciesField, C64, Q1};
use crate::grid::norm_sq;
use crate::linalg::{gmres, solve_dense, GmresConfig};

use super::{cross, current, current_profiles, ik, ModeState, I, ZERO};

/// Time discretization of the mode system `y' = -M y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler, first order.
    ImexEuler,
    /// Implicit midpoint, second order; conserves the skew part exactly.
    ImexMidpoint,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Self::ImexEuler => "imex-euler",
            Self::ImexMidpoint => "imex-midpoint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "imex-euler" => Ok(Self::ImexEuler),
            "imex-midpoint" => Ok(Self::ImexMidpoint),
            other => Err(VmlError::Parameter(format!("unknown scheme `{other}`"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::ImexEuler => 1,
            Self::ImexMidpoint => 2,
        }
    }

    fn theta(self) -> f64 {
        match self {
            Self::ImexEuler => 1.0,
            Self::ImexMidpoint => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Relative residual of the inner linear solve.
    pub solve_tol: f64,
    /// Gauss residual above which a run is flagged.
    pub constraint_tol: f64,
    pub max_steps: usize,
    /// Couples `f` to the fields; off leaves two decoupled subsystems.
    pub coupling: bool,
}

impl StepperConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        let cfg = Self {
            dt,
            scheme,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(VmlError::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.solve_tol > 0.0 && self.constraint_tol > 0.0) {
            return Err(VmlError::Parameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            scheme: Scheme::ImexMidpoint,
            solve_tol: 1e-12,
            constraint_tol: 1e-8,
            max_steps: 10_000_000,
            coupling: true,
        }
    }
}

/// Implicit stepper for one wave vector and step size.
///
/// Each step solves `(I + tau M) x = y_n` with `tau = theta dt`. The field
/// unknowns are eliminated: with `A = I + tau (L + i xi.k)` and
/// `Z_i = A^{-1} (xi_i mu^{1/2} q1)`,
///
/// ```text
/// (I + tau^2 Y + tau^2 (|k|^2 I - k k^T)) E' = r_E + tau i k x r_B - tau j(A^{-1} r_f)
/// B' = r_B - tau i k x E',    f' = A^{-1} r_f + tau sum_i E'_i Z_i
/// ```
///
/// where `Y_ji = j_j(Z_i)`. Only `A^{-1} r_f` is solved per step.
pub struct ModeStepper<'a> {
    l: &'a LinearizedOperator,
    cfg: StepperConfig,
    k: [f64; 3],
    tau: f64,
    transport: Vec<f64>,
    precond: Vec<C64>,
    xi_mu: [Vec<f64>; 3],
    z: Option<[Vec<C64>; 3]>,
    field_matrix: [C64; 9],
    gmres: GmresConfig,
    last_iterations: usize,
}

impl<'a> ModeStepper<'a> {
    pub fn new(l: &'a LinearizedOperator, k: [f64; 3], cfg: &StepperConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = l.grid().clone();
        let nodes = grid.len();
        let tau = cfg.scheme.theta() * cfg.dt;
        let transport: Vec<f64> = (0..nodes)
            .map(|m| {
                let x = grid.node(m);
                x[0] * k[0] + x[1] * k[1] + x[2] * k[2]
            })
            .collect();
        let diag = l.diagonal();
        let precond: Vec<C64> = (0..2 * nodes)
            .map(|i| {
                let m = i % nodes;
                C64::new(1.0, 0.0) / (C64::new(1.0 + tau * diag[m], tau * transport[m]))
            })
            .collect();
        let xi_mu = current_profiles(&grid);
        let gmres = GmresConfig {
            tol: cfg.solve_tol,
            restart: 60,
            max_iter: 2000,
        };
        let mut st = Self {
            l,
            cfg: *cfg,
            k,
            tau,
            transport,
            precond,
            xi_mu,
            z: None,
            field_matrix: [ZERO; 9],
            gmres,
            last_iterations: 0,
        };
        let k2 = norm_sq(k);
        let mut mat = [ZERO; 9];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                mat[i * 3 + j] = C64::new(delta + tau * tau * (k2 * delta - k[i] * k[j]), 0.0);
            }
        }
        if cfg.coupling {
            let mut z: [Vec<C64>; 3] = Default::default();
            for (i, zi) in z.iter_mut().enumerate() {
                let mut src = vec![ZERO; 2 * nodes];
                for sp in Species::BOTH {
                    let q = Q1[sp as usize];
                    for m in 0..nodes {
                        src[sp as usize * nodes + m] = C64::new(q * st.xi_mu[i][m], 0.0);
                    }
                }
                *zi = st.solve_a(&src)?;
            }
            for i in 0..3 {
                let zf = TwoSpeciesField::from_values(&grid, z[i].clone())?;
                let jz = current(&zf, &st.xi_mu);
                for j in 0..3 {
                    mat[j * 3 + i] += jz[j] * (tau * tau);
                }
            }
            st.z = Some(z);
        }
        st.field_matrix = mat;
        Ok(st)
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// GMRES iterations used by the latest solve.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    fn apply_a(&self, x: &[C64], y: &mut [C64]) {
        self.l.apply_into(x, y);
        let nodes = self.transport.len();
        for (i, (yi, xi)) in y.iter_mut().zip(x).enumerate() {
            let t = self.transport[i % nodes];
            *yi = *xi + (*yi + I * t * *xi) * self.tau;
        }
    }

    fn solve_a(&mut self, rhs: &[C64]) -> Result<Vec<C64>> {
        let mut x: Vec<C64> = rhs.iter().zip(&self.precond).map(|(r, p)| r * p).collect();
        let pre = |v: &[C64], o: &mut [C64]| {
            for ((oi, vi), p) in o.iter_mut().zip(v).zip(&self.precond) {
                *oi = vi * p;
            }
        };
        let stats = gmres(
            |a: &[C64], b: &mut [C64]| self.apply_a(a, b),
            pre,
            rhs,
            &mut x,
            self.l.grid().weights(),
            &self.gmres,
        )?;
        self.last_iterations = stats.iterations;
        Ok(x)
    }

    /// Solves `(I + tau M) x = y`.
    fn implicit_stage(&mut self, y: &ModeState) -> Result<ModeState> {
        let grid = y.grid().clone();
        let u = self.solve_a(y.f.values())?;
        let kk = ik(self.k);
        let tau = self.tau;
        let kb = cross(kk, y.b);
        let mut e_new: Vec<C64> = (0..3).map(|i| y.e[i] + kb[i] * tau).collect();
        let mut f_new = TwoSpeciesField::from_values(&grid, u)?;
        if self.cfg.coupling {
            let ju = current(&f_new, &self.xi_mu);
            for i in 0..3 {
                e_new[i] -= ju[i] * tau;
            }
        }
        let mut mat = self.field_matrix;
        solve_dense(&mut mat, &mut e_new)?;
        let e = [e_new[0], e_new[1], e_new[2]];
        let ke = cross(kk, e);
        let b = std::array::from_fn(|i| y.b[i] - ke[i] * tau);
        if let Some(z) = &self.z {
            let vals = f_new.values_mut();
            for (i, zi) in z.iter().enumerate() {
                let c = e[i] * tau;
                for (v, zv) in vals.iter_mut().zip(zi) {
                    *v += c * zv;
                }
            }
        }
        Ok(ModeState {
            k: self.k,
            f: f_new,
            e,
            b,
            t: y.t,
        })
    }

    /// Advances `y` by one step of size `dt`; `t` is set by the caller.
    pub fn step(&mut self, y: &ModeState) -> Result<ModeState> {
        let x = self.implicit_stage(y)?;
        Ok(match self.cfg.scheme {
            Scheme::ImexEuler => x,
            Scheme::ImexMidpoint => {
                let mut f = x.f.scaled(C64::new(2.0, 0.0));
                f.axpy(C64::new(-1.0, 0.0), &y.f);
                ModeState {
                    k: self.k,
                    f,
                    e: std::array::from_fn(|i| x.e[i] * 2.0 - y.e[i]),
                    b: std::array::from_fn(|i| x.b[i] * 2.0 - y.b[i]),
                    t: y.t,
                }
            }
        })
    }
}

/// Bookkeeping of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub max_iterations: usize,
    pub total_iterations: usize,
    /// Largest Gauss residual growth seen, relative to the initial residuals.
    pub max_gauss_drift: f64,
    /// Set when the Gauss drift exceeded the configured tolerance.
    pub constraint_flagged: bool,
}

#[derive(Debug, Clone)]
pub struct ModeRun {
    pub history: Vec<ModeState>,
    pub summary: RunSummary,
}

/// Integrates from `s0` to `t_end`, calling `observer` on the initial state
/// and after every `stride` steps (and on the final state).
pub fn integrate_mode_with<F>(
    s0: &ModeState,
    cfg: &StepperConfig,
    t_end: f64,
    l: &LinearizedOperator,
    stride: usize,
    mut observer: F,
) -> Result<(ModeState, RunSummary)>
where
    F: FnMut(&ModeState) -> Result<()>,
{
    if !l.grid().same_as(s0.grid()) {
        return Err(VmlError::GridMismatch);
    }
    s0.check_neutral_zero_mode(cfg.constraint_tol)?;
    let stride = stride.max(1);
    let n_steps = ((t_end - s0.t) / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    if n_steps > cfg.max_steps {
        return Err(VmlError::Parameter(format!(
            "{n_steps} steps exceed the configured maximum {}",
            cfg.max_steps
        )));
    }
    let mut stepper = ModeStepper::new(l, s0.k, cfg)?;
    let (g0e, g0b) = s0.gauss_residuals();
    let mut summary = RunSummary::default();
    let mut state = s0.clone();
    observer(&state)?;
    let t0 = s0.t;
    for n in 1..=n_steps {
        let mut next = stepper.step(&state)?;
        next.t = t0 + n as f64 * cfg.dt;
        state = next;
        let it = stepper.last_iterations();
        summary.steps = n;
        summary.total_iterations += it;
        summary.max_iterations = summary.max_iterations.max(it);
        let (ge, gb) = state.gauss_residuals();
        let drift = (ge - g0e).abs().max((gb - g0b).abs());
        summary.max_gauss_drift = summary.max_gauss_drift.max(drift);
        if drift > cfg.constraint_tol * (1.0 + (state.t - t0)) {
            summary.constraint_flagged = true;
        }
        if n % stride == 0 || n == n_steps {
            observer(&state)?;
        }
    }
    Ok((state, summary))
}

/// Integrates and keeps every `stride`-th state.
pub fn integrate_mode(
    s0: &ModeState,
    cfg: &StepperConfig,
    t_end: f64,
    l: &LinearizedOperator,
    stride: usize,
) -> Result<ModeRun> {
    let mut history = Vec::new();
    let (_, summary) = integrate_mode_with(s0, cfg, t_end, l, stride, |s| {
        history.push(s.clone());
        Ok(())
    })?;
    Ok(ModeRun { history, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionParams;
    use crate::grid::VelocityGrid;
    use crate::mode::tests::random_state;
    use crate::mode::{energy_identity_check, mode_rhs};
    use crate::TwoSpeciesField;

    fn operator(n: usize) -> LinearizedOperator {
        let grid = VelocityGrid::shared(7.0, n).unwrap();
        LinearizedOperator::new(&grid, &CollisionParams::coulomb()).unwrap()
    }

    fn max_diff(a: &ModeState, b: &ModeState) -> f64 {
        let mut d = a.f.values().iter().zip(b.f.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        for i in 0..3 {
            d = d.max((a.e[i] - b.e[i]).norm()).max((a.b[i] - b.b[i]).norm());
        }
        d
    }

    #[test]
    fn implicit_stage_solves_its_equation() {
        let l = operator(9);
        let k = [0.4, 0.0, 0.9];
        for scheme in [Scheme::ImexEuler, Scheme::ImexMidpoint] {
            let cfg = StepperConfig::new(0.3, scheme).unwrap();
            let mut st = ModeStepper::new(&l, k, &cfg).unwrap();
            let y = random_state(l.grid(), k, 3);
            let x = st.implicit_stage(&y).unwrap();
            // x - tau * rhs(x) = y
            let r = mode_rhs(&x, &l).unwrap();
            let tau = st.tau;
            let mut back = x.clone();
            back.f.axpy(C64::new(-tau, 0.0), &r.f);
            for i in 0..3 {
                back.e[i] -= r.e[i] * tau;
                back.b[i] -= r.b[i] * tau;
            }
            assert!(max_diff(&back, &y) < 1e-10, "{:?}: {}", scheme, max_diff(&back, &y));
        }
    }

    #[test]
    fn vacuum_maxwell_rotates_exactly() {
        let l = operator(9);
        let kk = 1.3;
        let k = [0.0, 0.0, kk];
        let dt = 0.05;
        let cfg = StepperConfig {
            coupling: false,
            ..StepperConfig::new(dt, Scheme::ImexMidpoint).unwrap()
        };
        let e0 = C64::new(0.8, 0.1);
        let s0 = ModeState::new(k, TwoSpeciesField::zeros(l.grid()), [e0, ZERO, ZERO], [ZERO; 3]);
        let t_end = 10.0;
        let run = integrate_mode(&s0, &cfg, t_end, &l, 1).unwrap();
        let en0 = s0.energy();
        // oracle: the Cayley rotation angle per step
        let angle = 2.0 * (0.5 * kk * dt).atan();
        for (n, s) in run.history.iter().enumerate() {
            assert!((s.energy() - en0).abs() <= 1e-10 * (1.0 + s.t), "{}", s.energy() - en0);
            let th = angle * n as f64;
            let e_exact = e0 * th.cos();
            let b_exact = -I * e0 * th.sin();
            assert!((s.e[0] - e_exact).norm() < 1e-12);
            assert!((s.b[1] - b_exact).norm() < 1e-12);
        }
        let rep = energy_identity_check(&run.history, &l).unwrap();
        assert!(rep.max <= 1e-10 * dt);
    }

    #[test]
    fn gauss_law_and_energy_are_controlled() {
        let l = operator(9);
        let k = [0.0, 0.7, 0.2];
        let mut s0 = random_state(l.grid(), k, 11);
        s0.b = [ZERO; 3];
        // enforce i k . E = charge with E parallel to k
        let sm = l.grid().sqrt_mu();
        let q = s0.f.moment(crate::Species::Plus, sm) - s0.f.moment(crate::Species::Minus, sm);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        s0.e = std::array::from_fn(|i| -I * q * (k[i] / k2));
        assert!(s0.gauss_residuals().0 < 1e-13);
        let cfg = StepperConfig::new(0.1, Scheme::ImexMidpoint).unwrap();
        let run = integrate_mode(&s0, &cfg, 5.0, &l, 1).unwrap();
        assert_eq!(run.history.len(), 51);
        assert!(run.summary.max_gauss_drift < 1e-9, "{}", run.summary.max_gauss_drift);
        assert!(!run.summary.constraint_flagged);
        let rep = energy_identity_check(&run.history, &l).unwrap();
        assert!(rep.max_increase <= 1e-10, "{}", rep.max_increase);
    }

    #[test]
    fn neutral_null_mode_is_fixed_point() {
        let l = operator(9);
        let f = TwoSpeciesField::maxwellian_weighted(l.grid(), [1.0, 1.0], |x| 1.0 + 0.3 * x[2]);
        let s0 = ModeState::new([0.0; 3], f, [ZERO; 3], [ZERO; 3]);
        let cfg = StepperConfig::new(0.5, Scheme::ImexEuler).unwrap();
        let run = integrate_mode(&s0, &cfg, 5.0, &l, 5).unwrap();
        for s in &run.history {
            assert!(max_diff(s, &s0) < 1e-10, "{}", max_diff(s, &s0));
        }
    }

    #[test]
    fn time_grid_and_stride() {
        let l = operator(9);
        let s0 = ModeState::zero(l.grid(), [1.0, 0.0, 0.0]);
        let cfg = StepperConfig::new(0.1, Scheme::ImexEuler).unwrap();
        let run = integrate_mode(&s0, &cfg, 1.0, &l, 3).unwrap();
        let times: Vec<f64> = run.history.iter().map(|s| s.t).collect();
        assert_eq!(run.summary.steps, 10);
        assert_eq!(times.len(), 5);
        assert!((times[1] - 0.3).abs() < 1e-15 && (times[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(StepperConfig::new(0.0, Scheme::ImexEuler).is_err());
        assert!(StepperConfig::new(f64::NAN, Scheme::ImexEuler).is_err());
        assert_eq!(Scheme::parse("imex-midpoint").unwrap(), Scheme::ImexMidpoint);
        assert!(Scheme::parse("rk4").is_err());
    }
}
