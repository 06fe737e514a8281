//! Time-velocity weights, weighted and dissipation norms, and the energy
//! and dissipation functionals evaluated on Fourier modes.

use crate::collision::{p_xi_projection, CollisionFrequencyField, CollisionParams};
use crate::error::{Result, VmlError};
use crate::field::{Species, TwoSpeciesField, C64};
use crate::grid::{norm_sq, Vec3, VelocityGrid};
use crate::macro_structure::MacroProjector;
use crate::mode::ModeState;
use crate::stencil::velocity_gradient;

/// Largest velocity-derivative order the ledgers evaluate.
pub const MAX_VELOCITY_ORDER: usize = 2;

/// Parameters of `w_{tau,lambda}(t, xi) = <xi>^{(gamma+2) tau} exp(lambda <xi>^2 / (1+t)^theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub tau: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl WeightSpec {
    pub fn new(tau: f64, lambda: f64, theta: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(VmlError::Parameter("tau must be finite".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(VmlError::Parameter(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(theta > 0.0 && theta <= 0.25) {
            return Err(VmlError::Parameter(format!("theta must lie in (0, 1/4], got {theta}")));
        }
        Ok(Self { tau, lambda, theta })
    }

    /// `w = 1`.
    pub fn unit() -> Self {
        Self {
            tau: 0.0,
            lambda: 0.0,
            theta: 0.25,
        }
    }

    /// `<xi>^{-(gamma+2) ell / 2}`, the `ell`-th power of the linear-decay weight.
    pub fn linear_power(ell: f64) -> Self {
        Self {
            tau: -0.5 * ell,
            lambda: 0.0,
            theta: 0.25,
        }
    }
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::unit()
    }
}

/// `<xi> = (1 + |xi|^2)^{1/2}`.
pub fn bracket(xi: Vec3) -> f64 {
    (1.0 + norm_sq(xi)).sqrt()
}

pub fn weight_eval(spec: &WeightSpec, t: f64, xi: Vec3, p: &CollisionParams) -> f64 {
    let b2 = 1.0 + norm_sq(xi);
    let alg = b2.powf(0.5 * (p.gamma() + 2.0) * spec.tau);
    if spec.lambda == 0.0 {
        alg
    } else {
        alg * (spec.lambda * b2 / (1.0 + t).powf(spec.theta)).exp()
    }
}

/// `w_{tau,lambda}(t, .)` at every node.
pub fn weight_profile(grid: &VelocityGrid, spec: &WeightSpec, t: f64, p: &CollisionParams) -> Vec<f64> {
    grid.sample(|x| weight_eval(spec, t, x, p))
}

/// `|f|^2_{tau,lambda} = sum_s int w^2 |f_s|^2`.
pub fn weighted_norm_sq(f: &TwoSpeciesField, spec: &WeightSpec, t: f64, p: &CollisionParams) -> f64 {
    let grid = f.grid();
    let w = weight_profile(grid, spec, t, p);
    weighted_sum(grid, &w, f)
}

fn weighted_sum(grid: &VelocityGrid, w: &[f64], f: &TwoSpeciesField) -> f64 {
    let q = grid.weights();
    let mut acc = 0.0;
    for s in Species::BOTH {
        for ((v, w), q) in f.species(s).iter().zip(w).zip(q) {
            acc += q * w * w * v.norm_sqr();
        }
    }
    acc
}

fn gradients(f: &TwoSpeciesField) -> [TwoSpeciesField; 3] {
    std::array::from_fn(|ax| velocity_gradient(f, ax))
}

/// `|f|^2_{D,tau,lambda} = sum_ij int w^2 (sigma^ij d_i f d_j conj(f) + sigma^ij xi_i xi_j |f|^2 / 4)`.
pub fn dissipation_norm(
    f: &TwoSpeciesField,
    spec: &WeightSpec,
    t: f64,
    sigma: &CollisionFrequencyField,
) -> Result<f64> {
    let grid = f.grid();
    if !grid.same_as(sigma.grid()) {
        return Err(VmlError::GridMismatch);
    }
    let w = weight_profile(grid, spec, t, sigma.params());
    let g = gradients(f);
    let q = grid.weights();
    let mut acc = 0.0;
    for s in Species::BOTH {
        let fs = f.species(s);
        let gs = [g[0].species(s), g[1].species(s), g[2].species(s)];
        for m in 0..grid.len() {
            let d = [gs[0][m], gs[1][m], gs[2][m]];
            let sd = sigma.apply(m, d);
            let grad_part = sd[0] * d[0].conj() + sd[1] * d[1].conj() + sd[2] * d[2].conj();
            let x = grid.node(m);
            let zero_part = 0.25 * sigma.quadratic(m, x) * fs[m].norm_sqr();
            acc += q[m] * w[m] * w[m] * (grad_part.re + zero_part);
        }
    }
    Ok(acc)
}

/// The three-term expression equivalent to the dissipation norm:
/// `|(1+|xi|)^{gamma/2} P_xi grad f|^2 + |(1+|xi|)^{(gamma+2)/2} {I-P_xi} grad f|^2
/// + |(1+|xi|)^{(gamma+2)/2} f|^2`, each weighted by `w_{tau,lambda}^2`.
pub fn characterization_norm(f: &TwoSpeciesField, spec: &WeightSpec, t: f64, p: &CollisionParams) -> f64 {
    characterization_terms(f, spec, t, p).iter().sum()
}

/// The three terms of [`characterization_norm`] separately.
pub fn characterization_terms(f: &TwoSpeciesField, spec: &WeightSpec, t: f64, p: &CollisionParams) -> [f64; 3] {
    let grid = f.grid();
    let w = weight_profile(grid, spec, t, p);
    let g = gradients(f);
    let q = grid.weights();
    let gamma = p.gamma();
    let mut out = [0.0; 3];
    for s in Species::BOTH {
        let fs = f.species(s);
        let gs = [g[0].species(s), g[1].species(s), g[2].species(s)];
        for m in 0..grid.len() {
            let x = grid.node(m);
            let r = norm_sq(x).sqrt();
            let radial_w = (1.0 + r).powf(gamma);
            let tang_w = (1.0 + r).powf(gamma + 2.0);
            let ww = q[m] * w[m] * w[m];
            let mut radial = 0.0;
            let mut tangential = 0.0;
            for part in [(|z: &C64| z.re) as fn(&C64) -> f64, |z: &C64| z.im] {
                let d = [part(&gs[0][m]), part(&gs[1][m]), part(&gs[2][m])];
                let pd = p_xi_projection(x, d);
                radial += norm_sq(pd);
                tangential += norm_sq([d[0] - pd[0], d[1] - pd[1], d[2] - pd[2]]);
            }
            out[0] += ww * radial_w * radial;
            out[1] += ww * tang_w * tangential;
            out[2] += ww * tang_w * fs[m].norm_sqr();
        }
    }
    out
}

/// Parameters of one energy functional / dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRequest {
    /// Total derivative order `N`.
    pub n: usize,
    pub ell: f64,
    pub lambda: f64,
    pub theta: f64,
    /// Velocity derivatives are taken up to `min(N, beta_max)`.
    pub beta_max: usize,
}

impl EnergyRequest {
    pub fn new(n: usize, ell: f64, lambda: f64, theta: f64) -> Result<Self> {
        let req = Self {
            n,
            ell,
            lambda,
            theta,
            beta_max: MAX_VELOCITY_ORDER,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_beta_max(mut self, beta_max: usize) -> Result<Self> {
        self.beta_max = beta_max;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.beta_max > MAX_VELOCITY_ORDER {
            return Err(VmlError::DerivativeBudget {
                order: self.beta_max,
                max: MAX_VELOCITY_ORDER,
            });
        }
        if !(self.ell >= 0.0) {
            return Err(VmlError::Parameter(format!("ell must be >= 0, got {}", self.ell)));
        }
        if self.lambda > 0.0 && self.ell < self.n as f64 {
            return Err(VmlError::Parameter(format!(
                "lambda > 0 requires ell - N >= 0 (ell = {}, N = {})",
                self.ell, self.n
            )));
        }
        WeightSpec::new(0.0, self.lambda, self.theta)?;
        Ok(())
    }

    fn weight(&self, beta: usize) -> WeightSpec {
        WeightSpec {
            tau: beta as f64 - self.ell,
            lambda: self.lambda,
            theta: self.theta,
        }
    }
}

/// All multi-indices `a` in `N^3` with `|a| <= max`, in lexicographic order.
pub fn multi_indices(max: usize) -> Vec<[usize; 3]> {
    let mut v = Vec::new();
    for a in 0..=max {
        for b in 0..=max - a {
            for c in 0..=max - a - b {
                v.push([a, b, c]);
            }
        }
    }
    v
}

/// `|k^alpha|^2`.
fn k_power(k: Vec3, alpha: [usize; 3]) -> f64 {
    (0..3).map(|i| k[i].powi(2 * alpha[i] as i32)).product()
}

/// `sum_{|alpha| <= n} |k^alpha|^2`, the per-mode `H^n` multiplier.
pub fn sobolev_multiplier(k: Vec3, n: usize) -> f64 {
    multi_indices(n).into_iter().map(|a| k_power(k, a)).sum()
}

/// One `(alpha, beta)` entry of a ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub alpha: [usize; 3],
    pub beta: [usize; 3],
    pub value: f64,
}

/// Components of the energy functional and dissipation rate of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    /// `|k^alpha|^2 |d_beta f|^2_{|beta|-ell,lambda}`.
    pub kinetic: Vec<LedgerEntry>,
    /// `||(E, B)||^2_{H^N}`.
    pub field: f64,
    /// `|k^alpha|^2 |d_beta {I-P} f|^2_{D,|beta|-ell,lambda}`.
    pub micro_dissipation: Vec<LedgerEntry>,
    /// `sum_{|alpha| <= N-1} |k|^2 |k^alpha|^2 (|a_+|^2 + |a_-|^2 + |b|^2 + |c|^2)`.
    pub macro_gradient: f64,
    /// `|a_+ - a_-|^2`.
    pub charge: f64,
    /// `||E||^2_{H^{N-1}}`.
    pub electric: f64,
    /// `||grad B||^2_{H^{N-2}}`.
    pub magnetic_gradient: f64,
    /// `lambda / (1+t)^{1+theta} sum |k^alpha|^2 |<xi> d_beta {I-P} f|^2_{|beta|-ell,lambda}`,
    /// present only when `lambda > 0`.
    pub decaying: Option<f64>,
}

impl EnergyLedger {
    pub fn energy(&self) -> f64 {
        self.kinetic.iter().map(|e| e.value).sum::<f64>() + self.field
    }

    pub fn dissipation(&self) -> f64 {
        self.micro_dissipation.iter().map(|e| e.value).sum::<f64>()
            + self.macro_gradient
            + self.charge
            + self.electric
            + self.magnetic_gradient
            + self.decaying.unwrap_or(0.0)
    }

    /// `sum_j c_j L_j` for ledgers of one request, the k-quadrature of a
    /// disjoint union of modes.
    pub fn combine(parts: &[(f64, &EnergyLedger)]) -> Option<EnergyLedger> {
        let (_, first) = parts.first()?;
        let mut out = (*first).clone();
        let scale_entries = |v: &mut Vec<LedgerEntry>| v.iter_mut().for_each(|e| e.value = 0.0);
        scale_entries(&mut out.kinetic);
        scale_entries(&mut out.micro_dissipation);
        out.field = 0.0;
        out.macro_gradient = 0.0;
        out.charge = 0.0;
        out.electric = 0.0;
        out.magnetic_gradient = 0.0;
        out.decaying = out.decaying.map(|_| 0.0);
        for (c, l) in parts {
            for (o, e) in out.kinetic.iter_mut().zip(&l.kinetic) {
                o.value += c * e.value;
            }
            for (o, e) in out.micro_dissipation.iter_mut().zip(&l.micro_dissipation) {
                o.value += c * e.value;
            }
            out.field += c * l.field;
            out.macro_gradient += c * l.macro_gradient;
            out.charge += c * l.charge;
            out.electric += c * l.electric;
            out.magnetic_gradient += c * l.magnetic_gradient;
            if let (Some(o), Some(v)) = (out.decaying.as_mut(), l.decaying) {
                *o += c * v;
            }
        }
        Some(out)
    }
}

/// Repeated lattice derivatives `d_beta g` for every `|beta| <= max`.
fn velocity_derivatives(g: &TwoSpeciesField, max: usize) -> Vec<([usize; 3], TwoSpeciesField)> {
    let mut out: Vec<([usize; 3], TwoSpeciesField)> = vec![([0, 0, 0], g.clone())];
    for beta in multi_indices(max).into_iter().skip(1) {
        // differentiate a stored lower-order derivative along one axis
        let ax = (0..3).find(|&i| beta[i] > 0).expect("nonzero multi-index");
        let mut lower = beta;
        lower[ax] -= 1;
        let base = &out.iter().find(|(b, _)| *b == lower).expect("lower order present").1;
        let d = velocity_gradient(base, ax);
        out.push((beta, d));
    }
    out
}

/// Energy functional and dissipation-rate components of one Fourier mode at time `t`.
pub fn energy_ledger(
    state: &ModeState,
    req: &EnergyRequest,
    t: f64,
    sigma: &CollisionFrequencyField,
) -> Result<EnergyLedger> {
    req.validate()?;
    let grid = state.f.grid();
    if !grid.same_as(sigma.grid()) {
        return Err(VmlError::GridMismatch);
    }
    let p = sigma.params();
    let k = state.k;
    let n = req.n;
    let bmax = req.beta_max.min(n);
    let proj = MacroProjector::new(grid).project(&state.f)?;
    let df = velocity_derivatives(&state.f, bmax);
    let dg = velocity_derivatives(&proj.micro, bmax);
    let bracket_profile = grid.sample(bracket);

    let mut kinetic = Vec::new();
    let mut micro_dissipation = Vec::new();
    let mut decaying = 0.0;
    for ((beta, fb), (_, gb)) in df.iter().zip(&dg) {
        let order: usize = beta.iter().sum();
        let spec = req.weight(order);
        let w = weight_profile(grid, &spec, t, p);
        let f_norm = weighted_sum(grid, &w, fb);
        let g_diss = dissipation_norm(gb, &spec, t, sigma)?;
        let g_br = if req.lambda > 0.0 {
            let wb: Vec<f64> = w.iter().zip(&bracket_profile).map(|(a, b)| a * b).collect();
            weighted_sum(grid, &wb, gb)
        } else {
            0.0
        };
        for alpha in multi_indices(n - order) {
            let kp = k_power(k, alpha);
            kinetic.push(LedgerEntry {
                alpha,
                beta: *beta,
                value: kp * f_norm,
            });
            micro_dissipation.push(LedgerEntry {
                alpha,
                beta: *beta,
                value: kp * g_diss,
            });
            decaying += kp * g_br;
        }
    }
    let e2: f64 = state.e.iter().map(|z| z.norm_sqr()).sum();
    let b2: f64 = state.b.iter().map(|z| z.norm_sqr()).sum();
    let k2 = norm_sq(k);
    let ms = proj.state;
    let macro_sq = ms.a_plus.norm_sqr() + ms.a_minus.norm_sqr() + ms.b.iter().map(|z| z.norm_sqr()).sum::<f64>() + ms.c.norm_sqr();
    let lower = |m: usize| if n >= m { sobolev_multiplier(k, n - m) } else { 0.0 };
    Ok(EnergyLedger {
        kinetic,
        field: sobolev_multiplier(k, n) * (e2 + b2),
        micro_dissipation,
        macro_gradient: k2 * lower(1) * macro_sq,
        charge: ms.charge().norm_sqr(),
        electric: lower(1) * e2,
        magnetic_gradient: k2 * lower(2) * b2,
        decaying: (req.lambda > 0.0).then(|| req.lambda / (1.0 + t).powf(1.0 + req.theta) * decaying),
    })
}

/// Parameters of the temporal energy norm `X(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XNormSpec {
    pub n0: usize,
    pub ell0: f64,
    pub lambda0: f64,
    pub theta: f64,
    pub eps0: f64,
}

impl Default for XNormSpec {
    fn default() -> Self {
        Self {
            n0: 2,
            ell0: 8.0,
            lambda0: 0.05,
            theta: 0.25,
            eps0: 0.1,
        }
    }
}

impl XNormSpec {
    /// `N_1 = ceil(3 N_0 / 2)`.
    pub fn n1(&self) -> usize {
        (3 * self.n0).div_ceil(2)
    }

    /// `ell_1 = ell_0 / 2`.
    pub fn ell1(&self) -> f64 {
        0.5 * self.ell0
    }

    /// The bracketed quantity under each supremum at one time, in order.
    pub fn terms(&self, state: &ModeState, sigma: &CollisionFrequencyField) -> Result<[f64; 4]> {
        let t = state.t;
        let (n0, n1, l0, l1, lam, th) = (self.n0, self.n1(), self.ell0, self.ell1(), self.lambda0, self.theta);
        let en = |n: isize, ell: f64, lambda: f64| -> Result<f64> {
            if n < 0 {
                return Ok(0.0);
            }
            let req = EnergyRequest::new(n as usize, ell, lambda, th)?;
            Ok(energy_ledger(state, &req, t, sigma)?.energy())
        };
        let s = 1.0 + t;
        let n1 = n1 as isize;
        let n0i = n0 as isize;
        let first = en(n1, 0.0, 0.0)? + s.powf(1.5) * en(n1 - 2, 0.0, 0.0)?;
        let second = s.powf(-0.5 * (1.0 + self.eps0)) * en(n1, l1, lam)?
            + en(n1 - 1, l1, lam)?
            + s.powf(1.5) * en(n1 - 3, l1 - 1.0, lam)?;
        let third = en(n0i, l0, lam)? + s.powf(1.5) * en(n0i, l0 - 1.0, lam)?;
        let k2 = norm_sq(state.k);
        let eb: f64 = state.e.iter().chain(&state.b).map(|z| z.norm_sqr()).sum();
        let fourth = s.powf(2.0 * (1.0 + th)) * k2 * sobolev_multiplier(state.k, n0.saturating_sub(1)) * eb;
        Ok([first, second, third, fourth])
    }

    /// `X(t)` along a history: running suprema of the four terms, summed.
    pub fn series(&self, history: &[ModeState], sigma: &CollisionFrequencyField) -> Result<Vec<f64>> {
        let mut sup = [0.0f64; 4];
        history
            .iter()
            .map(|st| {
                let v = self.terms(st, sigma)?;
                for (s, x) in sup.iter_mut().zip(v) {
                    *s = s.max(x);
                }
                Ok(sup.iter().sum())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::sigma_field;
    use crate::macro_structure::MacroState;
    use crate::mode::tests::random_state;
    use std::sync::Arc;

    fn setup(n: usize) -> (Arc<VelocityGrid>, CollisionFrequencyField) {
        let g = VelocityGrid::shared(7.0, n).unwrap();
        let s = sigma_field(&g, &CollisionParams::coulomb());
        (g, s)
    }

    #[test]
    fn weight_examples() {
        let p = CollisionParams::coulomb();
        assert_eq!(weight_eval(&WeightSpec::unit(), 3.0, [1.0, 2.0, 0.5], &p), 1.0);
        let spec = WeightSpec::new(0.7, 0.3, 0.25).unwrap();
        let w = weight_eval(&spec, 2.0, [0.0; 3], &p);
        assert!((w - (0.3 / 3f64.powf(0.25)).exp()).abs() < 1e-15);
        let spec = WeightSpec::new(1.0, 0.0, 0.25).unwrap();
        assert!((weight_eval(&spec, 0.0, [2.0, 2.0, 1.0], &p) - 10f64.powf(-0.5)).abs() < 1e-15);
        assert!(WeightSpec::new(0.0, -0.1, 0.25).is_err());
        assert!(WeightSpec::new(0.0, 0.1, 0.3).is_err());
    }

    #[test]
    fn weight_decreases_in_time() {
        let p = CollisionParams::coulomb();
        let spec = WeightSpec::new(-1.0, 0.2, 0.25).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let w = weight_eval(&spec, i as f64, [1.0, -0.5, 2.0], &p);
            assert!(w < prev && w > 0.0);
            prev = w;
        }
    }

    #[test]
    fn unit_weighted_norm_is_l2() {
        let (g, _) = setup(9);
        let f = random_state(&g, [0.0; 3], 1).f;
        let a = weighted_norm_sq(&f, &WeightSpec::unit(), 1.0, &CollisionParams::coulomb());
        assert!((a - f.norm_sq()).abs() <= 1e-14 * f.norm_sq());
    }

    #[test]
    fn dissipation_norm_matches_reversed_sum() {
        let (g, sigma) = setup(9);
        let spec = WeightSpec::new(-0.5, 0.1, 0.25).unwrap();
        let f = random_state(&g, [0.0; 3], 2).f;
        let value = dissipation_norm(&f, &spec, 0.5, &sigma).unwrap();
        // oracle: explicit matrix entries, summed from the last node backwards
        let w = weight_profile(&g, &spec, 0.5, sigma.params());
        let d: Vec<TwoSpeciesField> = (0..3).map(|a| velocity_gradient(&f, a)).collect();
        let mut acc = 0.0;
        for s in [Species::Minus, Species::Plus] {
            for m in (0..g.len()).rev() {
                let mat = sigma.matrix(m);
                let x = g.node(m);
                for i in (0..3).rev() {
                    for j in (0..3).rev() {
                        let di = d[i].species(s)[m];
                        let dj = d[j].species(s)[m];
                        let fm = f.species(s)[m];
                        let t = mat[i][j] * ((di * dj.conj()).re + 0.25 * x[i] * x[j] * fm.norm_sqr());
                        acc += g.weights()[m] * w[m] * w[m] * t;
                    }
                }
            }
        }
        assert!((value - acc).abs() <= 1e-12 * acc.abs(), "{value} vs {acc}");
        assert_eq!(dissipation_norm(&TwoSpeciesField::zeros(&g), &spec, 0.5, &sigma).unwrap(), 0.0);
        let twice = dissipation_norm(&f.scaled(C64::new(2.0, 0.0)), &spec, 0.5, &sigma).unwrap();
        assert!((twice - 4.0 * value).abs() <= 1e-12 * value);
    }

    #[test]
    fn radial_field_has_no_tangential_gradient() {
        let (g, _) = setup(11);
        let f = TwoSpeciesField::from_fn(&g, |_, x| C64::new(2.0 - norm_sq(x), 0.0));
        let t = characterization_terms(&f, &WeightSpec::unit(), 0.0, &CollisionParams::coulomb());
        assert!(t[1] < 1e-8 * (t[0] + t[1] + t[2]), "{t:?}");
        assert_eq!(characterization_norm(&TwoSpeciesField::zeros(&g), &WeightSpec::unit(), 0.0, &CollisionParams::coulomb()), 0.0);
    }

    #[test]
    fn request_validation() {
        assert!(EnergyRequest::new(2, 1.0, 0.1, 0.25).is_err());
        assert!(EnergyRequest::new(2, 2.0, 0.1, 0.25).is_ok());
        assert!(EnergyRequest::new(2, 0.0, 0.0, 0.25).is_ok());
        let err = EnergyRequest::new(3, 4.0, 0.0, 0.25).unwrap().with_beta_max(3).unwrap_err();
        assert_eq!(err, VmlError::DerivativeBudget { order: 3, max: 2 });
        assert_eq!(multi_indices(2).len(), 10);
        assert!((sobolev_multiplier([1.0, 2.0, 0.0], 1) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn ledger_special_states() {
        let (g, sigma) = setup(9);
        let req = EnergyRequest::new(2, 3.0, 0.1, 0.25).unwrap();
        let k = [0.5, -1.0, 0.25];
        let zero = ModeState::zero(&g, k);
        let led = energy_ledger(&zero, &req, 1.0, &sigma).unwrap();
        assert_eq!(led.energy(), 0.0);
        assert_eq!(led.dissipation(), 0.0);

        let e = [C64::new(0.3, 0.1), C64::new(-0.2, 0.0), C64::new(0.0, 0.4)];
        let b = [C64::new(0.0, -0.1), C64::new(0.5, 0.0), C64::new(0.2, 0.2)];
        let vac = ModeState::new(k, TwoSpeciesField::zeros(&g), e, b);
        let led = energy_ledger(&vac, &req, 1.0, &sigma).unwrap();
        let em: f64 = e.iter().chain(&b).map(|z| z.norm_sqr()).sum();
        assert_eq!(led.energy(), sobolev_multiplier(k, 2) * em);

        let st = MacroState {
            a_plus: C64::new(1.0, 0.0),
            a_minus: C64::new(0.2, 0.0),
            b: [C64::new(0.1, 0.1); 3],
            c: C64::new(-0.3, 0.0),
        };
        let mac = ModeState::new(k, st.to_field(&g), [ZERO3; 3], [ZERO3; 3]);
        let led = energy_ledger(&mac, &req, 1.0, &sigma).unwrap();
        assert!(led.micro_dissipation.iter().all(|e| e.value < 1e-10));
        assert!(led.decaying.unwrap() < 1e-10);
        assert!(led.energy() > 0.0 && led.charge > 0.0);
    }

    const ZERO3: C64 = C64 { re: 0.0, im: 0.0 };

    #[test]
    fn lambda_ledger_dominates() {
        let (g, sigma) = setup(9);
        let s = random_state(&g, [0.3, 0.0, 0.4], 4);
        let with = energy_ledger(&s, &EnergyRequest::new(1, 2.0, 0.2, 0.25).unwrap(), 0.0, &sigma).unwrap();
        let without = energy_ledger(&s, &EnergyRequest::new(1, 2.0, 0.0, 0.25).unwrap(), 0.0, &sigma).unwrap();
        for (a, b) in with.kinetic.iter().zip(&without.kinetic) {
            assert!(a.value >= b.value);
        }
        for (a, b) in with.micro_dissipation.iter().zip(&without.micro_dissipation) {
            assert!(a.value >= b.value);
        }
        assert!(without.decaying.is_none() && with.decaying.unwrap() > 0.0);
    }

    #[test]
    fn ledgers_combine_linearly() {
        let (g, sigma) = setup(7);
        let req = EnergyRequest::new(1, 0.0, 0.0, 0.25).unwrap();
        let a = energy_ledger(&random_state(&g, [0.1, 0.0, 0.0], 7), &req, 0.0, &sigma).unwrap();
        let b = energy_ledger(&random_state(&g, [0.0, 0.8, 0.0], 8), &req, 0.0, &sigma).unwrap();
        let c = EnergyLedger::combine(&[(0.25, &a), (2.0, &b)]).unwrap();
        assert!((c.energy() - (0.25 * a.energy() + 2.0 * b.energy())).abs() < 1e-12 * c.energy());
        assert!((c.dissipation() - (0.25 * a.dissipation() + 2.0 * b.dissipation())).abs() < 1e-12 * c.dissipation());
        assert!(EnergyLedger::combine(&[]).is_none());
    }

    #[test]
    fn x_norm_is_nondecreasing() {
        let (g, sigma) = setup(7);
        let mut s = random_state(&g, [0.2, 0.1, 0.0], 9);
        let mut hist = Vec::new();
        for i in 0..4 {
            s.t = i as f64;
            s.f.scale(C64::new(0.5, 0.0));
            hist.push(s.clone());
        }
        let x = XNormSpec::default().series(&hist, &sigma).unwrap();
        assert!(x.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(XNormSpec::default().n1(), 3);
    }
}
