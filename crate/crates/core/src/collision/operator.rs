use std::sync::Arc;

use crate::error::{Result, VmlError};
use crate::fft3::KernelConvolver;
use crate::field::{TwoSpeciesField, C64};
use crate::grid::VelocityGrid;
use crate::stencil::AxisStencil;

use super::kernel::{sym_index, KernelTable};
use super::sigma::CollisionFrequencyField;
use super::CollisionParams;

/// Default cap on the padded FFT box `(2n)^3` used during assembly.
pub const DEFAULT_ASSEMBLY_BUDGET: u64 = 1 << 24;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Matrix-free linearized Landau operator `L = [L_+, L_-]`.
///
/// With `G = mu^{1/2} D mu^{-1/2}` (so `G f` is the lattice form of
/// `grad f + xi f / 2`) the operator is
///
/// ```text
/// L_(+/-) f = G^dagger [ 2 sigma G f_(+/-) - mu^{1/2} (phi * (w mu^{1/2} G (f_+ + f_-))) ]
/// ```
///
/// which is the linearization of the lattice `Q` around `mu`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    grid: Arc<VelocityGrid>,
    params: CollisionParams,
    conv: KernelConvolver,
    sigma: CollisionFrequencyField,
    grad: AxisStencil,
    diag: Vec<f64>,
}

/// Assembles `L` on `grid`.
pub fn assemble_l(grid: &Arc<VelocityGrid>, p: &CollisionParams) -> Result<LinearizedOperator> {
    LinearizedOperator::with_budget(grid, p, DEFAULT_ASSEMBLY_BUDGET)
}

impl LinearizedOperator {
    pub fn new(grid: &Arc<VelocityGrid>, p: &CollisionParams) -> Result<Self> {
        assemble_l(grid, p)
    }

    pub fn with_budget(grid: &Arc<VelocityGrid>, p: &CollisionParams, budget: u64) -> Result<Self> {
        let padded = (2 * grid.points_per_axis() as u64).pow(3);
        if padded > budget {
            return Err(VmlError::Budget {
                what: "operator assembly",
                needed: padded,
                budget,
            });
        }
        let table = KernelTable::new(grid, p);
        let conv = KernelConvolver::new(&table);
        let sigma = CollisionFrequencyField::from_convolver(grid, &conv, p);
        let grad = AxisStencil::weighted_gradient(grid, 0.25);
        let diag = diagonal(grid, &table, &sigma, &grad);
        Ok(Self {
            grid: grid.clone(),
            params: *p,
            conv,
            sigma,
            grad,
            diag,
        })
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    pub fn params(&self) -> &CollisionParams {
        &self.params
    }

    pub fn sigma(&self) -> &CollisionFrequencyField {
        &self.sigma
    }

    /// Diagonal of `L_(+/-)` (identical for both species).
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Dimension of the operator, `2 n^3`.
    pub fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn weighted_grad(&self, f: &[C64]) -> [Vec<C64>; 3] {
        let nodes = f.len();
        let mut out = [vec![ZERO; nodes], vec![ZERO; nodes], vec![ZERO; nodes]];
        for (ax, o) in out.iter_mut().enumerate() {
            self.grad.apply(ax, f, o);
        }
        out
    }

    /// Nonlocal flux `mu^{1/2} (phi * (w mu^{1/2} g))` for a gradient field `g`.
    fn nonlocal_flux(&self, g: &[Vec<C64>; 3]) -> [Vec<C64>; 3] {
        let w = self.grid.weights();
        let sm = self.grid.sqrt_mu();
        let u: Vec<Vec<C64>> = g
            .iter()
            .map(|gi| gi.iter().enumerate().map(|(m, v)| v * (w[m] * sm[m])).collect())
            .collect();
        let mut c = self.conv.convolve_vector([&u[0], &u[1], &u[2]]);
        for ci in c.iter_mut() {
            for (m, v) in ci.iter_mut().enumerate() {
                *v *= sm[m];
            }
        }
        c
    }

    fn divergence_into(&self, flux: &[Vec<C64>; 3], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = ZERO);
        for (ax, fl) in flux.iter().enumerate() {
            self.grad.apply_adjoint_add(ax, fl, out);
        }
    }

    /// `L f`.
    pub fn apply(&self, f: &TwoSpeciesField) -> Result<TwoSpeciesField> {
        if !self.grid.same_as(f.grid()) {
            return Err(VmlError::GridMismatch);
        }
        let mut out = TwoSpeciesField::zeros(f.grid());
        self.apply_parts(f.values(), out.values_mut(), 2.0, true);
        Ok(out)
    }

    /// `L f` on raw `[plus.., minus..]` arrays of this operator's grid.
    pub fn apply_into(&self, f: &[C64], out: &mut [C64]) {
        self.apply_parts(f, out, 2.0, true);
    }

    fn local_flux(&self, g: &[Vec<C64>; 3], factor: f64, subtract: Option<&[Vec<C64>; 3]>) -> [Vec<C64>; 3] {
        let nodes = g[0].len();
        let mut flux = [vec![ZERO; nodes], vec![ZERO; nodes], vec![ZERO; nodes]];
        for m in 0..nodes {
            let v = self.sigma.apply(m, [g[0][m], g[1][m], g[2][m]]);
            for i in 0..3 {
                let mut x = v[i] * factor;
                if let Some(k) = subtract {
                    x -= k[i][m];
                }
                flux[i][m] = x;
            }
        }
        flux
    }

    fn apply_parts(&self, f: &[C64], out: &mut [C64], local_factor: f64, nonlocal: bool) {
        let nodes = self.grid.len();
        assert_eq!(f.len(), 2 * nodes);
        assert_eq!(out.len(), 2 * nodes);
        let gp = self.weighted_grad(&f[..nodes]);
        let gm = self.weighted_grad(&f[nodes..]);
        let k = nonlocal.then(|| {
            let sum: [Vec<C64>; 3] =
                std::array::from_fn(|i| gp[i].iter().zip(&gm[i]).map(|(a, b)| a + b).collect());
            self.nonlocal_flux(&sum)
        });
        let (op, om) = out.split_at_mut(nodes);
        for (g, o) in [(&gp, op), (&gm, om)] {
            let flux = self.local_flux(g, local_factor, k.as_ref());
            self.divergence_into(&flux, o);
        }
    }

    /// The diffusive part alone, `G^dagger sigma G` applied per species
    /// (half of the local contribution to `L`).
    pub fn apply_diffusion(&self, f: &TwoSpeciesField) -> TwoSpeciesField {
        let mut out = TwoSpeciesField::zeros(f.grid());
        self.apply_parts(f.values(), out.values_mut(), 1.0, false);
        out
    }

    /// `Re <L f, f>`.
    pub fn rayleigh(&self, f: &TwoSpeciesField) -> Result<f64> {
        Ok(self.apply(f)?.inner(f)?.re)
    }
}

fn diagonal(
    grid: &VelocityGrid,
    table: &KernelTable,
    sigma: &CollisionFrequencyField,
    grad: &AxisStencil,
) -> Vec<f64> {
    let n = grid.points_per_axis();
    let aw = grid.axis_weights();
    let w = grid.weights();
    let sm = grid.sqrt_mu();
    // (p, axis, G_axis[p, m] * w_p / w_m) contributions of column m
    let column = |mi: [usize; 3], ax: usize| -> Vec<([usize; 3], f64, f64)> {
        let q = mi[ax];
        let lo = q.saturating_sub(2);
        let hi = (q + 2).min(n - 1);
        let mut v = Vec::with_capacity(5);
        for p in lo..=hi {
            let e = grad.entry(p, q);
            if e != 0.0 {
                let mut pi = mi;
                pi[ax] = p;
                v.push((pi, e, aw[p] / aw[q]));
            }
        }
        v
    };
    (0..grid.len())
        .map(|m| {
            let mi = grid.multi_index(m);
            let cols: Vec<_> = (0..3).map(|ax| column(mi, ax)).collect();
            let mut local = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for &(pi, ei, ri) in &cols[i] {
                        for &(pj, ej, _) in &cols[j] {
                            if pi == pj {
                                let p = grid.index(pi[0], pi[1], pi[2]);
                                local += ei * ri * sigma.packed(p)[sym_index(i, j)] * ej;
                            }
                        }
                    }
                }
            }
            let mut nonlocal = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for &(pi, ei, ri) in &cols[i] {
                        let p = grid.index(pi[0], pi[1], pi[2]);
                        for &(pj, ej, _) in &cols[j] {
                            let q = grid.index(pj[0], pj[1], pj[2]);
                            let k = table.between(pi, pj)[sym_index(i, j)];
                            nonlocal += ei * ri * sm[p] * k * w[q] * sm[q] * ej;
                        }
                    }
                }
            }
            2.0 * local - nonlocal
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::DirectCollision;
    use crate::field::Species;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Arc<VelocityGrid>, seed: u64) -> TwoSpeciesField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sm = grid.sqrt_mu().to_vec();
        let nodes = grid.len();
        let values = (0..2 * nodes)
            .map(|i| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * sm[i % nodes].sqrt())
            .collect();
        TwoSpeciesField::from_values(grid, values).unwrap()
    }

    fn null_basis(grid: &Arc<VelocityGrid>) -> Vec<TwoSpeciesField> {
        let mut v = vec![
            TwoSpeciesField::maxwellian_weighted(grid, [1.0, 0.0], |_| 1.0),
            TwoSpeciesField::maxwellian_weighted(grid, [0.0, 1.0], |_| 1.0),
        ];
        for i in 0..3 {
            v.push(TwoSpeciesField::maxwellian_weighted(grid, [1.0, 1.0], move |x| x[i]));
        }
        v.push(TwoSpeciesField::maxwellian_weighted(grid, [1.0, 1.0], |x| {
            x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        }));
        v
    }

    #[test]
    fn annihilates_null_space() {
        let grid = VelocityGrid::shared(7.0, 13).unwrap();
        let l = assemble_l(&grid, &CollisionParams::coulomb()).unwrap();
        for v in null_basis(&grid) {
            let r = l.apply(&v).unwrap().norm_sq().sqrt() / v.norm_sq().sqrt();
            assert!(r < 1e-12, "residual {r}");
        }
    }

    #[test]
    fn symmetric_and_nonnegative() {
        let grid = VelocityGrid::shared(6.0, 11).unwrap();
        let l = assemble_l(&grid, &CollisionParams::new(-2.5, 1.0).unwrap()).unwrap();
        let f = random_field(&grid, 1);
        let g = random_field(&grid, 2);
        let a = l.apply(&f).unwrap().inner(&g).unwrap();
        let b = f.inner(&l.apply(&g).unwrap()).unwrap();
        assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        assert!(l.rayleigh(&f).unwrap() > 0.0);
    }

    #[test]
    fn diagonal_matches_unit_probes() {
        let grid = VelocityGrid::shared(5.0, 9).unwrap();
        let l = assemble_l(&grid, &CollisionParams::coulomb()).unwrap();
        for m in [0, 17, grid.origin(), grid.len() - 1, 300] {
            let mut e = TwoSpeciesField::zeros(&grid);
            e.species_mut(Species::Plus)[m] = C64::new(1.0, 0.0);
            let le = l.apply(&e).unwrap();
            let d = le.species(Species::Plus)[m];
            assert!((d.re - l.diagonal()[m]).abs() <= 1e-12 * d.re.abs().max(1.0), "node {m}");
        }
    }

    #[test]
    fn agrees_with_direct_collision_formula() {
        let grid = VelocityGrid::shared(6.0, 9).unwrap();
        let p = CollisionParams::coulomb();
        let l = assemble_l(&grid, &p).unwrap();
        let q = DirectCollision::new(&grid, &p).unwrap();
        let f = random_field(&grid, 7);
        let sm = grid.sqrt_mu();
        let mu: Vec<C64> = grid.mu().iter().map(|&m| C64::new(m, 0.0)).collect();
        let s: Vec<C64> = f
            .species(Species::Plus)
            .iter()
            .zip(f.species(Species::Minus))
            .zip(sm)
            .map(|((a, b), r)| (a + b) * *r)
            .collect();
        let cross = q.q(&mu, &s).unwrap();
        let lf = l.apply(&f).unwrap();
        let mut diff = 0.0f64;
        for sp in Species::BOTH {
            let fs: Vec<C64> = f.species(sp).iter().zip(sm).map(|(v, r)| v * *r).collect();
            let own = q.q(&fs, &mu).unwrap();
            for m in 0..grid.len() {
                let direct = -(own[m] * 2.0 + cross[m]) / sm[m];
                diff = diff.max((direct - lf.species(sp)[m]).norm());
            }
        }
        assert!(diff <= 1e-10 * lf.max_abs(), "diff {diff}");
    }
}
