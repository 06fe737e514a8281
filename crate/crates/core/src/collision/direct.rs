use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, VmlError};
use crate::field::{Species, TwoSpeciesField, C64};
use crate::grid::VelocityGrid;
use crate::stencil::AxisStencil;

use super::kernel::{sym_index, KernelTable};
use super::CollisionParams;

/// Default cap on `2 n^6`, the pair count of the direct double sum.
pub const DEFAULT_DIRECT_BUDGET: u64 = 1_000_000_000;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Direct O(n^6) evaluation of the bilinear Landau operator
///
/// ```text
/// Q(F, G) = -D^dagger J,
/// J(m) = sum_* w_* phi(xi_m - xi_*) [Dmu F(m) G_* - F(m) Dmu G_*]
/// ```
///
/// where `Dmu = mu D mu^{-1}` is the Maxwellian-weighted lattice gradient.
#[derive(Debug, Clone)]
pub struct DirectCollision {
    grid: Arc<VelocityGrid>,
    table: KernelTable,
    dmu: AxisStencil,
    plain: AxisStencil,
}

impl DirectCollision {
    pub fn new(grid: &Arc<VelocityGrid>, p: &CollisionParams) -> Result<Self> {
        Self::with_budget(grid, p, DEFAULT_DIRECT_BUDGET)
    }

    pub fn with_budget(grid: &Arc<VelocityGrid>, p: &CollisionParams, budget: u64) -> Result<Self> {
        let needed = 2 * (grid.len() as u64).pow(2);
        if needed > budget {
            return Err(VmlError::Budget {
                what: "direct collision sum",
                needed,
                budget,
            });
        }
        Ok(Self {
            grid: grid.clone(),
            table: KernelTable::new(grid, p),
            dmu: AxisStencil::weighted_gradient(grid, 0.5),
            plain: AxisStencil::plain(grid),
        })
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    fn grad(&self, f: &[C64]) -> [Vec<C64>; 3] {
        std::array::from_fn(|ax| {
            let mut o = vec![ZERO; f.len()];
            self.dmu.apply(ax, f, &mut o);
            o
        })
    }

    /// `Q(F, G)` for single-species nodal arrays.
    pub fn q(&self, f: &[C64], g: &[C64]) -> Result<Vec<C64>> {
        let nodes = self.grid.len();
        if f.len() != nodes || g.len() != nodes {
            return Err(VmlError::GridMismatch);
        }
        let df = self.grad(f);
        let dg = self.grad(g);
        let w = self.grid.weights();
        let wg: Vec<C64> = g.iter().zip(w).map(|(v, w)| v * *w).collect();
        let wdg: [Vec<C64>; 3] = std::array::from_fn(|j| dg[j].iter().zip(w).map(|(v, w)| v * *w).collect());
        let flux: Vec<[C64; 3]> = (0..nodes)
            .into_par_iter()
            .map(|m| {
                let mi = self.grid.multi_index(m);
                let mut j = [ZERO; 3];
                for s in 0..nodes {
                    let k = self.table.between(mi, self.grid.multi_index(s));
                    for i in 0..3 {
                        let mut acc = ZERO;
                        for l in 0..3 {
                            let phi = k[sym_index(i, l)];
                            acc += (df[l][m] * wg[s] - f[m] * wdg[l][s]) * phi;
                        }
                        j[i] += acc;
                    }
                }
                j
            })
            .collect();
        let mut out = vec![ZERO; nodes];
        for i in 0..3 {
            let ji: Vec<C64> = flux.iter().map(|v| v[i]).collect();
            self.plain.apply_adjoint_add(i, &ji, &mut out);
        }
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(out)
    }

    /// `Gamma_(+/-)(f, g) = mu^{-1/2} Q(mu^{1/2} f_(+/-), mu^{1/2} (g_+ + g_-))`.
    pub fn gamma(&self, f: &TwoSpeciesField, g: &TwoSpeciesField) -> Result<TwoSpeciesField> {
        if !self.grid.same_as(f.grid()) || !self.grid.same_as(g.grid()) {
            return Err(VmlError::GridMismatch);
        }
        let sm = self.grid.sqrt_mu();
        let gs: Vec<C64> = g
            .species(Species::Plus)
            .iter()
            .zip(g.species(Species::Minus))
            .zip(sm)
            .map(|((a, b), s)| (a + b) * *s)
            .collect();
        let mut out = TwoSpeciesField::zeros(f.grid());
        for s in Species::BOTH {
            let fs: Vec<C64> = f.species(s).iter().zip(sm).map(|(v, m)| v * *m).collect();
            let q = self.q(&fs, &gs)?;
            for ((o, v), m) in out.species_mut(s).iter_mut().zip(q).zip(sm) {
                *o = v / *m;
            }
        }
        Ok(out)
    }
}

/// `Q(F, G)` on `grid` by direct summation.
pub fn apply_q(grid: &Arc<VelocityGrid>, p: &CollisionParams, f: &[C64], g: &[C64]) -> Result<Vec<C64>> {
    DirectCollision::new(grid, p)?.q(f, g)
}

/// `Gamma(f, g)` by direct summation.
pub fn gamma_bilinear(f: &TwoSpeciesField, g: &TwoSpeciesField, p: &CollisionParams) -> Result<TwoSpeciesField> {
    DirectCollision::new(f.grid(), p)?.gamma(f, g)
}
