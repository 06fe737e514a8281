//! Operator property suite and collision-frequency tables.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vml_core::collision::{sigma_field, CollisionParams, LinearizedOperator};
use vml_core::grid::norm_sq;
use vml_core::macro_structure::MacroProjector;
use vml_core::weights::{characterization_norm, dissipation_norm, WeightSpec};
use vml_core::{TwoSpeciesField, Vec3, VelocityGrid, C64};

use crate::error::{LabError, Result};

/// Nodal noise times `mu^{1/4}`.
pub fn random_field(grid: &Arc<VelocityGrid>, rng: &mut ChaCha8Rng) -> TwoSpeciesField {
    let nodes = grid.len();
    let values = (0..2 * nodes)
        .map(|i| {
            let d = (-0.125 * norm_sq(grid.node(i % nodes))).exp();
            C64::new(rng.gen_range(-1.0..1.0) * d, rng.gen_range(-1.0..1.0) * d)
        })
        .collect();
    TwoSpeciesField::from_values(grid, values).expect("length matches the grid")
}

fn monomials() -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for deg in 0..=3 {
        for a in 0..=deg {
            for b in 0..=deg - a {
                out.push([a, b, deg - a - b]);
            }
        }
    }
    out
}

/// A random cubic polynomial times `exp(-|xi|^2/4)`, per species; the same
/// seed gives the same continuum field on every grid.
pub fn smooth_random_field(grid: &Arc<VelocityGrid>, seed: u64) -> TwoSpeciesField {
    let mono = monomials();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<[C64; 2]> = mono
        .iter()
        .map(|_| std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    TwoSpeciesField::from_fn(grid, |s, x| {
        let p: C64 = mono
            .iter()
            .zip(&coef)
            .map(|(a, c)| c[s as usize] * (x[0].powi(a[0]) * x[1].powi(a[1]) * x[2].powi(a[2])))
            .sum();
        p * (-0.25 * norm_sq(x)).exp()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    pub r: f64,
    /// `|L e| / (|L| |e|)` for the six null-space basis vectors.
    pub null_residuals: [f64; 6],
    /// Largest `|<Lf,g> - <f,Lg>| / (|Lf| |g|)` over the sampled pairs.
    pub adjoint_defect: f64,
    /// Smallest `<Lf,f> / |f|^2` over the samples.
    pub min_rayleigh: f64,
    /// Largest `|Lf| / |f|` seen, used as the operator-norm estimate.
    pub norm_estimate: f64,
    pub samples: usize,
}

impl SpectrumReport {
    pub fn max_null_residual(&self) -> f64 {
        self.null_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Null-space residuals, adjointness and Rayleigh quotients of `L` on `samples` random fields.
pub fn spectrum_check(l: &LinearizedOperator, samples: usize, seed: u64) -> Result<SpectrumReport> {
    let grid = l.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<TwoSpeciesField> = (0..samples).map(|_| random_field(grid, &mut rng)).collect();
    let images = fields.iter().map(|f| l.apply(f)).collect::<vml_core::Result<Vec<_>>>()?;
    let mut norm_estimate: f64 = 0.0;
    let mut min_rayleigh = f64::INFINITY;
    for (f, lf) in fields.iter().zip(&images) {
        let nf = f.norm_sq();
        norm_estimate = norm_estimate.max((lf.norm_sq() / nf).sqrt());
        min_rayleigh = min_rayleigh.min(lf.inner(f)?.re / nf);
    }
    // power iteration sharpens the norm estimate
    if let Some(mut v) = images.first().cloned() {
        for _ in 0..30 {
            let nv = v.norm_sq().sqrt();
            if nv == 0.0 {
                break;
            }
            v.scale(C64::new(1.0 / nv, 0.0));
            let w = l.apply(&v)?;
            norm_estimate = norm_estimate.max(w.norm_sq().sqrt());
            v = w;
        }
    }
    let mut adjoint_defect: f64 = 0.0;
    for i in 0..fields.len().saturating_sub(1) {
        let (f, g) = (&fields[i], &fields[i + 1]);
        let (lf, lg) = (&images[i], &images[i + 1]);
        let d = (lf.inner(g)? - f.inner(lg)?).norm();
        let scale = (lf.norm_sq() * g.norm_sq()).sqrt();
        adjoint_defect = adjoint_defect.max(d / scale);
    }
    let projector = MacroProjector::new(grid);
    let mut null_residuals = [0.0; 6];
    for (r, e) in null_residuals.iter_mut().zip(projector.basis()) {
        let le = l.apply(&e)?;
        *r = (le.norm_sq() / e.norm_sq()).sqrt() / norm_estimate;
    }
    Ok(SpectrumReport {
        n: grid.points_per_axis(),
        r: grid.half_width(),
        null_residuals,
        adjoint_defect,
        min_rayleigh,
        norm_estimate,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub n: usize,
    /// `min <Lf,f> / |f|_D^2` over micro fields.
    pub kappa: f64,
    /// Range of `|f|_D^2 / characterization` over the sampled fields.
    pub band: (f64, f64),
    pub samples: usize,
}

/// Micro-subspace gap and dissipation-norm equivalence band on smooth random fields.
pub fn coercivity_check(l: &LinearizedOperator, samples: usize, seed: u64) -> Result<CoercivityReport> {
    let grid = l.grid();
    let projector = MacroProjector::new(grid);
    let unit = WeightSpec::unit();
    let mut kappa = f64::INFINITY;
    let mut band = (f64::INFINITY, 0.0f64);
    for i in 0..samples {
        let f = smooth_random_field(grid, seed.wrapping_add(i as u64));
        let d = dissipation_norm(&f, &unit, 0.0, l.sigma())?;
        let c = characterization_norm(&f, &unit, 0.0, l.params());
        band = (band.0.min(d / c), band.1.max(d / c));
        let g = projector.micro(&f)?;
        let dg = dissipation_norm(&g, &unit, 0.0, l.sigma())?;
        kappa = kappa.min(l.rayleigh(&g)? / dg);
    }
    Ok(CoercivityReport {
        n: grid.points_per_axis(),
        kappa,
        band,
        samples,
    })
}

/// `sigma^{ij}` at the lattice nodes on the ray through the integer direction `ray`:
/// rows `(|xi|, xi1, xi2, xi3, s11, s12, s13, s22, s23, s33)`.
pub fn sigma_table(p: &CollisionParams, ray: [i64; 3], rmax: f64, n: usize) -> Result<Vec<[f64; 10]>> {
    if ray == [0; 3] {
        return Err(LabError::Invalid("ray must be a nonzero lattice direction".into()));
    }
    let grid = VelocityGrid::shared(rmax, n)?;
    let sigma = sigma_field(&grid, p);
    let half = (n / 2) as i64;
    let mut rows = Vec::new();
    for j in 0.. {
        let idx: [i64; 3] = std::array::from_fn(|a| half + j * ray[a]);
        if idx.iter().any(|&i| i < 0 || i >= n as i64) {
            break;
        }
        let m = grid.index(idx[0] as usize, idx[1] as usize, idx[2] as usize);
        let x: Vec3 = grid.node(m);
        let s = sigma.matrix(m);
        rows.push([
            norm_sq(x).sqrt(),
            x[0],
            x[1],
            x[2],
            s[0][0],
            s[0][1],
            s[0][2],
            s[1][1],
            s[1][2],
            s[2][2],
        ]);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_suite() {
        let g = VelocityGrid::shared(6.0, 9).unwrap();
        let l = LinearizedOperator::new(&g, &CollisionParams::coulomb()).unwrap();
        let r = spectrum_check(&l, 8, 1).unwrap();
        assert!(r.max_null_residual() < 1e-12, "{:?}", r.null_residuals);
        assert!(r.adjoint_defect < 1e-12);
        assert!(r.min_rayleigh > 0.0);
        let c = coercivity_check(&l, 4, 1).unwrap();
        assert!(c.kappa > 0.0 && c.band.0 > 0.0 && c.band.0 <= c.band.1);
    }

    #[test]
    fn smooth_fields_are_grid_independent() {
        let a = smooth_random_field(&VelocityGrid::shared(6.0, 5).unwrap(), 3);
        let b = smooth_random_field(&VelocityGrid::shared(6.0, 9).unwrap(), 3);
        // the centre node is shared
        assert_eq!(a.values()[62], b.values()[364]);
    }

    #[test]
    fn sigma_table_walks_the_ray() {
        let rows = sigma_table(&CollisionParams::coulomb(), [1, 1, 0], 4.0, 9).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0][0], 0.0);
        assert!((rows[1][1] - 1.0).abs() < 1e-15 && (rows[1][2] - 1.0).abs() < 1e-15);
        assert!(sigma_table(&CollisionParams::coulomb(), [0, 0, 0], 4.0, 9).is_err());
    }
}
