//! Signed axis permutations: the symmetries of the cubic velocity lattice.

use std::sync::Arc;

use vml_core::mode::ModeState;
use vml_core::{TwoSpeciesField, Vec3, VelocityGrid, C64};

/// `(R x)_a = sign[a] x[perm[a]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedPerm {
    pub perm: [usize; 3],
    pub sign: [f64; 3],
}

impl SignedPerm {
    pub fn identity() -> Self {
        Self {
            perm: [0, 1, 2],
            sign: [1.0; 3],
        }
    }

    pub fn reflection(sign: [f64; 3]) -> Self {
        Self { perm: [0, 1, 2], sign }
    }

    /// Cyclic shift by `axis` followed by a sign on that axis: carries
    /// `e_1` to `sign e_axis` and `e_2` to `e_{axis+1}`.
    pub fn axis_image(axis: usize, sign: f64) -> Self {
        let perm = [(3 - axis) % 3, (4 - axis) % 3, (5 - axis) % 3];
        let mut s = [1.0; 3];
        s[axis] = sign;
        Self { perm, sign: s }
    }

    pub fn apply(&self, x: Vec3) -> Vec3 {
        std::array::from_fn(|a| self.sign[a] * x[self.perm[a]])
    }

    pub fn apply_c(&self, x: [C64; 3]) -> [C64; 3] {
        std::array::from_fn(|a| x[self.perm[a]] * self.sign[a])
    }

    pub fn inverse(&self) -> Self {
        let mut perm = [0; 3];
        let mut sign = [1.0; 3];
        for a in 0..3 {
            perm[self.perm[a]] = a;
            sign[self.perm[a]] = self.sign[a];
        }
        Self { perm, sign }
    }

    pub fn det(&self) -> f64 {
        let p = self.perm;
        let parity = if (p[0] < p[1]) ^ (p[0] < p[2]) ^ (p[1] < p[2]) { 1.0 } else { -1.0 };
        parity * self.sign.iter().product::<f64>()
    }

    /// `f(R^{-1} xi)` on a centred lattice.
    pub fn apply_field(&self, f: &TwoSpeciesField) -> TwoSpeciesField {
        let grid: &Arc<VelocityGrid> = f.grid();
        let n = grid.points_per_axis();
        let inv = self.inverse();
        let mut out = TwoSpeciesField::zeros(grid);
        let nodes = grid.len();
        for m in 0..nodes {
            let idx = grid.multi_index(m);
            let centred: [f64; 3] = std::array::from_fn(|a| idx[a] as f64 - (n / 2) as f64);
            let src = inv.apply(centred);
            let si: [usize; 3] = std::array::from_fn(|a| (src[a] + (n / 2) as f64).round() as usize);
            let q = grid.index(si[0], si[1], si[2]);
            out.values_mut()[m] = f.values()[q];
            out.values_mut()[nodes + m] = f.values()[nodes + q];
        }
        out
    }

    /// Image of a mode: `k -> R k`, `f -> f(R^{-1} .)`, `E -> R E`,
    /// `B -> det(R) R B`.
    pub fn apply_state(&self, s: &ModeState) -> ModeState {
        let det = self.det();
        let b = self.apply_c(s.b).map(|z| z * det);
        ModeState {
            k: self.apply(s.k),
            f: self.apply_field(&s.f),
            e: self.apply_c(s.e),
            b,
            t: s.t,
        }
    }
}
