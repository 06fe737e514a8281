//! Zero-padded 3-D FFT convolution with the lattice Landau kernel.
//!
//! A lattice convolution `out(m) = sum_q K(m - q) u(q)` over `n^3` nodes is
//! exact as a circular convolution of length `N = 2n`. Inputs occupy the
//! `[0, n)^3` corner of the padded box and only that corner of the output is
//! read back, so the first passes of the forward transform and the last
//! passes of the inverse skip lines known to be zero or unused.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::collision::kernel::{sym_index, KernelTable, Sym3};
use crate::field::C64;

#[derive(Clone)]
pub struct KernelConvolver {
    n: usize,
    big: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Sym3>,
}

impl std::fmt::Debug for KernelConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelConvolver")
            .field("n", &self.n)
            .field("padded", &self.big)
            .finish()
    }
}

impl KernelConvolver {
    pub fn new(table: &KernelTable) -> Self {
        let n = table.points_per_axis();
        let big = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(big);
        let inverse = planner.plan_fft_inverse(big);
        let mut conv = Self {
            n,
            big,
            forward,
            inverse,
            kernel_hat: Vec::new(),
        };
        let total = big * big * big;
        let mut hat = vec![[0.0; 6]; total];
        let c = n as isize - 1;
        for comp in 0..6 {
            let mut buf = vec![C64::new(0.0, 0.0); total];
            for a in -c..=c {
                for b in -c..=c {
                    for d in -c..=c {
                        let idx = conv.wrap(a, b, d);
                        buf[idx] = C64::new(table.at([a, b, d])[comp], 0.0);
                    }
                }
            }
            conv.full_transform(&mut buf, true);
            for (h, v) in hat.iter_mut().zip(&buf) {
                // even kernel: the transform is real up to rounding
                h[comp] = v.re;
            }
        }
        conv.kernel_hat = hat;
        conv
    }

    #[inline]
    fn wrap(&self, a: isize, b: isize, d: isize) -> usize {
        let nb = self.big as isize;
        let w = |x: isize| ((x % nb + nb) % nb) as usize;
        (w(a) * self.big + w(b)) * self.big + w(d)
    }

    fn full_transform(&self, buf: &mut [C64], forward: bool) {
        let nb = self.big;
        let fft = if forward { &self.forward } else { &self.inverse };
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        let mut tmp = vec![C64::new(0.0, 0.0); nb * nb];
        for x in 0..nb {
            let slab = &mut buf[x * nb * nb..(x + 1) * nb * nb];
            transpose(slab, &mut tmp, nb, nb);
            fft.process_with_scratch(&mut tmp, &mut scratch);
            transpose(&tmp, slab, nb, nb);
        }
        self.x_pass(buf, fft, nb, &mut tmp, &mut scratch);
    }

    fn x_pass(
        &self,
        buf: &mut [C64],
        fft: &Arc<dyn Fft<f64>>,
        keep_x: usize,
        tmp: &mut [C64],
        scratch: &mut [C64],
    ) {
        let nb = self.big;
        for y in 0..nb {
            // gather [z][x] for this y
            for x in 0..nb {
                let row = &buf[(x * nb + y) * nb..(x * nb + y + 1) * nb];
                for (z, v) in row.iter().enumerate() {
                    tmp[z * nb + x] = *v;
                }
            }
            fft.process_with_scratch(tmp, scratch);
            for x in 0..keep_x {
                let row = &mut buf[(x * nb + y) * nb..(x * nb + y + 1) * nb];
                for (z, v) in row.iter_mut().enumerate() {
                    *v = tmp[z * nb + x];
                }
            }
        }
    }

    /// Forward transform of data supported in `[0, n)^3`.
    fn forward_pruned(&self, buf: &mut [C64], tmp: &mut [C64], scratch: &mut [C64]) {
        let n = self.n;
        let nb = self.big;
        for x in 0..n {
            let start = x * nb * nb;
            self.forward
                .process_with_scratch(&mut buf[start..start + n * nb], scratch);
        }
        for x in 0..n {
            let slab = &mut buf[x * nb * nb..(x + 1) * nb * nb];
            transpose(slab, tmp, nb, nb);
            self.forward.process_with_scratch(tmp, scratch);
            transpose(tmp, slab, nb, nb);
        }
        self.x_pass(buf, &self.forward, nb, tmp, scratch);
    }

    /// Inverse transform, valid only on the `[0, n)^3` corner (unscaled).
    fn inverse_pruned(&self, buf: &mut [C64], tmp: &mut [C64], scratch: &mut [C64]) {
        let n = self.n;
        let nb = self.big;
        self.x_pass(buf, &self.inverse, n, tmp, scratch);
        for x in 0..n {
            let slab = &mut buf[x * nb * nb..(x + 1) * nb * nb];
            transpose(slab, tmp, nb, nb);
            self.inverse.process_with_scratch(tmp, scratch);
            // only y < n is read back
            for y in 0..n {
                for z in 0..nb {
                    slab[y * nb + z] = tmp[z * nb + y];
                }
            }
        }
        for x in 0..n {
            let start = x * nb * nb;
            self.inverse
                .process_with_scratch(&mut buf[start..start + n * nb], scratch);
        }
    }

    fn scratch(&self) -> (Vec<C64>, Vec<C64>) {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        (
            vec![C64::new(0.0, 0.0); self.big * self.big],
            vec![C64::new(0.0, 0.0); len],
        )
    }

    fn embed(&self, src: &[C64], buf: &mut [C64]) {
        let n = self.n;
        let nb = self.big;
        buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for x in 0..n {
            for y in 0..n {
                let dst = (x * nb + y) * nb;
                let s = (x * n + y) * n;
                buf[dst..dst + n].copy_from_slice(&src[s..s + n]);
            }
        }
    }

    fn extract(&self, buf: &[C64], out: &mut [C64], scale: f64) {
        let n = self.n;
        let nb = self.big;
        for x in 0..n {
            for y in 0..n {
                let s = (x * nb + y) * nb;
                let d = (x * n + y) * n;
                for z in 0..n {
                    out[d + z] = buf[s + z] * scale;
                }
            }
        }
    }

    /// `out_i(m) = sum_q sum_j K^{ij}(m - q) u_j(q)`.
    pub fn convolve_vector(&self, u: [&[C64]; 3]) -> [Vec<C64>; 3] {
        let total = self.big * self.big * self.big;
        let (mut tmp, mut scratch) = self.scratch();
        let mut hats: Vec<Vec<C64>> = Vec::with_capacity(3);
        for comp in u {
            let mut buf = vec![C64::new(0.0, 0.0); total];
            self.embed(comp, &mut buf);
            self.forward_pruned(&mut buf, &mut tmp, &mut scratch);
            hats.push(buf);
        }
        let scale = 1.0 / total as f64;
        let nodes = self.n * self.n * self.n;
        let mut out = [
            vec![C64::new(0.0, 0.0); nodes],
            vec![C64::new(0.0, 0.0); nodes],
            vec![C64::new(0.0, 0.0); nodes],
        ];
        let mut buf = vec![C64::new(0.0, 0.0); total];
        for (i, o) in out.iter_mut().enumerate() {
            let (s0, s1, s2) = (sym_index(i, 0), sym_index(i, 1), sym_index(i, 2));
            for (k, b) in buf.iter_mut().enumerate() {
                let kh = &self.kernel_hat[k];
                *b = hats[0][k] * kh[s0] + hats[1][k] * kh[s1] + hats[2][k] * kh[s2];
            }
            self.inverse_pruned(&mut buf, &mut tmp, &mut scratch);
            self.extract(&buf, o, scale);
        }
        out
    }

    /// All six kernel components convolved with one real scalar field.
    pub fn convolve_scalar(&self, u: &[f64]) -> Vec<Sym3> {
        let total = self.big * self.big * self.big;
        let nodes = self.n * self.n * self.n;
        let (mut tmp, mut scratch) = self.scratch();
        let src: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        let mut hat = vec![C64::new(0.0, 0.0); total];
        self.embed(&src, &mut hat);
        self.forward_pruned(&mut hat, &mut tmp, &mut scratch);
        let mut result = vec![[0.0; 6]; nodes];
        let mut buf = vec![C64::new(0.0, 0.0); total];
        let mut comp_out = vec![C64::new(0.0, 0.0); nodes];
        let scale = 1.0 / total as f64;
        for comp in 0..6 {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = hat[k] * self.kernel_hat[k][comp];
            }
            self.inverse_pruned(&mut buf, &mut tmp, &mut scratch);
            self.extract(&buf, &mut comp_out, scale);
            for (r, v) in result.iter_mut().zip(&comp_out) {
                r[comp] = v.re;
            }
        }
        result
    }
}

fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionParams;
    use crate::grid::VelocityGrid;

    #[test]
    fn matches_direct_lattice_sum() {
        let g = VelocityGrid::new(3.0, 7).unwrap();
        let p = CollisionParams::new(-2.5, 1.3).unwrap();
        let table = KernelTable::new(&g, &p);
        let conv = KernelConvolver::new(&table);
        let nodes = g.len();
        let u: Vec<Vec<C64>> = (0..3)
            .map(|c| {
                (0..nodes)
                    .map(|m| C64::new(((m * (c + 2)) as f64 * 0.13).sin(), ((m + c) as f64 * 0.07).cos()))
                    .collect()
            })
            .collect();
        let out = conv.convolve_vector([&u[0], &u[1], &u[2]]);
        for m in 0..nodes {
            let mi = g.multi_index(m);
            for i in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..nodes {
                    let k = table.between(mi, g.multi_index(q));
                    for j in 0..3 {
                        acc += u[j][q] * k[sym_index(i, j)];
                    }
                }
                assert!((acc - out[i][m]).norm() < 1e-11 * (1.0 + acc.norm()));
            }
        }
        let s: Vec<f64> = (0..nodes).map(|m| (m as f64 * 0.3).cos()).collect();
        let sig = conv.convolve_scalar(&s);
        for m in [0, 17, nodes / 2, nodes - 1] {
            let mi = g.multi_index(m);
            for comp in 0..6 {
                let direct: f64 = (0..nodes).map(|q| table.between(mi, g.multi_index(q))[comp] * s[q]).sum();
                assert!((direct - sig[m][comp]).abs() < 1e-11 * (1.0 + direct.abs()));
            }
        }
    }
}
