//! Small dense solves and a restarted GMRES for the implicit stage.

use crate::error::{Result, VmlError};
use crate::field::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Solves the dense system `a x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major `d x d`.
pub fn solve_dense(a: &mut [C64], b: &mut [C64]) -> Result<()> {
    let d = b.len();
    assert_eq!(a.len(), d * d);
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&x, &y| a[x * d + col].norm().total_cmp(&a[y * d + col].norm()))
            .unwrap_or(col);
        if a[piv * d + col].norm() == 0.0 {
            return Err(VmlError::LinearSolve {
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
        if piv != col {
            for k in 0..d {
                a.swap(col * d + k, piv * d + k);
            }
            b.swap(col, piv);
        }
        let inv = C64::new(1.0, 0.0) / a[col * d + col];
        for r in col + 1..d {
            let factor = a[r * d + col] * inv;
            if factor == ZERO {
                continue;
            }
            for k in col..d {
                let v = a[col * d + k];
                a[r * d + k] -= factor * v;
            }
            let v = b[col];
            b[r] -= factor * v;
        }
    }
    for r in (0..d).rev() {
        let mut s = b[r];
        for k in r + 1..d {
            s -= a[r * d + k] * b[k];
        }
        b[r] = s / a[r * d + r];
    }
    Ok(())
}

/// Euclidean inner product `sum x_i conj(y_i)` with an optional positive
/// weight per entry.
fn dot(x: &[C64], y: &[C64], w: &[f64]) -> C64 {
    let mut s = ZERO;
    for ((a, b), w) in x.iter().zip(y).zip(w.iter().cycle()) {
        s += a * b.conj() * *w;
    }
    s
}

fn norm(x: &[C64], w: &[f64]) -> f64 {
    dot(x, x, w).re.max(0.0).sqrt()
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Settings for [`gmres`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            restart: 40,
            max_iter: 400,
        }
    }
}

/// Right-preconditioned restarted GMRES for `A x = b`, with the Arnoldi
/// process orthogonal in the inner product weighted by `weights` (repeated
/// cyclically over `x`). `x` holds the initial guess on entry.
pub fn gmres<A, M>(
    apply: A,
    precond: M,
    b: &[C64],
    x: &mut [C64],
    weights: &[f64],
    cfg: &GmresConfig,
) -> Result<GmresStats>
where
    A: Fn(&[C64], &mut [C64]),
    M: Fn(&[C64], &mut [C64]),
{
    let n = b.len();
    let bnorm = norm(b, weights);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = ZERO);
        return Ok(GmresStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = cfg.restart.max(1);
    let mut total = 0;
    let mut tmp = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let mut r = vec![ZERO; n];
    loop {
        apply(x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let beta = norm(&r, weights);
        let rel = beta / bnorm;
        if rel <= cfg.tol {
            return Ok(GmresStats {
                iterations: total,
                relative_residual: rel,
            });
        }
        if total >= cfg.max_iter {
            return Err(VmlError::LinearSolve {
                iterations: total,
                residual: rel,
            });
        }
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            precond(&basis[k], &mut z);
            apply(&z, &mut tmp);
            let mut v = tmp.clone();
            for _pass in 0..2 {
                for (j, q) in basis.iter().enumerate() {
                    let h = dot(&v, q, weights);
                    hess[j][k] += h;
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= h * qi;
                    }
                }
            }
            let hn = norm(&v, weights);
            hess[k + 1][k] = C64::new(hn, 0.0);
            for j in 0..k {
                let a = hess[j][k];
                let bb = hess[j + 1][k];
                hess[j][k] = cs[j].conj() * a + sn[j].conj() * bb;
                hess[j + 1][k] = -sn[j] * a + cs[j] * bb;
            }
            let a = hess[k][k];
            let bb = hess[k + 1][k];
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = ZERO;
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            hess[k][k] = cs[k].conj() * a + sn[k].conj() * bb;
            hess[k + 1][k] = ZERO;
            let gk = g[k];
            g[k] = cs[k].conj() * gk;
            g[k + 1] = -sn[k] * gk;
            total += 1;
            k_used = k + 1;
            let res = g[k + 1].norm() / bnorm;
            if res <= cfg.tol || total >= cfg.max_iter || hn == 0.0 {
                break;
            }
            basis.push(v.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut upd = vec![ZERO; n];
        for (yi, q) in y.iter().zip(&basis) {
            for (u, qi) in upd.iter_mut().zip(q) {
                *u += yi * qi;
            }
        }
        precond(&upd, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_recovers_solution() {
        let a0 = vec![
            C64::new(0.0, 0.0),
            C64::new(2.0, 1.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, -1.0),
            C64::new(3.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(4.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.5),
        ];
        let x = [C64::new(1.0, 2.0), C64::new(-1.0, 0.0), C64::new(0.5, -0.5)];
        let mut b: Vec<C64> = (0..3).map(|r| (0..3).map(|c| a0[r * 3 + c] * x[c]).sum()).collect();
        let mut a = a0.clone();
        solve_dense(&mut a, &mut b).unwrap();
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_dense_is_an_error() {
        let mut a = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(4.0, 0.0)];
        let mut b = vec![C64::new(1.0, 0.0); 2];
        assert!(solve_dense(&mut a, &mut b).is_err());
    }

    #[test]
    fn gmres_solves_shifted_tridiagonal() {
        let n = 60;
        let apply = |x: &[C64], y: &mut [C64]| {
            for i in 0..n {
                let mut s = x[i] * C64::new(3.0, 0.5);
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1] * 0.7;
                }
                y[i] = s;
            }
        };
        let b: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), 1.0)).collect();
        let mut x = vec![ZERO; n];
        let cfg = GmresConfig {
            tol: 1e-12,
            restart: 10,
            max_iter: 200,
        };
        let pre = |v: &[C64], o: &mut [C64]| o.copy_from_slice(v);
        let st = gmres(apply, pre, &b, &mut x, &[1.0], &cfg).unwrap();
        assert!(st.relative_residual <= 1e-12);
        let mut ax = vec![ZERO; n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }
}
