//! Quadrature helpers for the singular Landau kernel: Gauss-Legendre rules,
//! cube averages of `|u|^s` and the cubic-lattice Epstein zeta function.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_ur};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `int_{[-1/2,1/2]^3} |u|^s du` for `s > -3`.
///
/// The cube is split into six pyramids over its faces; on each the radial
/// integral is done in closed form, leaving a smooth 2-D face integral.
pub fn unit_cube_power_integral(s: f64) -> f64 {
    assert!(s > -3.0, "power must be integrable at the origin");
    let (x, w) = gauss_legendre(48);
    let mut face = 0.0;
    for (yi, wy) in x.iter().zip(&w) {
        for (zi, wz) in x.iter().zip(&w) {
            let y = 0.5 * yi;
            let z = 0.5 * zi;
            face += 0.25 * wy * wz * (0.25 + y * y + z * z).powf(0.5 * s);
        }
    }
    6.0 * face * 0.5 / (s + 3.0)
}

/// Analytic continuation of `Z(s) = sum_{q in Z^3, q != 0} |q|^s` for
/// `-2 <= s < 0`, by Ewald splitting of the theta series.
///
/// For a kernel `|u|^s g(u)` the punctured lattice sum satisfies
/// `h^3 sum' |h q|^s g(h q) = int |u|^s g + h^{3+s} Z(s) g(0) + O(h^{5+s})`,
/// so `-h^s Z(s)` is the coincident-node weight that removes the leading
/// error.
pub fn lattice_zeta(s: f64) -> f64 {
    assert!((-2.0..0.0).contains(&s), "continuation implemented for -2 <= s < 0");
    let nu = -0.5 * s;
    let mu = 1.5 - nu;
    let mut acc = -1.0 / nu - 1.0 / mu;
    let m = 6i64;
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                let r2 = (a * a + b * b + c * c) as f64;
                if r2 == 0.0 || r2 > 40.0 {
                    continue;
                }
                let x = PI * r2;
                acc += gamma_ur(nu, x) * gamma(nu) * x.powf(-nu) + gamma_ur(mu, x) * gamma(mu) * x.powf(-mu);
            }
        }
    }
    acc * PI.powf(nu) / gamma(nu)
}
