//! Radial-shell by direction wave-vector sets with `dk` quadrature weights.

use std::f64::consts::PI;

use vml_core::Vec3;

use crate::config::{ExperimentConfig, RadialWeights};
use crate::error::{LabError, Result};
use crate::symmetry::SignedPerm;

/// One wave vector of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMode {
    pub index: usize,
    pub shell: usize,
    pub direction: usize,
    pub k: Vec3,
    /// Quadrature weight approximating `dk`.
    pub weight: f64,
    /// Index of the mode whose state maps onto this one.
    pub representative: usize,
    /// Maps the representative's state onto this mode's.
    pub map: SignedPerm,
}

/// Unit directions, sphere weights summing to 1, orbit representatives and
/// the signed permutations that carry them onto each direction.
fn directions(count: usize) -> Result<Vec<(Vec3, f64, usize, SignedPerm)>> {
    let mut out = Vec::new();
    match count {
        1 => out.push(([1.0, 0.0, 0.0], 1.0, 0, SignedPerm::identity())),
        6 | 14 => {
            let axis_w = if count == 6 { 1.0 / 6.0 } else { 1.0 / 15.0 };
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let map = SignedPerm::axis_image(axis, sign);
                    out.push((map.apply([1.0, 0.0, 0.0]), axis_w, 0, map));
                }
            }
            if count == 14 {
                let s = 1.0 / 3f64.sqrt();
                for bits in 0..8u32 {
                    let signs = [0, 1, 2].map(|b| if bits >> b & 1 == 1 { -1.0 } else { 1.0 });
                    let map = SignedPerm::reflection(signs);
                    out.push((map.apply([s, s, s]), 3.0 / 40.0, 6, map));
                }
            }
        }
        _ => {
            return Err(LabError::Invalid(format!("unsupported direction count {count}")));
        }
    }
    Ok(out)
}

/// Radial weights `r^2 dr` (trapezoid on the origin and the shells) or the
/// configured explicit weights.
pub fn radial_weights(cfg: &ExperimentConfig) -> Vec<f64> {
    let r = &cfg.shells;
    match &cfg.k_weights {
        RadialWeights::Explicit(w) => w.clone(),
        RadialWeights::Trapezoid => {
            let m = r.len();
            (0..m)
                .map(|i| {
                    let width = if m == 1 {
                        1.0
                    } else if i == 0 {
                        0.5 * r[1]
                    } else if i == m - 1 {
                        0.5 * (r[m - 1] - r[m - 2])
                    } else {
                        0.5 * (r[i + 1] - r[i - 1])
                    };
                    r[i] * r[i] * width
                })
                .collect()
        }
    }
}

pub fn build_k_set(cfg: &ExperimentConfig) -> Result<Vec<KMode>> {
    if cfg.shells.is_empty() {
        return Err(LabError::Invalid("empty shell list".into()));
    }
    let dirs = directions(cfg.directions)?;
    let radial = radial_weights(cfg);
    let mut modes = Vec::with_capacity(cfg.shells.len() * dirs.len());
    for (si, (&r, &rw)) in cfg.shells.iter().zip(&radial).enumerate() {
        let base = modes.len();
        for (di, (d, sw, rep, map)) in dirs.iter().enumerate() {
            modes.push(KMode {
                index: base + di,
                shell: si,
                direction: di,
                k: [r * d[0], r * d[1], r * d[2]],
                weight: 4.0 * PI * sw * rw,
                representative: base + rep,
                map: *map,
            });
        }
    }
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_shell_six_axes() {
        let cfg = ExperimentConfig::default();
        let ks = build_k_set(&cfg).unwrap();
        assert_eq!(ks.len(), 6);
        assert!(ks.iter().all(|m| (m.weight - ks[0].weight).abs() < 1e-15));
        assert!(ks.iter().all(|m| m.representative == 0));
        for m in &ks {
            assert!((m.map.apply([1.0, 0.0, 0.0]).iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shell_volume_within_ten_percent() {
        let cfg = ExperimentConfig {
            shells: vec![0.5, 1.0, 2.0],
            ..Default::default()
        };
        let total: f64 = build_k_set(&cfg).unwrap().iter().map(|m| m.weight).sum();
        let exact = 4.0 * PI / 3.0 * 8.0;
        assert!(((total - exact) / exact).abs() < 0.1, "{total} vs {exact}");
    }

    #[test]
    fn fourteen_directions_integrate_quadratics() {
        let cfg = ExperimentConfig {
            directions: 14,
            ..Default::default()
        };
        let ks = build_k_set(&cfg).unwrap();
        let total: f64 = ks.iter().map(|m| m.weight).sum();
        // sphere average of k_1^2 is 1/3
        let second: f64 = ks.iter().map(|m| m.weight * m.k[0] * m.k[0]).sum();
        assert!((second / total - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(ks.iter().filter(|m| m.representative == 6).count(), 8);
    }

    #[test]
    fn empty_shells_error() {
        let cfg = ExperimentConfig {
            shells: vec![],
            ..Default::default()
        };
        assert!(build_k_set(&cfg).is_err());
    }
}
