//! Power-law decay fits of synthesized squared norms.

use crate::error::{LabError, Result};

pub const DEFAULT_WINDOW: (f64, f64) = (20.0, 200.0);

/// Decay required across the window for a conclusive fit.
pub const MIN_DECAY: f64 = 5.0;

/// `3/4 + m/2`.
pub fn sigma_target(m: u32) -> f64 {
    0.75 + 0.5 * m as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFitReport {
    pub m: u32,
    pub t1: f64,
    pub t2: f64,
    pub sigma_hat: f64,
    pub sigma_target: f64,
    /// RMS residual of the log-log regression.
    pub resid: f64,
    pub n_shells: usize,
    pub points: usize,
}

/// Least-squares slope of `log y` against `log(1+t)` over the window;
/// `sigma_hat = -slope/2` because the series is a squared norm.
pub fn decay_fit(t: &[f64], y: &[f64], window: (f64, f64), m: u32, n_shells: usize) -> Result<DecayFitReport> {
    let (t1, t2) = window;
    if !(t1 >= 0.0 && t2 > t1) {
        return Err(LabError::Invalid(format!("bad fit window [{t1}, {t2}]")));
    }
    if t.len() != y.len() {
        return Err(LabError::Invalid("time and value lengths differ".into()));
    }
    let tol = 1e-9 * t2.max(1.0);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(&s, _)| s >= t1 - tol && s <= t2 + tol)
        .map(|(&s, &v)| (s, v))
        .collect();
    if pts.len() < 3 {
        return Err(LabError::Inconclusive(format!("{} samples in the window", pts.len())));
    }
    if pts.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(LabError::Inconclusive("series is not positive on the window".into()));
    }
    let first = pts[0].1;
    let last = pts[pts.len() - 1].1;
    if first / last < MIN_DECAY {
        return Err(LabError::Inconclusive(format!("series decays only {:.3}x in the window", first / last)));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid = (xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFitReport {
        m,
        t1,
        t2,
        sigma_hat: -0.5 * slope,
        sigma_target: sigma_target(m),
        resid,
        n_shells,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_own_model() {
        let t: Vec<f64> = (0..=400).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| 3.0 * (1.0 + s).powf(-1.5)).collect();
        let r = decay_fit(&t, &y, DEFAULT_WINDOW, 0, 1).unwrap();
        assert!((r.sigma_hat - 0.75).abs() < 1e-12 && r.resid < 1e-12);
        assert_eq!(r.points, 181);
    }

    #[test]
    fn constant_is_inconclusive() {
        let t: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let y = vec![1.0; 300];
        assert!(matches!(decay_fit(&t, &y, DEFAULT_WINDOW, 0, 1), Err(LabError::Inconclusive(_))));
    }

    #[test]
    fn bad_windows() {
        let t = [0.0, 1.0];
        assert!(decay_fit(&t, &[1.0, 0.1], (5.0, 5.0), 0, 1).is_err());
        assert!(decay_fit(&t, &[1.0, 0.1], (20.0, 200.0), 0, 1).is_err());
    }
}
