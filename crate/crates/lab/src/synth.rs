//! Whole-space norms from per-mode archives by k-quadrature.

use vml_core::weights::WeightSpec;

use crate::error::{LabError, Result};
use crate::sweep::ArchiveData;

/// Synthesized `sum_k weight |k|^{2m} (|w f_k|^2 + |(E_k, B_k)|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    pub m: u32,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

/// Per-mode `(|k|^2, weight, f column, em column)` time series.
fn f_column(archive: &ArchiveData, spec: &WeightSpec) -> Result<&'static str> {
    if *spec == WeightSpec::unit() {
        Ok("f_l2sq")
    } else if *spec == WeightSpec::linear_power(archive.config.ell) {
        Ok("wl2sq")
    } else {
        Err(LabError::Archive(format!(
            "weight {spec:?} was not recorded; the archive holds the unit weight and ell = {}",
            archive.config.ell
        )))
    }
}

pub fn synthesize_norms(archive: &ArchiveData, m: u32, spec: &WeightSpec) -> Result<NormSeries> {
    let col = f_column(archive, spec)?;
    let mut t: Option<Vec<f64>> = None;
    let mut values: Vec<f64> = Vec::new();
    for entry in &archive.modes {
        let s = archive.series(entry.index)?;
        let f = s.column(col).expect("known column");
        let em = s.column("em_sq").expect("known column");
        match &t {
            None => {
                values = vec![0.0; s.t.len()];
                t = Some(s.t.clone());
            }
            Some(t0) if *t0 != s.t => {
                return Err(LabError::Archive(format!("mode {} has a different time grid", entry.index)));
            }
            Some(_) => {}
        }
        let k2: f64 = entry.k.iter().map(|x| x * x).sum();
        let scale = entry.weight * k2.powi(m as i32);
        for (v, (a, b)) in values.iter_mut().zip(f.iter().zip(&em)) {
            *v += scale * (a + b);
        }
    }
    Ok(NormSeries {
        m,
        t: t.unwrap_or_default(),
        values,
    })
}
