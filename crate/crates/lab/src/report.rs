//! Fit summaries and run manifests.

use std::path::{Path, PathBuf};

use vml_core::weights::WeightSpec;

use crate::error::{csv_err, io_err, LabError, Result};
use crate::fit::{decay_fit, DecayFitReport};
use crate::sweep::{run_id, write_manifest, ArchiveData};
use crate::synth::synthesize_norms;

pub const FIT_HEADER: [&str; 7] = ["m", "sigma_hat", "sigma_target", "resid", "t1", "t2", "n_shells"];

pub fn write_fit_summary(path: &Path, fits: &[DecayFitReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(FIT_HEADER).map_err(csv_err(path))?;
    for f in fits {
        w.write_record([
            f.m.to_string(),
            format!("{:?}", f.sigma_hat),
            format!("{:?}", f.sigma_target),
            format!("{:?}", f.resid),
            format!("{:?}", f.t1),
            format!("{:?}", f.t2),
            f.n_shells.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct ReportSummary {
    pub fits: Vec<DecayFitReport>,
    /// `(m, reason)` for orders whose fit was inconclusive.
    pub skipped: Vec<(u32, String)>,
    pub fits_csv: PathBuf,
}

/// Fits orders `ms` of the unit-weight synthesized norm and writes
/// `fits.csv` and a fresh manifest into the archive.
pub fn report(dir: &Path, ms: &[u32], window: (f64, f64)) -> Result<ReportSummary> {
    let archive = ArchiveData::load(dir)?;
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    if archive.modes.iter().any(|m| m.ok()) {
        for &m in ms {
            let s = synthesize_norms(&archive, m, &WeightSpec::unit())?;
            match decay_fit(&s.t, &s.values, window, m, archive.n_shells()) {
                Ok(f) => fits.push(f),
                Err(LabError::Inconclusive(why)) => skipped.push((m, why)),
                Err(e) => return Err(e),
            }
        }
    }
    let fits_csv = dir.join("fits.csv");
    write_fit_summary(&fits_csv, &fits)?;
    write_manifest(dir, &run_id(&archive.config))?;
    Ok(ReportSummary { fits, skipped, fits_csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_fit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fits.csv");
        write_fit_summary(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "m,sigma_hat,sigma_target,resid,t1,t2,n_shells\n");
        let fit = |m| DecayFitReport {
            m,
            t1: 20.0,
            t2: 200.0,
            sigma_hat: 0.7,
            sigma_target: crate::fit::sigma_target(m),
            resid: 0.01,
            n_shells: 24,
            points: 181,
        };
        write_fit_summary(&path, &[fit(0), fit(1)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "1,0.7,1.25,0.01,20.0,200.0,24");
    }
}
