//! `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vml_core::collision::CollisionParams;
use vml_core::mode::{Scheme, StepperConfig};

use crate::error::{io_err, LabError, Result};
use crate::init::Family;

/// Radial quadrature of the k-shell set.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialWeights {
    /// `r^2 dr` with trapezoid widths over `[0, r_max]` (unit width for a single shell).
    Trapezoid,
    /// Explicit per-shell radial weights.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub gamma: f64,
    pub c_phi: f64,
    /// Velocity box half-width.
    pub r: f64,
    pub n: usize,
    pub shells: Vec<f64>,
    /// Directions per shell: 1, 6 or 14.
    pub directions: usize,
    pub k_weights: RadialWeights,
    pub family: Family,
    pub amplitude: f64,
    /// Width of the Gaussian data envelope in `|k|`.
    pub envelope: f64,
    /// Power of the linear-decay weight in reported weighted norms.
    pub ell: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub solve_tol: f64,
    pub constraint_tol: f64,
    pub max_steps: usize,
    pub coupling: bool,
    pub t_end: f64,
    pub save_every: f64,
    /// 0 keeps only the final checkpoint.
    pub checkpoint_every: f64,
    /// Integrate one direction per symmetry orbit and map the rest.
    pub symmetry_reduce: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gamma: -3.0,
            c_phi: 1.0,
            r: 7.0,
            n: 25,
            shells: vec![1.0],
            directions: 6,
            k_weights: RadialWeights::Trapezoid,
            family: Family::Mixed,
            amplitude: 1.0,
            envelope: 1.0,
            ell: 0.0,
            dt: 0.05,
            scheme: Scheme::ImexMidpoint,
            solve_tol: 1e-12,
            constraint_tol: 1e-8,
            max_steps: 10_000_000,
            coupling: true,
            t_end: 100.0,
            save_every: 1.0,
            checkpoint_every: 0.0,
            symmetry_reduce: false,
            output: PathBuf::from("vml-run"),
        }
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| LabError::Config {
        line,
        msg: format!("`{key}` expects a number, got `{v}`"),
    })
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_num(line, key, s.trim())).collect()
}

/// `a:b:m` gives `m` equally spaced values from `a` to `b`; otherwise a comma list.
fn parse_shells(line: usize, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts.len() {
        1 => parse_list(line, "shells", v),
        3 => {
            let a: f64 = parse_num(line, "shells", parts[0])?;
            let b: f64 = parse_num(line, "shells", parts[1])?;
            let m: usize = parse_num(line, "shells", parts[2])?;
            if m == 0 {
                return Ok(Vec::new());
            }
            if m == 1 {
                return Ok(vec![a]);
            }
            Ok((0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect())
        }
        _ => Err(LabError::Config {
            line,
            msg: format!("`shells` expects `a:b:count` or a comma list, got `{v}`"),
        }),
    }
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(LabError::Config {
            line,
            msg: format!("`{key}` expects true or false, got `{v}`"),
        }),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| LabError::Config {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let v = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(LabError::Config {
                    line,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            match key {
                "gamma" => cfg.gamma = parse_num(line, key, v)?,
                "c_phi" => cfg.c_phi = parse_num(line, key, v)?,
                "R" => cfg.r = parse_num(line, key, v)?,
                "n" => cfg.n = parse_num(line, key, v)?,
                "shells" => cfg.shells = parse_shells(line, v)?,
                "directions" => cfg.directions = parse_num(line, key, v)?,
                "k_weights" => {
                    cfg.k_weights = if v == "trapezoid" {
                        RadialWeights::Trapezoid
                    } else {
                        RadialWeights::Explicit(parse_list(line, key, v)?)
                    }
                }
                "family" => {
                    cfg.family = Family::parse(v).ok_or_else(|| LabError::Config {
                        line,
                        msg: format!("unknown family `{v}`"),
                    })?
                }
                "amplitude" => cfg.amplitude = parse_num(line, key, v)?,
                "envelope" => cfg.envelope = parse_num(line, key, v)?,
                "ell" => cfg.ell = parse_num(line, key, v)?,
                "dt" => cfg.dt = parse_num(line, key, v)?,
                "scheme" => {
                    cfg.scheme = Scheme::parse(v).map_err(|e| LabError::Config {
                        line,
                        msg: e.to_string(),
                    })?
                }
                "solve_tol" => cfg.solve_tol = parse_num(line, key, v)?,
                "constraint_tol" => cfg.constraint_tol = parse_num(line, key, v)?,
                "max_steps" => cfg.max_steps = parse_num(line, key, v)?,
                "coupling" => cfg.coupling = parse_bool(line, key, v)?,
                "T" => cfg.t_end = parse_num(line, key, v)?,
                "save_every" => cfg.save_every = parse_num(line, key, v)?,
                "checkpoint_every" => cfg.checkpoint_every = parse_num(line, key, v)?,
                "symmetry_reduce" => cfg.symmetry_reduce = parse_bool(line, key, v)?,
                "output" => cfg.output = PathBuf::from(v),
                _ => {
                    return Err(LabError::Config {
                        line,
                        msg: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    /// Text form that parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "c_phi = {:?}", self.c_phi);
        let _ = writeln!(s, "R = {:?}", self.r);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "shells = {}", fmt_list(&self.shells));
        let _ = writeln!(s, "directions = {}", self.directions);
        match &self.k_weights {
            RadialWeights::Trapezoid => {
                let _ = writeln!(s, "k_weights = trapezoid");
            }
            RadialWeights::Explicit(w) => {
                let _ = writeln!(s, "k_weights = {}", fmt_list(w));
            }
        }
        let _ = writeln!(s, "family = {}", self.family.tag());
        let _ = writeln!(s, "amplitude = {:?}", self.amplitude);
        let _ = writeln!(s, "envelope = {:?}", self.envelope);
        let _ = writeln!(s, "ell = {:?}", self.ell);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "scheme = {}", self.scheme.tag());
        let _ = writeln!(s, "solve_tol = {:?}", self.solve_tol);
        let _ = writeln!(s, "constraint_tol = {:?}", self.constraint_tol);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "coupling = {}", self.coupling);
        let _ = writeln!(s, "T = {:?}", self.t_end);
        let _ = writeln!(s, "save_every = {:?}", self.save_every);
        let _ = writeln!(s, "checkpoint_every = {:?}", self.checkpoint_every);
        let _ = writeln!(s, "symmetry_reduce = {}", self.symmetry_reduce);
        let _ = writeln!(s, "output = {}", self.output.display());
        s
    }

    fn steps_of(&self, span: f64, what: &str) -> Result<usize> {
        let q = span / self.dt;
        let r = q.round();
        if r < 1.0 || (q - r).abs() > 1e-9 * q.max(1.0) {
            return Err(LabError::Invalid(format!("{what} = {span} must be a positive multiple of dt = {}", self.dt)));
        }
        Ok(r as usize)
    }

    /// Steps between saved frames.
    pub fn save_stride(&self) -> Result<usize> {
        self.steps_of(self.save_every, "save_every")
    }

    /// Steps between checkpoints, `None` for final-only.
    pub fn checkpoint_stride(&self) -> Result<Option<usize>> {
        if self.checkpoint_every == 0.0 {
            return Ok(None);
        }
        let c = self.steps_of(self.checkpoint_every, "checkpoint_every")?;
        if c % self.save_stride()? != 0 {
            return Err(LabError::Invalid("checkpoint_every must be a multiple of save_every".into()));
        }
        Ok(Some(c))
    }

    pub fn total_steps(&self) -> Result<usize> {
        self.steps_of(self.t_end, "T")
    }

    pub fn validate(&self) -> Result<()> {
        CollisionParams::new(self.gamma, self.c_phi)?;
        if self.n < 3 || self.n % 2 == 0 || !(self.r > 0.0) {
            return Err(LabError::Invalid("grid needs odd n >= 3 and R > 0".into()));
        }
        if self.shells.is_empty() {
            return Err(LabError::Invalid("empty shell list".into()));
        }
        if !(self.shells[0] > 0.0) || self.shells.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Invalid("shell radii must be positive and strictly increasing".into()));
        }
        if ![1, 6, 14].contains(&self.directions) {
            return Err(LabError::Invalid(format!("directions must be 1, 6 or 14, got {}", self.directions)));
        }
        if let RadialWeights::Explicit(w) = &self.k_weights {
            if w.len() != self.shells.len() || w.iter().any(|x| !(*x > 0.0)) {
                return Err(LabError::Invalid("k_weights needs one positive weight per shell".into()));
            }
        }
        if !(self.amplitude >= 0.0 && self.envelope > 0.0 && self.ell >= 0.0) {
            return Err(LabError::Invalid("amplitude >= 0, envelope > 0 and ell >= 0 required".into()));
        }
        self.stepper()?;
        self.total_steps()?;
        self.save_stride()?;
        self.checkpoint_stride()?;
        Ok(())
    }

    pub fn params(&self) -> Result<CollisionParams> {
        Ok(CollisionParams::new(self.gamma, self.c_phi)?)
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let s = StepperConfig {
            dt: self.dt,
            scheme: self.scheme,
            solve_tol: self.solve_tol,
            constraint_tol: self.constraint_tol,
            max_steps: self.max_steps,
            coupling: self.coupling,
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "gamma = -2.5\nshells = 0.05:1:24 # low band\nfamily = micro-only\nT = 10\ndt = 0.5\nsave_every = 1\ncheckpoint_every = 5\nsymmetry_reduce = true\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.shells.len(), 24);
        assert!((cfg.shells[23] - 1.0).abs() < 1e-15);
        assert_eq!(cfg.family, Family::MicroOnly);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(matches!(ExperimentConfig::parse("foo = 1"), Err(LabError::Config { line: 1, .. })));
        assert!(ExperimentConfig::parse("shells = 1, 0.5").is_err());
        assert!(ExperimentConfig::parse("shells = ").is_err());
        assert!(ExperimentConfig::parse("dt = 0.3\nT = 1").is_err());
        assert!(ExperimentConfig::parse("n = 24").is_err());
        assert!(ExperimentConfig::parse("gamma = 1\ngamma = 2").is_err());
    }
}
