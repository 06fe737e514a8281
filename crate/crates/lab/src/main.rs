use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use vml_core::collision::{CollisionParams, LinearizedOperator};
use vml_core::macro_structure::MacroProjector;
use vml_core::mode::{energy_identity_check, envelope_fit, integrate_mode, mode_energy_report, rho, Scheme, StepperConfig};
use vml_core::weights::WeightSpec;
use vml_core::VelocityGrid;
use vml_lab::report::write_fit_summary;
use vml_lab::spectrum::{coercivity_check, sigma_table, spectrum_check};
use vml_lab::sweep::write_series;
use vml_lab::{decay_fit, init_data, report, run_sweep, synthesize_norms, ArchiveData, DataSpec, ExperimentConfig, Family};

#[derive(Parser)]
#[command(name = "vml", about = "Linearized Vlasov-Maxwell-Landau laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump sigma^ij along a lattice ray as CSV.
    SigmaTable {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        c_phi: f64,
        /// Integer direction, e.g. 1,0,0.
        #[arg(long, default_value = "1,0,0")]
        ray: String,
        #[arg(long, default_value_t = 8.0)]
        rmax: f64,
        #[arg(long, default_value_t = 33)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Null space, adjointness, positivity and coercivity of the discrete operator.
    SpectrumCheck {
        #[arg(long, default_value_t = 33)]
        n: usize,
        #[arg(long = "R", default_value_t = 7.0)]
        r: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Integrate a single Fourier mode and report its energy history.
    ModeRun {
        #[arg(long, default_value = "1,0,0", allow_hyphen_values = true)]
        k: String,
        #[arg(long, default_value = "mixed")]
        family: String,
        #[arg(long = "T", default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value = "imex-midpoint")]
        scheme: String,
        #[arg(long, default_value_t = 17)]
        n: usize,
        #[arg(long = "R", default_value_t = 7.0)]
        r: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.0)]
        ell: f64,
        /// Steps between reported rows.
        #[arg(long, default_value_t = 20)]
        stride: usize,
        /// Write the mode series CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a k-shell sweep described by a config file.
    DecaySweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the decay exponent of a synthesized norm.
    Fit {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value_t = 0)]
        m: u32,
        #[arg(long, default_value = "20,200")]
        window: String,
        /// Fit the `ell`-weighted norm instead of the unweighted one.
        #[arg(long)]
        weighted: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write fits.csv for m = 0, 1 and refresh the manifest.
    Report {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value = "20,200")]
        window: String,
    },
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number `{v}`")))
        .collect()
}

fn vec3(s: &str) -> Result<[f64; 3]> {
    let v = floats(s)?;
    match v.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("expected three comma-separated numbers, got `{s}`"),
    }
}

fn window(s: &str) -> Result<(f64, f64)> {
    match floats(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => bail!("window must be `t1,t2`"),
    }
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::SigmaTable {
            gamma,
            c_phi,
            ray,
            rmax,
            n,
            out,
        } => {
            let r = vec3(&ray)?;
            if r.iter().any(|x| x.fract() != 0.0) {
                bail!("ray must have integer components");
            }
            let p = CollisionParams::new(gamma, c_phi)?;
            let rows = sigma_table(&p, r.map(|x| x as i64), rmax, n)?;
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["r", "xi1", "xi2", "xi3", "s11", "s12", "s13", "s22", "s23", "s33"])?;
            for row in &rows {
                w.write_record(row.iter().map(|v| format!("{v:?}")))?;
            }
            w.flush()?;
            println!("{} rows -> {}", rows.len(), out.display());
        }
        Cmd::SpectrumCheck {
            n,
            r,
            gamma,
            samples,
            seed,
        } => {
            let start = Instant::now();
            let grid = VelocityGrid::shared(r, n)?;
            let l = LinearizedOperator::new(&grid, &CollisionParams::new(gamma, 1.0)?)?;
            let s = spectrum_check(&l, samples, seed)?;
            let c = coercivity_check(&l, 20, seed)?;
            println!("n = {n}, R = {r}, gamma = {gamma}");
            for (name, v) in ["a+", "a-", "b1", "b2", "b3", "c"].iter().zip(s.null_residuals) {
                println!("null residual {name:>3}: {v:.3e}");
            }
            println!("adjointness defect: {:.3e}", s.adjoint_defect);
            println!("min Rayleigh quotient ({} fields): {:.6e}", s.samples, s.min_rayleigh);
            println!("operator norm estimate: {:.6e}", s.norm_estimate);
            println!("micro gap kappa: {:.6e}", c.kappa);
            println!("D / characterization band: [{:.6e}, {:.6e}]", c.band.0, c.band.1);
            println!("elapsed: {:.1} s", start.elapsed().as_secs_f64());
        }
        Cmd::ModeRun {
            k,
            family,
            t_end,
            dt,
            scheme,
            n,
            r,
            gamma,
            amplitude,
            ell,
            stride,
            out,
        } => {
            let k = vec3(&k)?;
            let family = Family::parse(&family).with_context(|| format!("unknown family `{family}`"))?;
            let grid = VelocityGrid::shared(r, n)?;
            let l = LinearizedOperator::new(&grid, &CollisionParams::new(gamma, 1.0)?)?;
            let spec = DataSpec {
                family,
                amplitude,
                envelope: 1.0,
            };
            let s0 = init_data(&spec, k, &grid, &MacroProjector::new(&grid))?;
            let cfg = StepperConfig::new(dt, Scheme::parse(&scheme)?)?;
            let run = integrate_mode(&s0, &cfg, t_end, &l, stride)?;
            let rep = mode_energy_report(&run.history, ell, l.sigma())?;
            if stride == 1 {
                let id = energy_identity_check(&run.history, &l)?;
                println!(
                    "energy identity: cumulative residual {:.3e} ({:.3e} of initial energy)",
                    id.cumulative,
                    id.cumulative / id.initial_energy.max(f64::MIN_POSITIVE)
                );
            }
            let m = rep.m_series();
            println!("rho(k) = {:.6}", rho(k));
            println!("M(0) = {:.6e}, M(T) = {:.6e}", m[0], m[m.len() - 1]);
            let fit = envelope_fit(&rep.times(), &m, rep.rho());
            if fit.inconclusive {
                println!("envelope fit inconclusive");
            } else {
                println!("envelope fit: eps = {:.4e}, J = {:.4}, rate = {:.4e}", fit.eps, fit.j, fit.rate(rep.rho()));
            }
            println!(
                "steps {}, max GMRES iterations {}, max Gauss drift {:.3e}{}",
                run.summary.steps,
                run.summary.max_iterations,
                run.summary.max_gauss_drift,
                if run.summary.constraint_flagged { " (flagged)" } else { "" }
            );
            if let Some(out) = out {
                write_series(&out, &rep.rows)?;
                println!("series -> {}", out.display());
            }
        }
        Cmd::DecaySweep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let start = Instant::now();
            let a = run_sweep(&cfg)?;
            println!("run {} -> {}", a.run_id, a.dir.display());
            println!("{} mode series, {} failures", a.series.len(), a.failures.len());
            for (i, msg) in &a.failures {
                println!("mode {i} failed: {msg}");
            }
            println!("elapsed: {:.1} s", start.elapsed().as_secs_f64());
        }
        Cmd::Fit {
            archive,
            m,
            window: w,
            weighted,
            out,
        } => {
            let a = ArchiveData::load(&archive)?;
            let spec = if weighted { WeightSpec::linear_power(a.config.ell) } else { WeightSpec::unit() };
            let s = synthesize_norms(&a, m, &spec)?;
            let f = decay_fit(&s.t, &s.values, window(&w)?, m, a.n_shells())?;
            println!(
                "m = {m}: sigma_hat = {:.4}, target = {:.4}, resid = {:.3e}, window [{}, {}], {} shells",
                f.sigma_hat, f.sigma_target, f.resid, f.t1, f.t2, f.n_shells
            );
            if let Some(out) = out {
                write_fit_summary(&out, &[f])?;
            }
        }
        Cmd::Report { archive, window: w } => {
            let s = report(&archive, &[0, 1], window(&w)?)?;
            for f in &s.fits {
                println!("m = {}: sigma_hat = {:.4} (target {:.4})", f.m, f.sigma_hat, f.sigma_target);
            }
            for (m, why) in &s.skipped {
                println!("m = {m}: inconclusive ({why})");
            }
            println!("-> {}", s.fits_csv.display());
        }
    }
    Ok(())
}
