//! Parallel per-mode sweeps and the on-disk archive.
//!
//! Archive layout:
//!
//! ```text
//! config.cfg              config snapshot
//! modes.csv               one row per wave vector
//! series/mode_NNNN.csv    ModeEnergyReport rows
//! aux/mode_NNNN.csv       weighted norms and energy-ledger totals
//! checkpoints/mode_NNNN.ckpt
//! manifest.txt
//! ```

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use vml_core::collision::LinearizedOperator;
use vml_core::macro_structure::MacroProjector;
use vml_core::mode::{integrate_mode_with, ModeEnergyRow, ModeReporter, ModeState, RunSummary};
use vml_core::weights::{energy_ledger, EnergyRequest};
use vml_core::VelocityGrid;

use crate::checkpoint::{Checkpoint, CheckpointHeader, CheckpointRecord};
use crate::config::ExperimentConfig;
use crate::error::{csv_err, io_err, LabError, Result};
use crate::init::{init_data, DataSpec};
use crate::kset::{build_k_set, KMode};

pub const SERIES_HEADER: [&str; 14] = [
    "t", "k1", "k2", "k3", "f_l2sq", "em_sq", "micro_D", "macro_abc", "a_diff", "E_term", "B_term", "rho_k", "gauss_E",
    "gauss_B",
];

pub const AUX_HEADER: [&str; 5] = ["t", "wl2sq", "w_micro_D", "ledger_energy", "ledger_dissipation"];

pub const MODES_HEADER: [&str; 8] = ["index", "shell", "direction", "k1", "k2", "k3", "weight", "status"];

/// Order of the energy ledger written to the aux files.
pub const LEDGER_ORDER: usize = 1;

pub fn series_row(r: &ModeEnergyRow) -> [f64; 14] {
    [
        r.t, r.k[0], r.k[1], r.k[2], r.f_l2sq, r.em_sq, r.micro_d, r.macro_abc, r.a_diff, r.e_term, r.b_term, r.rho_k,
        r.gauss_e, r.gauss_b,
    ]
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Threads for sweeps: `VML_THREADS` if set, else the available cores.
pub fn sweep_threads() -> usize {
    std::env::var("VML_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Shared, immutable inputs of a sweep.
pub struct SweepContext {
    pub cfg: ExperimentConfig,
    pub grid: Arc<VelocityGrid>,
    pub operator: LinearizedOperator,
    pub projector: MacroProjector,
    pub modes: Vec<KMode>,
}

impl SweepContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = VelocityGrid::shared(cfg.r, cfg.n)?;
        let operator = LinearizedOperator::new(&grid, &cfg.params()?)?;
        let projector = MacroProjector::new(&grid);
        let modes = build_k_set(cfg)?;
        Ok(Self {
            cfg: cfg.clone(),
            grid,
            operator,
            projector,
            modes,
        })
    }

    fn data_spec(&self) -> DataSpec {
        DataSpec {
            family: self.cfg.family,
            amplitude: self.cfg.amplitude,
            envelope: self.cfg.envelope,
        }
    }

    /// Initial state of a mode: the image of its representative's data.
    pub fn initial_state(&self, mode: &KMode) -> Result<ModeState> {
        let rep_k = mode.map.inverse().apply(mode.k);
        let s = init_data(&self.data_spec(), rep_k, &self.grid, &self.projector)?;
        let mut s = mode.map.apply_state(&s);
        s.k = mode.k;
        Ok(s)
    }

    /// Integrates one mode from `s0` (at step `step0`) to `T`.
    pub fn integrate(&self, mode: &KMode, s0: &ModeState, step0: usize) -> Result<ModeOutput> {
        let cfg = &self.cfg;
        let stepper = cfg.stepper()?;
        let stride = cfg.save_stride()?;
        let ckpt = cfg.checkpoint_stride()?;
        let total = cfg.total_steps()?;
        let reporter = ModeReporter::new(self.operator.sigma(), cfg.ell);
        let req = EnergyRequest::new(LEDGER_ORDER, cfg.ell, 0.0, 0.25)?;
        let mut rows = Vec::new();
        let mut aux = Vec::new();
        let mut checkpoints = Vec::new();
        let t_end = total as f64 * cfg.dt;
        let (last, summary) = integrate_mode_with(s0, &stepper, t_end, &self.operator, stride, |s| {
            let step = step0 + ((s.t - s0.t) / cfg.dt).round() as usize;
            let row = reporter.row(s)?;
            let ledger = energy_ledger(s, &req, s.t, self.operator.sigma())?;
            aux.push([s.t, row.weighted_l2sq, row.weighted_micro_d, ledger.energy(), ledger.dissipation()]);
            rows.push(row);
            if let Some(c) = ckpt {
                if step % c == 0 && step != step0 && step != total {
                    checkpoints.push(CheckpointRecord {
                        mode: mode.index as u32,
                        step: step as u64,
                        state: s.clone(),
                    });
                }
            }
            Ok(())
        })?;
        checkpoints.push(CheckpointRecord {
            mode: mode.index as u32,
            step: total as u64,
            state: last,
        });
        Ok(ModeOutput {
            rows,
            aux,
            checkpoints,
            summary,
        })
    }

    pub fn run_mode(&self, mode: &KMode) -> Result<ModeOutput> {
        let s0 = self.initial_state(mode)?;
        self.integrate(mode, &s0, 0)
    }

    /// Continues a mode from a checkpoint record.
    pub fn resume_mode(&self, mode: &KMode, rec: &CheckpointRecord) -> Result<ModeOutput> {
        if !rec.state.grid().same_as(&self.grid) {
            return Err(LabError::Archive("checkpoint grid differs from the config grid".into()));
        }
        self.integrate(mode, &rec.state, rec.step as usize)
    }

    fn header(&self) -> Result<CheckpointHeader> {
        Ok(CheckpointHeader::new(&self.grid, &self.cfg.params()?))
    }
}

/// Everything one mode contributes to the archive.
#[derive(Debug, Clone)]
pub struct ModeOutput {
    pub rows: Vec<ModeEnergyRow>,
    pub aux: Vec<[f64; 5]>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub summary: RunSummary,
}

impl ModeOutput {
    /// The output of the mode `map` carries the source mode onto.
    fn mapped(&self, mode: &KMode, source: &KMode) -> Self {
        let to = mode.map;
        let from = source.map.inverse();
        let rows = self.rows.iter().map(|r| ModeEnergyRow { k: mode.k, ..*r }).collect();
        let checkpoints = self
            .checkpoints
            .iter()
            .map(|c| {
                let mut s = to.apply_state(&from.apply_state(&c.state));
                s.k = mode.k;
                CheckpointRecord {
                    mode: mode.index as u32,
                    step: c.step,
                    state: s,
                }
            })
            .collect();
        Self {
            rows,
            aux: self.aux.clone(),
            checkpoints,
            summary: self.summary,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunArchive {
    pub run_id: String,
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub series: Vec<PathBuf>,
    pub aux: Vec<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
    /// `(mode index, message)` of modes whose integration failed.
    pub failures: Vec<(usize, String)>,
    /// Per integrated mode: largest Gauss drift and GMRES iteration count.
    pub summaries: Vec<(usize, RunSummary)>,
}

pub fn run_id(cfg: &ExperimentConfig) -> String {
    let mut h = DefaultHasher::new();
    cfg.to_text().hash(&mut h);
    format!("{:016x}", h.finish())
}

pub fn mode_file(index: usize, ext: &str) -> String {
    format!("mode_{index:04}.{ext}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_series(path: &Path, rows: &[ModeEnergyRow]) -> Result<()> {
    write_csv(path, &SERIES_HEADER, rows.iter().map(|r| series_row(r).iter().map(|v| fmt(*v)).collect()))
}

/// Lists every file under `dir` (except the manifest) into `manifest.txt`.
pub fn write_manifest(dir: &Path, run_id: &str) -> Result<()> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(io_err(dir))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(io_err(dir))?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(base, &p, out)?;
            } else {
                let rel = p.strip_prefix(base).expect("walk stays under base");
                let rel = rel.to_string_lossy().replace('\\', "/");
                if rel != "manifest.txt" {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut text = format!("run_id = {run_id}\n");
    for f in files {
        text.push_str(&f);
        text.push('\n');
    }
    let path = dir.join("manifest.txt");
    std::fs::write(&path, text).map_err(io_err(&path))
}

/// Integrates every mode of the config and writes the archive.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RunArchive> {
    let ctx = SweepContext::new(cfg)?;
    run_sweep_with(&ctx)
}

pub fn run_sweep_with(ctx: &SweepContext) -> Result<RunArchive> {
    let cfg = &ctx.cfg;
    let dir = cfg.output.clone();
    for sub in ["series", "aux", "checkpoints"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let integrate: Vec<&KMode> = ctx
        .modes
        .iter()
        .filter(|m| !cfg.symmetry_reduce || m.representative == m.index)
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| LabError::Invalid(format!("thread pool: {e}")))?;
    let computed: Vec<(usize, std::result::Result<ModeOutput, String>)> = pool.install(|| {
        integrate
            .par_iter()
            .map(|m| (m.index, ctx.run_mode(m).map_err(|e| e.to_string())))
            .collect()
    });
    let mut by_index: Vec<Option<std::result::Result<ModeOutput, String>>> = vec![None; ctx.modes.len()];
    for (i, out) in computed {
        by_index[i] = Some(out);
    }

    let id = run_id(cfg);
    let cfg_path = dir.join("config.cfg");
    std::fs::write(&cfg_path, cfg.to_text()).map_err(io_err(&cfg_path))?;
    let header = ctx.header()?;
    let mut archive = RunArchive {
        run_id: id.clone(),
        dir: dir.clone(),
        config: cfg.clone(),
        series: Vec::new(),
        aux: Vec::new(),
        checkpoints: Vec::new(),
        failures: Vec::new(),
        summaries: Vec::new(),
    };
    let mut statuses = Vec::with_capacity(ctx.modes.len());
    for mode in &ctx.modes {
        let source_idx = if cfg.symmetry_reduce { mode.representative } else { mode.index };
        let source = &ctx.modes[source_idx];
        let out = match by_index[source_idx].as_ref().expect("every source mode was integrated") {
            Ok(o) if source_idx == mode.index => Ok(o.clone()),
            Ok(o) => Ok(o.mapped(mode, source)),
            Err(e) => Err(e.clone()),
        };
        match out {
            Ok(o) => {
                let s = dir.join("series").join(mode_file(mode.index, "csv"));
                write_series(&s, &o.rows)?;
                let a = dir.join("aux").join(mode_file(mode.index, "csv"));
                write_csv(&a, &AUX_HEADER, o.aux.iter().map(|r| r.iter().map(|v| fmt(*v)).collect()))?;
                let c = dir.join("checkpoints").join(mode_file(mode.index, "ckpt"));
                Checkpoint {
                    header,
                    records: o.checkpoints.clone(),
                }
                .write(&c)?;
                archive.series.push(s);
                archive.aux.push(a);
                archive.checkpoints.push(c);
                if source_idx == mode.index {
                    archive.summaries.push((mode.index, o.summary));
                }
                statuses.push(if o.summary.constraint_flagged { "constraint-flagged".to_string() } else { "ok".to_string() });
            }
            Err(e) => {
                archive.failures.push((mode.index, e.clone()));
                statuses.push(format!("failed: {}", e.replace(',', ";")));
            }
        }
    }
    let modes_path = dir.join("modes.csv");
    write_csv(
        &modes_path,
        &MODES_HEADER,
        ctx.modes.iter().zip(&statuses).map(|(m, st)| {
            vec![
                m.index.to_string(),
                m.shell.to_string(),
                m.direction.to_string(),
                fmt(m.k[0]),
                fmt(m.k[1]),
                fmt(m.k[2]),
                fmt(m.weight),
                st.clone(),
            ]
        }),
    )?;
    write_manifest(&dir, &id)?;
    Ok(archive)
}

/// One row of `modes.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEntry {
    pub index: usize,
    pub shell: usize,
    pub direction: usize,
    pub k: [f64; 3],
    pub weight: f64,
    pub status: String,
}

impl ModeEntry {
    pub fn ok(&self) -> bool {
        self.status == "ok" || self.status == "constraint-flagged"
    }
}

/// Time series of one archived mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeries {
    pub t: Vec<f64>,
    /// Rows in [`SERIES_HEADER`] order.
    pub rows: Vec<[f64; 14]>,
    /// Rows in [`AUX_HEADER`] order.
    pub aux: Vec<[f64; 5]>,
}

impl ModeSeries {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(i) = SERIES_HEADER.iter().position(|h| *h == name) {
            return Some(self.rows.iter().map(|r| r[i]).collect());
        }
        let i = AUX_HEADER.iter().position(|h| *h == name)?;
        Some(self.aux.iter().map(|r| r[i]).collect())
    }
}

/// A sweep archive read back from disk.
#[derive(Debug, Clone)]
pub struct ArchiveData {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub modes: Vec<ModeEntry>,
}

fn read_rows<const N: usize>(path: &Path, header: &[&str; N]) -> Result<Vec<[f64; N]>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let h = r.headers().map_err(csv_err(path))?.clone();
    if h.iter().ne(header.iter().copied()) {
        return Err(LabError::Archive(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let mut row = [0.0; N];
        for (i, v) in rec.iter().enumerate() {
            row[i] = v
                .parse()
                .map_err(|_| LabError::Archive(format!("{}: bad number `{v}`", path.display())))?;
        }
        out.push(row);
    }
    Ok(out)
}

impl ArchiveData {
    pub fn load(dir: &Path) -> Result<Self> {
        let config = ExperimentConfig::load(&dir.join("config.cfg"))?;
        let path = dir.join("modes.csv");
        let mut r = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
        let mut modes = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err(&path))?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| LabError::Archive(format!("{}: bad field {i}", path.display())))
            };
            modes.push(ModeEntry {
                index: num(0)? as usize,
                shell: num(1)? as usize,
                direction: num(2)? as usize,
                k: [num(3)?, num(4)?, num(5)?],
                weight: num(6)?,
                status: rec.get(7).unwrap_or("").to_string(),
            });
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            modes,
        })
    }

    pub fn series(&self, index: usize) -> Result<ModeSeries> {
        let entry = self
            .modes
            .iter()
            .find(|m| m.index == index)
            .ok_or_else(|| LabError::Archive(format!("no mode {index}")))?;
        if !entry.ok() {
            return Err(LabError::Archive(format!("mode {index} is missing: {}", entry.status)));
        }
        let rows = read_rows(&self.dir.join("series").join(mode_file(index, "csv")), &SERIES_HEADER)?;
        let aux = read_rows(&self.dir.join("aux").join(mode_file(index, "csv")), &AUX_HEADER)?;
        if rows.len() != aux.len() {
            return Err(LabError::Archive(format!("mode {index}: series and aux lengths differ")));
        }
        Ok(ModeSeries {
            t: rows.iter().map(|r| r[0]).collect(),
            rows,
            aux,
        })
    }

    pub fn checkpoint(&self, index: usize) -> Result<Checkpoint> {
        Checkpoint::read(&self.dir.join("checkpoints").join(mode_file(index, "ckpt")))
    }

    pub fn n_shells(&self) -> usize {
        self.config.shells.len()
    }
}
