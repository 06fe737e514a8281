use std::collections::BTreeSet;
use std::path::Path;

use vml_core::mode::ModeState;
use vml_core::weights::WeightSpec;
use vml_lab::report::{report, FIT_HEADER};
use vml_lab::sweep::{mode_file, SweepContext, SERIES_HEADER};
use vml_lab::{run_sweep, synthesize_norms, ArchiveData, ExperimentConfig, Family};

fn small(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        n: 9,
        r: 6.0,
        shells: vec![0.5, 1.0],
        directions: 6,
        family: Family::Mixed,
        dt: 0.5,
        t_end: 2.0,
        save_every: 0.5,
        output: dir.to_path_buf(),
        ..Default::default()
    }
}

fn files(dir: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for sub in ["", "series", "aux", "checkpoints"] {
        for e in std::fs::read_dir(dir.join(sub)).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out
}

fn max_state_diff(a: &ModeState, b: &ModeState) -> f64 {
    let f = a.f.values().iter().zip(b.f.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let eb = a.e.iter().chain(&a.b).zip(b.e.iter().chain(&b.b)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    f.max(eb)
}

#[test]
fn zero_amplitude_gives_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        amplitude: 0.0,
        directions: 1,
        ..small(dir.path())
    };
    let a = run_sweep(&cfg).unwrap();
    assert!(a.failures.is_empty());
    let data = ArchiveData::load(dir.path()).unwrap();
    for m in &data.modes {
        let s = data.series(m.index).unwrap();
        for col in &SERIES_HEADER[4..11] {
            assert!(s.column(col).unwrap().iter().all(|v| *v == 0.0), "{col}");
        }
    }
    let z = synthesize_norms(&data, 0, &WeightSpec::unit()).unwrap();
    assert!(z.values.iter().all(|v| *v == 0.0));
}

#[test]
fn identical_configs_give_identical_archives() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        checkpoint_every: 1.0,
        ..small(dir.path())
    };
    run_sweep(&cfg).unwrap();
    let snapshot: Vec<(String, Vec<u8>)> = files(dir.path())
        .into_iter()
        .map(|f| {
            let b = std::fs::read(dir.path().join(&f)).unwrap();
            (f, b)
        })
        .collect();
    std::fs::remove_dir_all(dir.path().join("series")).unwrap();
    run_sweep(&cfg).unwrap();
    assert_eq!(files(dir.path()).len(), snapshot.len());
    for (f, bytes) in snapshot {
        assert_eq!(std::fs::read(dir.path().join(&f)).unwrap(), bytes, "{f} differs");
    }
}

#[test]
fn symmetry_reduction_matches_direct_integration() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let direct = small(d1.path());
    let reduced = ExperimentConfig {
        symmetry_reduce: true,
        directions: 14,
        ..small(d2.path())
    };
    let direct = ExperimentConfig {
        directions: 14,
        ..direct
    };
    run_sweep(&direct).unwrap();
    run_sweep(&reduced).unwrap();
    let a = ArchiveData::load(d1.path()).unwrap();
    let b = ArchiveData::load(d2.path()).unwrap();
    assert_eq!(a.modes, b.modes);
    for m in &a.modes {
        let (sa, sb) = (a.series(m.index).unwrap(), b.series(m.index).unwrap());
        for (ra, rb) in sa.rows.iter().zip(&sb.rows) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "mode {}: {x} vs {y}", m.index);
            }
        }
        let ca = a.checkpoint(m.index).unwrap();
        let cb = b.checkpoint(m.index).unwrap();
        let (fa, fb) = (&ca.records.last().unwrap().state, &cb.records.last().unwrap().state);
        assert_eq!(fa.k, fb.k);
        assert!(max_state_diff(fa, fb) < 1e-10);
    }
}

#[test]
fn restart_from_checkpoint_reproduces_final_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        shells: vec![0.7],
        directions: 1,
        t_end: 3.0,
        checkpoint_every: 1.0,
        ..small(dir.path())
    };
    run_sweep(&cfg).unwrap();
    let data = ArchiveData::load(dir.path()).unwrap();
    let ck = data.checkpoint(0).unwrap();
    assert_eq!(ck.records.iter().map(|r| r.step).collect::<Vec<_>>(), vec![2, 4, 6]);
    let ctx = SweepContext::new(&cfg).unwrap();
    let resumed = ctx.resume_mode(&ctx.modes[0], &ck.records[0]).unwrap();
    let fin = &resumed.checkpoints.last().unwrap().state;
    let want = &ck.records[2].state;
    assert!(max_state_diff(fin, want) <= 1e-12);
    assert!((fin.t - want.t).abs() < 1e-12);
}

#[test]
fn synthesis_identities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        shells: vec![0.4, 0.9, 1.3],
        ell: 1.0,
        ..small(dir.path())
    };
    run_sweep(&cfg).unwrap();
    let data = ArchiveData::load(dir.path()).unwrap();
    let s0 = synthesize_norms(&data, 0, &WeightSpec::unit()).unwrap();
    let s1 = synthesize_norms(&data, 1, &WeightSpec::unit()).unwrap();
    // independent summation of the t = 0 quadrature
    let (mut num, mut den) = (0.0, 0.0);
    for m in &data.modes {
        let s = data.series(m.index).unwrap();
        let v = s.rows[0][4] + s.rows[0][5];
        let k2: f64 = m.k.iter().map(|x| x * x).sum();
        num += m.weight * k2 * v;
        den += m.weight * v;
    }
    assert!((s1.values[0] / s0.values[0] - num / den).abs() < 1e-12);
    let weighted = synthesize_norms(&data, 0, &WeightSpec::linear_power(1.0)).unwrap();
    assert!(weighted.values.iter().zip(&s0.values).all(|(w, u)| w.is_finite() && *u > 0.0 && *w > 0.0));
    assert!(synthesize_norms(&data, 0, &WeightSpec::linear_power(2.0)).is_err());
    // energy of every mode is nonincreasing, so the synthesized m = 0 series is too
    assert!(s0.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-8)));
}

#[test]
fn single_mode_synthesis_is_the_mode_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        shells: vec![0.8],
        directions: 1,
        ..small(dir.path())
    };
    run_sweep(&cfg).unwrap();
    let data = ArchiveData::load(dir.path()).unwrap();
    let s = synthesize_norms(&data, 0, &WeightSpec::unit()).unwrap();
    let series = data.series(0).unwrap();
    let w = data.modes[0].weight;
    for (v, r) in s.values.iter().zip(&series.rows) {
        assert_eq!(*v, w * (r[4] + r[5]));
    }
}

#[test]
fn missing_modes_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&ExperimentConfig {
        directions: 1,
        ..small(dir.path())
    })
    .unwrap();
    std::fs::remove_file(dir.path().join("series").join(mode_file(1, "csv"))).unwrap();
    let data = ArchiveData::load(dir.path()).unwrap();
    assert!(synthesize_norms(&data, 0, &WeightSpec::unit()).is_err());
}

#[test]
fn report_writes_fits_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&small(dir.path())).unwrap();
    // two seconds of data cannot decay fivefold in the default window
    let r = report(dir.path(), &[0, 1], (20.0, 200.0)).unwrap();
    assert!(r.fits.is_empty());
    let text = std::fs::read_to_string(dir.path().join("fits.csv")).unwrap();
    assert_eq!(text, format!("{}\n", FIT_HEADER.join(",")));
    // a window over the data the run does have gives two rows
    let r = report(dir.path(), &[0, 1], (0.0, 2.0)).unwrap();
    let text = std::fs::read_to_string(dir.path().join("fits.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + r.fits.len());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    let listed: BTreeSet<String> = manifest.lines().skip(1).map(String::from).collect();
    let mut on_disk = files(dir.path());
    on_disk.remove("manifest.txt");
    assert_eq!(listed, on_disk);
    assert_eq!(listed.iter().filter(|f| f.ends_with(".csv")).count(), 2 * 12 + 2);
}

#[test]
fn bad_configs_are_rejected() {
    for text in [
        "shells = 1, 0.5",
        "shells = 0, 1",
        "directions = 5",
        "k_weights = 1, 2\nshells = 1",
        "n = 10",
        "frobnicate = 1",
        "dt = 0.1\ndt = 0.2",
    ] {
        assert!(ExperimentConfig::parse(text).and_then(|c| c.validate()).is_err(), "{text}");
    }
}
