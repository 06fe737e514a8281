//! Experiment orchestration on top of `vml-core`: k-shell sweeps, initial
//! data, CSV archives and checkpoints, whole-space norm synthesis and decay fits.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod fit;
pub mod init;
pub mod kset;
pub mod report;
pub mod spectrum;
pub mod sweep;
pub mod symmetry;
pub mod synth;

pub use config::{ExperimentConfig, RadialWeights};
pub use error::{LabError, Result};
pub use fit::{decay_fit, sigma_target, DecayFitReport};
pub use init::{init_data, DataSpec, Family};
pub use kset::{build_k_set, KMode};
pub use report::report;
pub use sweep::{run_sweep, ArchiveData, RunArchive};
pub use synth::{synthesize_norms, NormSeries};
