//! Experiment orchestration: configs, presets, the run pipeline, sweeps,
//! reports and file output.
//!
//! This is the only layer that runs work in parallel; everything below it is
//! a pure function of its inputs and a seed.

pub mod config;
pub mod emit;
pub mod laws;
pub mod presets;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{parse_kv, ExperimentConfig, KeyValues, MapSpec, ScalingKind, SweepSpec, TargetSpec};
pub use emit::{emit_report, emit_sweep, EmitFormat};
pub use laws::{LawBuilder, LawRegistry};
pub use presets::{LawShape, Prediction, Preset, PresetRegistry};
pub use report::{Check, ComparisonReport};
pub use run::{load_config, preset_config, run_experiment, run_preset};
pub use sweep::{run_sweep, SweepPoint, SweepReport};
