//! Injury-severity classification for vehicle crash records.
//!
//! The crate covers the full experiment pipeline for one-against-all severity
//! modeling on GES-style person-level crash data:
//!
//! * [`ges`] — the record schema, CSV ingest/write, cohort filtering, and
//!   model-variable selection,
//! * [`dataset`] — one-hot/z-score encoding, seeded stratified splits, and
//!   one-vs-all target binarization,
//! * [`cart`] — classification trees with prior-weighted Gini splits,
//!   surrogate splits for missing values, and reduced-error pruning,
//! * [`mlp`] — a single-hidden-layer sigmoid network trained by batch
//!   backpropagation followed by nonlinear conjugate gradient,
//! * [`eval`] — per-class experiment runner, accuracy/confusion metrics, and
//!   report rendering,
//! * [`synth`] — a deterministic synthetic-data generator with planted rules
//!   whose ground truth (exact Bayes accuracy per class) calibrates what a
//!   trained model can legitimately achieve,
//! * [`config`] — the line-oriented `section.key = value` run configuration.
//!
//! Everything downstream of a seed is deterministic: identical inputs and
//! configuration produce byte-identical reports.

pub mod cart;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod ges;
pub mod mlp;
pub mod seeds;
pub mod synth;

pub use cart::{Tree, TreeParams};
pub use config::RunConfig;
pub use dataset::{EncodedDataset, RawValue, SplitSpec, VariableInfo, VariableKind};
pub use eval::{ClassReport, ExperimentConfig, ResultsTable};
pub use ges::{AccidentRecord, CsvSchema, IngestReport, InjurySeverity, InputField, ModelRow};
pub use mlp::{MlpModel, TrainSchedule};
pub use synth::{GeneratorSpec, GroundTruth};
