//! Command implementations for the `crashforest` binary.
//!
//! Each command is a plain function over parsed inputs so tests can call it
//! without spawning a process. Commands return the stdout payload; the
//! binary decides how to print it. All randomness flows from seeds in the
//! config, so every command is deterministic given (config bytes, input
//! bytes).
//!
//! Exit codes: 0 success, 2 usage/config, 3 I/O, 4 data precondition.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crashforest_core::cart;
use crashforest_core::config::RunConfig;
use crashforest_core::dataset::{self, EncodedDataset, SplitSpec};
use crashforest_core::eval::{self, ExperimentConfig};
use crashforest_core::ges::{self, CsvSchema, InjurySeverity};
use crashforest_core::mlp;
use crashforest_core::synth;

#[derive(Debug)]
pub enum CliError {
    /// Bad usage, config, or schema (exit 2).
    Usage(String),
    /// Filesystem failure (exit 3).
    Io(String),
    /// Input data violates a run precondition (exit 4).
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

/// Output format selector for `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Emit {
    #[default]
    Text,
    Records,
}

impl std::str::FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> Result<Emit, String> {
        match s {
            "text" => Ok(Emit::Text),
            "records" => Ok(Emit::Records),
            _ => Err(format!("unknown emit format `{s}` (expected text|records)")),
        }
    }
}

/// Loads the config file if given, otherwise the built-in defaults, then
/// applies the seed override.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut config = match path {
        None => RunConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    if let Some(seed) = seed {
        config.override_seed(seed);
    }
    Ok(config)
}

/// Path of the ground-truth sidecar `synth` writes next to the CSV.
pub fn truth_sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".truth");
    out.with_file_name(name)
}

/// Generates the planted-rule dataset: canonical CSV at `out` plus the
/// exact-Bayes ground-truth sidecar at `out.truth`.
pub fn cmd_synth(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (records, truth) =
        synth::generate(&config.generator).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut csv = Vec::new();
    ges::write_csv(&records, &mut csv)
        .map_err(|e| CliError::Io(format!("cannot encode CSV: {e}")))?;
    fs::write(out, &csv)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    let sidecar = truth_sidecar_path(out);
    fs::write(&sidecar, synth::ground_truth_to_text(&truth))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", sidecar.display())))?;
    Ok(())
}

/// Shared ingest path: CSV → cohort filter → model variables → encoded
/// dataset. Returns the dataset and the ingest report.
fn ingest(data: &Path) -> Result<(EncodedDataset, ges::IngestReport), CliError> {
    let text = fs::read_to_string(data)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", data.display())))?;
    let (records, report) = ges::parse_csv(text.as_bytes(), &CsvSchema::default())
        .map_err(|e| CliError::Usage(format!("{}: {e}", data.display())))?;
    if records.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no parseable rows ({} rejected)",
            data.display(),
            report.rows_rejected
        )));
    }
    let cohort = ges::filter_head_on_front(&records);
    let rows = ges::select_model_variables(&cohort);
    let ds = dataset::encode(&rows).map_err(|e| CliError::Data(e.to_string()))?;
    Ok((ds, report))
}

fn map_eval_error(e: eval::EvalError) -> CliError {
    match e {
        eval::EvalError::MissingClass(_) => CliError::Data(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

/// Runs the five-class experiment. Writes the report to `<out>.txt` and
/// `<out>.records`, and returns the `--emit`-selected format for stdout.
pub fn cmd_run(
    config: &RunConfig,
    data: &Path,
    out: &Path,
    emit: Emit,
) -> Result<String, CliError> {
    let (ds, _report) = ingest(data)?;
    let table = eval::run_all(&ds, &config.experiment).map_err(map_eval_error)?;
    let text = eval::render_text(&table);
    let records = eval::render_records(&table);
    for (suffix, payload) in [(".txt", &text), (".records", &records)] {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(suffix);
        let path = out.with_file_name(name);
        fs::write(&path, payload)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(match emit {
        Emit::Text => text,
        Emit::Records => records,
    })
}

fn parse_class(token: &str) -> Result<InjurySeverity, CliError> {
    InjurySeverity::parse_token(token).ok_or_else(|| {
        let valid: Vec<&str> = InjurySeverity::ALL.iter().map(|s| s.token()).collect();
        CliError::Usage(format!(
            "unknown class `{token}`; valid classes: {}",
            valid.join(", ")
        ))
    })
}

/// Ranks input variables for one class by permutation importance (tree
/// ranking), with the tree's split-credit and the network's permutation
/// score alongside.
pub fn cmd_importance(
    config: &RunConfig,
    data: &Path,
    class_token: &str,
) -> Result<String, CliError> {
    let class = parse_class(class_token)?;
    let (ds, _) = ingest(data)?;
    let report = eval::sensitivity(&ds, class, &config.experiment).map_err(map_eval_error)?;
    Ok(eval::render_sensitivity_text(&report))
}

/// Trains the one-vs-all models for `class` the same way the runner's first
/// repeat does: shared split, tree grown on 80% of train / pruned on 20%,
/// network on the full training partition.
fn train_for_dump(
    ds: &EncodedDataset,
    class: InjurySeverity,
    experiment: &ExperimentConfig,
) -> Result<(cart::Tree, mlp::MlpModel), CliError> {
    experiment.validate().map_err(map_eval_error)?;
    let (train, _) =
        dataset::split(ds, &experiment.split).map_err(|e| CliError::Data(e.to_string()))?;
    let train = dataset::one_vs_all(&train, class).map_err(|e| CliError::Data(e.to_string()))?;

    let prune_spec = SplitSpec {
        test_fraction: 0.2,
        seed: experiment.split.seed,
        stratified: true,
    };
    let (grow_part, prune_part) =
        dataset::split(&train, &prune_spec).map_err(|e| CliError::Data(e.to_string()))?;
    let grown = cart::grow(
        &cart::TreeData::from_dataset(&grow_part),
        &experiment.tree_params,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    let (tree, _) = cart::prune(
        &grown,
        &cart::TreeData::from_dataset(&prune_part),
        experiment.tree_params.prune_measure,
    );

    let hidden = experiment.hidden_neurons[&class];
    let y: Vec<f64> = train.targets.iter().map(|&t| t as f64).collect();
    let trained = mlp::train_full(train.features.view(), &y, hidden, &experiment.schedule)
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok((tree, trained.model))
}

/// Serializes the pruned decision tree for one class.
pub fn cmd_tree_dump(
    config: &RunConfig,
    data: &Path,
    class_token: &str,
) -> Result<String, CliError> {
    let class = parse_class(class_token)?;
    let (ds, _) = ingest(data)?;
    let (tree, _) = train_for_dump(&ds, class, &config.experiment)?;
    Ok(cart::tree_to_text(&tree))
}

/// Serializes the trained network for one class.
pub fn cmd_model_dump(
    config: &RunConfig,
    data: &Path,
    class_token: &str,
) -> Result<String, CliError> {
    let class = parse_class(class_token)?;
    let (ds, _) = ingest(data)?;
    let (_, model) = train_for_dump(&ds, class, &config.experiment)?;
    Ok(mlp::model_to_text(&model))
}
