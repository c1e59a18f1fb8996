//! Metrics, the five-class one-against-all experiment driver, and variable
//! sensitivity ranking.
//!
//! The driver runs one binary experiment per severity class. All five
//! experiments share the same split seeds, so each repeat scores every class
//! on the *same* test rows — pairing that removes split noise from
//! cross-class comparisons (noted in the report provenance).
//!
//! Emitted reports are pure functions of (dataset, config): wall-clock
//! timings are collected for logging but never rendered, and every report
//! carries a provenance block (config hash, split seeds, dataset
//! fingerprint) so any change to the inputs is detectable.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::cart::{self, Priors, PruneMeasure, Tree, TreeData, TreeParams};
use crate::dataset::{one_vs_all, split, EncodedDataset, SplitSpec, VariableKind};
use crate::ges::InjurySeverity;
use crate::mlp::{self, MlpModel, TrainSchedule};
use crate::seeds;

// rng sub-stream tags
const TAG_SPLIT: u64 = 0x7370_6c69;
const TAG_PRUNE: u64 = 0x7072_756e;
const TAG_NN: u64 = 0x6e6e_6574;
const TAG_PERM: u64 = 0x7065_726d;

/// Fraction of each training partition held out for reduced-error pruning.
const PRUNE_FRACTION: f64 = 0.2;

/// Permutations per variable when scoring permutation importance.
const N_PERMUTATIONS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("prediction and label vectors are empty")]
    Empty,
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("confusion counts need binary vectors; found value {0}")]
    NonBinary(usize),
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error("dataset has no `{0}` rows; all five classes are required")]
    MissingClass(String),
    #[error("class {class}, repeat {repeat}: {message}")]
    Repeat {
        class: &'static str,
        repeat: usize,
        message: String,
    },
}

/// Percent of positions where the vectors agree.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let matches = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(100.0 * matches as f64 / predictions.len() as f64)
}

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_positive: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_negative + self.false_positive + self.false_negative + self.true_positive
    }

    pub fn accuracy_pct(&self) -> f64 {
        100.0 * (self.true_negative + self.true_positive) as f64 / self.total() as f64
    }
}

pub fn confusion(predictions: &[usize], labels: &[usize]) -> Result<Confusion, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = Confusion {
        true_negative: 0,
        false_positive: 0,
        false_negative: 0,
        true_positive: 0,
    };
    for (&p, &l) in predictions.iter().zip(labels) {
        if p > 1 {
            return Err(EvalError::NonBinary(p));
        }
        if l > 1 {
            return Err(EvalError::NonBinary(l));
        }
        match (p, l) {
            (0, 0) => c.true_negative += 1,
            (1, 0) => c.false_positive += 1,
            (0, 1) => c.false_negative += 1,
            (1, 1) => c.true_positive += 1,
            _ => unreachable!(),
        }
    }
    Ok(c)
}

/// Settings for the five-class experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Hidden-layer width per positive class.
    pub hidden_neurons: BTreeMap<InjurySeverity, usize>,
    pub tree_params: TreeParams,
    pub schedule: TrainSchedule,
    pub split: SplitSpec,
    /// Seeded repetitions; reported accuracies are mean ± sd over these.
    pub repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            hidden_neurons: BTreeMap::from([
                (InjurySeverity::NoInjury, 65),
                (InjurySeverity::PossibleInjury, 65),
                (InjurySeverity::NonIncapacitating, 75),
                (InjurySeverity::Incapacitating, 65),
                (InjurySeverity::Fatal, 42),
            ]),
            tree_params: TreeParams::default(),
            schedule: TrainSchedule::default(),
            split: SplitSpec::default(),
            repeats: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.repeats < 1 {
            return Err(EvalError::BadConfig("repeats must be at least 1".into()));
        }
        for severity in InjurySeverity::ALL {
            match self.hidden_neurons.get(&severity) {
                None => {
                    return Err(EvalError::BadConfig(format!(
                        "hidden_neurons does not cover class `{severity}`"
                    )))
                }
                Some(0) => {
                    return Err(EvalError::BadConfig(format!(
                        "hidden_neurons for `{severity}` must be at least 1"
                    )))
                }
                Some(_) => {}
            }
        }
        self.tree_params
            .validate(2)
            .map_err(|e| EvalError::BadConfig(e.to_string()))?;
        self.schedule
            .validate()
            .map_err(|e| EvalError::BadConfig(e.to_string()))?;
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(EvalError::BadConfig(format!(
                "split test fraction must be inside (0, 1), got {}",
                self.split.test_fraction
            )));
        }
        Ok(())
    }

    /// Stable text form of every setting; its hash is the report's
    /// `config_hash`.
    pub fn canonical_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("experiment v1\n");
        let _ = writeln!(s, "split.test_fraction = {}", self.split.test_fraction);
        let _ = writeln!(s, "split.seed = {}", self.split.seed);
        let _ = writeln!(s, "split.stratified = {}", self.split.stratified);
        let _ = writeln!(s, "tree.min_node_n = {}", self.tree_params.min_node_n);
        let _ = writeln!(
            s,
            "tree.min_node_fraction = {}",
            self.tree_params.min_node_fraction
        );
        let _ = writeln!(s, "tree.max_nodes = {}", self.tree_params.max_nodes);
        let _ = writeln!(s, "tree.max_depth = {}", self.tree_params.max_depth);
        let _ = writeln!(s, "tree.n_surrogates = {}", self.tree_params.n_surrogates);
        let priors = match &self.tree_params.priors {
            Priors::Equal => "equal".to_string(),
            Priors::Custom(p) => {
                let cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                format!("custom:{}", cells.join(","))
            }
        };
        let _ = writeln!(s, "tree.priors = {priors}");
        let PruneMeasure::MisclassificationError = self.tree_params.prune_measure;
        let _ = writeln!(s, "tree.prune_measure = misclassification");
        let _ = writeln!(s, "schedule.bp_epochs = {}", self.schedule.bp_epochs);
        let _ = writeln!(
            s,
            "schedule.bp_learning_rate = {}",
            self.schedule.bp_learning_rate
        );
        let _ = writeln!(s, "schedule.cg_epochs = {}", self.schedule.cg_epochs);
        let _ = writeln!(s, "schedule.seed = {}", self.schedule.seed);
        let _ = writeln!(s, "experiment.repeats = {}", self.repeats);
        for severity in InjurySeverity::ALL {
            let _ = writeln!(
                s,
                "experiment.hidden.{} = {}",
                severity.token(),
                self.hidden_neurons.get(&severity).copied().unwrap_or(0)
            );
        }
        s
    }
}

/// Wall-clock seconds spent in each phase (collected for logs; never part of
/// emitted reports, which must be byte-identical across runs).
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub tree_seconds: f64,
    pub nn_seconds: f64,
}

/// Outcome of one class's one-against-all experiment.
#[derive(Debug, Clone)]
pub struct ClassReport {
    pub class: InjurySeverity,
    pub hidden_neurons: usize,
    pub nn_accuracy_mean: f64,
    pub nn_accuracy_sd: f64,
    pub dt_accuracy_mean: f64,
    pub dt_accuracy_sd: f64,
    /// Per-repeat confusions on the shared test rows.
    pub nn_confusions: Vec<Confusion>,
    pub dt_confusions: Vec<Confusion>,
    pub timings: PhaseTimings,
}

/// Report provenance: enough to detect any change to config or data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub dataset_fingerprint: String,
    pub split_seeds: Vec<u64>,
}

/// The five class reports in severity order plus provenance.
#[derive(Debug, Clone)]
pub struct ResultsTable {
    pub reports: Vec<ClassReport>,
    pub provenance: Provenance,
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config.canonical_text().as_bytes());
    hex_digest(hasher)
}

/// Content hash over the raw rows, targets, and schema — the dataset's
/// identity as the models see it.
pub fn dataset_fingerprint(ds: &EncodedDataset) -> String {
    use crate::dataset::RawValue;
    let mut hasher = Sha256::new();
    hasher.update(b"dataset v1\n");
    hasher.update((ds.n_rows() as u64).to_le_bytes());
    hasher.update((ds.n_classes as u64).to_le_bytes());
    for name in &ds.class_names {
        hasher.update(name.as_bytes());
        hasher.update(b"\n");
    }
    for v in &ds.variables {
        hasher.update(v.name.as_bytes());
        match &v.kind {
            VariableKind::Numeric => hasher.update(b"|num\n"),
            VariableKind::Categorical(cats) => {
                hasher.update(b"|cat");
                for c in cats {
                    hasher.update(b"|");
                    hasher.update(c.as_bytes());
                }
                hasher.update(b"\n");
            }
        }
    }
    for (row, &target) in ds.raw.iter().zip(&ds.targets) {
        for value in row {
            match value {
                RawValue::Num(x) => {
                    hasher.update(b"N");
                    hasher.update(x.to_le_bytes());
                }
                RawValue::Cat(c) => {
                    hasher.update(b"C");
                    hasher.update(c.to_le_bytes());
                }
                RawValue::Missing => hasher.update(b"M"),
            }
        }
        hasher.update((target as u64).to_le_bytes());
    }
    hex_digest(hasher)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Everything trained and scored in one repeat for one class, kept so
/// sensitivity scoring can reuse the models instead of retraining.
struct RepeatArtifacts {
    tree: Tree,
    model: MlpModel,
    test: EncodedDataset,
    dt_predictions: Vec<usize>,
    nn_predictions: Vec<usize>,
    timings: PhaseTimings,
}

fn nn_predict_rows(model: &MlpModel, features: &Array2<f64>) -> Result<Vec<usize>, EvalError> {
    features
        .outer_iter()
        .map(|row| {
            mlp::predict_binary(model, row.as_slice().expect("row-major"), 0.5)
                .map_err(|e| EvalError::BadConfig(e.to_string()))
        })
        .collect()
}

fn run_repeat(
    ds: &EncodedDataset,
    positive: InjurySeverity,
    config: &ExperimentConfig,
    repeat: usize,
) -> Result<RepeatArtifacts, EvalError> {
    let wrap = |message: String| EvalError::Repeat {
        class: positive.token(),
        repeat,
        message,
    };

    // shared split: same seed for every class, so the five experiments of a
    // repeat score the same test rows
    let split_spec = SplitSpec {
        seed: seeds::derive2(config.split.seed, TAG_SPLIT, repeat as u64),
        ..config.split.clone()
    };
    let (train, test) = split(ds, &split_spec).map_err(|e| wrap(e.to_string()))?;
    let train = one_vs_all(&train, positive).map_err(|e| wrap(e.to_string()))?;
    let test = one_vs_all(&test, positive).map_err(|e| wrap(e.to_string()))?;

    // decision tree: grow on 80% of the training rows, prune on the rest
    let tree_start = Instant::now();
    let prune_spec = SplitSpec {
        test_fraction: PRUNE_FRACTION,
        seed: seeds::derive2(config.split.seed, TAG_PRUNE, repeat as u64),
        stratified: true,
    };
    let (grow_part, prune_part) = split(&train, &prune_spec).map_err(|e| wrap(e.to_string()))?;
    let grown = cart::grow(&TreeData::from_dataset(&grow_part), &config.tree_params)
        .map_err(|e| wrap(e.to_string()))?;
    let (tree, _) = cart::prune(
        &grown,
        &TreeData::from_dataset(&prune_part),
        config.tree_params.prune_measure,
    );
    let dt_predictions = cart::predict_batch(&tree, &test.raw);
    let tree_seconds = tree_start.elapsed().as_secs_f64();

    // network: full training partition, class-specific width
    let nn_start = Instant::now();
    let hidden = *config
        .hidden_neurons
        .get(&positive)
        .expect("validated: covers all classes");
    let y: Vec<f64> = train.targets.iter().map(|&t| t as f64).collect();
    let schedule = TrainSchedule {
        seed: seeds::derive(
            seeds::derive2(config.schedule.seed, TAG_NN, repeat as u64),
            positive.rank() as u64,
        ),
        ..config.schedule.clone()
    };
    let trained = mlp::train_full(train.features.view(), &y, hidden, &schedule)
        .map_err(|e| wrap(e.to_string()))?;
    let nn_predictions = nn_predict_rows(&trained.model, &test.features)?;
    let nn_seconds = nn_start.elapsed().as_secs_f64();

    Ok(RepeatArtifacts {
        tree,
        model: trained.model,
        test,
        dt_predictions,
        nn_predictions,
        timings: PhaseTimings {
            tree_seconds,
            nn_seconds,
        },
    })
}

/// One class's experiment: per repeat, split, binarize, train both models,
/// and score them on the shared test rows.
pub fn run_one_vs_all(
    ds: &EncodedDataset,
    positive: InjurySeverity,
    config: &ExperimentConfig,
) -> Result<ClassReport, EvalError> {
    config.validate()?;
    let mut nn_accs = Vec::with_capacity(config.repeats);
    let mut dt_accs = Vec::with_capacity(config.repeats);
    let mut nn_confusions = Vec::with_capacity(config.repeats);
    let mut dt_confusions = Vec::with_capacity(config.repeats);
    let mut timings = PhaseTimings::default();

    for repeat in 0..config.repeats {
        let artifacts = run_repeat(ds, positive, config, repeat)?;
        let labels = &artifacts.test.targets;
        nn_accs.push(accuracy(&artifacts.nn_predictions, labels)?);
        dt_accs.push(accuracy(&artifacts.dt_predictions, labels)?);
        nn_confusions.push(confusion(&artifacts.nn_predictions, labels)?);
        dt_confusions.push(confusion(&artifacts.dt_predictions, labels)?);
        timings.tree_seconds += artifacts.timings.tree_seconds;
        timings.nn_seconds += artifacts.timings.nn_seconds;
    }

    let (nn_mean, nn_sd) = mean_sd(&nn_accs);
    let (dt_mean, dt_sd) = mean_sd(&dt_accs);
    Ok(ClassReport {
        class: positive,
        hidden_neurons: config.hidden_neurons[&positive],
        nn_accuracy_mean: nn_mean,
        nn_accuracy_sd: nn_sd,
        dt_accuracy_mean: dt_mean,
        dt_accuracy_sd: dt_sd,
        nn_confusions,
        dt_confusions,
        timings,
    })
}

/// All five one-against-all experiments with shared split seeds, in severity
/// order.
pub fn run_all(ds: &EncodedDataset, config: &ExperimentConfig) -> Result<ResultsTable, EvalError> {
    config.validate()?;
    let counts = ds.class_counts();
    for severity in InjurySeverity::ALL {
        if counts.get(severity.rank()).copied().unwrap_or(0) == 0 {
            return Err(EvalError::MissingClass(severity.token().to_string()));
        }
    }
    let reports = InjurySeverity::ALL
        .into_iter()
        .map(|severity| run_one_vs_all(ds, severity, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResultsTable {
        reports,
        provenance: Provenance {
            config_hash: config_hash(config),
            dataset_fingerprint: dataset_fingerprint(ds),
            split_seeds: (0..config.repeats)
                .map(|r| seeds::derive2(config.split.seed, TAG_SPLIT, r as u64))
                .collect(),
        },
    })
}

/// Scores for one input variable.
#[derive(Debug, Clone)]
pub struct VariableSensitivity {
    pub variable: String,
    /// Split-based importance from the tree (impurity decrease credit,
    /// normalized so the top variable scores 100), averaged over repeats.
    pub tree_delta_i: f64,
    /// Mean test-accuracy drop (percentage points) over seeded within-column
    /// permutations, on the tree.
    pub tree_permutation: f64,
    /// The same permutation score on the network.
    pub nn_permutation: f64,
}

/// Variables ranked by tree permutation importance (descending).
#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub class: InjurySeverity,
    pub variables: Vec<VariableSensitivity>,
}

/// Ranks every input variable for the given class by how much shuffling it
/// hurts held-out accuracy; the tree's impurity-decrease importance is
/// reported alongside for comparison.
pub fn sensitivity(
    ds: &EncodedDataset,
    positive: InjurySeverity,
    config: &ExperimentConfig,
) -> Result<SensitivityReport, EvalError> {
    config.validate()?;
    let n_vars = ds.variables.len();
    let mut tree_delta = vec![0.0; n_vars];
    let mut tree_drop = vec![0.0; n_vars];
    let mut nn_drop = vec![0.0; n_vars];

    for repeat in 0..config.repeats {
        let artifacts = run_repeat(ds, positive, config, repeat)?;
        let labels = &artifacts.test.targets;
        let n_test = artifacts.test.n_rows();
        let dt_baseline = accuracy(&artifacts.dt_predictions, labels)?;
        let nn_baseline = accuracy(&artifacts.nn_predictions, labels)?;
        let delta = cart::importance(&artifacts.tree);

        for (v, d) in delta.iter().enumerate() {
            tree_delta[v] += d / config.repeats as f64;
        }

        let perm_base = seeds::derive2(config.split.seed, TAG_PERM, repeat as u64);
        for v in 0..n_vars {
            let (col_start, col_end) = artifacts.test.feature_groups[v];
            for k in 0..N_PERMUTATIONS {
                let mut order: Vec<usize> = (0..n_test).collect();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeds::derive2(perm_base, v as u64, k as u64));
                order.shuffle(&mut rng);

                // tree view: permute the raw column
                let mut raw = artifacts.test.raw.clone();
                for (i, &src) in order.iter().enumerate() {
                    raw[i][v] = artifacts.test.raw[src][v];
                }
                let dt_preds = cart::predict_batch(&artifacts.tree, &raw);
                tree_drop[v] += dt_baseline - accuracy(&dt_preds, labels)?;

                // network view: permute the variable's feature columns as a
                // block (keeps one-hot groups coherent)
                let mut features = artifacts.test.features.clone();
                for (i, &src) in order.iter().enumerate() {
                    for c in col_start..col_end {
                        features[[i, c]] = artifacts.test.features[[src, c]];
                    }
                }
                let nn_preds = nn_predict_rows(&artifacts.model, &features)?;
                nn_drop[v] += nn_baseline - accuracy(&nn_preds, labels)?;
            }
        }
    }

    let scale = (config.repeats * N_PERMUTATIONS) as f64;
    let mut variables: Vec<VariableSensitivity> = (0..n_vars)
        .map(|v| VariableSensitivity {
            variable: ds.variables[v].name.clone(),
            tree_delta_i: tree_delta[v],
            tree_permutation: tree_drop[v] / scale,
            nn_permutation: nn_drop[v] / scale,
        })
        .collect();
    variables.sort_by(|a, b| b.tree_permutation.total_cmp(&a.tree_permutation));
    Ok(SensitivityReport {
        class: positive,
        variables,
    })
}

// ---------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------

/// Published reference accuracies shown under the reproduced table —
/// rendered verbatim and labeled as externally reported, never recomputed.
const REFERENCE_RESULTS: [(&str, &str, &str, &str); 5] = [
    ("No Injury", "65", "60.45", "67.54"),
    ("Possible Injury", "65", "57.58", "64.40"),
    ("Non-incapacitating Injury", "75", "56.8", "60.37"),
    ("Incapacitating Injury", "65", "61.32", "71.38"),
    ("Fatal Injury", "42", "75.51", "89.46"),
];

/// Human-readable table: one row per class with hidden-layer width and both
/// models' accuracy, the reference block, and provenance.
pub fn render_text(table: &ResultsTable) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "One-against-all test results");
    let _ = writeln!(s, "============================");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<28}{:<20}{:<22}{:<22}",
        "", "Neural Network", "Neural Network", "Decision Tree"
    );
    let _ = writeln!(
        s,
        "{:<28}{:<20}{:<22}{:<22}",
        "Class", "# Hidden Neurons", "Accuracy (%)", "Accuracy (%)"
    );
    for r in &table.reports {
        let nn = format!("{:.2} +/- {:.2}", r.nn_accuracy_mean, r.nn_accuracy_sd);
        let dt = format!("{:.2} +/- {:.2}", r.dt_accuracy_mean, r.dt_accuracy_sd);
        let _ = writeln!(
            s,
            "{:<28}{:<20}{:<22}{:<22}",
            r.class.display_name(),
            r.hidden_neurons,
            nn,
            dt
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Reference values (paper-reported, not reproduced):");
    let _ = writeln!(
        s,
        "  {:<28}{:<20}{:<22}{:<22}",
        "Class", "# Hidden Neurons", "ANN Accuracy (%)", "DT Accuracy (%)"
    );
    for (class, hidden, ann, dt) in REFERENCE_RESULTS {
        let _ = writeln!(s, "  {class:<28}{hidden:<20}{ann:<22}{dt:<22}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Provenance");
    let _ = writeln!(s, "  config_hash = {}", table.provenance.config_hash);
    let _ = writeln!(
        s,
        "  dataset_fingerprint = {}",
        table.provenance.dataset_fingerprint
    );
    let seed_list: Vec<String> = table
        .provenance
        .split_seeds
        .iter()
        .map(|v| v.to_string())
        .collect();
    let _ = writeln!(s, "  split_seeds = {}", seed_list.join(","));
    let _ = writeln!(
        s,
        "  note = split seeds are shared across classes; accuracies are paired"
    );
    s
}

/// Machine-readable line-delimited `key=value` records.
pub fn render_records(table: &ResultsTable) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "format=results-v1");
    let _ = writeln!(s, "config_hash={}", table.provenance.config_hash);
    let _ = writeln!(
        s,
        "dataset_fingerprint={}",
        table.provenance.dataset_fingerprint
    );
    let seed_list: Vec<String> = table
        .provenance
        .split_seeds
        .iter()
        .map(|v| v.to_string())
        .collect();
    let _ = writeln!(s, "split_seeds={}", seed_list.join(","));
    for r in &table.reports {
        let _ = writeln!(
            s,
            "class={} hidden={} nn_mean={} nn_sd={} dt_mean={} dt_sd={}",
            r.class.token(),
            r.hidden_neurons,
            r.nn_accuracy_mean,
            r.nn_accuracy_sd,
            r.dt_accuracy_mean,
            r.dt_accuracy_sd
        );
        for (repeat, (nn, dt)) in r.nn_confusions.iter().zip(&r.dt_confusions).enumerate() {
            for (model, c) in [("nn", nn), ("dt", dt)] {
                let _ = writeln!(
                    s,
                    "class={} repeat={repeat} model={model} tn={} fp={} fn={} tp={}",
                    r.class.token(),
                    c.true_negative,
                    c.false_positive,
                    c.false_negative,
                    c.true_positive
                );
            }
        }
    }
    s
}

/// Ranked sensitivity listing for one class.
pub fn render_sensitivity_text(report: &SensitivityReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Variable sensitivity for class `{}`",
        report.class.token()
    );
    let _ = writeln!(
        s,
        "{:<20}{:<28}{:<26}{:<26}",
        "Variable", "Tree permutation (pp)", "NN permutation (pp)", "Tree split credit"
    );
    for v in &report.variables {
        let _ = writeln!(
            s,
            "{:<20}{:<28.4}{:<26.4}{:<26.4}",
            v.variable, v.tree_permutation, v.nn_permutation, v.tree_delta_i
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ges::{Gender, ModelRow, YesNo};
    use crate::synth::{self, GeneratorSpec};

    fn quick_config() -> ExperimentConfig {
        ExperimentConfig {
            hidden_neurons: InjurySeverity::ALL.iter().map(|&s| (s, 4)).collect(),
            schedule: TrainSchedule {
                bp_epochs: 15,
                bp_learning_rate: 0.01,
                cg_epochs: 15,
                seed: 42,
            },
            ..ExperimentConfig::default()
        }
    }

    /// Model rows where severity is exactly determined by restraint use.
    fn planted_rows(n: usize) -> Vec<ModelRow> {
        (0..n)
            .map(|i| {
                let restraint = if i % 2 == 0 { YesNo::No } else { YesNo::Yes };
                let severity = match restraint {
                    YesNo::No => InjurySeverity::Fatal,
                    YesNo::Yes => InjurySeverity::NoInjury,
                };
                ModelRow {
                    driver_age: Some(20 + (i as u32 * 7) % 50),
                    gender: Some(if i % 3 == 0 { Gender::Male } else { Gender::Female }),
                    alcohol_use: Some(if i % 5 == 0 { YesNo::Yes } else { YesNo::No }),
                    restraint_used: Some(restraint),
                    ejected: Some(YesNo::No),
                    vehicle_body_type: Some(["sedan", "pickup", "suv"][i % 3].to_string()),
                    vehicle_role: Some("striking".to_string()),
                    vehicle_age: Some((i as u32 * 3) % 20),
                    rollover: Some(if i % 7 == 0 { YesNo::Yes } else { YesNo::No }),
                    road_surface: Some(["dry", "wet"][i % 2].to_string()),
                    light_condition: Some(["daylight", "dark"][(i / 2) % 2].to_string()),
                    severity,
                }
            })
            .collect()
    }

    /// Rows whose labels are drawn independently of every feature. An RNG
    /// stream (rather than an arithmetic stride) keeps the labels free of
    /// partial-cycle correlations with the periodic feature patterns.
    fn noise_rows(n: usize) -> Vec<ModelRow> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6e6f_6973);
        let mut rows = planted_rows(n);
        for r in rows.iter_mut() {
            r.severity = if rng.random_bool(0.5) {
                InjurySeverity::Fatal
            } else {
                InjurySeverity::NoInjury
            };
        }
        rows
    }

    #[test]
    fn accuracy_on_identical_and_complementary_vectors() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 0, 1], &[0, 1, 0]).unwrap(), 0.0);
        let preds = [1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
        let labels = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        assert_eq!(accuracy(&preds, &labels).unwrap(), 70.0);
    }

    #[test]
    fn accuracy_rejects_empty_and_mismatched() {
        assert!(matches!(accuracy(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(
            accuracy(&[1], &[1, 0]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn confusion_counts_partition_and_match_accuracy() {
        let c = confusion(&[0, 0, 0, 0], &[0, 0, 0, 0]).unwrap();
        assert_eq!(c.true_negative, 4);
        assert_eq!(c.total(), 4);
        assert_eq!(c.accuracy_pct(), 100.0);

        let c = confusion(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(c.false_positive, 0);
        assert_eq!(c.false_negative, 0);

        // pseudo-random vectors: entries partition N and agree with accuracy
        let preds: Vec<usize> = (0..100).map(|i| (i * 7 + 1) % 3 % 2).collect();
        let labels: Vec<usize> = (0..100).map(|i| (i * 13 + 5) % 5 % 2).collect();
        let c = confusion(&preds, &labels).unwrap();
        assert_eq!(c.total(), 100);
        assert_eq!(c.accuracy_pct(), accuracy(&preds, &labels).unwrap());
    }

    #[test]
    fn confusion_rejects_nonbinary() {
        assert!(matches!(
            confusion(&[2, 0], &[0, 0]),
            Err(EvalError::NonBinary(2))
        ));
    }

    #[test]
    fn config_validation_catches_gaps() {
        let mut config = quick_config();
        config.repeats = 0;
        assert!(matches!(config.validate(), Err(EvalError::BadConfig(_))));

        let mut config = quick_config();
        config.hidden_neurons.remove(&InjurySeverity::Fatal);
        assert!(matches!(config.validate(), Err(EvalError::BadConfig(_))));

        let mut config = quick_config();
        config.hidden_neurons.insert(InjurySeverity::Fatal, 0);
        assert!(matches!(config.validate(), Err(EvalError::BadConfig(_))));

        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn perfectly_determined_class_scores_100_with_zero_sd() {
        let ds = crate::dataset::encode(&planted_rows(60)).unwrap();
        let mut config = quick_config();
        config.repeats = 3;
        let report = run_one_vs_all(&ds, InjurySeverity::Fatal, &config).unwrap();
        assert_eq!(report.dt_accuracy_mean, 100.0);
        assert_eq!(report.dt_accuracy_sd, 0.0);
        assert_eq!(report.dt_confusions.len(), 3);
        for c in &report.dt_confusions {
            assert_eq!(c.false_positive + c.false_negative, 0);
        }
    }

    #[test]
    fn label_noise_scores_near_chance() {
        let ds = crate::dataset::encode(&noise_rows(600)).unwrap();
        let mut config = quick_config();
        config.repeats = 2;
        let report = run_one_vs_all(&ds, InjurySeverity::Fatal, &config).unwrap();
        assert!(
            (40.0..=60.0).contains(&report.dt_accuracy_mean),
            "dt {}",
            report.dt_accuracy_mean
        );
        assert!(
            (40.0..=60.0).contains(&report.nn_accuracy_mean),
            "nn {}",
            report.nn_accuracy_mean
        );
    }

    #[test]
    fn single_repeat_reports_zero_sd() {
        let ds = crate::dataset::encode(&planted_rows(40)).unwrap();
        let report = run_one_vs_all(&ds, InjurySeverity::Fatal, &quick_config()).unwrap();
        assert_eq!(report.nn_accuracy_sd, 0.0);
        assert_eq!(report.dt_accuracy_sd, 0.0);
    }

    fn small_synth_dataset(n: usize) -> EncodedDataset {
        let spec = GeneratorSpec {
            n_rows: n,
            ..GeneratorSpec::default()
        };
        let (records, _) = synth::generate(&spec).unwrap();
        let cohort = crate::ges::filter_head_on_front(&records);
        let rows = crate::ges::select_model_variables(&cohort);
        crate::dataset::encode(&rows).unwrap()
    }

    #[test]
    fn run_all_produces_five_paired_reports() {
        let ds = small_synth_dataset(1500);
        let config = quick_config();
        let table = run_all(&ds, &config).unwrap();
        assert_eq!(table.reports.len(), 5);
        for (report, severity) in table.reports.iter().zip(InjurySeverity::ALL) {
            assert_eq!(report.class, severity);
            assert!((0.0..=100.0).contains(&report.nn_accuracy_mean));
            assert!((0.0..=100.0).contains(&report.dt_accuracy_mean));
        }
        // shared split seed → identical test rows: every class confusion has
        // the same total, and per-class positives partition the test rows
        let test_size = table.reports[0].dt_confusions[0].total();
        let mut positives = 0;
        for report in &table.reports {
            let c = report.dt_confusions[0];
            assert_eq!(c.total(), test_size);
            positives += c.true_positive + c.false_negative;
        }
        assert_eq!(positives, test_size);
    }

    #[test]
    fn run_all_requires_all_classes() {
        let ds = crate::dataset::encode(&planted_rows(30)).unwrap();
        let err = run_all(&ds, &quick_config()).unwrap_err();
        assert!(matches!(err, EvalError::MissingClass(c) if c == "possible"));
    }

    #[test]
    fn reports_and_renders_are_deterministic() {
        let ds = small_synth_dataset(900);
        let config = quick_config();
        let a = run_all(&ds, &config).unwrap();
        let b = run_all(&ds, &config).unwrap();
        assert_eq!(render_text(&a), render_text(&b));
        assert_eq!(render_records(&a), render_records(&b));
        assert_eq!(a.provenance, b.provenance);
    }

    #[test]
    fn provenance_tracks_config_and_data_changes() {
        let ds = small_synth_dataset(900);
        let config = quick_config();
        let base = run_all(&ds, &config).unwrap();

        let mut more_repeats = config.clone();
        more_repeats.repeats = 2;
        assert_ne!(config_hash(&config), config_hash(&more_repeats));

        let other_ds = small_synth_dataset(901);
        assert_ne!(
            base.provenance.dataset_fingerprint,
            dataset_fingerprint(&other_ds)
        );
    }

    #[test]
    fn text_report_has_table_columns_and_reference_block() {
        let ds = small_synth_dataset(900);
        let text = render_text(&run_all(&ds, &quick_config()).unwrap());
        assert!(text.contains("# Hidden Neurons"));
        assert_eq!(text.matches("Accuracy (%)").count(), 4, "two models in each block");
        assert!(text.contains("paper-reported, not reproduced"));
        for value in [
            "67.54", "64.40", "60.37", "71.38", "89.46", "60.45", "57.58", "56.8", "61.32",
            "75.51",
        ] {
            assert!(text.contains(value), "missing reference value {value}");
        }
        for severity in InjurySeverity::ALL {
            assert!(text.contains(severity.display_name()));
        }
    }

    #[test]
    fn record_output_is_parseable_key_value() {
        let ds = small_synth_dataset(900);
        let records = render_records(&run_all(&ds, &quick_config()).unwrap());
        for line in records.lines() {
            for pair in line.split_whitespace() {
                let (k, v) = pair.split_once('=').expect("key=value");
                assert!(!k.is_empty() && !v.is_empty(), "bad pair {pair}");
            }
        }
        assert!(records.contains("class=fatal"));
        assert!(records.contains("model=dt"));
    }

    #[test]
    fn sensitivity_ranks_the_planted_variable_first() {
        let ds = crate::dataset::encode(&planted_rows(80)).unwrap();
        let report = sensitivity(&ds, InjurySeverity::Fatal, &quick_config()).unwrap();
        assert_eq!(report.variables[0].variable, "restraint_used");
        assert!(report.variables[0].tree_permutation > 0.0);
        // both scores agree on the winner
        let best_nn = report
            .variables
            .iter()
            .max_by(|a, b| a.nn_permutation.total_cmp(&b.nn_permutation))
            .unwrap();
        assert_eq!(best_nn.variable, "restraint_used");
        // vehicle_role is constant in this fixture: permuting it is a no-op
        let constant = report
            .variables
            .iter()
            .find(|v| v.variable == "vehicle_role")
            .unwrap();
        assert_eq!(constant.tree_permutation, 0.0);
        assert_eq!(constant.nn_permutation, 0.0);
    }

    #[test]
    fn sensitivity_on_label_noise_is_near_zero() {
        let ds = crate::dataset::encode(&noise_rows(1200)).unwrap();
        let report = sensitivity(&ds, InjurySeverity::Fatal, &quick_config()).unwrap();
        for v in &report.variables {
            // The pruned tree barely reads anything, so its scores sit next
            // to zero. The network may lean hard on a column it overfit, and
            // a permutation diff on ~360 test rows then has a sd of several
            // points even though its mean is zero — hence the wider band.
            // Planted signal scores tens of points (see the ranking test),
            // so both bands still separate noise from signal.
            assert!(
                v.tree_permutation.abs() <= 3.0,
                "tree read noise: {} scored {}",
                v.variable,
                v.tree_permutation
            );
            assert!(
                v.nn_permutation.abs() <= 8.0,
                "nn noise score out of band: {} scored {}",
                v.variable,
                v.nn_permutation
            );
        }
    }

    #[test]
    fn sensitivity_render_lists_every_variable() {
        let ds = crate::dataset::encode(&planted_rows(60)).unwrap();
        let report = sensitivity(&ds, InjurySeverity::Fatal, &quick_config()).unwrap();
        let text = render_sensitivity_text(&report);
        for v in &ds.variables {
            assert!(text.contains(&v.name));
        }
    }
}
