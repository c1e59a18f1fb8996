//! Encoding, splitting, and target binarization.
//!
//! [`encode`] turns model rows into two parallel views of the same data: a
//! dense numeric matrix for the network (one-hot categories, z-scored
//! numerics, unknowns zeroed and tracked in a mask) and the untouched raw
//! column values for the tree, which splits on raw fields and handles
//! unknowns through surrogates instead of imputation.
//!
//! [`split`] partitions rows with a seeded, optionally stratified draw and
//! then re-standardizes the numeric feature columns using training-partition
//! statistics only, so no test information leaks into the scaling.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ges::{InjurySeverity, InputField, ModelRow};

/// A single pre-encoding cell as the tree sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    Num(f64),
    /// Index into the variable's category list.
    Cat(u16),
    Missing,
}

impl RawValue {
    pub fn is_missing(self) -> bool {
        matches!(self, RawValue::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    Numeric,
    /// Category names, sorted lexicographically; `RawValue::Cat` indexes here.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableInfo {
    pub name: String,
    pub kind: VariableKind,
}

impl VariableInfo {
    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            VariableKind::Numeric => None,
            VariableKind::Categorical(c) => Some(c),
        }
    }
}

/// Source of one feature-matrix column: the variable it came from and, for
/// one-hot columns, the category it indicates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureName {
    pub variable: String,
    pub category: Option<String>,
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.category {
            Some(c) => write!(f, "{}={}", self.variable, c),
            None => f.write_str(&self.variable),
        }
    }
}

/// Encoded rows plus everything needed to interpret them.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    /// N×D dense matrix: one-hot categorical groups and z-scored numerics.
    pub features: Array2<f64>,
    /// N×D; true where the source cell was Unknown (the feature holds 0.0).
    pub missing_mask: Array2<bool>,
    /// Class index per row; severity rank order for multiclass data.
    pub targets: Vec<usize>,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    pub feature_names: Vec<FeatureName>,
    /// Schema of the raw columns, in model-variable order.
    pub variables: Vec<VariableInfo>,
    /// N rows × 11 raw (pre-encoding) values, kept for the tree.
    pub raw: Vec<Vec<RawValue>>,
    /// Per variable, the `[start, end)` range of its feature columns.
    pub feature_groups: Vec<(usize, usize)>,
}

impl EncodedDataset {
    pub fn n_rows(&self) -> usize {
        self.raw.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Per-class row counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &t in &self.targets {
            counts[t] += 1;
        }
        counts
    }

    fn is_severity_multiclass(&self) -> bool {
        self.n_classes == InjurySeverity::ALL.len()
            && self
                .class_names
                .iter()
                .zip(InjurySeverity::ALL)
                .all(|(n, s)| n == s.token())
    }
}

/// How to partition rows into train and test.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Fraction of rows assigned to test, in (0, 1).
    pub test_fraction: f64,
    pub seed: u64,
    /// Preserve class proportions (within ±1 row per class).
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec {
            test_fraction: 0.3,
            seed: 42,
            stratified: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot encode an empty row set")]
    EmptyInput,
    #[error("field `{0}` has no observed categories (every row is Unknown)")]
    NoObservedCategories(String),
    #[error("test fraction must be inside (0, 1), got {0}")]
    BadTestFraction(f64),
    #[error("stratified split needs at least 2 rows of class `{class}`, found {size}")]
    StratumTooSmall { class: String, size: usize },
    #[error("expected a severity-labeled multiclass dataset")]
    NotMulticlass,
}

fn categorical_token(row: &ModelRow, field: InputField) -> Option<String> {
    match field {
        InputField::Gender => row.gender.map(|g| g.token().to_string()),
        InputField::AlcoholUse => row.alcohol_use.map(|v| v.token().to_string()),
        InputField::RestraintUsed => row.restraint_used.map(|v| v.token().to_string()),
        InputField::Ejected => row.ejected.map(|v| v.token().to_string()),
        InputField::Rollover => row.rollover.map(|v| v.token().to_string()),
        InputField::VehicleBodyType => row.vehicle_body_type.clone(),
        InputField::VehicleRole => row.vehicle_role.clone(),
        InputField::RoadSurface => row.road_surface.clone(),
        InputField::LightCondition => row.light_condition.clone(),
        _ => unreachable!("not a categorical model field"),
    }
}

fn numeric_value(row: &ModelRow, field: InputField) -> Option<f64> {
    match field {
        InputField::DriverAge => row.driver_age.map(|v| v as f64),
        InputField::VehicleAge => row.vehicle_age.map(|v| v as f64),
        _ => unreachable!("not a numeric model field"),
    }
}

/// Population mean and standard deviation of the known values; `(0, 0)` when
/// there are none.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn standardize(raw: f64, mean: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        (raw - mean) / sd
    } else {
        0.0
    }
}

/// Encodes model rows for training.
///
/// Numeric variables become single columns z-scored over the known values of
/// the given rows (see [`split`] for the train-only re-standardization);
/// categorical variables become one-hot groups over their observed
/// categories, sorted lexicographically. Unknown cells contribute 0.0 to
/// every column of their group and set the missing mask.
pub fn encode(rows: &[ModelRow]) -> Result<EncodedDataset, DatasetError> {
    if rows.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let n = rows.len();

    let mut variables = Vec::with_capacity(InputField::MODEL.len());
    let mut raw: Vec<Vec<RawValue>> = vec![Vec::with_capacity(InputField::MODEL.len()); n];
    let mut columns: Vec<(Vec<f64>, Vec<bool>, FeatureName)> = Vec::new();
    let mut feature_groups = Vec::with_capacity(InputField::MODEL.len());

    for field in InputField::MODEL {
        let group_start = columns.len();
        if field.is_numeric() {
            let values: Vec<Option<f64>> = rows.iter().map(|r| numeric_value(r, field)).collect();
            let known: Vec<f64> = values.iter().filter_map(|v| *v).collect();
            let (mean, sd) = mean_sd(&known);
            let mut col = Vec::with_capacity(n);
            let mut mask = Vec::with_capacity(n);
            for (i, v) in values.iter().enumerate() {
                match v {
                    Some(x) => {
                        col.push(standardize(*x, mean, sd));
                        mask.push(false);
                        raw[i].push(RawValue::Num(*x));
                    }
                    None => {
                        col.push(0.0);
                        mask.push(true);
                        raw[i].push(RawValue::Missing);
                    }
                }
            }
            columns.push((
                col,
                mask,
                FeatureName {
                    variable: field.name().to_string(),
                    category: None,
                },
            ));
            variables.push(VariableInfo {
                name: field.name().to_string(),
                kind: VariableKind::Numeric,
            });
        } else {
            let tokens: Vec<Option<String>> =
                rows.iter().map(|r| categorical_token(r, field)).collect();
            let mut cats: Vec<String> = tokens.iter().flatten().cloned().collect();
            cats.sort();
            cats.dedup();
            if cats.is_empty() {
                return Err(DatasetError::NoObservedCategories(field.name().to_string()));
            }
            let index: BTreeMap<&str, u16> = cats
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i as u16))
                .collect();
            let mut group: Vec<(Vec<f64>, Vec<bool>)> =
                vec![(vec![0.0; n], vec![false; n]); cats.len()];
            for (i, token) in tokens.iter().enumerate() {
                match token {
                    Some(t) => {
                        let c = index[t.as_str()];
                        group[c as usize].0[i] = 1.0;
                        raw[i].push(RawValue::Cat(c));
                    }
                    None => {
                        for col in group.iter_mut() {
                            col.1[i] = true;
                        }
                        raw[i].push(RawValue::Missing);
                    }
                }
            }
            for (c, (col, mask)) in group.into_iter().enumerate() {
                columns.push((
                    col,
                    mask,
                    FeatureName {
                        variable: field.name().to_string(),
                        category: Some(cats[c].clone()),
                    },
                ));
            }
            variables.push(VariableInfo {
                name: field.name().to_string(),
                kind: VariableKind::Categorical(cats),
            });
        }
        feature_groups.push((group_start, columns.len()));
    }

    let d = columns.len();
    let mut features = Array2::zeros((n, d));
    let mut missing_mask = Array2::from_elem((n, d), false);
    let mut feature_names = Vec::with_capacity(d);
    for (j, (col, mask, name)) in columns.into_iter().enumerate() {
        for i in 0..n {
            features[[i, j]] = col[i];
            missing_mask[[i, j]] = mask[i];
        }
        feature_names.push(name);
    }

    Ok(EncodedDataset {
        features,
        missing_mask,
        targets: rows.iter().map(|r| r.severity.rank()).collect(),
        n_classes: InjurySeverity::ALL.len(),
        class_names: InjurySeverity::ALL
            .iter()
            .map(|s| s.token().to_string())
            .collect(),
        feature_names,
        variables,
        raw,
        feature_groups,
    })
}

fn take_rows(ds: &EncodedDataset, rows: &[usize]) -> EncodedDataset {
    EncodedDataset {
        features: ds.features.select(Axis(0), rows),
        missing_mask: ds.missing_mask.select(Axis(0), rows),
        targets: rows.iter().map(|&i| ds.targets[i]).collect(),
        n_classes: ds.n_classes,
        class_names: ds.class_names.clone(),
        feature_names: ds.feature_names.clone(),
        variables: ds.variables.clone(),
        raw: rows.iter().map(|&i| ds.raw[i].clone()).collect(),
        feature_groups: ds.feature_groups.clone(),
    }
}

/// Rewrites the numeric feature columns of both partitions using mean/sd
/// computed from the *training* partition's known raw values.
fn restandardize(train: &mut EncodedDataset, test: &mut EncodedDataset) {
    for (v, info) in train.variables.clone().iter().enumerate() {
        if info.kind != VariableKind::Numeric {
            continue;
        }
        let col = train.feature_groups[v].0;
        let known: Vec<f64> = train
            .raw
            .iter()
            .filter_map(|r| match r[v] {
                RawValue::Num(x) => Some(x),
                _ => None,
            })
            .collect();
        let (mean, sd) = mean_sd(&known);
        for ds in [&mut *train, &mut *test] {
            for i in 0..ds.n_rows() {
                ds.features[[i, col]] = match ds.raw[i][v] {
                    RawValue::Num(x) => standardize(x, mean, sd),
                    _ => 0.0,
                };
            }
        }
    }
}

/// Number of test rows per class under largest-remainder apportionment: hits
/// the global target `round(test_fraction · N)` exactly while staying within
/// one row of each class's exact quota.
fn stratified_test_counts(class_sizes: &[usize], test_fraction: f64, total_test: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = class_sizes
        .iter()
        .map(|&n| (test_fraction * n as f64).floor() as usize)
        .collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let rem_a = test_fraction * class_sizes[a] as f64 - counts[a] as f64;
        let rem_b = test_fraction * class_sizes[b] as f64 - counts[b] as f64;
        rem_b.partial_cmp(&rem_a).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().take(total_test.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Partitions rows into `(train, test)`.
///
/// The draw is a pure function of the [`SplitSpec`]: the same seed always yields the
/// same partition. With stratification, every observed class needs at least
/// two rows and ends up split in proportion (±1 row). Row order within each
/// partition follows the input.
pub fn split(
    ds: &EncodedDataset,
    spec: &SplitSpec,
) -> Result<(EncodedDataset, EncodedDataset), DatasetError> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(DatasetError::BadTestFraction(spec.test_fraction));
    }
    let n = ds.n_rows();
    let total_test = (spec.test_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut test_marks = vec![false; n];
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes];
        for (i, &t) in ds.targets.iter().enumerate() {
            by_class[t].push(i);
        }
        for (c, rows) in by_class.iter().enumerate() {
            if !rows.is_empty() && rows.len() < 2 {
                return Err(DatasetError::StratumTooSmall {
                    class: ds.class_names[c].clone(),
                    size: rows.len(),
                });
            }
        }
        let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
        let take = stratified_test_counts(&sizes, spec.test_fraction, total_test);
        for (rows, &k) in by_class.iter().zip(&take) {
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rng);
            for &i in shuffled.iter().take(k) {
                test_marks[i] = true;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        for &i in all.iter().take(total_test) {
            test_marks[i] = true;
        }
    }

    let test_rows: Vec<usize> = (0..n).filter(|&i| test_marks[i]).collect();
    let train_rows: Vec<usize> = (0..n).filter(|&i| !test_marks[i]).collect();
    let mut train = take_rows(ds, &train_rows);
    let mut test = take_rows(ds, &test_rows);
    restandardize(&mut train, &mut test);
    Ok((train, test))
}

/// Rewrites a severity-labeled dataset with binary targets: 1 where the row's
/// severity equals `positive`, 0 elsewhere. Features, mask, and raw columns
/// are untouched.
pub fn one_vs_all(
    ds: &EncodedDataset,
    positive: InjurySeverity,
) -> Result<EncodedDataset, DatasetError> {
    if !ds.is_severity_multiclass() {
        return Err(DatasetError::NotMulticlass);
    }
    let mut out = ds.clone();
    out.targets = ds
        .targets
        .iter()
        .map(|&t| usize::from(t == positive.rank()))
        .collect();
    out.n_classes = 2;
    out.class_names = vec!["rest".to_string(), positive.token().to_string()];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ges::{Gender, YesNo};

    fn row(age: Option<u32>, gender: Option<Gender>, severity: InjurySeverity) -> ModelRow {
        ModelRow {
            driver_age: age,
            gender,
            alcohol_use: Some(YesNo::No),
            restraint_used: Some(YesNo::Yes),
            ejected: Some(YesNo::No),
            vehicle_body_type: Some("sedan".into()),
            vehicle_role: Some("striking".into()),
            vehicle_age: Some(4),
            rollover: Some(YesNo::No),
            road_surface: Some("dry".into()),
            light_condition: Some("daylight".into()),
            severity,
        }
    }

    fn toy_rows(n: usize) -> Vec<ModelRow> {
        (0..n)
            .map(|i| {
                let sev = InjurySeverity::ALL[i % 5];
                let gender = if i % 2 == 0 {
                    Some(Gender::Male)
                } else {
                    Some(Gender::Female)
                };
                row(Some(20 + (i as u32 % 40)), gender, sev)
            })
            .collect()
    }

    #[test]
    fn encode_rejects_empty_input() {
        assert!(matches!(encode(&[]), Err(DatasetError::EmptyInput)));
    }

    #[test]
    fn encode_rejects_all_unknown_categorical() {
        let mut r = row(Some(30), None, InjurySeverity::NoInjury);
        r.gender = None;
        let err = encode(&[r.clone(), r]).unwrap_err();
        assert!(matches!(err, DatasetError::NoObservedCategories(f) if f == "gender"));
    }

    #[test]
    fn gender_with_two_categories_yields_two_columns() {
        let ds = encode(&toy_rows(10)).unwrap();
        let gender_var = InputField::MODEL
            .iter()
            .position(|f| *f == InputField::Gender)
            .unwrap();
        let (start, end) = ds.feature_groups[gender_var];
        assert_eq!(end - start, 2);
        // categories sorted lexicographically: female before male
        assert_eq!(ds.feature_names[start].category.as_deref(), Some("female"));
        assert_eq!(ds.feature_names[start + 1].category.as_deref(), Some("male"));
    }

    #[test]
    fn one_hot_group_sums_to_one_for_known_cells() {
        let mut rows = toy_rows(12);
        rows[3].gender = None;
        let ds = encode(&rows).unwrap();
        for (v, info) in ds.variables.iter().enumerate() {
            if info.kind == VariableKind::Numeric {
                continue;
            }
            let (start, end) = ds.feature_groups[v];
            for i in 0..ds.n_rows() {
                let sum: f64 = (start..end).map(|j| ds.features[[i, j]]).sum();
                if ds.raw[i][v].is_missing() {
                    assert_eq!(sum, 0.0);
                    assert!(ds.missing_mask[[i, start]]);
                } else {
                    assert_eq!(sum, 1.0, "row {i} variable {}", info.name);
                }
            }
        }
    }

    #[test]
    fn age_equal_to_mean_standardizes_to_zero() {
        let rows = vec![
            row(Some(20), Some(Gender::Male), InjurySeverity::NoInjury),
            row(Some(30), Some(Gender::Male), InjurySeverity::NoInjury),
            row(Some(40), Some(Gender::Female), InjurySeverity::Fatal),
        ];
        let ds = encode(&rows).unwrap();
        let age_col = ds.feature_groups[0].0;
        assert_eq!(ds.features[[1, age_col]], 0.0, "30 is the mean of known ages");
        assert!(ds.features[[0, age_col]] < 0.0);
        assert!(ds.features[[2, age_col]] > 0.0);
    }

    #[test]
    fn unknown_numeric_encodes_as_zero_with_mask() {
        let rows = vec![
            row(None, Some(Gender::Male), InjurySeverity::NoInjury),
            row(Some(30), Some(Gender::Male), InjurySeverity::NoInjury),
            row(Some(50), Some(Gender::Female), InjurySeverity::Fatal),
        ];
        let ds = encode(&rows).unwrap();
        let age_col = ds.feature_groups[0].0;
        assert_eq!(ds.features[[0, age_col]], 0.0);
        assert!(ds.missing_mask[[0, age_col]]);
        assert!(!ds.missing_mask[[1, age_col]]);
        assert_eq!(ds.raw[0][0], RawValue::Missing);
        assert_eq!(ds.raw[1][0], RawValue::Num(30.0));
    }

    #[test]
    fn split_sizes_follow_the_fraction() {
        // N = 10, fraction 0.3, two balanced classes → exactly 3 test rows
        let rows: Vec<ModelRow> = (0..10)
            .map(|i| {
                let sev = if i % 2 == 0 {
                    InjurySeverity::NoInjury
                } else {
                    InjurySeverity::Fatal
                };
                row(Some(20 + i as u32), Some(Gender::Male), sev)
            })
            .collect();
        let ds = encode(&rows).unwrap();
        let (train, test) = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(test.n_rows(), 3);
        assert_eq!(train.n_rows(), 7);
    }

    #[test]
    fn split_is_deterministic_and_partitions_rows() {
        let ds = encode(&toy_rows(50)).unwrap();
        let spec = SplitSpec {
            test_fraction: 0.4,
            seed: 9,
            stratified: true,
        };
        let (train_a, test_a) = split(&ds, &spec).unwrap();
        let (train_b, test_b) = split(&ds, &spec).unwrap();
        assert_eq!(train_a.targets, train_b.targets);
        assert_eq!(test_a.raw, test_b.raw);

        // union of (target, raw row) pairs == original multiset
        assert_eq!(train_a.n_rows() + test_a.n_rows(), ds.n_rows());
        let key = |part: &EncodedDataset| -> Vec<String> {
            part.raw
                .iter()
                .zip(&part.targets)
                .map(|(r, t)| format!("{t}:{r:?}"))
                .collect()
        };
        let mut union = key(&train_a);
        union.extend(key(&test_a));
        union.sort();
        let mut original = key(&ds);
        original.sort();
        assert_eq!(union, original);
    }

    #[test]
    fn different_seeds_differ() {
        let ds = encode(&toy_rows(60)).unwrap();
        let a = split(&ds, &SplitSpec { seed: 1, ..Default::default() }).unwrap();
        let b = split(&ds, &SplitSpec { seed: 2, ..Default::default() }).unwrap();
        assert_ne!(a.1.raw, b.1.raw, "two seeds giving identical splits is wildly unlikely");
    }

    #[test]
    fn stratified_split_preserves_class_proportions() {
        // 40 none / 40 possible / 20 fatal, fraction 0.25 → 10/10/5
        let mut rows = Vec::new();
        for i in 0..100 {
            let sev = match i % 5 {
                0 | 1 => InjurySeverity::NoInjury,
                2 | 3 => InjurySeverity::PossibleInjury,
                _ => InjurySeverity::Fatal,
            };
            rows.push(row(Some(20 + i as u32 % 50), Some(Gender::Male), sev));
        }
        let ds = encode(&rows).unwrap();
        let spec = SplitSpec {
            test_fraction: 0.25,
            seed: 3,
            stratified: true,
        };
        let (_, test) = split(&ds, &spec).unwrap();
        let counts = test.class_counts();
        assert_eq!(counts[InjurySeverity::NoInjury.rank()], 10);
        assert_eq!(counts[InjurySeverity::PossibleInjury.rank()], 10);
        assert_eq!(counts[InjurySeverity::Fatal.rank()], 5);
    }

    #[test]
    fn stratified_split_rejects_single_row_class() {
        // fatal appears exactly once
        let rows: Vec<ModelRow> = (0..6)
            .map(|i| {
                let sev = if i == 0 {
                    InjurySeverity::Fatal
                } else {
                    InjurySeverity::NoInjury
                };
                row(Some(20 + i as u32), Some(Gender::Male), sev)
            })
            .collect();
        let ds = encode(&rows).unwrap();
        let err = split(&ds, &SplitSpec::default()).unwrap_err();
        assert!(matches!(err, DatasetError::StratumTooSmall { class, size: 1 } if class == "fatal"));
    }

    #[test]
    fn split_restandardizes_on_training_cells_only() {
        let ds = encode(&toy_rows(40)).unwrap();
        let (train, _test) = split(&ds, &SplitSpec::default()).unwrap();
        let age_col = train.feature_groups[0].0;
        let known: Vec<f64> = (0..train.n_rows())
            .filter(|&i| !train.raw[i][0].is_missing())
            .map(|i| train.features[[i, age_col]])
            .collect();
        let n = known.len() as f64;
        let mean = known.iter().sum::<f64>() / n;
        let var = known.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9, "train mean {mean}");
        assert!((var - 1.0).abs() < 1e-9, "train variance {var}");
    }

    #[test]
    fn bad_fraction_is_rejected() {
        let ds = encode(&toy_rows(10)).unwrap();
        for f in [0.0, 1.0, -0.2, 1.7] {
            let err = split(
                &ds,
                &SplitSpec {
                    test_fraction: f,
                    ..Default::default()
                },
            )
            .unwrap_err();
            assert!(matches!(err, DatasetError::BadTestFraction(_)));
        }
    }

    #[test]
    fn one_vs_all_binarizes_targets() {
        let ds = encode(&toy_rows(25)).unwrap();
        let fatal = one_vs_all(&ds, InjurySeverity::Fatal).unwrap();
        assert_eq!(fatal.n_classes, 2);
        let positives = fatal.targets.iter().sum::<usize>();
        assert_eq!(positives, 5);
        assert_eq!(fatal.features, ds.features);

        // positives across the five decompositions partition the rows
        let total: usize = InjurySeverity::ALL
            .iter()
            .map(|&s| one_vs_all(&ds, s).unwrap().targets.iter().sum::<usize>())
            .sum();
        assert_eq!(total, ds.n_rows());
    }

    #[test]
    fn one_vs_all_with_absent_class_is_all_negative() {
        let rows: Vec<ModelRow> = (0..6)
            .map(|i| {
                row(
                    Some(30 + i as u32),
                    Some(Gender::Male),
                    if i % 2 == 0 {
                        InjurySeverity::NoInjury
                    } else {
                        InjurySeverity::PossibleInjury
                    },
                )
            })
            .collect();
        let ds = encode(&rows).unwrap();
        let fatal = one_vs_all(&ds, InjurySeverity::Fatal).unwrap();
        assert!(fatal.targets.iter().all(|&t| t == 0));
    }

    #[test]
    fn one_vs_all_rejects_binary_input() {
        let ds = encode(&toy_rows(25)).unwrap();
        let bin = one_vs_all(&ds, InjurySeverity::Fatal).unwrap();
        assert!(matches!(
            one_vs_all(&bin, InjurySeverity::Fatal),
            Err(DatasetError::NotMulticlass)
        ));
    }

    #[test]
    fn single_row_dataset_encodes() {
        let ds = encode(&toy_rows(1)).unwrap();
        assert_eq!(ds.n_rows(), 1);
        let bin = one_vs_all(&ds, InjurySeverity::NoInjury).unwrap();
        assert_eq!(bin.targets, vec![1]);
    }
}
