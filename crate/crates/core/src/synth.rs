//! Deterministic synthetic crash-record generator with planted severity
//! rules, planted missingness, and planted proxy correlations.
//!
//! The generator is the oracle for end-to-end tests: severity depends *only*
//! on the fields referenced by the rule table, so the Bayes-optimal one-vs-all
//! accuracy of every class is exactly computable from the rule table and the
//! field marginals ([`ground_truth`]). Trained models can then be judged
//! against a known ceiling instead of against hopes.
//!
//! Design constraints that keep the oracle exact:
//! - rules reference only fully-observed categorical model fields (no
//!   missingness is allowed on a rule field);
//! - proxy fields (correlated copies of another field) may not appear in
//!   rules, so they carry no information beyond their source;
//! - the head-on/front cohort marker is drawn independently of severity, so
//!   filtering does not shift the planted distributions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ges::{
    AccidentRecord, Gender, ImpactPoint, InjurySeverity, InputField, YesNo, MANNER_HEAD_ON,
};
use crate::seeds;

pub use crate::ges::write_csv;

/// Probability over the five severity classes, in [`InjurySeverity::ALL`]
/// order.
pub type SeverityDist = [f64; 5];

const DIST_TOLERANCE: f64 = 1e-12;

// rng sub-stream tags
const TAG_ROWS: u64 = 0x726f_7773;
const TAG_MISSING: u64 = 0x6d69_7373;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("class_weights must sum to 1 (off by {0:e})")]
    BadClassWeights(f64),
    #[error("rule {index}: {reason}")]
    BadRule { index: usize, reason: String },
    #[error("missingness for {field}: {reason}")]
    BadMissingness { field: InputField, reason: String },
    #[error("proxy pair {from}->{to}: {reason}")]
    BadProxy {
        from: InputField,
        to: InputField,
        reason: String,
    },
    #[error("head_on_front_fraction must be in [0,1], got {0}")]
    BadHeadOnFraction(f64),
}

/// One planted rule: a conjunction of category equalities and the severity
/// distribution used when the conjunction holds. Rules are applied
/// first-match, like the tree paths they are designed to exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// `(field, category token)` equalities, all of which must hold.
    pub conditions: Vec<(InputField, String)>,
    pub distribution: SeverityDist,
}

/// A planted correlation: `proxy` copies `source`'s yes/no value with
/// probability `agreement` and flips it otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyPair {
    pub source: InputField,
    pub proxy: InputField,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n_rows: usize,
    pub seed: u64,
    /// Fallback severity distribution for rows no rule matches.
    pub class_weights: SeverityDist,
    pub rule_table: Vec<Rule>,
    /// Per-field fraction of rows whose value is blanked (exact count
    /// `round(fraction·n)`, placed by seeded shuffle).
    pub missingness: BTreeMap<InputField, f64>,
    pub proxy_pairs: Vec<ProxyPair>,
    /// Fraction of rows marked head-on collision with front impact — the
    /// cohort the downstream filter keeps.
    pub head_on_front_fraction: f64,
}

impl Default for GeneratorSpec {
    /// The designed default population: severity depends strongly on
    /// `restraint_used`, `light_condition`, and `alcohol_use` (planted
    /// first-match rules, each concentrating 92% of its mass on one class),
    /// `rollover` is a 0.9-agreement proxy of `restraint_used`, and
    /// `travel_speed` is missing on exactly 67.68% of rows.
    fn default() -> GeneratorSpec {
        let rule = |conditions: &[(InputField, &str)], distribution: SeverityDist| Rule {
            conditions: conditions
                .iter()
                .map(|(f, t)| (*f, t.to_string()))
                .collect(),
            distribution,
        };
        let fatal_heavy = [0.043, 0.022, 0.010, 0.005, 0.920];
        let incap_heavy = [0.044, 0.023, 0.010, 0.920, 0.003];
        let nonincap_heavy = [0.044, 0.023, 0.920, 0.010, 0.003];
        let possible_heavy = [0.055, 0.920, 0.015, 0.007, 0.003];
        GeneratorSpec {
            n_rows: 10_000,
            seed: 42,
            class_weights: [0.920, 0.045, 0.020, 0.010, 0.005],
            rule_table: vec![
                rule(
                    &[
                        (InputField::RestraintUsed, "no"),
                        (InputField::AlcoholUse, "yes"),
                        (InputField::LightCondition, "dark"),
                    ],
                    fatal_heavy,
                ),
                rule(
                    &[
                        (InputField::RestraintUsed, "no"),
                        (InputField::AlcoholUse, "yes"),
                    ],
                    incap_heavy,
                ),
                rule(
                    &[
                        (InputField::RestraintUsed, "no"),
                        (InputField::LightCondition, "dark"),
                    ],
                    nonincap_heavy,
                ),
                rule(&[(InputField::RestraintUsed, "no")], possible_heavy),
                rule(
                    &[
                        (InputField::AlcoholUse, "yes"),
                        (InputField::LightCondition, "dark"),
                    ],
                    nonincap_heavy,
                ),
                rule(&[(InputField::AlcoholUse, "yes")], possible_heavy),
            ],
            missingness: BTreeMap::from([(InputField::TravelSpeed, 0.6768)]),
            proxy_pairs: vec![ProxyPair {
                source: InputField::RestraintUsed,
                proxy: InputField::Rollover,
                agreement: 0.9,
            }],
            head_on_front_fraction: 0.85,
        }
    }
}

/// Exactly computable properties of the population a spec describes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Fields referenced by the rule table (sorted; the planted signal
    /// carriers).
    pub rule_fields: Vec<InputField>,
    /// Population class probabilities, [`InjurySeverity::ALL`] order.
    pub class_marginals: SeverityDist,
    /// Best achievable one-vs-all test accuracy per class, percent.
    pub bayes_accuracy_pct: [f64; 5],
}

/// Population marginals of each categorical input the generator draws:
/// `(token, probability)` pairs summing to 1. `None` for numeric fields and
/// the cohort-marker fields, which are drawn by their own mechanisms.
pub fn field_marginals(field: InputField) -> Option<&'static [(&'static str, f64)]> {
    match field {
        InputField::Gender => Some(&[("male", 0.58), ("female", 0.42)]),
        InputField::AlcoholUse => Some(&[("yes", 0.25), ("no", 0.75)]),
        InputField::RestraintUsed => Some(&[("no", 0.28), ("yes", 0.72)]),
        InputField::Ejected => Some(&[("yes", 0.06), ("no", 0.94)]),
        InputField::VehicleBodyType => Some(&[
            ("sedan", 0.45),
            ("pickup", 0.20),
            ("suv", 0.20),
            ("van", 0.10),
            ("motorcycle", 0.05),
        ]),
        InputField::VehicleRole => {
            Some(&[("striking", 0.55), ("struck", 0.40), ("both", 0.05)])
        }
        InputField::Rollover => Some(&[("yes", 0.08), ("no", 0.92)]),
        InputField::RoadSurface => Some(&[
            ("dry", 0.70),
            ("wet", 0.22),
            ("snow", 0.05),
            ("ice", 0.03),
        ]),
        InputField::LightCondition => Some(&[
            ("daylight", 0.60),
            ("dark", 0.25),
            ("dark_lighted", 0.10),
            ("dawn_dusk", 0.05),
        ]),
        _ => None,
    }
}

/// Fields whose values are yes/no tokens — the only ones a proxy pair may
/// connect.
fn is_yes_no(field: InputField) -> bool {
    matches!(
        field,
        InputField::AlcoholUse
            | InputField::RestraintUsed
            | InputField::Ejected
            | InputField::Rollover
    )
}

fn check_dist(dist: &SeverityDist) -> Result<(), f64> {
    for &p in dist {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(f64::NAN);
        }
    }
    let off = (dist.iter().sum::<f64>() - 1.0).abs();
    if off > DIST_TOLERANCE {
        return Err(off);
    }
    Ok(())
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        check_dist(&self.class_weights).map_err(SynthError::BadClassWeights)?;

        let bad_rule = |index: usize, reason: String| SynthError::BadRule { index, reason };
        let mut rule_fields = BTreeSet::new();
        for (index, rule) in self.rule_table.iter().enumerate() {
            if rule.conditions.is_empty() {
                return Err(bad_rule(index, "rule has no conditions".to_string()));
            }
            let mut seen = BTreeSet::new();
            for (field, token) in &rule.conditions {
                let support = field_marginals(*field).ok_or_else(|| {
                    bad_rule(
                        index,
                        format!("{field} is not a categorical model field"),
                    )
                })?;
                if !support.iter().any(|(t, _)| t == token) {
                    return Err(bad_rule(
                        index,
                        format!("unsatisfiable condition: {field} has no category `{token}`"),
                    ));
                }
                if !seen.insert(*field) {
                    return Err(bad_rule(
                        index,
                        format!("{field} appears twice in one conjunction"),
                    ));
                }
                rule_fields.insert(*field);
            }
            check_dist(&rule.distribution)
                .map_err(|off| bad_rule(index, format!("distribution must sum to 1 (off by {off:e})")))?;
        }

        for (&field, &fraction) in &self.missingness {
            if !(fraction.is_finite() && (0.0..=1.0).contains(&fraction)) {
                return Err(SynthError::BadMissingness {
                    field,
                    reason: format!("fraction must be in [0,1], got {fraction}"),
                });
            }
            if rule_fields.contains(&field) && fraction > 0.0 {
                return Err(SynthError::BadMissingness {
                    field,
                    reason: "rule fields must stay fully observed".to_string(),
                });
            }
        }

        let mut proxy_targets = BTreeSet::new();
        for pair in &self.proxy_pairs {
            let bad = |reason: &str| SynthError::BadProxy {
                from: pair.source,
                to: pair.proxy,
                reason: reason.to_string(),
            };
            if pair.source == pair.proxy {
                return Err(bad("source and proxy are the same field"));
            }
            if !is_yes_no(pair.source) || !is_yes_no(pair.proxy) {
                return Err(bad("both fields must be yes/no-valued"));
            }
            if !(pair.agreement.is_finite() && (0.0..=1.0).contains(&pair.agreement)) {
                return Err(bad("agreement must be in [0,1]"));
            }
            if rule_fields.contains(&pair.proxy) {
                return Err(bad("proxy field may not appear in rules"));
            }
            if !proxy_targets.insert(pair.proxy) {
                return Err(bad("field is the proxy of two sources"));
            }
        }
        for pair in &self.proxy_pairs {
            if proxy_targets.contains(&pair.source) {
                return Err(SynthError::BadProxy {
                    from: pair.source,
                    to: pair.proxy,
                    reason: "chained proxies (proxy of a proxy) are not supported".to_string(),
                });
            }
        }

        if !(self.head_on_front_fraction.is_finite()
            && (0.0..=1.0).contains(&self.head_on_front_fraction))
        {
            return Err(SynthError::BadHeadOnFraction(self.head_on_front_fraction));
        }
        Ok(())
    }

    /// Sorted list of fields referenced by the rule table.
    pub fn rule_fields(&self) -> Vec<InputField> {
        let set: BTreeSet<InputField> = self
            .rule_table
            .iter()
            .flat_map(|r| r.conditions.iter().map(|(f, _)| *f))
            .collect();
        set.into_iter().collect()
    }
}

fn first_match<'a>(
    spec: &'a GeneratorSpec,
    token_of: impl Fn(InputField) -> &'a str,
) -> &'a SeverityDist {
    for rule in &spec.rule_table {
        if rule
            .conditions
            .iter()
            .all(|(field, token)| token_of(*field) == token)
        {
            return &rule.distribution;
        }
    }
    &spec.class_weights
}

/// Exact population properties implied by a [`GeneratorSpec`]: class marginals and the
/// Bayes-optimal one-vs-all accuracy per class, computed by enumerating the
/// joint distribution of the rule fields (severity is independent of
/// everything else given those fields).
pub fn ground_truth(spec: &GeneratorSpec) -> Result<GroundTruth, SynthError> {
    spec.validate()?;
    let rule_fields = spec.rule_fields();
    let supports: Vec<&[(&str, f64)]> = rule_fields
        .iter()
        .map(|f| field_marginals(*f).expect("validated: rule fields are categorical"))
        .collect();

    let mut class_marginals = [0.0; 5];
    let mut bayes = [0.0; 5];
    let mut cell = vec![0usize; rule_fields.len()];
    loop {
        let p_cell: f64 = cell
            .iter()
            .zip(&supports)
            .map(|(&i, support)| support[i].1)
            .product();
        let dist = first_match(spec, |field| {
            let at = rule_fields.iter().position(|f| *f == field);
            // a rule condition always names a rule field
            let at = at.expect("condition field is a rule field");
            supports[at][cell[at]].0
        });
        for c in 0..5 {
            class_marginals[c] += p_cell * dist[c];
            bayes[c] += p_cell * dist[c].max(1.0 - dist[c]);
        }

        // odometer increment over the product space
        let mut digit = 0;
        loop {
            if digit == cell.len() {
                break;
            }
            cell[digit] += 1;
            if cell[digit] < supports[digit].len() {
                break;
            }
            cell[digit] = 0;
            digit += 1;
        }
        if digit == cell.len() {
            break;
        }
    }

    Ok(GroundTruth {
        rule_fields,
        class_marginals,
        bayes_accuracy_pct: bayes.map(|b| 100.0 * b),
    })
}

fn draw_weighted(rng: &mut ChaCha8Rng, table: &[(&'static str, f64)]) -> &'static str {
    let mut u = rng.random::<f64>();
    for (token, p) in table {
        if u < *p {
            return token;
        }
        u -= p;
    }
    table.last().expect("support is nonempty").0
}

fn draw_severity(rng: &mut ChaCha8Rng, dist: &SeverityDist) -> InjurySeverity {
    let mut u = rng.random::<f64>();
    for (i, p) in dist.iter().enumerate() {
        if u < *p {
            return InjurySeverity::ALL[i];
        }
        u -= p;
    }
    InjurySeverity::Fatal
}

fn flip_yes_no(token: &str) -> &'static str {
    if token == "yes" {
        "no"
    } else {
        "yes"
    }
}

/// Manner/impact pair for rows outside the head-on/front cohort; never
/// produces the (head_on, front) combination.
fn draw_off_cohort(rng: &mut ChaCha8Rng) -> (&'static str, ImpactPoint) {
    const MANNER: [(&str, f64); 4] = [
        ("rear_end", 0.40),
        ("angle", 0.35),
        ("sideswipe", 0.15),
        (MANNER_HEAD_ON, 0.10),
    ];
    let manner = draw_weighted(rng, &MANNER);
    let impact = if manner == MANNER_HEAD_ON {
        *[
            ImpactPoint::LeftSide,
            ImpactPoint::RightSide,
            ImpactPoint::FrontLeftCorner,
            ImpactPoint::FrontRightCorner,
        ]
        .choose(rng)
        .expect("nonempty")
    } else {
        let u = rng.random::<f64>();
        if u < 0.30 {
            ImpactPoint::Back
        } else if u < 0.55 {
            ImpactPoint::Front
        } else if u < 0.75 {
            ImpactPoint::LeftSide
        } else if u < 0.95 {
            ImpactPoint::RightSide
        } else {
            ImpactPoint::BackLeftCorner
        }
    };
    (manner, impact)
}

/// Draws `spec.n_rows` records. Same spec → identical records, bytes, and
/// [`GroundTruth`].
pub fn generate(spec: &GeneratorSpec) -> Result<(Vec<AccidentRecord>, GroundTruth), SynthError> {
    let truth = ground_truth(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(spec.seed, TAG_ROWS));

    const REGIONS: [&str; 4] = ["northeast", "midwest", "south", "west"];
    const MAKES: [&str; 5] = [
        "ford contour",
        "chevy cavalier",
        "honda accord",
        "toyota camry",
        "dodge ram",
    ];
    const SPEED_LIMITS: [u32; 10] = [25, 30, 35, 40, 45, 50, 55, 60, 65, 70];

    let categorical_fields: Vec<InputField> = InputField::ALL
        .into_iter()
        .filter(|f| field_marginals(*f).is_some())
        .collect();

    let mut records = Vec::with_capacity(spec.n_rows);
    for i in 0..spec.n_rows {
        let mut tokens: BTreeMap<InputField, &'static str> = BTreeMap::new();
        for &field in &categorical_fields {
            let support = field_marginals(field).expect("filtered to categorical");
            tokens.insert(field, draw_weighted(&mut rng, support));
        }
        for pair in &spec.proxy_pairs {
            let source = tokens[&pair.source];
            let value = if rng.random_bool(pair.agreement) {
                source
            } else {
                flip_yes_no(source)
            };
            tokens.insert(pair.proxy, value);
        }

        let dist = first_match(spec, |field| tokens[&field]);
        let severity = draw_severity(&mut rng, dist);

        let (manner, impact) = if rng.random_bool(spec.head_on_front_fraction) {
            (MANNER_HEAD_ON, ImpactPoint::Front)
        } else {
            draw_off_cohort(&mut rng)
        };

        let mut r = AccidentRecord::blank(severity);
        r.year = "2003".to_string();
        r.month = (i % 12 + 1).to_string();
        r.region = REGIONS[i % REGIONS.len()].to_string();
        r.psu = (i * 7 % 97 + 1).to_string();
        r.jurisdiction = (i * 13 % 50 + 1).to_string();
        r.case_number = format!("{:07}", i + 1);
        r.person_number = "1".to_string();
        r.vehicle_number = "1".to_string();
        r.vehicle_make_model = MAKES[i % MAKES.len()].to_string();

        r.driver_age = Some(rng.random_range(16..=89));
        r.gender = Gender::parse_token(tokens[&InputField::Gender]);
        r.alcohol_use = YesNo::parse_token(tokens[&InputField::AlcoholUse]);
        r.restraint_used = YesNo::parse_token(tokens[&InputField::RestraintUsed]);
        r.ejected = YesNo::parse_token(tokens[&InputField::Ejected]);
        r.vehicle_body_type = Some(tokens[&InputField::VehicleBodyType].to_string());
        r.vehicle_role = Some(tokens[&InputField::VehicleRole].to_string());
        r.vehicle_age = Some(rng.random_range(0..=24));
        r.rollover = YesNo::parse_token(tokens[&InputField::Rollover]);
        r.road_surface = Some(tokens[&InputField::RoadSurface].to_string());
        r.light_condition = Some(tokens[&InputField::LightCondition].to_string());
        r.manner_of_collision = Some(manner.to_string());
        r.initial_impact = Some(impact);
        r.travel_speed = Some(rng.random_range(5..=85));
        r.speed_limit = SPEED_LIMITS.choose(&mut rng).copied();
        records.push(r);
    }

    // planted missingness: exact counts, placed by per-field seeded shuffle
    for (&field, &fraction) in &spec.missingness {
        let k = (fraction * spec.n_rows as f64).round() as usize;
        let mut order: Vec<usize> = (0..spec.n_rows).collect();
        let mut field_rng =
            ChaCha8Rng::seed_from_u64(seeds::derive2(spec.seed, TAG_MISSING, field as u64));
        use rand::seq::SliceRandom;
        order.shuffle(&mut field_rng);
        for &row in order.iter().take(k) {
            records[row].clear_field(field);
        }
    }

    Ok((records, truth))
}

/// Human-readable sidecar describing the planted population.
pub fn ground_truth_to_text(truth: &GroundTruth) -> String {
    let mut s = String::from("ground-truth v1\n");
    let names: Vec<&str> = truth.rule_fields.iter().map(|f| f.name()).collect();
    let _ = writeln!(s, "rule_fields {}", names.join(" "));
    for (c, severity) in InjurySeverity::ALL.into_iter().enumerate() {
        let _ = writeln!(
            s,
            "class {} marginal {} bayes_accuracy_pct {}",
            severity.token(),
            truth.class_marginals[c],
            truth.bayes_accuracy_pct[c],
        );
    }
    s.push_str("end\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ges::{filter_head_on_front, parse_csv, CsvSchema};

    #[test]
    fn default_spec_is_valid() {
        GeneratorSpec::default().validate().unwrap();
    }

    /// Frozen oracle: the default population's marginals and Bayes accuracies,
    /// computed by hand from the rule table (seven distinct cell groups).
    #[test]
    fn default_ground_truth_matches_hand_computation() {
        let truth = ground_truth(&GeneratorSpec::default()).unwrap();
        assert_eq!(
            truth.rule_fields,
            vec![
                InputField::AlcoholUse,
                InputField::RestraintUsed,
                InputField::LightCondition
            ]
        );
        let expected_marginals = [0.52024, 0.297235, 0.1055875, 0.05681, 0.0201275];
        let expected_bayes_pct = [93.336, 94.8465, 97.63125, 98.729, 99.45725];
        for c in 0..5 {
            assert!(
                (truth.class_marginals[c] - expected_marginals[c]).abs() < 1e-10,
                "class {c} marginal {} != {}",
                truth.class_marginals[c],
                expected_marginals[c]
            );
            assert!(
                (truth.bayes_accuracy_pct[c] - expected_bayes_pct[c]).abs() < 1e-9,
                "class {c} bayes {} != {}",
                truth.bayes_accuracy_pct[c],
                expected_bayes_pct[c]
            );
        }
        // the planted separability gradient: strictly more severe classes are
        // strictly more predictable
        for c in 1..5 {
            assert!(truth.bayes_accuracy_pct[c] > truth.bayes_accuracy_pct[c - 1]);
        }
        let total: f64 = truth.class_marginals.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_rule_covering_all_rows_gives_bayes_100() {
        let spec = GeneratorSpec {
            n_rows: 500,
            seed: 7,
            class_weights: [1.0, 0.0, 0.0, 0.0, 0.0],
            rule_table: vec![Rule {
                conditions: vec![(InputField::RestraintUsed, "no".to_string())],
                distribution: [0.0, 0.0, 0.0, 0.0, 1.0],
            }],
            missingness: BTreeMap::new(),
            proxy_pairs: Vec::new(),
            head_on_front_fraction: 1.0,
        };
        let (records, truth) = generate(&spec).unwrap();
        for pct in truth.bayes_accuracy_pct {
            assert!((pct - 100.0).abs() < 1e-12);
        }
        for r in &records {
            let expected = match r.restraint_used.unwrap() {
                YesNo::No => InjurySeverity::Fatal,
                YesNo::Yes => InjurySeverity::NoInjury,
            };
            assert_eq!(r.severity, expected);
        }
    }

    #[test]
    fn zero_rows_gives_empty_records_but_full_ground_truth() {
        let spec = GeneratorSpec {
            n_rows: 0,
            ..GeneratorSpec::default()
        };
        let (records, truth) = generate(&spec).unwrap();
        assert!(records.is_empty());
        assert_eq!(truth, ground_truth(&GeneratorSpec::default()).unwrap());
    }

    #[test]
    fn missingness_counts_are_exact() {
        let (records, _) = generate(&GeneratorSpec::default()).unwrap();
        assert_eq!(records.len(), 10_000);
        let missing_speed = records.iter().filter(|r| r.travel_speed.is_none()).count();
        assert_eq!(missing_speed, 6768);
        // travel_speed is the only planted missingness; everything else is
        // fully observed
        for field in InputField::ALL {
            if field == InputField::TravelSpeed {
                continue;
            }
            assert!(
                records.iter().all(|r| !r.field_is_missing(field)),
                "{field} unexpectedly missing"
            );
        }
    }

    #[test]
    fn generated_csv_round_trips_and_parses_clean() {
        let spec = GeneratorSpec {
            n_rows: 2_000,
            ..GeneratorSpec::default()
        };
        let (records, _) = generate(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let (parsed, report) = parse_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        assert_eq!(report.rows_rejected, 0);
        assert_eq!(parsed, records);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec {
            n_rows: 300,
            ..GeneratorSpec::default()
        };
        let (a, truth_a) = generate(&spec).unwrap();
        let (b, truth_b) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(truth_a, truth_b);

        let different_seed = GeneratorSpec { seed: 43, ..spec };
        let (c, _) = generate(&different_seed).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn realized_class_marginals_are_within_three_standard_errors() {
        let (records, truth) = generate(&GeneratorSpec::default()).unwrap();
        let n = records.len() as f64;
        for (c, severity) in InjurySeverity::ALL.into_iter().enumerate() {
            let rate = records.iter().filter(|r| r.severity == severity).count() as f64 / n;
            let m = truth.class_marginals[c];
            let se = (m * (1.0 - m) / n).sqrt();
            assert!(
                (rate - m).abs() <= 3.0 * se,
                "{severity}: rate {rate} vs marginal {m} (3se = {})",
                3.0 * se
            );
        }
    }

    #[test]
    fn realized_proxy_agreement_is_close_to_spec() {
        let (records, _) = generate(&GeneratorSpec::default()).unwrap();
        let agree = records
            .iter()
            .filter(|r| r.rollover == r.restraint_used)
            .count() as f64
            / records.len() as f64;
        assert!((agree - 0.9).abs() <= 0.02, "agreement {agree}");
    }

    #[test]
    fn realized_cohort_fraction_is_close_to_spec() {
        let (records, _) = generate(&GeneratorSpec::default()).unwrap();
        let kept = filter_head_on_front(&records).len() as f64 / records.len() as f64;
        let se = (0.85_f64 * 0.15 / records.len() as f64).sqrt();
        assert!((kept - 0.85).abs() <= 3.0 * se, "cohort fraction {kept}");
    }

    /// Rows in the fatal-dominant cell (no restraint, alcohol, dark) must be
    /// fatal at close to the planted 92% rate — a direct check that
    /// first-match rule application is wired correctly.
    #[test]
    fn planted_cell_severity_rates_are_honored() {
        let (records, _) = generate(&GeneratorSpec::default()).unwrap();
        let cell: Vec<_> = records
            .iter()
            .filter(|r| {
                r.restraint_used == Some(YesNo::No)
                    && r.alcohol_use == Some(YesNo::Yes)
                    && r.light_condition.as_deref() == Some("dark")
            })
            .collect();
        // expected cell mass 0.0175 → ~175 rows of 10,000
        assert!(cell.len() > 100, "only {} rows in the planted cell", cell.len());
        let fatal_rate = cell
            .iter()
            .filter(|r| r.severity == InjurySeverity::Fatal)
            .count() as f64
            / cell.len() as f64;
        let se = (0.92_f64 * 0.08 / cell.len() as f64).sqrt();
        assert!(
            (fatal_rate - 0.92).abs() <= 3.0 * se,
            "fatal rate {fatal_rate} in the planted cell"
        );
    }

    #[test]
    fn rule_order_matters() {
        let base = GeneratorSpec::default();
        let mut swapped = base.clone();
        swapped.rule_table.swap(0, 3);
        let a = ground_truth(&base).unwrap();
        let b = ground_truth(&swapped).unwrap();
        assert_ne!(a.class_marginals, b.class_marginals);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let ok = GeneratorSpec::default();

        let mut bad = ok.clone();
        bad.class_weights = [0.5, 0.5, 0.5, 0.0, 0.0];
        assert!(matches!(bad.validate(), Err(SynthError::BadClassWeights(_))));

        let mut bad = ok.clone();
        bad.rule_table[0].conditions.clear();
        assert!(matches!(bad.validate(), Err(SynthError::BadRule { index: 0, .. })));

        let mut bad = ok.clone();
        bad.rule_table[0].conditions[0] = (InputField::DriverAge, "40".to_string());
        assert!(matches!(bad.validate(), Err(SynthError::BadRule { .. })));

        let mut bad = ok.clone();
        bad.rule_table[1].conditions[0] = (InputField::LightCondition, "foggy".to_string());
        assert!(matches!(bad.validate(), Err(SynthError::BadRule { index: 1, .. })));

        let mut bad = ok.clone();
        bad.rule_table[0].conditions[0] = (InputField::MannerOfCollision, "head_on".to_string());
        assert!(matches!(bad.validate(), Err(SynthError::BadRule { .. })));

        let mut bad = ok.clone();
        bad.rule_table[0].distribution = [0.9, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(bad.validate(), Err(SynthError::BadRule { .. })));

        let mut bad = ok.clone();
        bad.missingness.insert(InputField::RestraintUsed, 0.1);
        assert!(matches!(
            bad.validate(),
            Err(SynthError::BadMissingness { field: InputField::RestraintUsed, .. })
        ));

        let mut bad = ok.clone();
        bad.missingness.insert(InputField::DriverAge, 1.5);
        assert!(matches!(bad.validate(), Err(SynthError::BadMissingness { .. })));

        let mut bad = ok.clone();
        bad.proxy_pairs[0].proxy = InputField::RestraintUsed;
        assert!(matches!(bad.validate(), Err(SynthError::BadProxy { .. })));

        let mut bad = ok.clone();
        bad.proxy_pairs[0].proxy = InputField::Gender;
        assert!(matches!(bad.validate(), Err(SynthError::BadProxy { .. })));

        let mut bad = ok.clone();
        bad.proxy_pairs[0].proxy = InputField::LightCondition;
        assert!(matches!(bad.validate(), Err(SynthError::BadProxy { .. })));

        let mut bad = ok.clone();
        bad.proxy_pairs[0].agreement = 1.2;
        assert!(matches!(bad.validate(), Err(SynthError::BadProxy { .. })));

        let mut bad = ok.clone();
        bad.proxy_pairs.push(ProxyPair {
            source: InputField::AlcoholUse,
            proxy: InputField::Rollover,
            agreement: 0.5,
        });
        assert!(matches!(bad.validate(), Err(SynthError::BadProxy { .. })));

        let mut bad = ok.clone();
        bad.head_on_front_fraction = -0.1;
        assert!(matches!(bad.validate(), Err(SynthError::BadHeadOnFraction(_))));
    }

    #[test]
    fn perfect_proxy_duplicates_its_source() {
        let mut spec = GeneratorSpec::default();
        spec.n_rows = 400;
        spec.proxy_pairs[0].agreement = 1.0;
        let (records, _) = generate(&spec).unwrap();
        assert!(records.iter().all(|r| r.rollover == r.restraint_used));
    }

    #[test]
    fn ground_truth_sidecar_lists_all_classes() {
        let truth = ground_truth(&GeneratorSpec::default()).unwrap();
        let text = ground_truth_to_text(&truth);
        assert!(text.starts_with("ground-truth v1\n"));
        assert!(text.ends_with("end\n"));
        for severity in InjurySeverity::ALL {
            assert!(text.contains(&format!("class {} ", severity.token())));
        }
        assert!(text.contains("rule_fields alcohol_use restraint_used light_condition"));
    }
}
