//! Line-oriented run configuration.
//!
//! The format is `section.key = value`, one setting per line, `#` comments.
//! Unknown or duplicated keys are rejected so a typo can't silently fall
//! back to a default. Parsing starts from the built-in defaults and applies
//! overrides; [`render`](RunConfig::render) emits the fully resolved
//! configuration in the same format, and parsing that text reproduces the
//! config exactly.
//!
//! Generator-specific grammar:
//!
//! ```text
//! generator.class_weights = none:0.92,possible:0.045,nonincap:0.02,incap:0.01,fatal:0.005
//! generator.rule.1 = restraint_used=no & alcohol_use=yes => none:0.04,possible:0.02,nonincap:0.01,incap:0.92,fatal:0.01
//! generator.missing.travel_speed = 0.6768
//! generator.proxy.1 = restraint_used -> rollover @ 0.9
//! ```
//!
//! Rule and proxy lines replace the whole default table the first time one
//! appears, and their indices must be 1..=K with no gaps so the first-match
//! order is explicit.

use std::collections::{BTreeMap, BTreeSet};

use crate::cart::Priors;
use crate::eval::ExperimentConfig;
use crate::ges::{InjurySeverity, InputField};
use crate::synth::{GeneratorSpec, ProxyPair, Rule, SeverityDist};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line {
        line,
        message: message.into(),
    }
}

/// Everything a run needs: experiment settings plus the synthetic-data
/// generator settings (used only by the `synth` command).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub generator: GeneratorSpec,
}

impl RunConfig {
    /// Applies one seed to every seeded stage (split, training, generator).
    /// Internal derivation tags keep the stages' random streams distinct.
    pub fn override_seed(&mut self, seed: u64) {
        self.experiment.split.seed = seed;
        self.experiment.schedule.seed = seed;
        self.generator.seed = seed;
    }

    /// Parses overrides on top of the defaults. Every error carries its
    /// 1-based line number.
    pub fn parse(source: &str) -> Result<RunConfig, ConfigError> {
        let mut config = RunConfig::default();
        let mut seen = BTreeSet::new();

        // rule/proxy/missing/weights tables start from scratch the first
        // time a line touches them, instead of merging with defaults
        let mut rules: BTreeMap<usize, Rule> = BTreeMap::new();
        let mut proxies: BTreeMap<usize, ProxyPair> = BTreeMap::new();
        let mut missing: BTreeMap<InputField, f64> = BTreeMap::new();
        let mut touched_rules = false;
        let mut touched_proxies = false;
        let mut touched_missing = false;

        for (idx, raw_line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, "expected `section.key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(err(line_no, format!("`{key}` has no value")));
            }
            if !seen.insert(key.to_string()) {
                return Err(err(line_no, format!("duplicate key `{key}`")));
            }

            match key {
                "split.test_fraction" => {
                    config.experiment.split.test_fraction = parse_f64(line_no, key, value)?
                }
                "split.seed" => config.experiment.split.seed = parse_u64(line_no, key, value)?,
                "split.stratified" => {
                    config.experiment.split.stratified = parse_bool(line_no, key, value)?
                }
                "tree.min_node_n" => {
                    config.experiment.tree_params.min_node_n = parse_usize(line_no, key, value)?
                }
                "tree.min_node_fraction" => {
                    config.experiment.tree_params.min_node_fraction =
                        parse_f64(line_no, key, value)?
                }
                "tree.max_nodes" => {
                    config.experiment.tree_params.max_nodes = parse_usize(line_no, key, value)?
                }
                "tree.max_depth" => {
                    config.experiment.tree_params.max_depth = parse_usize(line_no, key, value)?
                }
                "tree.n_surrogates" => {
                    config.experiment.tree_params.n_surrogates = parse_usize(line_no, key, value)?
                }
                "tree.priors" => {
                    config.experiment.tree_params.priors = parse_priors(line_no, value)?
                }
                "tree.prune_measure" => {
                    if value != "misclassification" {
                        return Err(err(
                            line_no,
                            format!("unknown prune measure `{value}` (try `misclassification`)"),
                        ));
                    }
                }
                "schedule.bp_epochs" => {
                    config.experiment.schedule.bp_epochs = parse_usize(line_no, key, value)?
                }
                "schedule.bp_learning_rate" => {
                    config.experiment.schedule.bp_learning_rate = parse_f64(line_no, key, value)?
                }
                "schedule.cg_epochs" => {
                    config.experiment.schedule.cg_epochs = parse_usize(line_no, key, value)?
                }
                "schedule.seed" => {
                    config.experiment.schedule.seed = parse_u64(line_no, key, value)?
                }
                "experiment.repeats" => {
                    config.experiment.repeats = parse_usize(line_no, key, value)?
                }
                "generator.n_rows" => config.generator.n_rows = parse_usize(line_no, key, value)?,
                "generator.seed" => config.generator.seed = parse_u64(line_no, key, value)?,
                "generator.class_weights" => {
                    config.generator.class_weights = parse_dist(line_no, value)?
                }
                "generator.head_on_front_fraction" => {
                    config.generator.head_on_front_fraction = parse_f64(line_no, key, value)?
                }
                _ => {
                    if let Some(token) = key.strip_prefix("experiment.hidden.") {
                        let severity = InjurySeverity::parse_token(token).ok_or_else(|| {
                            err(line_no, format!("unknown severity class `{token}`"))
                        })?;
                        config
                            .experiment
                            .hidden_neurons
                            .insert(severity, parse_usize(line_no, key, value)?);
                    } else if let Some(n) = key.strip_prefix("generator.rule.") {
                        let index = parse_table_index(line_no, "rule", n)?;
                        touched_rules = true;
                        rules.insert(index, parse_rule(line_no, value)?);
                    } else if let Some(n) = key.strip_prefix("generator.proxy.") {
                        let index = parse_table_index(line_no, "proxy", n)?;
                        touched_proxies = true;
                        proxies.insert(index, parse_proxy(line_no, value)?);
                    } else if let Some(name) = key.strip_prefix("generator.missing.") {
                        let field = InputField::parse_name(name).ok_or_else(|| {
                            err(line_no, format!("unknown input field `{name}`"))
                        })?;
                        touched_missing = true;
                        missing.insert(field, parse_f64(line_no, key, value)?);
                    } else {
                        return Err(err(line_no, format!("unknown key `{key}`")));
                    }
                }
            }
        }

        if touched_rules {
            config.generator.rule_table = collect_table(&rules, "rule")?;
        }
        if touched_proxies {
            config.generator.proxy_pairs = collect_table(&proxies, "proxy")?;
        }
        if touched_missing {
            config.generator.missingness = missing;
        }
        Ok(config)
    }

    /// Emits every resolved setting; `parse(render())` round-trips exactly.
    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let e = &self.experiment;
        let g = &self.generator;
        let mut s = String::from("# resolved configuration\n");
        let _ = writeln!(s, "split.test_fraction = {}", e.split.test_fraction);
        let _ = writeln!(s, "split.seed = {}", e.split.seed);
        let _ = writeln!(s, "split.stratified = {}", e.split.stratified);
        let _ = writeln!(s, "tree.min_node_n = {}", e.tree_params.min_node_n);
        let _ = writeln!(
            s,
            "tree.min_node_fraction = {}",
            e.tree_params.min_node_fraction
        );
        let _ = writeln!(s, "tree.max_nodes = {}", e.tree_params.max_nodes);
        let _ = writeln!(s, "tree.max_depth = {}", e.tree_params.max_depth);
        let _ = writeln!(s, "tree.n_surrogates = {}", e.tree_params.n_surrogates);
        let priors = match &e.tree_params.priors {
            Priors::Equal => "equal".to_string(),
            Priors::Custom(p) => {
                let cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                format!("custom:{}", cells.join(","))
            }
        };
        let _ = writeln!(s, "tree.priors = {priors}");
        let _ = writeln!(s, "tree.prune_measure = misclassification");
        let _ = writeln!(s, "schedule.bp_epochs = {}", e.schedule.bp_epochs);
        let _ = writeln!(
            s,
            "schedule.bp_learning_rate = {}",
            e.schedule.bp_learning_rate
        );
        let _ = writeln!(s, "schedule.cg_epochs = {}", e.schedule.cg_epochs);
        let _ = writeln!(s, "schedule.seed = {}", e.schedule.seed);
        let _ = writeln!(s, "experiment.repeats = {}", e.repeats);
        for severity in InjurySeverity::ALL {
            if let Some(h) = e.hidden_neurons.get(&severity) {
                let _ = writeln!(s, "experiment.hidden.{} = {h}", severity.token());
            }
        }
        let _ = writeln!(s, "generator.n_rows = {}", g.n_rows);
        let _ = writeln!(s, "generator.seed = {}", g.seed);
        let _ = writeln!(s, "generator.class_weights = {}", render_dist(&g.class_weights));
        for (i, rule) in g.rule_table.iter().enumerate() {
            let conditions: Vec<String> = rule
                .conditions
                .iter()
                .map(|(field, token)| format!("{}={token}", field.name()))
                .collect();
            let _ = writeln!(
                s,
                "generator.rule.{} = {} => {}",
                i + 1,
                conditions.join(" & "),
                render_dist(&rule.distribution)
            );
        }
        for (field, fraction) in &g.missingness {
            let _ = writeln!(s, "generator.missing.{} = {fraction}", field.name());
        }
        for (i, proxy) in g.proxy_pairs.iter().enumerate() {
            let _ = writeln!(
                s,
                "generator.proxy.{} = {} -> {} @ {}",
                i + 1,
                proxy.source.name(),
                proxy.proxy.name(),
                proxy.agreement
            );
        }
        let _ = writeln!(
            s,
            "generator.head_on_front_fraction = {}",
            g.head_on_front_fraction
        );
        s
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects a number, got `{value}`")))
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64, ConfigError> {
    value
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects an unsigned integer, got `{value}`")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects an unsigned integer, got `{value}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(err(
            line,
            format!("`{key}` expects `true` or `false`, got `{value}`"),
        )),
    }
}

fn parse_priors(line: usize, value: &str) -> Result<Priors, ConfigError> {
    if value == "equal" {
        return Ok(Priors::Equal);
    }
    if let Some(list) = value.strip_prefix("custom:") {
        let weights = list
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| err(line, format!("bad prior weight `{cell}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Priors::Custom(weights));
    }
    Err(err(
        line,
        format!("priors must be `equal` or `custom:w1,w2,...`, got `{value}`"),
    ))
}

/// `none:p,possible:p,nonincap:p,incap:p,fatal:p` — all five classes, once.
fn parse_dist(line: usize, value: &str) -> Result<SeverityDist, ConfigError> {
    let mut dist = [f64::NAN; 5];
    for cell in value.split(',') {
        let (token, weight) = cell
            .trim()
            .split_once(':')
            .ok_or_else(|| err(line, format!("expected `class:weight`, got `{cell}`")))?;
        let severity = InjurySeverity::parse_token(token.trim())
            .ok_or_else(|| err(line, format!("unknown severity class `{token}`")))?;
        let slot = &mut dist[severity.rank()];
        if !slot.is_nan() {
            return Err(err(line, format!("class `{token}` listed twice")));
        }
        *slot = weight
            .trim()
            .parse()
            .map_err(|_| err(line, format!("bad weight `{weight}`")))?;
    }
    if let Some(missing) = InjurySeverity::ALL.iter().find(|s| dist[s.rank()].is_nan()) {
        return Err(err(
            line,
            format!("distribution is missing class `{}`", missing.token()),
        ));
    }
    Ok(dist)
}

fn render_dist(dist: &SeverityDist) -> String {
    InjurySeverity::ALL
        .iter()
        .map(|s| format!("{}:{}", s.token(), dist[s.rank()]))
        .collect::<Vec<_>>()
        .join(",")
}

/// `field=token & field=token => class:p,...`
fn parse_rule(line: usize, value: &str) -> Result<Rule, ConfigError> {
    let (lhs, rhs) = value
        .split_once("=>")
        .ok_or_else(|| err(line, "rule needs `conditions => distribution`"))?;
    let conditions = lhs
        .split('&')
        .map(|clause| {
            let (field, token) = clause
                .trim()
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `field=token`, got `{clause}`")))?;
            let field = InputField::parse_name(field.trim())
                .ok_or_else(|| err(line, format!("unknown input field `{field}`")))?;
            Ok((field, token.trim().to_string()))
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Ok(Rule {
        conditions,
        distribution: parse_dist(line, rhs.trim())?,
    })
}

/// `source -> proxy @ agreement`
fn parse_proxy(line: usize, value: &str) -> Result<ProxyPair, ConfigError> {
    let (lhs, agreement) = value
        .split_once('@')
        .ok_or_else(|| err(line, "proxy needs `source -> proxy @ agreement`"))?;
    let (source, proxy) = lhs
        .split_once("->")
        .ok_or_else(|| err(line, "proxy needs `source -> proxy @ agreement`"))?;
    let source = InputField::parse_name(source.trim())
        .ok_or_else(|| err(line, format!("unknown input field `{source}`")))?;
    let proxy_field = InputField::parse_name(proxy.trim())
        .ok_or_else(|| err(line, format!("unknown input field `{proxy}`")))?;
    let agreement = agreement
        .trim()
        .parse()
        .map_err(|_| err(line, format!("bad agreement `{agreement}`")))?;
    Ok(ProxyPair {
        source,
        proxy: proxy_field,
        agreement,
    })
}

fn parse_table_index(line: usize, what: &str, text: &str) -> Result<usize, ConfigError> {
    let index: usize = text
        .parse()
        .map_err(|_| err(line, format!("bad {what} index `{text}`")))?;
    if index == 0 {
        return Err(err(line, format!("{what} indices start at 1")));
    }
    Ok(index)
}

/// Checks indices are 1..=K with no gaps and returns the values in order.
fn collect_table<T: Clone>(table: &BTreeMap<usize, T>, what: &str) -> Result<Vec<T>, ConfigError> {
    for (expect, &actual) in table.keys().enumerate() {
        if actual != expect + 1 {
            return Err(err(
                0,
                format!("{what} indices must be consecutive from 1; missing {what}.{}", expect + 1),
            ));
        }
    }
    Ok(table.values().cloned().collect())
}
