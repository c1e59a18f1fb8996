//! End-to-end tests of the binary's contract: exit codes, output files,
//! stdout/stderr separation, seed overrides, and the dump formats. A small
//! configuration keeps every invocation fast.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crashforest_core::{cart, mlp};

/// 800 generated rows, one repeat, four-neuron networks on a short
/// schedule — runs in seconds while all five classes stay populated.
const SMALL_CONFIG: &str = "\
generator.n_rows = 800
generator.seed = 11
split.seed = 5
schedule.seed = 7
schedule.bp_epochs = 4
schedule.cg_epochs = 4
experiment.repeats = 1
experiment.hidden.none = 4
experiment.hidden.possible = 4
experiment.hidden.nonincap = 4
experiment.hidden.incap = 4
experiment.hidden.fatal = 4
";

struct Fixture {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::TempDir::new().expect("create temp dir");
        let config = dir.path().join("small.cfg");
        std::fs::write(&config, SMALL_CONFIG).expect("write config");
        Fixture { dir, config }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        let mut full = vec!["--config", self.config.to_str().unwrap()];
        full.extend_from_slice(args);
        Command::new(env!("CARGO_BIN_EXE_crashforest"))
            .args(&full)
            .env("CRASHFOREST_NO_COLOR", "1")
            .output()
            .expect("spawn binary")
    }

    /// Runs and requires success, returning stdout.
    fn run_ok(&self, args: &[&str]) -> Vec<u8> {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "`crashforest {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    }

    fn synth(&self, name: &str) -> PathBuf {
        let csv = self.path(name);
        self.run_ok(&["synth", csv.to_str().unwrap()]);
        csv
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn synth_is_deterministic_and_writes_a_truth_sidecar() {
    let fx = Fixture::new();
    let a = fx.synth("a.csv");
    let b = fx.synth("b.csv");
    assert_eq!(read(&a), read(&b), "same config must generate identical CSVs");

    let sidecar = read(&fx.path("a.csv.truth"));
    let text = String::from_utf8(sidecar).expect("sidecar is UTF-8");
    assert!(text.starts_with("ground-truth v1"));
    assert!(text.contains("bayes_accuracy_pct"));
    assert_eq!(read(&fx.path("a.csv.truth")), read(&fx.path("b.csv.truth")));
}

#[test]
fn seed_flag_overrides_the_generator() {
    let fx = Fixture::new();
    let one = fx.path("seed1.csv");
    let one_again = fx.path("seed1b.csv");
    let two = fx.path("seed2.csv");
    fx.run_ok(&["--seed", "1", "synth", one.to_str().unwrap()]);
    fx.run_ok(&["--seed", "1", "synth", one_again.to_str().unwrap()]);
    fx.run_ok(&["--seed", "2", "synth", two.to_str().unwrap()]);
    assert_eq!(read(&one), read(&one_again));
    assert_ne!(read(&one), read(&two), "different seeds must change the data");
}

#[test]
fn run_writes_both_report_formats_and_prints_the_chosen_one() {
    let fx = Fixture::new();
    let csv = fx.synth("data.csv");
    let stem = fx.path("report");

    let out = fx.run(&[
        "run",
        csv.to_str().unwrap(),
        stem.to_str().unwrap(),
        "--emit",
        "records",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Machine format on stdout, resolved config on stderr.
    let stdout = String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8");
    assert!(stdout.starts_with("format=results-v1"));
    let stderr = String::from_utf8(out.stderr).expect("stderr is UTF-8");
    assert!(stderr.contains("# resolved configuration"));

    // Both files exist regardless of the emit choice; stdout matches the
    // records file byte for byte.
    let txt = read(&fx.path("report.txt"));
    let records = read(&fx.path("report.records"));
    assert_eq!(out.stdout, records);
    let table = String::from_utf8(txt).expect("text report is UTF-8");
    assert!(table.contains("# Hidden Neurons"));
    assert!(table.contains("paper-reported, not reproduced"));
}

#[test]
fn emit_text_prints_exactly_the_text_report() {
    let fx = Fixture::new();
    let csv = fx.synth("data.csv");
    let stem = fx.path("textreport");
    let stdout = fx.run_ok(&["run", csv.to_str().unwrap(), stem.to_str().unwrap()]);
    assert_eq!(
        stdout,
        read(&fx.path("textreport.txt")),
        "default emit must print the text report unchanged"
    );

    // The written reports do not depend on the emit choice.
    let stem2 = fx.path("recreport");
    fx.run_ok(&[
        "run",
        csv.to_str().unwrap(),
        stem2.to_str().unwrap(),
        "--emit",
        "records",
    ]);
    assert_eq!(read(&fx.path("textreport.txt")), read(&fx.path("recreport.txt")));
    assert_eq!(
        read(&fx.path("textreport.records")),
        read(&fx.path("recreport.records"))
    );
}

#[test]
fn importance_rejects_unknown_classes_listing_the_valid_tokens() {
    let fx = Fixture::new();
    let csv = fx.synth("data.csv");
    let out = fx.run(&["importance", csv.to_str().unwrap(), "catastrophic"]);
    assert_eq!(out.status.code(), Some(2), "unknown class is a usage error");
    let stderr = String::from_utf8(out.stderr).expect("stderr is UTF-8");
    for token in ["none", "possible", "nonincap", "incap", "fatal"] {
        assert!(stderr.contains(token), "error should list `{token}`: {stderr}");
    }
}

#[test]
fn importance_ranks_every_model_variable() {
    let fx = Fixture::new();
    let csv = fx.synth("data.csv");
    let stdout = fx.run_ok(&["importance", csv.to_str().unwrap(), "fatal"]);
    let text = String::from_utf8(stdout).expect("stdout is UTF-8");
    assert!(text.starts_with("Variable sensitivity for class `fatal`"));
    // Header, column labels, then one row per model variable.
    assert_eq!(text.lines().count(), 2 + 11);
}

#[test]
fn missing_input_file_is_an_io_error() {
    let fx = Fixture::new();
    let out = fx.run(&["run", "no-such-file.csv", "report"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_config_is_a_usage_error_with_a_line_number() {
    let fx = Fixture::new();
    let bad = fx.path("bad.cfg");
    std::fs::write(&bad, "generator.n_rows = 100\nwhat is this\n").expect("write config");
    let out = Command::new(env!("CARGO_BIN_EXE_crashforest"))
        .args(["--config", bad.to_str().unwrap(), "synth", "x.csv"])
        .env("CRASHFOREST_NO_COLOR", "1")
        .output()
        .expect("spawn binary");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).expect("stderr is UTF-8");
    assert!(stderr.contains("line 2"), "error should cite the line: {stderr}");
}

#[test]
fn cohort_missing_a_class_is_a_data_error() {
    let fx = Fixture::new();
    // Replace the default rule table too: class_weights alone only covers
    // rows no rule matches.
    let single = fx.path("single.cfg");
    std::fs::write(
        &single,
        "generator.n_rows = 300\n\
         generator.class_weights = none:0,possible:0,nonincap:0,incap:0,fatal:1\n\
         generator.rule.1 = alcohol_use=yes => none:0,possible:0,nonincap:0,incap:0,fatal:1\n",
    )
    .expect("write config");
    let csv = fx.path("fatal-only.csv");
    let synth = Command::new(env!("CARGO_BIN_EXE_crashforest"))
        .args(["--config", single.to_str().unwrap(), "synth", csv.to_str().unwrap()])
        .env("CRASHFOREST_NO_COLOR", "1")
        .output()
        .expect("spawn binary");
    assert!(synth.status.success());

    let out = Command::new(env!("CARGO_BIN_EXE_crashforest"))
        .args([
            "--config",
            single.to_str().unwrap(),
            "run",
            csv.to_str().unwrap(),
            fx.path("report").to_str().unwrap(),
        ])
        .env("CRASHFOREST_NO_COLOR", "1")
        .output()
        .expect("spawn binary");
    assert_eq!(out.status.code(), Some(4), "one-class data cannot run one-against-all");
    let stderr = String::from_utf8(out.stderr).expect("stderr is UTF-8");
    assert!(stderr.contains("none"), "error should name a missing class: {stderr}");
}

#[test]
fn tree_dump_emits_a_parseable_tree() {
    let fx = Fixture::new();
    let csv = fx.synth("data.csv");
    let stdout = fx.run_ok(&["tree-dump", csv.to_str().unwrap(), "possible"]);
    let text = String::from_utf8(stdout).expect("stdout is UTF-8");
    let tree = cart::tree_from_text(&text).expect("dump parses back into a tree");
    assert!(tree.n_nodes() >= 1);
}

#[test]
fn model_dump_emits_parseable_weights() {
    let fx = Fixture::new();
    let csv = fx.synth("data.csv");
    let stdout = fx.run_ok(&["model-dump", csv.to_str().unwrap(), "fatal"]);
    let text = String::from_utf8(stdout).expect("stdout is UTF-8");
    let model = mlp::model_from_text(&text).expect("dump parses back into a model");
    assert_eq!(model.hidden_dim(), 4, "dump must honor the configured width");
}
