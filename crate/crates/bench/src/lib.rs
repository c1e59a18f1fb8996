//! Shared fixtures for the pipeline benchmarks: deterministic planted
//! populations at benchmark-friendly sizes, already filtered to the modeled
//! cohort and encoded.

use crashforest_core::dataset::{encode, one_vs_all, EncodedDataset};
use crashforest_core::ges::{filter_head_on_front, select_model_variables, InjurySeverity};
use crashforest_core::synth::{self, GeneratorSpec};

pub fn planted_spec(n_rows: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        n_rows,
        seed,
        ..GeneratorSpec::default()
    }
}

/// Head-on/front-impact cohort of a planted population, encoded for both
/// models (~80% of `n_rows` survives the cohort filter).
pub fn encoded_cohort(n_rows: usize, seed: u64) -> EncodedDataset {
    let (records, _) = synth::generate(&planted_spec(n_rows, seed)).expect("valid spec");
    let rows = select_model_variables(&filter_head_on_front(&records));
    encode(&rows).expect("nonempty cohort")
}

/// The possible-injury-vs-rest problem over the encoded cohort.
pub fn binary_problem(n_rows: usize, seed: u64) -> EncodedDataset {
    one_vs_all(&encoded_cohort(n_rows, seed), InjurySeverity::PossibleInjury)
        .expect("encoded cohorts are severity-labeled")
}
