//! Property tests for the library's structural invariants: probability
//! kernels stay probabilities, serialization round-trips are lossless, the
//! generator is a pure function of its spec, and dataset transforms
//! partition rather than invent rows.

use proptest::prelude::*;

use crashforest_core::cart::{self, grow, Priors, PruneMeasure, TreeData, TreeParams};
use crashforest_core::dataset::{encode, one_vs_all, split, EncodedDataset, SplitSpec};
use crashforest_core::ges::{
    filter_head_on_front, parse_csv, select_model_variables, write_csv, CsvSchema, InjurySeverity,
};
use crashforest_core::mlp::{init_weights, model_from_text, model_to_text};
use crashforest_core::synth::{self, GeneratorSpec};
use crashforest_core::RunConfig;

fn spec_with(n_rows: usize, seed: u64, head_on_front_fraction: f64) -> GeneratorSpec {
    GeneratorSpec {
        n_rows,
        seed,
        head_on_front_fraction,
        ..GeneratorSpec::default()
    }
}

fn encoded_cohort(n_rows: usize, seed: u64) -> EncodedDataset {
    let (records, _) = synth::generate(&spec_with(n_rows, seed, 0.8)).expect("valid spec");
    let rows = select_model_variables(&filter_head_on_front(&records));
    encode(&rows).expect("nonempty cohort")
}

proptest! {
    /// Node probabilities are a probability vector and the Gini impurity of
    /// any such vector lies in [0, 1 − 1/k].
    #[test]
    fn node_probs_and_gini_stay_in_range(
        cells in prop::collection::vec((0u32..200, 1u32..50, 0.01f64..1.0), 1..=6),
    ) {
        prop_assume!(cells.iter().any(|&(c, _, _)| c > 0));
        let counts: Vec<u32> = cells.iter().map(|&(c, _, _)| c).collect();
        let root: Vec<u32> = cells.iter().map(|&(c, extra, _)| c + extra).collect();
        let raw: Vec<f64> = cells.iter().map(|&(_, _, p)| p).collect();
        let total: f64 = raw.iter().sum();
        let priors: Vec<f64> = raw.iter().map(|p| p / total).collect();

        let probs = cart::node_probs(&counts, &priors, &root).expect("matching lengths");
        prop_assert_eq!(probs.len(), counts.len());
        for &p in &probs {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p), "probability {} out of range", p);
        }
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9, "probabilities sum to {}", sum);

        let g = cart::gini(&probs);
        let k = counts.len() as f64;
        prop_assert!(g >= -1e-12, "gini {} below zero", g);
        prop_assert!(g <= 1.0 - 1.0 / k + 1e-12, "gini {} above the {}-class maximum", g, k);
    }

    /// Serialized network weights parse back to bit-identical parameters.
    #[test]
    fn mlp_text_round_trip_is_lossless(
        input_dim in 1usize..12,
        hidden_dim in 1usize..10,
        seed in any::<u64>(),
    ) {
        let model = init_weights(input_dim, hidden_dim, seed);
        let parsed = model_from_text(&model_to_text(&model)).expect("own output parses");
        prop_assert_eq!(parsed.to_flat(), model.to_flat());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Writing generated records to CSV and parsing them back loses nothing:
    /// same records, no rejects, every row read.
    #[test]
    fn csv_round_trip_preserves_records(
        seed in any::<u64>(),
        n_rows in 1usize..200,
        head in 0.0f64..=1.0,
    ) {
        let (records, _) = synth::generate(&spec_with(n_rows, seed, head)).expect("valid spec");
        let mut bytes = Vec::new();
        write_csv(&records, &mut bytes).expect("in-memory write");
        let (parsed, report) = parse_csv(bytes.as_slice(), &CsvSchema::default()).expect("own CSV parses");
        prop_assert_eq!(report.rows_read, n_rows);
        prop_assert_eq!(report.rows_rejected, 0);
        prop_assert_eq!(parsed, records);
    }

    /// The generator is a pure function of its spec, and the seed matters.
    #[test]
    fn generator_is_deterministic_in_its_spec(seed in any::<u64>(), n_rows in 30usize..150) {
        let spec = spec_with(n_rows, seed, 0.8);
        let a = synth::generate(&spec).expect("valid spec");
        let b = synth::generate(&spec).expect("valid spec");
        prop_assert_eq!(&a, &b);
        let other = synth::generate(&spec_with(n_rows, seed ^ 1, 0.8)).expect("valid spec");
        prop_assert_ne!(&a.0, &other.0);
    }

    /// Train/test splitting partitions the rows; stratification keeps every
    /// class's test share within one row of the requested fraction.
    #[test]
    fn split_partitions_rows_and_stratifies(
        seed in any::<u64>(),
        fraction in 0.05f64..0.95,
        stratified in any::<bool>(),
        n_rows in 60usize..250,
    ) {
        let ds = encoded_cohort(n_rows, seed);
        let result = split(
            &ds,
            &SplitSpec { test_fraction: fraction, seed: seed.rotate_left(17), stratified },
        );
        let (train, test) = match result {
            Err(refusal) => {
                // Stratification documents a precondition: every observed
                // class needs at least two rows. The refusal is only valid
                // when some class really is a singleton.
                let singleton = (0..ds.n_classes).any(|class| {
                    ds.targets.iter().filter(|&&t| t == class).count() == 1
                });
                prop_assert!(
                    stratified && singleton,
                    "split refused without a singleton class: {}",
                    refusal
                );
                return Ok(());
            }
            Ok(parts) => parts,
        };
        prop_assert_eq!(train.n_rows() + test.n_rows(), ds.n_rows());

        for class in 0..ds.n_classes {
            let total = ds.targets.iter().filter(|&&t| t == class).count();
            let in_train = train.targets.iter().filter(|&&t| t == class).count();
            let in_test = test.targets.iter().filter(|&&t| t == class).count();
            prop_assert_eq!(in_train + in_test, total, "class {} rows not partitioned", class);
            if stratified {
                let drift = (in_test as f64 - fraction * total as f64).abs();
                prop_assert!(
                    drift <= 1.0 + 1e-9,
                    "class {} test share off by {} rows under stratification",
                    class,
                    drift
                );
            }
        }
    }

    /// One-against-all relabeling flags exactly the positive class and
    /// touches nothing else.
    #[test]
    fn one_vs_all_binarizes_exactly(seed in any::<u64>(), n_rows in 60usize..250, class in 0usize..5) {
        let ds = encoded_cohort(n_rows, seed);
        let positive = InjurySeverity::ALL[class];
        let binary = one_vs_all(&ds, positive).expect("encoded data is multiclass");
        prop_assert_eq!(binary.n_classes, 2);
        prop_assert_eq!(binary.n_rows(), ds.n_rows());
        prop_assert_eq!(&binary.features, &ds.features);
        for (bin, multi) in binary.targets.iter().zip(&ds.targets) {
            prop_assert_eq!(*bin, usize::from(*multi == positive.rank()));
        }
    }

    /// A resolved configuration file parses back to the configuration that
    /// rendered it.
    #[test]
    fn config_render_parse_round_trip(
        split_seed in any::<u64>(),
        nn_seed in any::<u64>(),
        gen_seed in any::<u64>(),
        test_fraction in 0.05f64..0.95,
        repeats in 1usize..5,
        hidden in prop::collection::vec(1usize..120, 5),
        n_rows in 1usize..20_000,
        bp_epochs in 0usize..200,
        cg_epochs in 0usize..600,
        learning_rate in 0.001f64..0.5,
    ) {
        let mut config = RunConfig::default();
        config.experiment.split.seed = split_seed;
        config.experiment.split.test_fraction = test_fraction;
        config.experiment.schedule.seed = nn_seed;
        config.experiment.schedule.bp_epochs = bp_epochs;
        config.experiment.schedule.cg_epochs = cg_epochs;
        config.experiment.schedule.bp_learning_rate = learning_rate;
        config.experiment.repeats = repeats;
        for (severity, width) in InjurySeverity::ALL.into_iter().zip(hidden) {
            config.experiment.hidden_neurons.insert(severity, width);
        }
        config.generator.seed = gen_seed;
        config.generator.n_rows = n_rows;

        let parsed = RunConfig::parse(&config.render()).expect("own rendering parses");
        prop_assert_eq!(parsed, config);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A grown tree survives the text round trip exactly, surrogates and
    /// all.
    #[test]
    fn tree_text_round_trip_is_exact(seed in any::<u64>(), n_rows in 80usize..250) {
        let ds = encoded_cohort(n_rows, seed);
        let binary = one_vs_all(&ds, InjurySeverity::PossibleInjury).expect("multiclass");
        let params = TreeParams {
            n_surrogates: 2,
            priors: Priors::Equal,
            prune_measure: PruneMeasure::MisclassificationError,
            ..TreeParams::default()
        };
        let tree = grow(&TreeData::from_dataset(&binary), &params).expect("valid growth inputs");
        let parsed = cart::tree_from_text(&cart::tree_to_text(&tree)).expect("own output parses");
        prop_assert_eq!(parsed, tree);
    }
}
