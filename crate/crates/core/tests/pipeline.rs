use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use invpress_core::experiment::{execute, Command, ExperimentConfig, RunOptions};
use invpress_core::pressure::{a_n, Budgets};
use invpress_core::system::{
    ControlAlphabet, ControlSystem, IntervalBox, QuantizedSystem, WeightFunction,
};
use invpress_core::trajectory::VerificationMode;

fn scalar(a: f64, b: f64, controls: usize, cells: usize) -> ControlSystem {
    QuantizedSystem::affine(
        DMatrix::from_element(1, 1, a),
        DMatrix::from_element(1, 1, b),
        DVector::zeros(1),
        ControlAlphabet::equispaced(controls, -1.0, 1.0).unwrap(),
        IntervalBox::from_intervals(&[(-0.9, 0.9)]).unwrap(),
        vec![cells],
        1e-3,
    )
    .unwrap()
    .into()
}

fn weights(sys: &ControlSystem, seed: &[i8]) -> WeightFunction {
    let k = sys.alphabet_len();
    WeightFunction::tabulated((0..k).map(|i| seed[i % seed.len()] as f64 / 8.0).collect()).unwrap()
}

fn system_strategy() -> impl Strategy<Value = ControlSystem> {
    (
        prop::sample::select(vec![-2.0, -1.5, 0.5, 1.25, 2.0]),
        prop::sample::select(vec![0.5, 1.0]),
        2usize..5,
        prop::sample::select(vec![8usize, 16, 30]),
    )
        .prop_map(|(a, b, k, cells)| scalar(a, b, k, cells))
}

const CENTER: VerificationMode = VerificationMode::Center { delta: 1e-3 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dominance_and_pruning_do_not_change_a_n(sys in system_strategy(), w in prop::collection::vec(-8i8..8, 1..5), n in 1usize..4) {
        let f = weights(&sys, &w);
        let fast = a_n(&sys, &f, n, &CENTER, &Budgets::default()).unwrap();
        let mut plain = Budgets::default();
        plain.enumeration.dominance = false;
        plain.enumeration.prune = false;
        let slow = a_n(&sys, &f, n, &CENTER, &plain).unwrap();
        prop_assert_eq!(fast.exact, slow.exact);
        if fast.upper.is_finite() || slow.upper.is_finite() {
            prop_assert!((fast.upper - slow.upper).abs() <= 1e-9 * fast.upper.max(slow.upper));
        }
    }

    #[test]
    fn merged_offsets_give_upper_bounds(sys in system_strategy(), n in 1usize..4) {
        let f = WeightFunction::zero(sys.alphabet_len());
        let exact = a_n(&sys, &f, n, &CENTER, &Budgets::default()).unwrap();
        let mut merged = Budgets::default();
        merged.enumeration.merge_tolerance = 0.05;
        let approx = a_n(&sys, &f, n, &CENTER, &merged).unwrap();
        prop_assert!(approx.upper >= exact.upper * (1.0 - 1e-12));
    }

    #[test]
    fn verification_modes_are_ordered(sys in system_strategy(), n in 1usize..4) {
        // box domains sit inside center domains, and outer admits more than inner
        let f = WeightFunction::zero(sys.alphabet_len());
        let b = Budgets::default();
        let center = a_n(&sys, &f, n, &CENTER, &b).unwrap().upper;
        let boxed = a_n(&sys, &f, n, &VerificationMode::Box { delta: 1e-3 }, &b).unwrap().upper;
        let outer = a_n(&sys, &f, n, &VerificationMode::Outer { epsilon: 0.05 }, &b).unwrap().upper;
        prop_assert!(center <= boxed * (1.0 + 1e-12));
        prop_assert!(outer <= center * (1.0 + 1e-12));
    }
}

#[test]
fn config_round_trips_through_json() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/sampled_outer.json"
    ))
    .unwrap();
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn table_config_matches_fixture_value() {
    let cfg = ExperimentConfig::from_json(
        r#"{"system": {"kind": "table", "table": [[0, 1], [0, null]], "interior": [true, true],
            "labels": ["a", "b"]},
            "weight": {"kind": "table", "values": [1.0, 0.0]}, "n_max": 8}"#,
    )
    .unwrap();
    let from_table = execute(Command::Estimate, &cfg, &RunOptions::default()).unwrap();
    let m3 = ExperimentConfig::from_json(
        r#"{"system": {"kind": "m3"}, "weight": {"kind": "table", "values": [1.0, 0.0]}, "n_max": 8}"#,
    )
    .unwrap();
    let fixture = execute(Command::Estimate, &m3, &RunOptions::default()).unwrap();
    assert_eq!(from_table.report["result"], fixture.report["result"]);
}
