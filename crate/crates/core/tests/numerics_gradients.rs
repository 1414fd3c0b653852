use proptest::prelude::*;
use semgraph_core::numerics::catalog::primitive_cases;
use semgraph_core::numerics::{finite_difference_check, FdConfig, Tape};
use semgraph_core::par::Execution;

fn cfg(seed: u64) -> FdConfig {
    FdConfig { seed, execution: Execution::Sequential, ..FdConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_primitive_matches_central_differences(seed in any::<u64>()) {
        for case in primitive_cases() {
            let store = case.store(seed).unwrap();
            let report = finite_difference_check(case.objective, &store, &cfg(seed)).unwrap();
            // a random draw can put a gradient near zero, where only the absolute
            // rounding noise of the difference quotient (~ulp(f) / eps) is meaningful
            for c in &report.coordinates {
                let ok = c.rel_err < 1e-6 || (c.analytic - c.numeric).abs() < 1e-10;
                prop_assert!(ok, "{}: {:?}", case.name, c);
            }
        }
    }

    #[test]
    fn softmax_rows_sum_to_one(xs in prop::collection::vec(-30.0f64..30.0, 1..40)) {
        let t = Tape::new();
        let s: f64 = t.vector(xs).softmax(0).unwrap().value().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn primitive_losses_are_bit_reproducible() {
    for case in primitive_cases() {
        let run = || {
            let store = case.store(42).unwrap();
            let tape = Tape::new();
            let b = semgraph_core::numerics::Binding::new(&tape, &store);
            (case.objective)(&b).unwrap().item().to_bits()
        };
        assert_eq!(run(), run(), "{}", case.name);
    }
}
