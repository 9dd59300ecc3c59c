mod common;

use proptest::prelude::*;
use tahp_core::synthesis::compute_locals;
use tahp_core::{
    principal_eigenvector, synthesize, ComparisonMatrix, Level, PowerIteration, RandomIndexTable, SolveOptions, Theta,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn global_weights_and_scores_are_conserved(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let model = common::Spec::random(&mut rng, 1).build();
        let result = synthesize(&model, &SolveOptions::default()).unwrap();
        for node in model.nodes().iter().filter(|n| n.level != Level::Alternative && !n.children.is_empty()) {
            let parent = result.global_weight(node.id.as_str()).unwrap();
            let children: f64 = node.children.iter().map(|c| result.global_weight(c.as_str()).unwrap()).sum();
            prop_assert!((parent - children).abs() < 1e-10, "{}: {parent} vs {children}", node.id);
        }
        let total: f64 = result.alternative_scores.iter().map(|s| s.score).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(result.overall_inconsistency >= 0.0);
    }

    #[test]
    fn identical_alternative_matrices_give_that_matrix_priorities(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let spec = common::Spec::random(&mut rng, 1);
        let n = spec.alternatives.len();
        let upper = common::random_upper(&mut rng, n);
        let model = spec.with_identical_alternative_matrices(&upper).build();
        let result = synthesize(&model, &SolveOptions::default()).unwrap();
        let m = ComparisonMatrix::from_ternary(n, Theta::new(spec.theta).unwrap(), &upper).unwrap();
        let pv = principal_eigenvector(&m, &PowerIteration::default(), &RandomIndexTable::saaty()).unwrap();
        for (s, w) in result.alternative_scores.iter().zip(&pv.weights) {
            prop_assert!((s.score - w).abs() < 1e-10);
        }
    }

    #[test]
    fn criteria_declaration_order_does_not_change_scores(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let spec = common::Spec::random(&mut rng, 2);
        let order = spec.shuffled_criteria_order(&mut rng);
        let a = synthesize(&spec.build(), &SolveOptions::default()).unwrap();
        let b = synthesize(&spec.build_with_criteria_order(&order), &SolveOptions::default()).unwrap();
        for (x, y) in a.alternative_scores.iter().zip(&b.alternative_scores) {
            prop_assert!((x.score - y.score).abs() < 1e-10);
        }
        prop_assert!((a.overall_inconsistency - b.overall_inconsistency).abs() < 1e-10);
    }

    #[test]
    fn sequential_and_parallel_agree(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let model = common::Spec::random(&mut rng, 1).build();
        let par = synthesize(&model, &SolveOptions::default()).unwrap();
        let seq = synthesize(&model, &SolveOptions::sequential()).unwrap();
        prop_assert_eq!(par, seq);
    }
}

#[test]
fn locals_cover_every_context() {
    let mut rng = common::rng(5);
    let model = common::Spec::random(&mut rng, 3).build();
    let locals = compute_locals(&model, &SolveOptions::default()).unwrap();
    assert_eq!(locals.len(), model.contexts().len());
}
