use std::sync::Arc;

use proptest::prelude::*;
use spfl_core::flow::{projection_pair_flow, spectral_flow, spectral_flow_oracle, FlowOptions};
use spfl_core::paths::{concatenate, conjugate, linear_segment, pushforward, OperatorPath};
use spfl_core::projection::projection_index;
use spfl_core::random::{random_invertible, random_piecewise_linear, random_projection, random_unitary_path, seeded};
use spfl_core::scalar::NormalizingFunction;
use spfl_core::winding::{exp_loop, random_closure_loop, refine_winding};

fn flow(p: &OperatorPath) -> i64 {
    spectral_flow(p, &FlowOptions::default()).unwrap().value
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn flow_is_additive_under_concatenation(seed in any::<u64>(), dim in 2usize..6) {
        let mut rng = seeded(seed);
        let p = random_piecewise_linear(&mut rng, dim, 3, 2.0, 0.2);
        let next = random_invertible(&mut rng, dim, 0.2, 2.0);
        let q = linear_segment(&p.at_end().unwrap(), &next).unwrap();
        let pq = concatenate(&p, &q).unwrap();
        prop_assert_eq!(flow(&pq), flow(&p) + flow(&q));
    }

    #[test]
    fn reversal_negates_flow(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = seeded(seed);
        let p = random_piecewise_linear(&mut rng, dim, 4, 2.0, 0.2);
        prop_assert_eq!(flow(&p.reversed()), -flow(&p));
    }

    #[test]
    fn flow_equals_endpoint_count_difference(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = seeded(seed);
        let p = random_piecewise_linear(&mut rng, dim, 4, 2.0, 0.2);
        let count = |t: f64| {
            let e = spfl_core::operator::eigh(&p.sample(t).unwrap()).unwrap();
            e.eigenvalues.iter().filter(|&&l| l >= 0.0).count() as i64
        };
        prop_assert_eq!(flow(&p), count(1.0) - count(0.0));
    }

    #[test]
    fn pushforward_preserves_flow(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = seeded(seed);
        let p = random_piecewise_linear(&mut rng, dim, 3, 2.0, 0.2);
        let q = pushforward(&p, Arc::new(f64::atan)).unwrap();
        prop_assert_eq!(flow(&q), flow(&p));
    }

    #[test]
    fn unitary_conjugation_preserves_flow(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = seeded(seed);
        let p = random_piecewise_linear(&mut rng, dim, 3, 2.0, 0.2);
        let u = random_unitary_path(&mut rng, dim, 0.0, 1.0, 3.0);
        let q = conjugate(&p, &u).unwrap();
        prop_assert_eq!(flow(&q), flow(&p));
    }

    #[test]
    fn oracle_agrees_when_resolved(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = seeded(seed);
        let p = random_piecewise_linear(&mut rng, dim, 3, 2.0, 0.2);
        // The oracle may decline an under-resolved grid; it must never disagree.
        if let Ok(oracle) = spectral_flow_oracle(&p, 2001) {
            prop_assert_eq!(oracle, flow(&p));
        }
    }

    #[test]
    fn projection_pair_identities(seed in any::<u64>(), dim in 2usize..7, rp in 0usize..7, rq in 0usize..7) {
        let (rp, rq) = (rp.min(dim), rq.min(dim));
        let mut rng = seeded(seed);
        let p = random_projection(&mut rng, dim, rp);
        let q = random_projection(&mut rng, dim, rq);
        let opts = FlowOptions::default();
        let ind = projection_index(&p, &q).unwrap();
        prop_assert_eq!(ind, -projection_index(&q, &p).unwrap());
        prop_assert_eq!(ind, rp as i64 - rq as i64);
        prop_assert_eq!(projection_pair_flow(&p, &q, &opts).unwrap(), ind);
    }

    #[test]
    fn winding_of_closed_loop_equals_flow(seed in any::<u64>(), dim in 1usize..4) {
        let mut rng = seeded(seed);
        let p = random_closure_loop(&mut rng, dim, 3, 2.0).unwrap();
        let s = exp_loop(&p, NormalizingFunction::new(1)).unwrap();
        let w = refine_winding(&s, 513, 16_400).unwrap();
        prop_assert_eq!(w.value, flow(&p));
    }
}
