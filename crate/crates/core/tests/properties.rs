//! Property tests for the protocol invariants: conservation, convexity,
//! topology bijections, schedule structure, and mean preservation of the
//! subagent lifting.

use num_rational::BigRational;
use proptest::prelude::*;

use ringavg_core::{
    even_round_matching, fold_from_virtual_ring, lift_to_virtual_ring, mean_oracle,
    pairwise_update, two_coloring, verify_matching, weight, RingSize, Scalar,
};

fn rational() -> impl Strategy<Value = BigRational> {
    (-10_000i64..10_000, 1u64..100).prop_map(|(num, den)| BigRational::from_ratio(num, den))
}

fn unit_weight() -> impl Strategy<Value = BigRational> {
    (0u64..=64, 1u64..=64).prop_map(|(num, den)| {
        let num = num.min(den);
        BigRational::from_ratio(num as i64, den)
    })
}

proptest! {
    #[test]
    fn update_conserves_the_pair_sum(xi in rational(), xj in rational(), alpha in unit_weight()) {
        let (a, b) = pairwise_update(&xi, &xj, &alpha);
        prop_assert_eq!(a + b, xi + xj);
    }

    #[test]
    fn update_stays_inside_the_interval(xi in rational(), xj in rational(), alpha in unit_weight()) {
        let lo = xi.clone().min(xj.clone());
        let hi = xi.clone().max(xj.clone());
        let (a, b) = pairwise_update(&xi, &xj, &alpha);
        prop_assert!(lo <= a && a <= hi);
        prop_assert!(lo <= b && b <= hi);
    }

    #[test]
    fn weights_are_convex_coefficients(k in 1usize..200, n in 1usize..100) {
        let alpha: BigRational = weight(k, n).unwrap();
        prop_assert!(alpha >= BigRational::from_int(0));
        prop_assert!(alpha <= BigRational::from_int(1));
    }

    #[test]
    fn schedule_boundary_and_tail(n in 1usize..100) {
        prop_assert_eq!(weight::<BigRational>(n, n).unwrap(), BigRational::from_ratio(1, 2));
        prop_assert_eq!(weight::<BigRational>(n + 1, n).unwrap(), BigRational::from_int(0));
        prop_assert_eq!(weight::<BigRational>(3 * n, n).unwrap(), BigRational::from_int(0));
    }

    #[test]
    fn post_pre_are_mutually_inverse_bijections(m in 3usize..200, offset in 0usize..200) {
        let ring = RingSize::new(m).unwrap();
        let i = offset % m + 1;
        prop_assert_eq!(ring.post(ring.pre(i).unwrap()).unwrap(), i);
        prop_assert_eq!(ring.pre(ring.post(i).unwrap()).unwrap(), i);
        // walking all the way around comes back home
        let mut j = i;
        for _ in 0..m {
            j = ring.post(j).unwrap();
        }
        prop_assert_eq!(j, i);
    }

    #[test]
    fn lift_preserves_the_mean(values in prop::collection::vec(rational(), 3..30)) {
        let mut values = values;
        if values.len() % 2 == 0 {
            values.pop();
        }
        let lifted = lift_to_virtual_ring(&values).unwrap();
        prop_assert_eq!(lifted.len(), 2 * values.len());
        prop_assert_eq!(
            mean_oracle(&lifted).unwrap(),
            mean_oracle(&values).unwrap()
        );
        prop_assert_eq!(fold_from_virtual_ring(&lifted).unwrap(), values);
    }

    #[test]
    fn even_matchings_alternate_between_the_two_classes(m in 2usize..60, k in 1usize..40) {
        let m = 2 * m;
        let ring = RingSize::new(m).unwrap();
        let (a, b) = two_coloring(ring).unwrap();
        let matching = even_round_matching(k, ring).unwrap();
        let expected = if k % 2 == 1 { &a.matching } else { &b.matching };
        prop_assert_eq!(&matching, expected);
        prop_assert!(verify_matching(matching.edges(), m));
        prop_assert_eq!(matching.len(), m / 2);
    }
}
