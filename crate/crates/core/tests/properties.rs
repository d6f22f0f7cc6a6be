use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plateau_core::cycles::simplex_volume;
use plateau_core::group::free::{inverse, is_reduced, multiply, primitive_root_word, reduce};
use plateau_core::{act, chordal_distance, MarkedGroup, SphereVector};

fn word() -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..12)
}

proptest! {
    #[test]
    fn reduction_is_idempotent(w in word()) {
        let r = reduce(&w);
        prop_assert!(is_reduced(&r));
        prop_assert_eq!(reduce(&r), r);
    }

    #[test]
    fn inverse_cancels(w in word()) {
        let r = reduce(&w);
        prop_assert!(multiply(&r, &inverse(&r)).is_empty());
    }

    #[test]
    fn products_associate(a in word(), b in word(), c in word()) {
        let (a, b, c) = (reduce(&a), reduce(&b), reduce(&c));
        prop_assert_eq!(multiply(&multiply(&a, &b), &c), multiply(&a, &multiply(&b, &c)));
    }

    #[test]
    fn root_powers_back(w in word()) {
        let r = reduce(&w);
        prop_assume!(!r.is_empty());
        let (root, k) = primitive_root_word(&r);
        let (_, again) = primitive_root_word(&root);
        prop_assert_eq!(again, 1);
        prop_assert!(k >= 1);
    }

    #[test]
    fn translation_is_an_isometry(seed in 0u64..1000, w in word()) {
        let g = MarkedGroup::free(2).unwrap();
        let gamma = g.eval_word(&w).unwrap();
        let ball = g.ball(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = SphereVector::random(&g, &ball, 1, &mut rng).unwrap();
        let v = SphereVector::random(&g, &ball, 1, &mut rng).unwrap();
        let before = chordal_distance(&u, &v).unwrap();
        let after = chordal_distance(&act(&gamma, &u).unwrap(), &act(&gamma, &v).unwrap()).unwrap();
        prop_assert!((before - after).abs() < 1e-12);
    }

    /// The rule is not symmetric in the vertices, so orders agree only up to
    /// quadrature error, far below the 1e-6 the volume needs.
    #[test]
    fn simplex_volume_ignores_vertex_order(seed in 0u64..1000) {
        let g = MarkedGroup::free(2).unwrap();
        let ball = g.ball(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vs: Vec<SphereVector> =
            (0..3).map(|_| SphereVector::random_nonnegative(&g, &ball, &mut rng).unwrap()).collect();
        let a = simplex_volume(&vs, 8).unwrap().volume;
        let b = simplex_volume(&[vs[2].clone(), vs[0].clone(), vs[1].clone()], 8).unwrap().volume;
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1e-3), "{a} {b}");
    }
}
