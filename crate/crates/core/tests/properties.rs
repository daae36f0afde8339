use fracheat::field::{moment, norm_q_ell, Field, Grid1D};
use proptest::prelude::*;

fn field(values: Vec<f64>) -> Field {
    let half = (values.len() - 1) / 2;
    let mut v = values;
    v.truncate(2 * half + 1);
    Field::new(Grid1D::new(0.25, half).unwrap(), v).unwrap()
}

fn q_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)]
}

proptest! {
    #[test]
    fn norm_is_homogeneous(v in prop::collection::vec(-5.0..5.0f64, 3..41), c in -4.0..4.0f64,
                           q in q_strategy(), ell in 0.0..2.0f64) {
        let f = field(v);
        let a = norm_q_ell(&f.scaled(c), q, ell);
        let b = c.abs() * norm_q_ell(&f, q, ell);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn norm_satisfies_triangle_inequality(v in prop::collection::vec(-5.0..5.0f64, 21), w in prop::collection::vec(-5.0..5.0f64, 21),
                                          q in q_strategy(), ell in 0.0..2.0f64) {
        let (f, g) = (field(v), field(w));
        let lhs = norm_q_ell(&f.add(&g).unwrap(), q, ell);
        prop_assert!(lhs <= norm_q_ell(&f, q, ell) + norm_q_ell(&g, q, ell) + 1e-12);
    }

    #[test]
    fn moments_are_linear(v in prop::collection::vec(-5.0..5.0f64, 21), w in prop::collection::vec(-5.0..5.0f64, 21),
                          a in -3.0..3.0f64, alpha in 0u32..4) {
        let (f, g) = (field(v), field(w));
        let lhs = moment(&f.scaled(a).add(&g).unwrap(), alpha);
        let rhs = a * moment(&f, alpha) + moment(&g, alpha);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }
}
