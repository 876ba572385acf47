use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eflab_core::algebra::{
    avg_two_unitaries, haar_unitary_with, make_algebra, nearest_unitary, random_ball_element, AlgebraElement, TracialAlgebra, DYADIC_GRID_BITS,
};
use eflab_core::banach::{gauge_norm, BanachPairView};
use eflab_core::eval::{eval_qf, Assignment};
use eflab_core::formula::{op_transform, parse, strip_quantifiers, unitary_transform, Formula, Quantifier, Sort, UnitaryMode};

const SPECS: [&str; 4] = ["C", "M2", "C+M2:1/3,2/3", "M3"];

fn algebra(i: usize) -> Arc<TracialAlgebra> {
    Arc::new(make_algebra(SPECS[i % SPECS.len()]).unwrap())
}

fn ball(alg: &Arc<TracialAlgebra>, seed: u64) -> AlgebraElement {
    random_ball_element(alg, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn term() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("x".to_string()), Just("y".to_string()), Just("one".to_string()), Just("x^*".to_string())];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}*{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (-2.0..2.0f64, inner.clone()).prop_map(|(c, a)| format!("({c:.3}*{a})")),
            inner.prop_map(|a| format!("({a})^*")),
        ]
    })
}

fn matrix() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        term().prop_map(|t| format!("n2({t})")),
        (term(), term()).prop_map(|(a, b)| format!("reip({a}, {b})")),
        (term(), term()).prop_map(|(a, b)| format!("imip({a}, {b})")),
    ];
    atom.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("min({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} -. {b}")),
            inner.prop_map(|a| format!("abs({a})")),
        ]
    })
}

fn binder() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("sup"), Just("inf")]
}

fn sort() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("C1"), Just("C2"), Just("U")]
}

/// Closed prenex sentences in `x`, `y`.
fn sentence() -> impl Strategy<Value = String> {
    (binder(), sort(), binder(), sort(), matrix()).prop_map(|(q1, s1, q2, s2, m)| format!("{q1} x:{s1}. {q2} y:{s2}. {m}"))
}

fn qf_value(f: &Formula, x: &AlgebraElement, y: &AlgebraElement, alg: &Arc<TracialAlgebra>, opposite: bool) -> f64 {
    let mut a = Assignment::new();
    a.bind_unchecked("x", x.clone());
    a.bind_unchecked("y", y.clone());
    eval_qf(f, &a, alg, opposite).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_sentences_parse_back(text in sentence()) {
        let f = parse(&text).unwrap();
        prop_assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn op_is_an_involution_on_values(text in sentence(), i in 0usize..4, s in any::<u64>()) {
        let alg = algebra(i);
        let m = parse(&text).unwrap().prefix().1.clone();
        let (x, y) = (ball(&alg, s), ball(&alg, s ^ 1));
        let twice = op_transform(&op_transform(&m));
        let a = qf_value(&m, &x, &y, &alg, false);
        let b = qf_value(&twice, &x, &y, &alg, false);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn unitary_transform_adds_one_quantifier_per_inf_ball(text in sentence()) {
        let f = parse(&text).unwrap();
        let (prefix, _) = f.prefix();
        let rewritten = prefix.iter().filter(|(q, _, s)| *q == Quantifier::Inf && matches!(s, Sort::Ball(_))).count();
        for mode in [UnitaryMode::U, UnitaryMode::Uu] {
            let g = unitary_transform(&f, mode).unwrap();
            prop_assert_eq!(g.quantifier_count(), prefix.len() + rewritten);
            prop_assert!(g.is_closed());
        }
    }

    #[test]
    fn stripping_keeps_the_last_quantifiers(text in sentence(), level in 0usize..3) {
        let f = parse(&text).unwrap();
        let s = strip_quantifiers(&f, level).unwrap();
        prop_assert_eq!(s.formula.quantifier_count(), level);
        prop_assert_eq!(s.free.len(), 2 - level);
        let names: Vec<String> = s.free.iter().map(|(v, _)| v.clone()).collect();
        prop_assert_eq!(names, ["x", "y"][..2 - level].iter().map(|v| v.to_string()).collect::<Vec<_>>());
    }

    #[test]
    fn norm_inequalities(i in 0usize..4, s in any::<u64>()) {
        let alg = algebra(i);
        let (x, y) = (ball(&alg, s), ball(&alg, s.wrapping_add(7)));
        let sum = &x + &y;
        prop_assert!(sum.two_norm() <= x.two_norm() + y.two_norm() + 1e-12);
        prop_assert!(x.inner(&y).unwrap().norm() <= x.two_norm() * y.two_norm() + 1e-12);
        prop_assert!(x.two_norm() <= x.op_norm() + 1e-12);
        let prod = x.mul(&y, false).unwrap();
        prop_assert!(prod.two_norm() <= x.op_norm() * y.two_norm() + 1e-12);
        prop_assert!((x.adjoint().two_norm() - x.two_norm()).abs() <= 1e-12);
    }

    #[test]
    fn gauge_of_the_ball_is_the_operator_norm(i in 0usize..4, s in any::<u64>(), scale in 0.01..5.0f64) {
        let alg = algebra(i);
        let x = ball(&alg, s).scale_real(scale);
        let g = gauge_norm(&x, &BanachPairView::new(&alg));
        prop_assert!((g - x.op_norm()).abs() <= 1e-8 * x.op_norm().max(1e-300), "{} vs {}", g, x.op_norm());
    }

    #[test]
    fn nearest_unitary_is_unitary_and_fixes_unitaries(i in 0usize..4, s in any::<u64>()) {
        let alg = algebra(i);
        let x = ball(&alg, s);
        prop_assert!(nearest_unitary(&x).element().unitary_defect() <= 1e-10);
        let u = haar_unitary_with(&alg, &mut ChaCha8Rng::seed_from_u64(s)).into_element();
        prop_assert!(nearest_unitary(&u).element().distance(&u).unwrap() <= 1e-10);
    }

    #[test]
    fn snapped_contractions_are_exact_averages(i in 0usize..4, s in any::<u64>()) {
        let alg = algebra(i);
        let x = random_ball_element(&alg, 0.99, &mut ChaCha8Rng::seed_from_u64(s)).snap_to_grid(DYADIC_GRID_BITS);
        let (w1, w2) = avg_two_unitaries(&x).unwrap();
        let mid = (w1.element() + w2.element()).scale_real(0.5);
        prop_assert_eq!(mid, x);
    }

    #[test]
    fn opposite_evaluation_is_op_transform(text in sentence(), i in 0usize..4, s in any::<u64>()) {
        let alg = algebra(i);
        let f = parse(&text).unwrap();
        let m = f.prefix().1.clone();
        let (x, y) = (ball(&alg, s), ball(&alg, !s));
        let a = qf_value(&op_transform(&m), &x, &y, &alg, false);
        let b = qf_value(&m, &x, &y, &alg, true);
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
