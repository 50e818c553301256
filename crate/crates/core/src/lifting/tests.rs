use proptest::prelude::*;

use super::*;
use crate::functor::{ConstSpace, ProductEval};
use crate::numerics::{int, ratio, Rational, Top};

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn both(expr: &FunctorExpr, d: &PseudometricTable, t1: &FStructure, t2: &FStructure) -> (Value, Value) {
    let r = lift_both(expr, d, t1, t2).unwrap();
    (r.kantorovich, r.wasserstein)
}

#[test]
fn diag_square_breaks_duality() {
    let d = PseudometricTable::from_fn(names(&["x1", "x2"]), Top::Infinite, |i, j| {
        Value::exact(int((i != j) as i64))
    })
    .unwrap();
    let e = FunctorExpr::diag_square(FunctorExpr::id());
    let t1 = FStructure::pair(FStructure::atom(0), FStructure::atom(1));
    let t2 = FStructure::pair(FStructure::atom(1), FStructure::atom(0));
    assert_eq!(both(&e, &d, &t1, &t2), (Value::zero(), Value::exact(int(2))));
    assert_eq!(duality_gap(&e, &d, &t1, &t2).unwrap(), Value::exact(int(2)));
    assert_eq!(duality_gap(&e, &d, &t1, &t1).unwrap(), Value::zero());
}

#[test]
fn hausdorff_on_valuation_distances() {
    // states placed at their valuations, so d is the Euclidean distance
    let d = PseudometricTable::euclidean(
        vec![
            ("x2".into(), ratio(2, 5)),
            ("x3".into(), ratio(7, 10)),
            ("y2".into(), ratio(1, 2)),
            ("y3".into(), int(1)),
        ],
        Top::Infinite,
    )
    .unwrap();
    assert_eq!(d.get(0, 2), &Value::ratio(1, 10));
    assert_eq!(d.get(0, 3), &Value::ratio(3, 5));
    assert_eq!(d.get(1, 2), &Value::ratio(1, 5));
    assert_eq!(d.get(1, 3), &Value::ratio(3, 10));
    let e = FunctorExpr::finpow(FunctorExpr::id());
    let a = FStructure::set([FStructure::atom(0), FStructure::atom(1)]);
    let b = FStructure::set([FStructure::atom(2), FStructure::atom(3)]);
    assert_eq!(both(&e, &d, &a, &b), (Value::ratio(3, 10), Value::ratio(3, 10)));
}

#[test]
fn empty_sets() {
    let d = PseudometricTable::discrete(names(&["a"]), Top::Infinite).unwrap();
    let e = FunctorExpr::finpow(FunctorExpr::id());
    let empty = FStructure::set([]);
    let a = FStructure::set([FStructure::atom(0)]);
    assert_eq!(both(&e, &d, &empty, &a), (Value::Infinity, Value::Infinity));
    assert_eq!(both(&e, &d, &empty, &empty), (Value::zero(), Value::zero()));
    let d1 = PseudometricTable::discrete(names(&["a"]), Top::one()).unwrap();
    assert_eq!(both(&e, &d1, &a, &empty), (Value::exact(int(1)), Value::exact(int(1))));
}

#[test]
fn reflexive_on_distributions() {
    let d = PseudometricTable::from_fn(names(&["a", "b", "c"]), Top::one(), |i, j| {
        if i == j { Value::zero() } else { Value::ratio(1, 2) }
    })
    .unwrap();
    let e = FunctorExpr::dist(FunctorExpr::id());
    let p = FStructure::dist([
        (FStructure::atom(0), ratio(1, 3)),
        (FStructure::atom(1), ratio(1, 6)),
        (FStructure::atom(2), ratio(1, 2)),
    ]);
    assert_eq!(both(&e, &d, &p, &p), (Value::zero(), Value::zero()));
}

#[test]
fn discounted_step_of_the_probabilistic_example() {
    // ground distance 9/10 between u and z, masses shifted by 1/20
    let d = PseudometricTable::from_fn(names(&["u", "z"]), Top::one(), |i, j| {
        if i == j { Value::zero() } else { Value::ratio(9, 10) }
    })
    .unwrap();
    let e = FunctorExpr::dist(FunctorExpr::id());
    let p1 = FStructure::dist([(FStructure::atom(0), ratio(9, 20)), (FStructure::atom(1), ratio(11, 20))]);
    let p2 = FStructure::dist([(FStructure::atom(0), ratio(1, 2)), (FStructure::atom(1), ratio(1, 2))]);
    assert_eq!(both(&e, &d, &p1, &p2), (Value::ratio(9, 200), Value::ratio(9, 200)));

    // the same through the refusal composite with d(u, z) = 1
    let d = PseudometricTable::discrete(names(&["u", "z"]), Top::one()).unwrap();
    let e = FunctorExpr::refusal(ratio(9, 10), Top::one());
    let l = |i| FStructure::left(FStructure::atom(i));
    let p1 = FStructure::dist([(l(0), ratio(9, 20)), (l(1), ratio(11, 20))]);
    let p2 = FStructure::dist([(l(0), ratio(1, 2)), (l(1), ratio(1, 2))]);
    assert_eq!(both(&e, &d, &p1, &p2), (Value::ratio(9, 200), Value::ratio(9, 200)));
}

#[test]
fn coproduct_and_const() {
    let space = ConstSpace::new(
        "colors",
        PseudometricTable::from_fn(names(&["red", "pink"]), Top::one(), |i, j| {
            if i == j { Value::zero() } else { Value::ratio(1, 5) }
        })
        .unwrap(),
    );
    let e = FunctorExpr::coproduct(FunctorExpr::id(), FunctorExpr::constant(space));
    let d = PseudometricTable::discrete(names(&["s"]), Top::one()).unwrap();
    let red = FStructure::right(FStructure::atom(0));
    let pink = FStructure::right(FStructure::atom(1));
    let s = FStructure::left(FStructure::atom(0));
    assert_eq!(both(&e, &d, &red, &pink), (Value::ratio(1, 5), Value::ratio(1, 5)));
    assert_eq!(both(&e, &d, &red, &s), (Value::exact(int(1)), Value::exact(int(1))));
}

#[test]
fn pnorm_products() {
    let d = PseudometricTable::euclidean(
        vec![("a".into(), int(0)), ("b".into(), int(3)), ("c".into(), int(4))],
        Top::Infinite,
    )
    .unwrap();
    let e = FunctorExpr::product(
        FunctorExpr::id(),
        FunctorExpr::id(),
        ProductEval::PNorm { p: 2, c1: int(1), c2: int(1) },
    );
    let t1 = FStructure::pair(FStructure::atom(0), FStructure::atom(0));
    let t2 = FStructure::pair(FStructure::atom(1), FStructure::atom(2));
    // 3-4-5 triangle, exact root
    assert_eq!(both(&e, &d, &t1, &t2), (Value::exact(int(5)), Value::exact(int(5))));
    let t3 = FStructure::pair(FStructure::atom(1), FStructure::atom(1));
    let (k, w) = both(&e, &d, &t1, &t3);
    assert!(!k.is_exact());
    assert!(k.approx_eq(&Value::approx(18f64.sqrt()), 1e-12));
    assert!(k.approx_eq(&w, 1e-12));
}

#[test]
fn nested_sets_of_distributions() {
    // Pfin(D(Id)) over {a, b} with d(a, b) = 1
    let d = PseudometricTable::discrete(names(&["a", "b"]), Top::one()).unwrap();
    let e = FunctorExpr::finpow(FunctorExpr::dist(FunctorExpr::id()));
    let p = |wa: Rational| {
        FStructure::dist([(FStructure::atom(0), wa.clone()), (FStructure::atom(1), Rational::from(int(1)) - wa)])
    };
    let s1 = FStructure::set([p(int(1)), p(ratio(1, 2))]);
    let s2 = FStructure::set([p(ratio(3, 4))]);
    assert_eq!(both(&e, &d, &s1, &s2), (Value::ratio(1, 4), Value::ratio(1, 4)));
}

#[test]
fn validation_errors_surface() {
    let d = PseudometricTable::discrete(names(&["a"]), Top::one()).unwrap();
    let e = FunctorExpr::dist(FunctorExpr::id());
    let bad = FStructure::dist([(FStructure::atom(0), ratio(1, 2))]);
    let ok = FStructure::point_mass(FStructure::atom(0));
    assert!(matches!(
        lift_dist(&e, &d, LiftMethod::Wasserstein, &bad, &ok),
        Err(LiftError::Shape(_))
    ));
    let sq = FunctorExpr::diag_square(FunctorExpr::id());
    let pair = FStructure::pair(FStructure::atom(0), FStructure::atom(0));
    assert!(matches!(
        lift_dist(&sq, &d, LiftMethod::Kantorovich, &pair, &pair),
        Err(LiftError::Functor(_))
    ));
}

#[test]
fn method_parsing() {
    assert_eq!("Kantorovich".parse::<LiftMethod>(), Ok(LiftMethod::Kantorovich));
    assert_eq!("w".parse::<LiftMethod>(), Ok(LiftMethod::Wasserstein));
    assert!("x".parse::<LiftMethod>().is_err());
    assert_eq!(LiftMethod::default(), LiftMethod::Wasserstein);
}

fn arb_line_table(n: usize, top: Top) -> impl Strategy<Value = PseudometricTable> {
    proptest::collection::vec(0i64..8, n).prop_map(move |xs| {
        let pts = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (format!("s{i}"), ratio(x, 8)))
            .collect();
        PseudometricTable::euclidean(pts, top.clone()).unwrap()
    })
}

fn arb_dist(n: usize) -> impl Strategy<Value = FStructure> {
    proptest::collection::vec(0i64..4, n)
        .prop_filter("nonzero mass", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| {
            let total: i64 = w.iter().sum();
            FStructure::dist(w.iter().enumerate().map(|(i, &x)| (FStructure::atom(i), ratio(x, total))))
        })
}

fn arb_set(n: usize) -> impl Strategy<Value = FStructure> {
    proptest::collection::btree_set(0..n, 0..=n).prop_map(|s| FStructure::set(s.into_iter().map(FStructure::atom)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distributions_satisfy_duality(d in arb_line_table(4, Top::one()), p in arb_dist(4), q in arb_dist(4)) {
        let e = FunctorExpr::dist(FunctorExpr::id());
        let (k, w) = both(&e, &d, &p, &q);
        prop_assert_eq!(k, w);
    }

    #[test]
    fn sets_satisfy_duality(d in arb_line_table(4, Top::Infinite), a in arb_set(4), b in arb_set(4)) {
        let e = FunctorExpr::finpow(FunctorExpr::id());
        let (k, w) = both(&e, &d, &a, &b);
        prop_assert_eq!(k, w);
    }

    #[test]
    fn diag_square_k_le_w(d in arb_line_table(3, Top::Infinite), xs in proptest::collection::vec(0usize..3, 4)) {
        let e = FunctorExpr::diag_square(FunctorExpr::id());
        let t1 = FStructure::pair(FStructure::atom(xs[0]), FStructure::atom(xs[1]));
        let t2 = FStructure::pair(FStructure::atom(xs[2]), FStructure::atom(xs[3]));
        let (k, w) = both(&e, &d, &t1, &t2);
        prop_assert!(k <= w);
    }

    // Relabeling atoms by a bijection leaves lifted distances unchanged.
    #[test]
    fn relabeling_invariance(
        d in arb_line_table(4, Top::one()),
        p in arb_dist(4),
        q in arb_dist(4),
        perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let e = FunctorExpr::refusal(ratio(1, 2), Top::one());
        let wrap = |t: &FStructure| match t {
            FStructure::Dist(es) => FStructure::dist(es.iter().map(|(x, w)| (FStructure::left(x.clone()), w.clone()))),
            _ => unreachable!(),
        };
        let (p, q) = (wrap(&p), wrap(&q));
        let dp = d.permuted(&perm);
        let f = |i: usize| perm[i];
        for method in [LiftMethod::Kantorovich, LiftMethod::Wasserstein] {
            let before = lift_dist(&e, &d, method, &p, &q).unwrap();
            let after = lift_dist(&e, &dp, method, &p.map_states(&e, &f), &q.map_states(&e, &f)).unwrap();
            prop_assert_eq!(before, after);
        }
    }

    // d ≤ d' pointwise gives lifted distances ≤ pointwise.
    #[test]
    fn lifting_is_monotone(
        xs in proptest::collection::vec(0i64..8, 4),
        stretch in 1i64..4,
        a in arb_set(4),
        b in arb_set(4),
    ) {
        let mk = |k: i64| {
            let pts = xs.iter().enumerate().map(|(i, &x)| (format!("s{i}"), ratio(x * k, 8))).collect();
            PseudometricTable::euclidean(pts, Top::Infinite).unwrap()
        };
        let (lo, hi) = (mk(1), mk(stretch));
        prop_assert!(lo.le(&hi));
        let e = FunctorExpr::finpow(FunctorExpr::id());
        for method in [LiftMethod::Kantorovich, LiftMethod::Wasserstein] {
            prop_assert!(lift_dist(&e, &lo, method, &a, &b).unwrap() <= lift_dist(&e, &hi, method, &a, &b).unwrap());
        }
    }
}
