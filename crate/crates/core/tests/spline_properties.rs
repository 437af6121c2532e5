use mrag::temporal::{
    classify_constraint, temporal_score, ConstraintClass, ConstraintKind, ImplicitCondition, SplineParams,
    TemporalConstraint, TemporalRelation, TimePoint,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SplineParams> {
    (0.5f64..100.0, 0.05f64..10.0, 0.0f64..0.5, 0.0f64..0.99, 0.0f64..1.0).prop_map(
        |(h, sigma_v, eps_v, delta, tau_frac)| {
            SplineParams {
                h,
                sigma_v,
                eps_v,
                delta,
                // tau in (eps_v, 1]
                tau: eps_v + (1.0 - eps_v) * (0.01 + 0.99 * tau_frac),
            }
        },
    )
}

fn anchor() -> impl Strategy<Value = f64> {
    1500.0f64..2050.0
}

fn any_class() -> impl Strategy<Value = ConstraintClass> {
    (0usize..6, anchor(), 0.0f64..40.0).prop_map(|(k, a, w)| {
        let kind = ConstraintKind::ALL[k];
        if kind.is_between() {
            ConstraintClass::window(kind, a, a + w).unwrap()
        } else {
            ConstraintClass::point(kind, a).unwrap()
        }
    })
}

fn point_class(kind: ConstraintKind, a: f64) -> ConstraintClass {
    ConstraintClass::point(kind, a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scores_are_bounded(class in any_class(), p in params(), years in prop::collection::vec(1000i32..=2100, 0..6)) {
        prop_assume!(p.validate().is_ok());
        let points: Vec<TimePoint> = years.iter().map(|&y| TimePoint::year(y).unwrap()).collect();
        let s = temporal_score(&class, &p, &points);
        prop_assert!((0.0..=1.0).contains(&s));
        if points.is_empty() {
            prop_assert_eq!(s, p.delta);
        }
    }

    #[test]
    fn last_before_shape(a in anchor(), p in params(), d1 in 0.0f64..200.0, d2 in 0.0f64..200.0) {
        prop_assume!(p.validate().is_ok());
        let c = point_class(ConstraintKind::LastBefore, a);
        prop_assert_eq!(c.score_at(&p, a), 1.0);
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        // nondecreasing toward the anchor from below, nonincreasing after it
        prop_assert!(c.score_at(&p, a - far) <= c.score_at(&p, a - near));
        prop_assert!(c.score_at(&p, a + far) <= c.score_at(&p, a + near));
        let beyond = a + 5.0 * p.sigma_v + d1 + 1e-9;
        prop_assert!(c.score_at(&p, beyond) <= p.eps_v + 1e-6);
    }

    #[test]
    fn first_after_mirrors_last_before(a in anchor(), p in params(), d in -300.0f64..300.0) {
        prop_assume!(p.validate().is_ok());
        let fa = point_class(ConstraintKind::FirstAfter, a);
        let lb = point_class(ConstraintKind::LastBefore, a);
        prop_assert!((fa.score_at(&p, a + d) - lb.score_at(&p, a - d)).abs() < 1e-12);
    }

    #[test]
    fn plateau_classes(a in anchor(), p in params(), d1 in 0.0f64..200.0, d2 in 0.0f64..200.0) {
        prop_assume!(p.validate().is_ok());
        let fb = point_class(ConstraintKind::FirstBefore, a);
        let la = point_class(ConstraintKind::LastAfter, a);
        let lb = point_class(ConstraintKind::LastBefore, a);
        let fa = point_class(ConstraintKind::FirstAfter, a);
        prop_assert_eq!(fb.score_at(&p, a - d1), 1.0);
        prop_assert_eq!(la.score_at(&p, a + d1), 1.0);
        // violation sides share the curve of the proximity classes
        prop_assert_eq!(fb.score_at(&p, a + d1), lb.score_at(&p, a + d1));
        prop_assert_eq!(la.score_at(&p, a - d1), fa.score_at(&p, a - d1));
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(fb.score_at(&p, a + far) <= fb.score_at(&p, a + near));
        prop_assert!(la.score_at(&p, a - far) <= la.score_at(&p, a - near));
    }

    #[test]
    fn between_shape(a in anchor(), w in 0.1f64..40.0, p in params(), f in 0.0f64..=1.0, d1 in 0.0f64..100.0, d2 in 0.0f64..100.0) {
        prop_assume!(p.validate().is_ok());
        let b = a + w;
        let t = a + f * w;
        let lb = ConstraintClass::window(ConstraintKind::LastBetween, a, b).unwrap();
        let fb = ConstraintClass::window(ConstraintKind::FirstBetween, a, b).unwrap();
        prop_assert!((lb.score_at(&p, b) - 1.0).abs() < 1e-12);
        prop_assert!((lb.score_at(&p, a) - p.tau).abs() < 1e-12);
        prop_assert!((fb.score_at(&p, a) - 1.0).abs() < 1e-12);
        prop_assert!((fb.score_at(&p, b) - p.tau).abs() < 1e-12);
        // linear inside
        prop_assert!((lb.score_at(&p, t) - (p.tau + (1.0 - p.tau) * f)).abs() < 1e-9);
        prop_assert!((fb.score_at(&p, t) - (p.tau + (1.0 - p.tau) * (1.0 - f))).abs() < 1e-9);
        // decaying outside, never above the edge value
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for c in [lb, fb] {
            prop_assert!(c.score_at(&p, b + far) <= c.score_at(&p, b + near));
            prop_assert!(c.score_at(&p, a - far) <= c.score_at(&p, a - near));
            prop_assert!(c.score_at(&p, b + near) <= c.score_at(&p, b) + 1e-12);
            prop_assert!(c.score_at(&p, a - near) <= c.score_at(&p, a) + 1e-12);
        }
    }

    #[test]
    fn adding_a_timestamp_never_lowers_the_score(
        class in any_class(),
        p in params(),
        years in prop::collection::vec(1000i32..=2100, 0..6),
        extra in 1000i32..=2100,
    ) {
        prop_assume!(p.validate().is_ok());
        let mut points: Vec<TimePoint> = years.iter().map(|&y| TimePoint::year(y).unwrap()).collect();
        let before = temporal_score(&class, &p, &points);
        points.push(TimePoint::year(extra).unwrap());
        let after = temporal_score(&class, &p, &points);
        if years.is_empty() {
            // the dateless default is replaced, not maxed
            prop_assert_eq!(after, class.score_at(&p, extra as f64 + 0.5));
        } else {
            prop_assert!(after >= before);
        }
    }

    #[test]
    fn classification_is_total_and_pure(
        cond in 0usize..5,
        rel in 0usize..11,
        y1 in 1000i32..=2100,
        span in 0i32..50,
    ) {
        let conds = [ImplicitCondition::None, ImplicitCondition::First, ImplicitCondition::Earliest, ImplicitCondition::Last, ImplicitCondition::Latest];
        let relation = TemporalRelation::ALL[rel];
        let t1 = TimePoint::year(y1).unwrap();
        let t2 = relation.is_range().then(|| TimePoint::year((y1 + span).min(2100)).unwrap());
        let c = TemporalConstraint::new(conds[cond], relation, t1, t2, "x").unwrap();
        let a = classify_constraint(&c);
        prop_assert_eq!(a, classify_constraint(&c));
        prop_assert_eq!(a.kind.is_between(), a.a2.is_some());
        prop_assert_eq!(conds[cond].seeks_first(), matches!(a.kind, ConstraintKind::FirstBefore | ConstraintKind::FirstAfter | ConstraintKind::FirstBetween));
    }
}
