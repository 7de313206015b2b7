use foliate::domain::{distance, is_censored, lex_compare, Domain, PointPattern};
use foliate::error::Error;
use proptest::prelude::*;

fn coord(e: f64) -> impl Strategy<Value = f64> {
    0.0..e
}

fn pair2(e: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(coord(e), 2),
        prop::collection::vec(coord(e), 2),
        prop::collection::vec(coord(e), 2),
    )
}

proptest! {
    #[test]
    fn torus_metric_axioms((p, q, r) in pair2(10.0)) {
        let t = Domain::torus(vec![10.0, 10.0]).unwrap();
        let pq = distance(&p, &q, &t).unwrap();
        prop_assert!((pq - distance(&q, &p, &t).unwrap()).abs() < 1e-12);
        prop_assert!(pq <= 50f64.sqrt() + 1e-12);
        prop_assert!(pq <= distance(&p, &r, &t).unwrap() + distance(&r, &q, &t).unwrap() + 1e-12);
        prop_assert_eq!(distance(&p, &p, &t).unwrap(), 0.0);
        let w = Domain::window(vec![10.0, 10.0], 0.0).unwrap();
        prop_assert!(pq <= distance(&p, &q, &w).unwrap() + 1e-12);
    }

    #[test]
    fn torus_distance_is_translation_invariant((p, q, t) in pair2(10.0)) {
        let dom = Domain::torus(vec![10.0, 10.0]).unwrap();
        let shift = |x: &[f64]| -> Vec<f64> { x.iter().zip(&t).map(|(a, b)| (a + b).rem_euclid(10.0)).collect() };
        let a = distance(&p, &q, &dom).unwrap();
        let b = distance(&shift(&p), &shift(&q), &dom).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn lex_is_a_total_order((p, q, _r) in pair2(5.0)) {
        let pq = lex_compare(&p, &q).unwrap();
        prop_assert_eq!(pq.reverse(), lex_compare(&q, &p).unwrap());
        prop_assert_eq!(pq.is_eq(), p == q);
    }

    #[test]
    fn buffer_censoring_is_monotone(p in prop::collection::vec(coord(20.0), 2), b in 0.0..6.0f64, extra in 0.0..3.0f64) {
        let small = Domain::window(vec![20.0, 20.0], b).unwrap();
        let big = Domain::window(vec![20.0, 20.0], b + extra).unwrap();
        prop_assert!(!is_censored(&p, &small) || is_censored(&p, &big));
        prop_assert!(!is_censored(&p, &Domain::torus(vec![20.0, 20.0]).unwrap()));
    }

    #[test]
    fn pattern_json_round_trip(pts in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 0..40)) {
        // arbitrary doubles must come back bit for bit
        let points: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        let pat = PointPattern::new(Domain::window(vec![10.0, 10.0], 1.0).unwrap(), points).unwrap();
        let back = PointPattern::from_json(&pat.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &pat);
        prop_assert_eq!(back.to_json().unwrap(), pat.to_json().unwrap());
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let t = Domain::torus(vec![10.0, 10.0]).unwrap();
    assert!(matches!(distance(&[1.0], &[1.0, 2.0], &t), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(lex_compare(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn duplicate_and_outside_points_are_rejected() {
    let w = Domain::window(vec![4.0, 4.0], 0.0).unwrap();
    assert!(PointPattern::new(w.clone(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
    assert!(PointPattern::new(w, vec![vec![5.0, 1.0]]).is_err());
}

#[test]
fn schema_mismatch_is_rejected() {
    let pat = PointPattern::new(Domain::torus(vec![3.0]).unwrap(), vec![vec![1.0]]).unwrap();
    let bumped = pat.to_json().unwrap().replace("\"schema_version\":1", "\"schema_version\":99");
    assert!(matches!(PointPattern::from_json(&bumped), Err(Error::Schema(_))));
    assert!(matches!(PointPattern::from_json("{\"nope\":1}"), Err(Error::Schema(_))));
}

#[test]
fn sub_window_keeps_ids() {
    let pat = PointPattern::new(
        Domain::window(vec![10.0, 10.0], 0.0).unwrap(),
        vec![vec![1.0, 1.0], vec![5.0, 5.0], vec![6.0, 4.0], vec![9.0, 9.0]],
    )
    .unwrap();
    let (sub, ids) = pat.sub_window(&[4.0, 3.0], &[3.0, 3.0], 0.5).unwrap();
    assert_eq!(ids, vec![1, 2]);
    assert_eq!(sub.point(0), &[1.0, 2.0]);
    assert_eq!(sub.domain().buffer, 0.5);
}
