use foliate::domain::{Domain, PointPattern};
use foliate::generators::{generate, GenSpec, Model};
use foliate::shifts::{evaluate, grid_indices, ShiftKind, ShiftMap};
use proptest::prelude::*;

fn pattern(model: Model, domain: Domain, seed: u64) -> PointPattern {
    generate(&GenSpec { model, domain, seed }).unwrap()
}

fn with_buffer(p: &PointPattern, buffer: f64) -> PointPattern {
    let dom = Domain::window(p.domain().extents.clone(), buffer).unwrap();
    PointPattern::from_flat(dom, p.coords().to_vec(), p.meta().clone()).unwrap()
}

fn brute_nearest(p: &PointPattern, x: usize) -> Option<usize> {
    (0..p.len()).filter(|&y| y != x).min_by(|&a, &b| p.dist(x, a).total_cmp(&p.dist(x, b)))
}

/// Images of `sub` (ids local to `sub`) must agree with `full` wherever `sub` reports one.
fn consistent_with_extension(full: &ShiftMap, sub: &ShiftMap, ids: &[usize], skip_fixed: bool) -> bool {
    (0..sub.len()).all(|k| match sub.image(k) {
        None => true,
        Some(j) if skip_fixed && j == k => true,
        Some(j) => full.image(ids[k]) == Some(ids[j]),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mnn_matches_brute_force_on_torus(seed in 0u64..10_000) {
        let p = pattern(Model::Poisson { intensity: 1.0 }, Domain::torus(vec![12.0, 12.0]).unwrap(), seed);
        let map = evaluate(&p, ShiftKind::Mnn).unwrap();
        for x in 0..p.len() {
            let y = brute_nearest(&p, x);
            let mutual = y.is_some_and(|y| brute_nearest(&p, y) == Some(x));
            let want = if mutual { y.unwrap() } else { x };
            prop_assert_eq!(map.image(x), Some(want));
            prop_assert_eq!(map.iterate(x, 2), Some(x));
        }
    }

    #[test]
    fn torus_shifts_commute_with_translation(seed in 0u64..10_000, t0 in 0.0..20.0f64, t1 in 0.0..20.0f64) {
        let dom = Domain::torus(vec![20.0, 20.0]).unwrap();
        let cases = [
            (pattern(Model::Poisson { intensity: 0.5 }, dom.clone(), seed), ShiftKind::Mnn),
            (pattern(Model::BernoulliGrid { p: 0.5 }, dom, seed), ShiftKind::NextRow),
        ];
        for (p, kind) in cases {
            let moved = p.translated(&[t0, t1]).unwrap();
            let (a, b) = (evaluate(&p, kind).unwrap(), evaluate(&moved, kind).unwrap());
            prop_assert_eq!(a.images(), b.images());
        }
    }

    #[test]
    fn next_row_targets_the_next_column(seed in 0u64..10_000, p_keep in 0.2..0.9f64) {
        let p = pattern(Model::BernoulliGrid { p: p_keep }, Domain::torus(vec![15.0, 10.0]).unwrap(), seed);
        let idx = grid_indices(&p).unwrap();
        let map = evaluate(&p, ShiftKind::NextRow).unwrap();
        for x in 0..p.len() {
            let col = (idx[x][0] + 1).rem_euclid(15);
            let want = (0..p.len())
                .filter(|&y| idx[y][0] == col)
                .min_by_key(|&y| (idx[y][1] - idx[x][1]).rem_euclid(10));
            prop_assert_eq!(map.image(x), want);
        }
    }

    #[test]
    fn window_images_survive_extension(seed in 0u64..10_000, cut in 0.3..0.8f64) {
        let dom = Domain::window(vec![40.0, 40.0], 2.0).unwrap();
        let cases = [
            (pattern(Model::Poisson { intensity: 1.0 }, dom.clone(), seed), ShiftKind::Mnn, false),
            (pattern(Model::Poisson { intensity: 1.0 }, dom.clone(), seed), ShiftKind::condenser(), false),
            (pattern(Model::Poisson { intensity: 1.0 }, dom.clone(), seed), ShiftKind::Strip, true),
            (pattern(Model::BernoulliGrid { p: 0.5 }, dom, seed), ShiftKind::NextRow, false),
        ];
        for (p, kind, skip_fixed) in cases {
            let full = evaluate(&p, kind).unwrap();
            let side = 40.0 * cut;
            let (sub, ids) = p.sub_window(&[3.0, 40.0 - side - 1.0], &[side, side], 2.0).unwrap();
            let local = evaluate(&sub, kind).unwrap();
            prop_assert!(consistent_with_extension(&full, &local, &ids, skip_fixed), "{}", kind.name());
        }
    }

    #[test]
    fn larger_buffers_only_censor_more(seed in 0u64..10_000, b in 0.5..4.0f64, extra in 0.5..4.0f64) {
        let base = pattern(Model::Poisson { intensity: 1.0 }, Domain::window(vec![30.0, 30.0], b).unwrap(), seed);
        let wider = with_buffer(&base, b + extra);
        for kind in [ShiftKind::Mnn, ShiftKind::Strip, ShiftKind::condenser()] {
            let a = evaluate(&base, kind).unwrap();
            let c = evaluate(&wider, kind).unwrap();
            for x in 0..base.len() {
                if a.is_censored(x) {
                    prop_assert!(c.is_censored(x), "{} point {x}", kind.name());
                }
                if kind != ShiftKind::Strip {
                    if let Some(y) = c.image(x) {
                        prop_assert_eq!(a.image(x), Some(y));
                    }
                }
            }
        }
    }
}

#[test]
fn images_stay_inside_the_pattern() {
    let dom = Domain::window(vec![50.0, 50.0], 3.0).unwrap();
    let model = Model::PoissonCluster { parent_intensity: 0.05, mark_circle_radius: 1.0, mark_intensity: 1.0 };
    let p = pattern(model, dom, 5);
    let map = evaluate(&p, ShiftKind::MultiTypeStrip).unwrap();
    assert_eq!(map.len(), p.len());
    assert!(map.images().iter().flatten().all(|&y| y < p.len()));
    for x in 0..p.len() {
        assert_eq!(map.is_censored(x), map.image(x).is_none());
    }
}

#[test]
fn unsupported_combinations_are_config_errors() {
    let torus = pattern(Model::Poisson { intensity: 1.0 }, Domain::torus(vec![10.0, 10.0]).unwrap(), 1);
    for kind in [ShiftKind::Strip, ShiftKind::condenser(), ShiftKind::NextRow, ShiftKind::MultiTypeStrip] {
        assert!(matches!(evaluate(&torus, kind), Err(foliate::error::Error::Config(_))), "{}", kind.name());
    }
}
