use foliate::foliation::{build_components, descendant_stats, primeval_set, FoliationResult};
use foliate::palm::verify_identities;
use foliate::shifts::{ShiftKind, ShiftMap};
use proptest::prelude::*;

/// Relabel a partition by first occurrence so two labelings compare equal iff they agree.
fn canon(labels: &[usize]) -> Vec<usize> {
    let mut seen = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let k = seen.len();
            *seen.entry(*l).or_insert(k)
        })
        .collect()
}

fn weak_components(img: &[Option<usize>]) -> Vec<usize> {
    let n = img.len();
    let mut label = vec![usize::MAX; n];
    let mut adj = vec![Vec::new(); n];
    for (x, y) in img.iter().enumerate() {
        if let Some(y) = *y {
            adj[x].push(y);
            adj[y].push(x);
        }
    }
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = s;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if label[y] == usize::MAX {
                    label[y] = s;
                    stack.push(y);
                }
            }
        }
    }
    label
}

/// Foils by definition: same component and, for closed components, equal far iterates;
/// in a component with a terminal, equal distance to it.
fn brute_foils(img: &[Option<usize>]) -> Vec<usize> {
    let n = img.len();
    let comp = weak_components(img);
    let it = |mut x: usize, k: usize| -> Option<usize> {
        for _ in 0..k {
            x = img[x]?;
        }
        Some(x)
    };
    let depth = |mut x: usize| -> Option<usize> {
        for d in 0..=n {
            match img[x] {
                None => return Some(d),
                Some(y) => x = y,
            }
        }
        None
    };
    let key: Vec<(usize, bool, usize)> = (0..n)
        .map(|x| match depth(x) {
            Some(d) => (comp[x], true, d),
            None => (comp[x], false, it(x, n).unwrap()),
        })
        .collect();
    let mut ids = std::collections::HashMap::new();
    key.iter()
        .map(|k| {
            let next = ids.len();
            *ids.entry(*k).or_insert(next)
        })
        .collect()
}

fn total_map() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=12).prop_flat_map(|n| prop::collection::vec(0..n, n))
}

fn partial_map() -> impl Strategy<Value = Vec<Option<usize>>> {
    (1usize..=12).prop_flat_map(|n| prop::collection::vec(prop::option::weighted(0.85, 0..n), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn foils_match_definition_on_total_maps(t in total_map()) {
        let map = ShiftMap::from_targets(&t).unwrap();
        let fol = FoliationResult::from_map(&map);
        let img: Vec<Option<usize>> = t.iter().map(|&y| Some(y)).collect();
        prop_assert_eq!(canon(&fol.foil_id), canon(&brute_foils(&img)));
        prop_assert_eq!(canon(&fol.component_id), canon(&weak_components(&img)));
        prop_assert_eq!(canon(&build_components(&map)), canon(&fol.component_id));
        for c in &fol.components {
            prop_assert!(!c.censored);
            prop_assert_eq!(c.n_foils, c.cycle_length);
        }
    }

    #[test]
    fn foils_match_definition_on_partial_maps(img in partial_map()) {
        let map = ShiftMap::from_images(ShiftKind::Strip, img.clone()).unwrap();
        let fol = FoliationResult::from_map(&map);
        prop_assert_eq!(canon(&fol.foil_id), canon(&brute_foils(&img)));
        for c in fol.components.iter().filter(|c| c.censored) {
            prop_assert_eq!(c.cycle_length, 0);
        }
    }

    #[test]
    fn descendant_counts_match_brute_force(t in total_map(), k in 0usize..6) {
        let map = ShiftMap::from_targets(&t).unwrap();
        let fol = FoliationResult::from_map(&map);
        let desc = descendant_stats(&map, &fol, k);
        let n = t.len();
        for x in 0..n {
            let d = (0..n).filter(|&y| map.iterate(y, k) == Some(x)).count() as u64;
            prop_assert_eq!(desc.d[k][x], d);
            let fx = map.iterate(x, k).unwrap();
            let l = (0..n).filter(|&y| map.iterate(y, k) == Some(fx)).count() as u64;
            prop_assert_eq!(desc.l[k][x], l);
        }
    }

    #[test]
    fn identities_are_exact_on_total_maps(t in total_map()) {
        let map = ShiftMap::from_targets(&t).unwrap();
        let fol = FoliationResult::from_map(&map);
        let desc = descendant_stats(&map, &fol, 5);
        let out = verify_identities(&fol, &desc, 5).unwrap();
        for c in &out.checks {
            prop_assert!(c.discrepancy() < 1e-12, "{} n={} lhs={} rhs={}", c.name, c.n, c.lhs, c.rhs);
        }
    }

    #[test]
    fn primeval_points_are_cycle_points(t in total_map()) {
        let map = ShiftMap::from_targets(&t).unwrap();
        let fol = FoliationResult::from_map(&map);
        let n = t.len();
        let want: Vec<usize> = (0..n).filter(|&x| (1..=n).any(|k| map.iterate(x, k) == Some(x))).collect();
        prop_assert_eq!(primeval_set(&map, &fol, n).points, want);
    }
}

#[test]
fn identity_orders_match_image_sizes() {
    // mean 1/l_n equals |F^n(support)| / N
    let t = [1, 2, 1, 1, 0, 4, 6, 6];
    let map = ShiftMap::from_targets(&t).unwrap();
    let fol = FoliationResult::from_map(&map);
    let desc = descendant_stats(&map, &fol, 4);
    for k in 1..=4 {
        let img: std::collections::BTreeSet<usize> = (0..t.len()).map(|x| map.iterate(x, k).unwrap()).collect();
        let inv: f64 = desc.l[k].iter().map(|&l| 1.0 / l as f64).sum::<f64>() / t.len() as f64;
        assert!((inv - img.len() as f64 / t.len() as f64).abs() < 1e-12);
    }
}
