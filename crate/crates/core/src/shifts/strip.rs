//! Strip shift: the leftmost point of the half-band `(x1, inf) x [x2 - 1/2, x2 + 1/2]`.

use std::cmp::Ordering;

use crate::domain::PointPattern;

const HALF_BAND: f64 = 0.5;

/// Strip images of `ids`, searching only among `ids`. Output is aligned with `ids`.
pub(super) fn strip_images(pattern: &PointPattern, ids: &[usize]) -> Vec<Option<usize>> {
    let dom = pattern.domain();
    let height = dom.extents[1];
    // unit-height bands, each sorted lexicographically
    let n_bands = (height.ceil() as usize).max(1) + 1;
    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); n_bands];
    for &id in ids {
        let b = (pattern.point(id)[1].floor() as usize).min(n_bands - 1);
        bands[b].push(id);
    }
    for band in &mut bands {
        band.sort_by(|&a, &b| pattern.lex(a, b));
    }

    ids.iter()
        .map(|&x| {
            if pattern.is_censored(x) {
                return None;
            }
            let p = pattern.point(x);
            let (lo, hi) = (p[1] - HALF_BAND, p[1] + HALF_BAND);
            if lo < 0.0 || hi > height {
                return None;
            }
            let first = (lo.floor().max(0.0) as usize).min(n_bands - 1);
            let last = (hi.floor() as usize).min(n_bands - 1);
            let mut best: Option<usize> = None;
            for band in &bands[first..=last] {
                let start = band.partition_point(|&y| pattern.point(y)[0] <= p[0]);
                for &y in &band[start..] {
                    let q = pattern.point(y);
                    if let Some(b) = best {
                        if q[0] > pattern.point(b)[0] {
                            break;
                        }
                    }
                    if q[1] < lo || q[1] > hi {
                        continue;
                    }
                    if best.is_none_or(|b| pattern.lex(y, b) == Ordering::Less) {
                        best = Some(y);
                    }
                    break;
                }
            }
            Some(best.unwrap_or(x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use crate::domain::{Domain, PointPattern};
    use crate::shifts::eval_strip;

    fn window(points: &[[f64; 2]], buffer: f64) -> PointPattern {
        let dom = Domain::window(vec![20.0, 20.0], buffer).unwrap();
        PointPattern::new(dom, points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn leftmost_in_band() {
        let pat = window(&[[5.0, 10.0], [6.0, 10.2], [7.0, 10.0]], 1.0);
        let map = eval_strip(&pat).unwrap();
        assert_eq!(map.image(0), Some(1));
        assert_eq!(map.image(1), Some(2));
    }

    #[test]
    fn empty_band_gives_fixed_point() {
        let pat = window(&[[5.0, 10.0], [10.0, 10.8]], 1.0);
        let map = eval_strip(&pat).unwrap();
        assert_eq!(map.image(0), Some(0));
        assert!(!map.is_censored(0));
    }

    #[test]
    fn first_coordinate_tie_broken_lexicographically() {
        let pat = window(&[[5.0, 10.0], [6.0, 10.3], [6.0, 9.7]], 1.0);
        let map = eval_strip(&pat).unwrap();
        assert_eq!(map.image(0), Some(2));
    }

    #[test]
    fn band_boundaries_are_closed() {
        let pat = window(&[[5.0, 10.0], [6.0, 10.5], [5.5, 10.5000001]], 1.0);
        assert_eq!(eval_strip(&pat).unwrap().image(0), Some(1));
    }

    #[test]
    fn buffer_and_band_overflow_censor() {
        let pat = window(&[[0.5, 10.0], [5.0, 0.2], [6.0, 0.4]], 0.1);
        let map = eval_strip(&pat).unwrap();
        assert!(!map.is_censored(0));
        // band [-0.3, 0.7] leaves the window
        assert!(map.is_censored(1));
        let map = eval_strip(&window(&[[0.5, 10.0]], 1.0)).unwrap();
        assert!(map.is_censored(0));
    }

    #[test]
    fn matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(4);
        let pts: Vec<[f64; 2]> = (0..400).map(|_| [rng.random::<f64>() * 20.0, rng.random::<f64>() * 20.0]).collect();
        let pat = window(&pts, 0.5);
        let map = eval_strip(&pat).unwrap();
        for x in 0..pat.len() {
            if map.is_censored(x) {
                continue;
            }
            let p = pat.point(x);
            let want = (0..pat.len())
                .filter(|&y| {
                    let q = pat.point(y);
                    q[0] > p[0] && (q[1] - p[1]).abs() <= 0.5
                })
                .min_by(|&a, &b| pat.lex(a, b))
                .unwrap_or(x);
            assert_eq!(map.image(x), Some(want));
        }
    }
}
