//! Condenser: marks `m(x) = #(pattern ∩ B(x, r))`, and `x` moves to the closest point to
//! its right whose mark is one larger.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::Closeness;
use crate::domain::PointPattern;
use crate::index::GridIndex;

/// Closed-ball counts including the point itself; `None` where the ball is not fully observed.
pub fn condenser_marks(pattern: &PointPattern, ball_radius: f64) -> Vec<Option<usize>> {
    let dom = pattern.domain();
    let idx = GridIndex::new(pattern);
    (0..pattern.len())
        .into_par_iter()
        .map(|x| {
            let p = pattern.point(x);
            if dom.dist_to_boundary(p) < ball_radius {
                return None;
            }
            let mut m = 0;
            idx.for_each_in_ball(p, ball_radius, |_, _| m += 1);
            Some(m)
        })
        .collect()
}

pub(super) fn condenser_images(pattern: &PointPattern, r: f64, closeness: Closeness) -> Vec<Option<usize>> {
    let dom = pattern.domain();
    let d = dom.dim();
    if closeness == Closeness::FirstCoordinate && d > 1 {
        // the slab to the right of x always reaches the unmarked margin
        return vec![None; pattern.len()];
    }
    let marks = condenser_marks(pattern, r);
    let idx = GridIndex::new(pattern);
    let start = idx.cell_size().iter().copied().fold(0.0, f64::max);

    (0..pattern.len())
        .into_par_iter()
        .map(|x| {
            if pattern.is_censored(x) {
                return None;
            }
            let want = marks[x]? + 1;
            let p = pattern.point(x);
            // largest radius whose right half-ball stays where marks are known
            let mut reach = dom.extents[0] - r - p[0];
            for i in 1..d {
                reach = reach.min(p[i] - r).min(dom.extents[i] - r - p[i]);
            }
            if reach <= 0.0 {
                return None;
            }
            let mut radius = start.min(reach);
            loop {
                let mut best: Option<(usize, f64)> = None;
                idx.for_each_in_ball(p, radius, |y, dy| {
                    if pattern.point(y)[0] <= p[0] || marks[y] != Some(want) {
                        return;
                    }
                    let better = match best {
                        None => true,
                        Some((b, db)) => dy < db || (dy == db && pattern.lex(y, b) == Ordering::Less),
                    };
                    if better {
                        best = Some((y, dy));
                    }
                });
                if let Some((y, _)) = best {
                    return Some(y);
                }
                if radius >= reach {
                    return None;
                }
                radius = (radius * 2.0).min(reach);
            }
        })
        .collect()
}
