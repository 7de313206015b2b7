//! Mutual nearest neighbours: `x -> y` when each is the unique nearest neighbour of the other.

use rayon::prelude::*;

use crate::domain::PointPattern;
use crate::error::{Error, Result};
use crate::index::GridIndex;

/// Nearest neighbour of a point, or why it is not available.
#[derive(Clone, Copy, PartialEq, Debug)]
enum Nn {
    Known(usize),
    /// No other point at all.
    Alone,
    /// The closed ball of the nearest-neighbour radius is not fully observed.
    Undetermined,
}

pub(super) fn mnn_images(pattern: &PointPattern) -> Result<Vec<Option<usize>>> {
    let dom = pattern.domain();
    let idx = GridIndex::new(pattern);
    let nn: Vec<Nn> = (0..pattern.len())
        .into_par_iter()
        .map(|x| {
            let [first, second] = idx.two_nearest(x);
            let Some((y, d1)) = first else {
                return Ok(Nn::Alone);
            };
            // points outside a window are farther than the boundary distance
            if dom.dist_to_boundary(pattern.point(x)) < d1 {
                return Ok(Nn::Undetermined);
            }
            if let Some((z, d2)) = second {
                if d2 == d1 {
                    return Err(Error::DistanceTie { a: y.min(z), b: y.max(z) });
                }
            }
            Ok(Nn::Known(y))
        })
        .collect::<Result<_>>()?;

    Ok((0..pattern.len())
        .map(|x| {
            if pattern.is_censored(x) {
                return None;
            }
            match nn[x] {
                Nn::Alone => Some(x),
                Nn::Undetermined => None,
                Nn::Known(y) if pattern.is_censored(y) => None,
                Nn::Known(y) => match nn[y] {
                    Nn::Known(z) if z == x => Some(y),
                    Nn::Known(_) => Some(x),
                    _ => None,
                },
            }
        })
        .collect())
}
