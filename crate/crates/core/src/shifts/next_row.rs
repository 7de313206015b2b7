//! Next-Row shift on a Bernoulli grid: `(x1, x2, ...) -> (x1 + 1, x2', ...)` where `x2'` is
//! the first occupied row at or above `x2` in the next column.

use std::collections::HashMap;

use crate::domain::PointPattern;
use crate::error::{Error, Result};

/// Integer lattice indices `round(x - shift)` of every point (wrapped into range on a torus).
pub fn grid_indices(pattern: &PointPattern) -> Result<Vec<Vec<i64>>> {
    let shift = pattern.grid_shift().ok_or_else(|| Error::config("pattern carries no grid shift"))?;
    let dom = pattern.domain();
    Ok(pattern
        .points()
        .map(|p| {
            p.coords
                .iter()
                .zip(shift)
                .zip(&dom.extents)
                .map(|((x, u), e)| {
                    let k = (x - u).round() as i64;
                    if dom.is_torus() { k.rem_euclid(e.round() as i64) } else { k }
                })
                .collect()
        })
        .collect())
}

/// Key of the column a point lies in: every index except the row (axis 1).
fn column_key(k: &[i64]) -> Vec<i64> {
    let mut c = Vec::with_capacity(k.len() - 1);
    c.push(k[0]);
    c.extend_from_slice(&k[2..]);
    c
}

pub(super) fn next_row_images(pattern: &PointPattern) -> Result<Vec<Option<usize>>> {
    let dom = pattern.domain();
    let idx = grid_indices(pattern)?;
    let mut columns: HashMap<Vec<i64>, Vec<(i64, usize)>> = HashMap::new();
    for (id, k) in idx.iter().enumerate() {
        columns.entry(column_key(k)).or_default().push((k[1], id));
    }
    for col in columns.values_mut() {
        col.sort_unstable();
    }
    let width = dom.extents[0].round() as i64;
    let shift0 = pattern.grid_shift().unwrap()[0];

    Ok(idx
        .iter()
        .enumerate()
        .map(|(x, k)| {
            if pattern.is_censored(x) {
                return None;
            }
            let mut key = column_key(k);
            if dom.is_torus() {
                key[0] = (key[0] + 1).rem_euclid(width);
            } else {
                key[0] += 1;
                if key[0] as f64 + shift0 > dom.extents[0] {
                    return None;
                }
            }
            let col = columns.get(&key)?;
            let at = col.partition_point(|&(row, _)| row < k[1]);
            match col.get(at) {
                Some(&(_, y)) => Some(y),
                // wrap around the column on a torus; in a window the search left the core
                None if dom.is_torus() => Some(col[0].1),
                None => None,
            }
        })
        .collect())
}
