//! Uniform cell index over a pattern (or a subset of it) for ball and nearest-neighbour
//! queries. Cell ranges wrap across torus seams; in a window they are clipped.

use crate::domain::PointPattern;

pub struct GridIndex<'a> {
    pattern: &'a PointPattern,
    cells: Vec<usize>,
    cell_size: Vec<f64>,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl<'a> GridIndex<'a> {
    /// Index all points, aiming at about `per_cell` points per cell.
    pub fn new(pattern: &'a PointPattern) -> Self {
        let ids: Vec<usize> = (0..pattern.len()).collect();
        Self::with_ids(pattern, &ids, 2.0)
    }

    pub fn with_ids(pattern: &'a PointPattern, ids: &[usize], per_cell: f64) -> Self {
        let dom = pattern.domain();
        let d = dom.dim();
        let n = ids.len().max(1) as f64;
        let mut side = (dom.volume() * per_cell / n).powf(1.0 / d as f64);
        let cap = 4.0 * n + 16.0;
        let mut cells: Vec<usize>;
        loop {
            cells = dom.extents.iter().map(|e| ((e / side).floor() as usize).max(1)).collect();
            let total: f64 = cells.iter().map(|&c| c as f64).product();
            if total <= cap {
                break;
            }
            side *= 1.5;
        }
        let cell_size: Vec<f64> = dom.extents.iter().zip(&cells).map(|(e, &c)| e / c as f64).collect();
        let total: usize = cells.iter().product();

        let mut idx = GridIndex { pattern, cells, cell_size, starts: vec![0; total + 1], items: Vec::new() };
        let flat: Vec<usize> = ids.iter().map(|&id| idx.flat_cell(pattern.point(id))).collect();
        for &c in &flat {
            idx.starts[c + 1] += 1;
        }
        for c in 0..total {
            idx.starts[c + 1] += idx.starts[c];
        }
        let mut fill = idx.starts.clone();
        idx.items = vec![0; ids.len()];
        for (&id, &c) in ids.iter().zip(&flat) {
            idx.items[fill[c]] = id;
            fill[c] += 1;
        }
        idx
    }

    pub fn pattern(&self) -> &'a PointPattern {
        self.pattern
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    #[inline]
    pub fn axis_cell(&self, axis: usize, x: f64) -> usize {
        let c = (x / self.cell_size[axis]).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.cells[axis] - 1)
        }
    }

    fn flat_cell(&self, p: &[f64]) -> usize {
        let mut f = 0;
        for axis in 0..p.len() {
            f = f * self.cells[axis] + self.axis_cell(axis, p[axis]);
        }
        f
    }

    /// Cells along `axis` that can hold coordinates in `[lo, hi]`.
    pub fn axis_range(&self, axis: usize, lo: f64, hi: f64) -> Vec<usize> {
        let n = self.cells[axis];
        let cs = self.cell_size[axis];
        let a = (lo / cs).floor();
        let b = (hi / cs).floor();
        if self.pattern.domain().is_torus() {
            if b - a + 1.0 >= n as f64 {
                return (0..n).collect();
            }
            let (a, b) = (a as i64, b as i64);
            (a..=b).map(|c| c.rem_euclid(n as i64) as usize).collect()
        } else {
            let a = a.max(0.0) as i64;
            let b = b.min(n as f64 - 1.0) as i64;
            if b < a {
                return Vec::new();
            }
            (a..=b).map(|c| c as usize).collect()
        }
    }

    /// Visit every indexed id in the cartesian product of per-axis cell lists.
    pub fn for_each_in_cells(&self, ranges: &[Vec<usize>], mut f: impl FnMut(usize)) {
        if ranges.iter().any(|r| r.is_empty()) {
            return;
        }
        let d = ranges.len();
        let mut odo = vec![0usize; d];
        loop {
            let mut flat = 0;
            for axis in 0..d {
                flat = flat * self.cells[axis] + ranges[axis][odo[axis]];
            }
            for &id in &self.items[self.starts[flat]..self.starts[flat + 1]] {
                f(id);
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                odo[axis] += 1;
                if odo[axis] < ranges[axis].len() {
                    break;
                }
                odo[axis] = 0;
            }
        }
    }

    /// Visit `(id, distance)` for indexed points within the closed ball `B(q, r)`.
    pub fn for_each_in_ball(&self, q: &[f64], r: f64, mut f: impl FnMut(usize, f64)) {
        let dom = self.pattern.domain();
        let ranges: Vec<Vec<usize>> = (0..q.len()).map(|a| self.axis_range(a, q[a] - r, q[a] + r)).collect();
        let r2 = r * r;
        self.for_each_in_cells(&ranges, |id| {
            let d2 = dom.dist_sq_unchecked(q, self.pattern.point(id));
            if d2 <= r2 {
                f(id, d2.sqrt());
            }
        });
    }

    /// Radius beyond which a ball query covers the whole domain.
    pub fn max_radius(&self) -> f64 {
        let dom = self.pattern.domain();
        let half = if dom.is_torus() { 0.5 } else { 1.0 };
        dom.extents.iter().map(|e| (e * half) * (e * half)).sum::<f64>().sqrt()
    }

    /// The two indexed points closest to `id` (excluding `id`), nearest first.
    pub fn two_nearest(&self, id: usize) -> [Option<(usize, f64)>; 2] {
        let q = self.pattern.point(id);
        let max_r = self.max_radius();
        let mut r = self.cell_size.iter().copied().fold(0.0, f64::max);
        loop {
            let mut best: [Option<(usize, f64)>; 2] = [None, None];
            self.for_each_in_ball(q, r, |j, dj| {
                if j == id {
                    return;
                }
                let better = |cur: Option<(usize, f64)>| match cur {
                    None => true,
                    Some((k, dk)) => dj < dk || (dj == dk && j < k),
                };
                if better(best[0]) {
                    best[1] = best[0];
                    best[0] = Some((j, dj));
                } else if better(best[1]) {
                    best[1] = Some((j, dj));
                }
            });
            // anything not visited is farther than r
            if best[1].is_some() || r >= max_r {
                return best;
            }
            r = (r * 2.0).min(max_r);
        }
    }
}
