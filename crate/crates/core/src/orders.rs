//! Orders on components and foils: DFS preorder of descendant trees, the Royal Line of
//! Succession (RLS) order, the foil bijection `f_perp`, the component bijection `h_dense`,
//! and the signed step count `delta`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::domain::PointPattern;
use crate::error::{Error, Result};
use crate::foliation::FoliationResult;
use crate::shifts::{MapEntry, ShiftMap};

/// Sons (preimages) of every point, in sibling priority order.
#[derive(Debug, Clone)]
pub struct SonTable {
    starts: Vec<usize>,
    sons: Vec<usize>,
}

impl SonTable {
    /// Sons ordered by `cmp(father, a, b)`.
    pub fn new(map: &ShiftMap, cmp: impl Fn(usize, usize, usize) -> Ordering) -> Self {
        let n = map.len();
        let mut starts = vec![0; n + 1];
        for x in 0..n {
            if let Some(y) = map.image(x) {
                starts[y + 1] += 1;
            }
        }
        for k in 0..n {
            starts[k + 1] += starts[k];
        }
        let mut fill = starts.clone();
        let mut sons = vec![0; starts[n]];
        for x in 0..n {
            if let Some(y) = map.image(x) {
                sons[fill[y]] = x;
                fill[y] += 1;
            }
        }
        for y in 0..n {
            sons[starts[y]..starts[y + 1]].sort_by(|&a, &b| cmp(y, a, b));
        }
        SonTable { starts, sons }
    }

    /// Siblings compared lexicographically by their displacement from the father. On a torus
    /// this uses the minimal image, so the order survives translations of the pattern.
    pub fn by_displacement(map: &ShiftMap, pattern: &PointPattern) -> Self {
        let dom = pattern.domain();
        Self::new(map, |f, a, b| {
            let pf = pattern.point(f);
            let da = dom.displacement(pf, pattern.point(a));
            let db = dom.displacement(pf, pattern.point(b));
            crate::domain::lex_cmp(&da, &db).then(a.cmp(&b))
        })
    }

    /// Siblings in id order (for bare functional maps).
    pub fn by_id(map: &ShiftMap) -> Self {
        Self::new(map, |_, a, b| a.cmp(&b))
    }

    pub fn sons(&self, x: usize) -> &[usize] {
        &self.sons[self.starts[x]..self.starts[x + 1]]
    }
}

/// Preorder of the descendants of `root` (reversed map), sons in sibling order.
pub fn dfs_preorder(sons: &SonTable, root: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        if !seen.insert(x) {
            return Err(Error::Domain(format!("point {root} lies on a cycle: its descendants do not form a tree")));
        }
        out.push(x);
        stack.extend(sons.sons(x).iter().rev());
    }
    Ok(out)
}

/// Total order on each component.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsOrder {
    /// Rank of each point within its component.
    pub rank: Vec<usize>,
    /// Members of each component in rank order.
    pub order: Vec<Vec<usize>>,
    /// False for censored components, whose order only covers the observed sub-map.
    pub authoritative: Vec<bool>,
}

/// Cyclic components: walk the cycle from its least node under `least`, emitting each cycle
/// node followed by the preorder of its off-cycle subtrees. Censored trees: preorder from
/// the terminal.
pub fn build_rls_order(
    map: &ShiftMap,
    foliation: &FoliationResult,
    sons: &SonTable,
    least: impl Fn(usize, usize) -> Ordering,
) -> RlsOrder {
    let n = map.len();
    let mut rank = vec![0; n];
    let mut order = Vec::with_capacity(foliation.n_components());
    let mut terminal = vec![usize::MAX; foliation.n_components()];
    for x in 0..n {
        if map.image(x).is_none() {
            terminal[foliation.component_id[x]] = x;
        }
    }
    for c in &foliation.components {
        let mut seq = Vec::with_capacity(c.size);
        if c.censored {
            let mut stack = vec![terminal[c.id]];
            while let Some(x) = stack.pop() {
                seq.push(x);
                stack.extend(sons.sons(x).iter().rev());
            }
        } else {
            let cyc = &c.cycle_nodes;
            let start = (0..cyc.len()).min_by(|&i, &j| least(cyc[i], cyc[j])).unwrap();
            for k in 0..cyc.len() {
                let z = cyc[(start + k) % cyc.len()];
                let pred = cyc[(start + k + cyc.len() - 1) % cyc.len()];
                seq.push(z);
                let mut stack: Vec<usize> = sons.sons(z).iter().rev().copied().filter(|&s| s != pred).collect();
                while let Some(x) = stack.pop() {
                    seq.push(x);
                    stack.extend(sons.sons(x).iter().rev());
                }
            }
        }
        for (r, &x) in seq.iter().enumerate() {
            rank[x] = r;
        }
        order.push(seq);
    }
    let authoritative = foliation.components.iter().map(|c| !c.censored).collect();
    RlsOrder { rank, order, authoritative }
}

/// How a foil is ordered for `f_perp` and `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoilOrder {
    /// Finite foil of a finite component: cyclic successor in lexicographic order.
    CyclicLex,
    /// Foil of a censored (large) component: successor in RLS rank.
    Rls,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableMaps {
    pub f_perp: Vec<usize>,
    pub h_dense: Vec<usize>,
    /// Position of each point in its foil's order.
    pub foil_position: Vec<usize>,
    pub foil_id: Vec<usize>,
    pub foil_len: Vec<usize>,
    pub foil_order: Vec<FoilOrder>,
    /// Foil members in order.
    pub foils: Vec<Vec<usize>>,
    censored: Vec<bool>,
}

/// Build both bijections. `lex` orders points for the cyclic-lex foils.
pub fn build_stable_maps(
    foliation: &FoliationResult,
    rls: &RlsOrder,
    lex: impl Fn(usize, usize) -> Ordering,
) -> StableMaps {
    let n = foliation.len();
    let mut h_dense = vec![0; n];
    for seq in &rls.order {
        for (k, &x) in seq.iter().enumerate() {
            h_dense[x] = seq[(k + 1) % seq.len()];
        }
    }
    let foil_comp = foliation.foil_component();
    let mut foils = foliation.foil_members();
    let mut foil_order = Vec::with_capacity(foils.len());
    let mut f_perp = vec![0; n];
    let mut foil_position = vec![0; n];
    for (f, members) in foils.iter_mut().enumerate() {
        let mode = if foliation.components[foil_comp[f]].censored { FoilOrder::Rls } else { FoilOrder::CyclicLex };
        match mode {
            FoilOrder::CyclicLex => members.sort_by(|&a, &b| lex(a, b)),
            FoilOrder::Rls => members.sort_by_key(|&x| rls.rank[x]),
        }
        for (k, &x) in members.iter().enumerate() {
            f_perp[x] = members[(k + 1) % members.len()];
            foil_position[x] = k;
        }
        foil_order.push(mode);
    }
    StableMaps {
        f_perp,
        h_dense,
        foil_position,
        foil_id: foliation.foil_id.clone(),
        foil_len: foils.iter().map(Vec::len).collect(),
        foil_order,
        foils,
        censored: (0..n).map(|x| foliation.is_censored_point(x)).collect(),
    }
}

/// Lexicographic coordinate order with id as a last resort.
pub fn lex_of(pattern: &PointPattern) -> impl Fn(usize, usize) -> Ordering + '_ {
    move |a, b| pattern.lex(a, b).then(a.cmp(&b))
}

/// Full pipeline for a pattern: displacement sibling order, lex-least cycle start.
pub fn stable_maps_for(pattern: &PointPattern, map: &ShiftMap, foliation: &FoliationResult) -> (RlsOrder, StableMaps) {
    let sons = SonTable::by_displacement(map, pattern);
    let rls = build_rls_order(map, foliation, &sons, lex_of(pattern));
    let st = build_stable_maps(foliation, &rls, lex_of(pattern));
    (rls, st)
}

impl StableMaps {
    pub fn iterate_f_perp(&self, x: usize, k: i64) -> usize {
        let f = self.foil_id[x];
        let len = self.foil_len[f] as i64;
        let p = (self.foil_position[x] as i64 + k).rem_euclid(len) as usize;
        self.foils[f][p]
    }

    /// JSON array of `{id, image, censored, role}` for `f_perp` then `h_dense`.
    pub fn to_json(&self) -> Result<String> {
        let rows = |role: &str, table: &[usize]| -> Vec<MapEntry> {
            table
                .iter()
                .enumerate()
                .map(|(id, &y)| MapEntry { id, image: Some(y), censored: self.censored[id], role: Some(role.to_string()) })
                .collect()
        };
        let mut all = rows("f_perp", &self.f_perp);
        all.extend(rows("h_dense", &self.h_dense));
        Ok(serde_json::to_string(&all)?)
    }
}

/// Signed number of `f_perp` steps from `x` to `y`. Cyclic-lex foils report the residue in
/// `0..|L|`; RLS foils report the signed position difference.
pub fn delta(stable: &StableMaps, x: usize, y: usize) -> Result<i64> {
    let n = stable.f_perp.len();
    if x >= n || y >= n {
        return Err(Error::Domain(format!("point id out of range (n = {n})")));
    }
    let f = stable.foil_id[x];
    if stable.foil_id[y] != f {
        return Err(Error::Domain(format!("points {x} and {y} lie in different foils")));
    }
    let d = stable.foil_position[y] as i64 - stable.foil_position[x] as i64;
    Ok(match stable.foil_order[f] {
        FoilOrder::CyclicLex => d.rem_euclid(stable.foil_len[f] as i64),
        FoilOrder::Rls => d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrderCheck {
    pub foils_checked: usize,
    pub pairs_checked: u64,
    pub violations: u64,
}

/// Father priority on RLS-ordered foils: for non-censored `x`, `y` of one foil with
/// `rank(x) < rank(y)` and `F(x) != F(y)`, `rank(F(x)) < rank(F(y))`.
pub fn check_order_preservation(map: &ShiftMap, rls: &RlsOrder, stable: &StableMaps) -> OrderCheck {
    let mut out = OrderCheck::default();
    for (f, members) in stable.foils.iter().enumerate() {
        if stable.foil_order[f] != FoilOrder::Rls {
            continue;
        }
        // members are in rank order; consecutive image ranks must not decrease
        let ranks: Vec<usize> = members.iter().filter_map(|&x| map.image(x)).map(|y| rls.rank[y]).collect();
        if ranks.len() < 2 {
            continue;
        }
        out.foils_checked += 1;
        let m = ranks.len() as u64;
        out.pairs_checked += m * (m - 1) / 2;
        out.violations += ranks.windows(2).filter(|w| w[1] < w[0]).count() as u64;
    }
    out
}
