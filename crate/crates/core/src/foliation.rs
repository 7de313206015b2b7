//! The functional graph of a shift map: components, cycles, foils, descendant counts and
//! primeval points.
//!
//! Every component of a finite map has exactly one directed cycle. When censoring removes
//! edges a component is instead a tree hanging from a single terminal (the censored point
//! that has no image); such components are flagged and their foils only describe the
//! observed sub-map.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::domain::SCHEMA_VERSION;
use crate::error::Result;
use crate::shifts::ShiftMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentClass {
    FF,
    #[serde(rename = "IF_diagnostic")]
    IfDiagnostic,
    #[serde(rename = "II_diagnostic")]
    IiDiagnostic,
    Unknown,
}

impl ComponentClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentClass::FF => "FF",
            ComponentClass::IfDiagnostic => "IF_diagnostic",
            ComponentClass::IiDiagnostic => "II_diagnostic",
            ComponentClass::Unknown => "Unknown",
        }
    }
}

impl std::fmt::Display for ComponentClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Undirected components of the graph with edges `(x, F(x))`, numbered by smallest member.
pub fn build_components(map: &ShiftMap) -> Vec<usize> {
    let n = map.len();
    let mut uf = UnionFind::<usize>::new(n);
    for x in 0..n {
        if let Some(y) = map.image(x) {
            uf.union(x, y);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut out = vec![0; n];
    let mut next = 0;
    for x in 0..n {
        let r = uf.find(x);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[x] = label[r];
    }
    out
}

/// Where each point sits relative to the sink of its component.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleInfo {
    /// Per component: the directed cycle starting at its smallest id, empty for censored trees.
    pub cycles: Vec<Vec<usize>>,
    /// Per component: true when the walk ends at a point without image.
    pub censored: Vec<bool>,
    /// Steps to the cycle (or to the terminal of a censored tree).
    pub depth: Vec<usize>,
    /// Position along the cycle of the node where the point's forward orbit enters it.
    pub entry_position: Vec<usize>,
}

pub fn find_cycles(map: &ShiftMap, component: &[usize]) -> CycleInfo {
    const NEW: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let n = map.len();
    let n_comp = component.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut cycles = vec![Vec::new(); n_comp];
    let mut censored = vec![false; n_comp];
    let mut depth = vec![0; n];
    let mut entry = vec![0; n];
    let mut state = vec![NEW; n];
    let mut path = Vec::new();

    for start in 0..n {
        if state[start] != NEW {
            continue;
        }
        path.clear();
        let mut x = start;
        // walk until something already resolved, a repeat, or a dead end
        let stop = loop {
            state[x] = ON_PATH;
            path.push(x);
            match map.image(x) {
                None => break None,
                Some(y) if state[y] == NEW => x = y,
                Some(y) => break Some(y),
            }
        };
        let mut resolved = path.len();
        match stop {
            None => {
                let t = *path.last().unwrap();
                censored[component[t]] = true;
                depth[t] = 0;
                entry[t] = 0;
                state[t] = DONE;
                resolved -= 1;
            }
            Some(y) if state[y] == ON_PATH => {
                let at = path.iter().position(|&z| z == y).unwrap();
                let mut cyc = path[at..].to_vec();
                let rot = cyc.iter().enumerate().min_by_key(|(_, &z)| z).map(|(i, _)| i).unwrap();
                cyc.rotate_left(rot);
                for (pos, &z) in cyc.iter().enumerate() {
                    depth[z] = 0;
                    entry[z] = pos;
                    state[z] = DONE;
                }
                cycles[component[y]] = cyc;
                resolved = at;
            }
            Some(_) => {}
        }
        for k in (0..resolved).rev() {
            let z = path[k];
            let y = map.image(z).unwrap();
            depth[z] = depth[y] + 1;
            entry[z] = entry[y];
            state[z] = DONE;
        }
    }
    CycleInfo { cycles, censored, depth, entry_position: entry }
}

/// Foil labels, numbered by smallest member. Two points share a foil iff they are in the
/// same component and `(entry_position - depth) mod cycle_length` agrees; in a censored
/// tree the key is the depth itself.
pub fn compute_foils(component: &[usize], cycles: &CycleInfo) -> Vec<usize> {
    let n = component.len();
    let mut keys = std::collections::HashMap::new();
    let mut out = vec![0; n];
    for x in 0..n {
        let c = component[x];
        let key = if cycles.censored[c] {
            cycles.depth[x] as i64
        } else {
            let len = cycles.cycles[c].len() as i64;
            (cycles.entry_position[x] as i64 - cycles.depth[x] as i64).rem_euclid(len)
        };
        let next = keys.len();
        out[x] = *keys.entry((c, key)).or_insert(next);
    }
    out
}

/// Per-component summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub id: usize,
    pub size: usize,
    pub cycle_nodes: Vec<usize>,
    pub cycle_length: usize,
    pub n_foils: usize,
    pub class: ComponentClass,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationResult {
    pub schema_version: u32,
    pub component_id: Vec<usize>,
    pub foil_id: Vec<usize>,
    pub depth_to_cycle: Vec<usize>,
    pub entry_position: Vec<usize>,
    pub components: Vec<ComponentSummary>,
    pub n_foils: usize,
}

impl FoliationResult {
    pub fn from_map(map: &ShiftMap) -> Self {
        let component = build_components(map);
        let cyc = find_cycles(map, &component);
        let foil = compute_foils(&component, &cyc);
        let n_comp = cyc.cycles.len();
        let n_foils = foil.iter().map(|&f| f + 1).max().unwrap_or(0);
        let mut size = vec![0; n_comp];
        let mut foils_of = vec![Vec::new(); n_comp];
        for x in 0..map.len() {
            size[component[x]] += 1;
            foils_of[component[x]].push(foil[x]);
        }
        let components = (0..n_comp)
            .map(|c| {
                let mut f = std::mem::take(&mut foils_of[c]);
                f.sort_unstable();
                f.dedup();
                ComponentSummary {
                    id: c,
                    size: size[c],
                    cycle_length: cyc.cycles[c].len(),
                    cycle_nodes: cyc.cycles[c].clone(),
                    n_foils: f.len(),
                    class: if cyc.censored[c] { ComponentClass::Unknown } else { ComponentClass::FF },
                    censored: cyc.censored[c],
                }
            })
            .collect();
        FoliationResult {
            schema_version: SCHEMA_VERSION,
            component_id: component,
            foil_id: foil,
            depth_to_cycle: cyc.depth,
            entry_position: cyc.entry_position,
            components,
            n_foils,
        }
    }

    pub fn len(&self) -> usize {
        self.component_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.component_id.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn is_censored_point(&self, x: usize) -> bool {
        self.components[self.component_id[x]].censored
    }

    /// Members of every component, ascending ids.
    pub fn component_members(&self) -> Vec<Vec<usize>> {
        group(&self.component_id, self.n_components())
    }

    /// Members of every foil, ascending ids.
    pub fn foil_members(&self) -> Vec<Vec<usize>> {
        group(&self.foil_id, self.n_foils)
    }

    /// Component id of each foil.
    pub fn foil_component(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_foils];
        for (x, &f) in self.foil_id.iter().enumerate() {
            out[f] = self.component_id[x];
        }
        out
    }

    pub fn set_class(&mut self, classes: &[ComponentClass]) {
        for (c, &k) in self.components.iter_mut().zip(classes) {
            c.class = k;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Per-component rows `id,size,cycle_length,n_foils,class`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["id", "size", "cycle_length", "n_foils", "class"])?;
        for c in &self.components {
            wr.write_record([
                c.id.to_string(),
                c.size.to_string(),
                c.cycle_length.to_string(),
                c.n_foils.to_string(),
                c.class.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn group(label: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (x, &l) in label.iter().enumerate() {
        out[l].push(x);
    }
    out
}

/// Per-component class: FF for finite uncensored components; censored components take the
/// ladder verdict when one is available and are Unknown otherwise.
pub fn classify(foliation: &FoliationResult, ladder: Option<ComponentClass>) -> Vec<ComponentClass> {
    foliation
        .components
        .iter()
        .map(|c| match (c.censored, ladder) {
            (false, _) => ComponentClass::FF,
            (true, Some(k)) => k,
            (true, None) => ComponentClass::Unknown,
        })
        .collect()
}

/// Generation sizes `d_n(x) = #{y : F^n(y) = x}` and cousin counts `l_n(x) = d_n(F^n(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescendantStats {
    pub max_order: usize,
    /// `d[n][x]` for `n = 0..=max_order`.
    pub d: Vec<Vec<u64>>,
    /// `l[n][x]`, zero where `F^n(x)` is undefined.
    pub l: Vec<Vec<u64>>,
    /// Point lies in a censored component: its counts only describe the observed sub-map.
    pub censored: Vec<bool>,
}

pub fn descendant_stats(map: &ShiftMap, foliation: &FoliationResult, max_order: usize) -> DescendantStats {
    let n = map.len();
    let mut d = Vec::with_capacity(max_order + 1);
    let mut l = Vec::with_capacity(max_order + 1);
    d.push(vec![1u64; n]);
    l.push(vec![1u64; n]);
    // pos[x] = F^k(x) where defined
    let mut pos: Vec<Option<usize>> = (0..n).map(Some).collect();
    for k in 1..=max_order {
        let prev = &d[k - 1];
        let mut cur = vec![0u64; n];
        for y in 0..n {
            if let Some(z) = map.image(y) {
                cur[z] += prev[y];
            }
        }
        for p in pos.iter_mut() {
            *p = p.and_then(|z| map.image(z));
        }
        l.push(pos.iter().map(|p| p.map_or(0, |z| cur[z])).collect());
        d.push(cur);
    }
    let censored = (0..n).map(|x| foliation.is_censored_point(x)).collect();
    DescendantStats { max_order, d, l, censored }
}

/// Points surviving every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimevalSet {
    pub points: Vec<usize>,
    /// Set when censored components forced the finite approximation `F^n(core)`.
    pub n_used: Option<usize>,
}

pub fn primeval_set(map: &ShiftMap, foliation: &FoliationResult, n_max: usize) -> PrimevalSet {
    let mut keep = vec![false; map.len()];
    let mut any_censored = false;
    for c in &foliation.components {
        for &z in &c.cycle_nodes {
            keep[z] = true;
        }
        any_censored |= c.censored;
    }
    if any_censored {
        for x in 0..map.len() {
            if foliation.is_censored_point(x) && !map.is_censored(x) {
                if let Some(y) = map.iterate(x, n_max) {
                    keep[y] = true;
                }
            }
        }
    }
    PrimevalSet {
        points: (0..map.len()).filter(|&x| keep[x]).collect(),
        n_used: any_censored.then_some(n_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // a=0, b=1, c=2, d=3
    fn rho() -> ShiftMap {
        ShiftMap::from_targets(&[1, 2, 1, 1]).unwrap()
    }

    fn partition(labels: &[usize]) -> Vec<Vec<usize>> {
        let k = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        group(labels, k)
    }

    #[test]
    fn components_examples() {
        assert_eq!(build_components(&rho()), vec![0, 0, 0, 0]);
        let two = ShiftMap::from_targets(&[1, 0, 3, 2]).unwrap();
        assert_eq!(build_components(&two), vec![0, 0, 1, 1]);
        let id = ShiftMap::from_targets(&[0, 1, 2]).unwrap();
        assert_eq!(build_components(&id), vec![0, 1, 2]);
    }

    #[test]
    fn cycles_examples() {
        let map = rho();
        let c = find_cycles(&map, &build_components(&map));
        assert_eq!(c.cycles, vec![vec![1, 2]]);
        assert_eq!(c.depth, vec![1, 0, 0, 1]);
        let k = ShiftMap::from_targets(&[1, 2, 3, 4, 0]).unwrap();
        let c = find_cycles(&k, &build_components(&k));
        assert_eq!(c.cycles[0].len(), 5);
        assert!(c.depth.iter().all(|&d| d == 0));
        let fixed = ShiftMap::from_targets(&[0]).unwrap();
        assert_eq!(find_cycles(&fixed, &[0]).cycles, vec![vec![0]]);
    }

    #[test]
    fn foils_examples() {
        let f = FoliationResult::from_map(&rho());
        assert_eq!(partition(&f.foil_id), vec![vec![0, 2, 3], vec![1]]);
        let k = FoliationResult::from_map(&ShiftMap::from_targets(&[1, 2, 3, 0]).unwrap());
        assert_eq!(k.n_foils, 4);
        // star a -> r, b -> r, r -> r: F(a) = F(r), so a single foil (cycle length 1)
        let star = FoliationResult::from_map(&ShiftMap::from_targets(&[2, 2, 2]).unwrap());
        assert_eq!(partition(&star.foil_id), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn descendants_examples() {
        let map = rho();
        let f = FoliationResult::from_map(&map);
        let s = descendant_stats(&map, &f, 3);
        assert_eq!(s.d[1], vec![0, 3, 1, 0]);
        assert_eq!(s.l[1][0], 3);
        let star = ShiftMap::from_targets(&[2, 2, 2]).unwrap();
        let s = descendant_stats(&star, &FoliationResult::from_map(&star), 2);
        assert_eq!(s.d[1][2], 3);
        assert_eq!(s.l[1][0], 3);
        let cyc = ShiftMap::from_targets(&[1, 2, 0]).unwrap();
        let s = descendant_stats(&cyc, &FoliationResult::from_map(&cyc), 4);
        assert!(s.d.iter().chain(&s.l).all(|v| v.iter().all(|&k| k == 1)));
    }

    #[test]
    fn primeval_examples() {
        let map = rho();
        let f = FoliationResult::from_map(&map);
        assert_eq!(primeval_set(&map, &f, 5).points, vec![1, 2]);
        let id = ShiftMap::from_targets(&[0, 1, 2]).unwrap();
        assert_eq!(primeval_set(&id, &FoliationResult::from_map(&id), 5).points, vec![0, 1, 2]);
    }

    #[test]
    fn censored_tree() {
        // 0 -> 1 -> 2 (no image), 3 -> 2, 4 -> 4
        let map = ShiftMap::from_images(crate::shifts::ShiftKind::Strip, vec![Some(1), Some(2), None, Some(2), Some(4)])
            .unwrap();
        let f = FoliationResult::from_map(&map);
        assert!(f.components[0].censored && !f.components[1].censored);
        assert_eq!(f.components[0].cycle_length, 0);
        assert_eq!(f.depth_to_cycle, vec![2, 1, 0, 1, 0]);
        assert_eq!(partition(&f.foil_id), vec![vec![0], vec![1, 3], vec![2], vec![4]]);
        assert_eq!(classify(&f, None), vec![ComponentClass::Unknown, ComponentClass::FF]);
        let p = primeval_set(&map, &f, 1);
        assert_eq!(p.points, vec![1, 2, 4]);
        assert_eq!(p.n_used, Some(1));
    }

    #[test]
    fn csv_rows() {
        let f = FoliationResult::from_map(&rho());
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "id,size,cycle_length,n_foils,class\n0,4,2,2,FF\n");
    }
}
