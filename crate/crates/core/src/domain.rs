//! Geometric primitives: domains (flat torus or buffered window), the metric,
//! lexicographic order and the point-pattern container shared by every other module.
//!
//! Coordinates of a pattern live in the box `[0, extent_1) x ... x [0, extent_d)`
//! (closed on the right for windows). A torus identifies opposite faces; a window is
//! an observation region whose outer `buffer` margin is censored.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag written into every JSON/CSV artefact.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Torus,
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub extents: Vec<f64>,
    pub buffer: f64,
}

impl Domain {
    pub fn torus(extents: Vec<f64>) -> Result<Self> {
        let dom = Domain { kind: DomainKind::Torus, extents, buffer: 0.0 };
        dom.validate()?;
        Ok(dom)
    }

    pub fn window(extents: Vec<f64>, buffer: f64) -> Result<Self> {
        let dom = Domain { kind: DomainKind::Window, extents, buffer };
        dom.validate()?;
        Ok(dom)
    }

    pub fn validate(&self) -> Result<()> {
        if self.extents.is_empty() {
            return Err(Error::config("domain needs at least one dimension"));
        }
        if self.extents.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(Error::config(format!("extents must be finite and positive: {:?}", self.extents)));
        }
        if !self.buffer.is_finite() || self.buffer < 0.0 {
            return Err(Error::config(format!("buffer must be a nonnegative real, got {}", self.buffer)));
        }
        match self.kind {
            DomainKind::Torus if self.buffer != 0.0 => {
                Err(Error::config("a torus has no censoring buffer"))
            }
            DomainKind::Window if self.buffer >= self.min_extent() / 2.0 => Err(Error::config(format!(
                "buffer {} must be below half the smallest extent {}",
                self.buffer,
                self.min_extent()
            ))),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn is_torus(&self) -> bool {
        self.kind == DomainKind::Torus
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn min_extent(&self) -> f64 {
        self.extents.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Displacement `q - p` along one axis; on a torus the minimal image in `[-e/2, e/2]`.
    #[inline]
    pub(crate) fn delta_axis(&self, axis: usize, p: f64, q: f64) -> f64 {
        let d = q - p;
        match self.kind {
            DomainKind::Window => d,
            DomainKind::Torus => {
                let e = self.extents[axis];
                d - e * (d / e).round()
            }
        }
    }

    /// Minimal-image displacement vector `q - p`.
    pub fn displacement(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        (0..p.len()).map(|i| self.delta_axis(i, p[i], q[i])).collect()
    }

    #[inline]
    pub(crate) fn dist_sq_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..p.len() {
            let d = self.delta_axis(i, p[i], q[i]);
            s += d * d;
        }
        s
    }

    /// Distance from `p` to the closest face of the domain (infinite on a torus).
    pub fn dist_to_boundary(&self, p: &[f64]) -> f64 {
        match self.kind {
            DomainKind::Torus => f64::INFINITY,
            DomainKind::Window => p
                .iter()
                .zip(&self.extents)
                .map(|(x, e)| x.min(e - x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.extents).all(|(x, e)| match self.kind {
                DomainKind::Torus => *x >= 0.0 && x < e,
                DomainKind::Window => *x >= 0.0 && x <= e,
            })
    }

    /// Wrap a coordinate vector back into the fundamental box (torus only).
    pub(crate) fn wrap(&self, p: &mut [f64]) {
        if self.is_torus() {
            for (x, e) in p.iter_mut().zip(&self.extents) {
                *x = x.rem_euclid(*e);
                // rem_euclid can round up to exactly `e`
                if *x >= *e {
                    *x = 0.0;
                }
            }
        }
    }
}

fn check_dims(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    Ok(())
}

/// Metric of the domain: quotient metric on a torus, Euclidean in a window.
pub fn distance(p: &[f64], q: &[f64], dom: &Domain) -> Result<f64> {
    check_dims(p, q)?;
    if p.len() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: p.len() });
    }
    Ok(dom.dist_sq_unchecked(p, q).sqrt())
}

/// Lexicographic order of coordinates, left to right.
pub fn lex_compare(p: &[f64], q: &[f64]) -> Result<Ordering> {
    check_dims(p, q)?;
    Ok(lex_cmp(p, q))
}

#[inline]
pub(crate) fn lex_cmp(p: &[f64], q: &[f64]) -> Ordering {
    for (a, b) in p.iter().zip(q) {
        match a.partial_cmp(b) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// True when the point lies strictly within `buffer` of a window face.
pub fn is_censored(p: &[f64], dom: &Domain) -> bool {
    match dom.kind {
        DomainKind::Torus => false,
        DomainKind::Window => dom.dist_to_boundary(p) < dom.buffer,
    }
}

/// Borrowed view of one point of a pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<'a> {
    pub id: usize,
    pub coords: &'a [f64],
}

/// Role of a point in a Poisson cluster pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ClusterRole {
    /// A cluster centre; its type is the cardinality of its cluster.
    Parent { cluster_size: usize },
    Child { parent: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum PatternMeta {
    #[default]
    Plain,
    /// Bernoulli grid: lattice `Z^d + shift`, `shift` in `[0,1)^d`.
    Grid { shift: Vec<f64> },
    Cluster { roles: Vec<ClusterRole> },
}

/// A finite simple point configuration together with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    domain: Domain,
    coords: Vec<f64>,
    meta: PatternMeta,
}

impl PointPattern {
    pub fn new(domain: Domain, points: Vec<Vec<f64>>) -> Result<Self> {
        let d = domain.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(domain, coords, PatternMeta::Plain)
    }

    /// Build from a flat coordinate buffer (`len * dim` values, point-major).
    pub fn from_flat(domain: Domain, coords: Vec<f64>, meta: PatternMeta) -> Result<Self> {
        domain.validate()?;
        let d = domain.dim();
        if !coords.len().is_multiple_of(d) {
            return Err(Error::InvalidPattern(format!(
                "{} coordinates is not a multiple of dimension {d}",
                coords.len()
            )));
        }
        let pat = PointPattern { domain, coords, meta };
        pat.validate()?;
        Ok(pat)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            let p = self.point(i);
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPattern(format!("point {i} has a non-finite coordinate")));
            }
            if !self.domain.contains(p) {
                return Err(Error::InvalidPattern(format!("point {i} {p:?} lies outside the domain")));
            }
        }
        let order = self.lex_order();
        for w in order.windows(2) {
            if lex_cmp(self.point(w[0]), self.point(w[1])) == Ordering::Equal {
                return Err(Error::InvalidPattern(format!(
                    "points {} and {} coincide (pattern is not simple)",
                    w[0], w[1]
                )));
            }
        }
        match &self.meta {
            PatternMeta::Plain => {}
            PatternMeta::Grid { shift } => {
                if shift.len() != self.dim() || shift.iter().any(|u| !(0.0..1.0).contains(u)) {
                    return Err(Error::InvalidPattern(format!("grid shift {shift:?} must lie in [0,1)^d")));
                }
            }
            PatternMeta::Cluster { roles } => {
                if roles.len() != n {
                    return Err(Error::InvalidPattern(format!(
                        "{} cluster annotations for {n} points",
                        roles.len()
                    )));
                }
                for (i, r) in roles.iter().enumerate() {
                    if let ClusterRole::Child { parent } = r {
                        if !matches!(roles.get(*parent), Some(ClusterRole::Parent { .. })) {
                            return Err(Error::InvalidPattern(format!(
                                "child {i} references {parent}, which is not a cluster parent"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[id * d..(id + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = Point<'_>> {
        self.coords.chunks_exact(self.dim()).enumerate().map(|(id, coords)| Point { id, coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn meta(&self) -> &PatternMeta {
        &self.meta
    }

    pub fn grid_shift(&self) -> Option<&[f64]> {
        match &self.meta {
            PatternMeta::Grid { shift } => Some(shift),
            _ => None,
        }
    }

    pub fn cluster_roles(&self) -> Option<&[ClusterRole]> {
        match &self.meta {
            PatternMeta::Cluster { roles } => Some(roles),
            _ => None,
        }
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.domain.dist_sq_unchecked(self.point(a), self.point(b)).sqrt()
    }

    #[inline]
    pub fn lex(&self, a: usize, b: usize) -> Ordering {
        lex_cmp(self.point(a), self.point(b))
    }

    pub fn is_censored(&self, id: usize) -> bool {
        is_censored(self.point(id), &self.domain)
    }

    /// Ids sorted by lexicographic order of their coordinates.
    pub fn lex_order(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.len()).collect();
        ids.sort_by(|&a, &b| self.lex(a, b));
        ids
    }

    /// The same configuration translated by `t` (coordinates `x + t`, wrapped). Torus only:
    /// translations of a window would move points across its faces.
    pub fn translated(&self, t: &[f64]) -> Result<Self> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.len() });
        }
        if !self.domain.is_torus() {
            return Err(Error::config("only torus patterns can be translated in place"));
        }
        let d = self.dim();
        let mut coords = self.coords.clone();
        for p in coords.chunks_exact_mut(d) {
            for (x, ti) in p.iter_mut().zip(t) {
                *x += ti;
            }
            self.domain.wrap(p);
        }
        let meta = match &self.meta {
            PatternMeta::Grid { shift } => {
                let s = shift
                    .iter()
                    .zip(t)
                    .map(|(u, ti)| {
                        let v = (u + ti).rem_euclid(1.0);
                        if v >= 1.0 { 0.0 } else { v }
                    })
                    .collect();
                PatternMeta::Grid { shift: s }
            }
            m => m.clone(),
        };
        Self::from_flat(self.domain.clone(), coords, meta)
    }

    /// Points of the box `lo + [0, extents]`, re-expressed in a window of those extents.
    /// Returns the sub-pattern and the original id of each of its points.
    pub fn sub_window(&self, lo: &[f64], extents: &[f64], buffer: f64) -> Result<(Self, Vec<usize>)> {
        let d = self.dim();
        if lo.len() != d || extents.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lo.len().min(extents.len()) });
        }
        let domain = Domain::window(extents.to_vec(), buffer)?;
        let mut ids = Vec::new();
        let mut coords = Vec::new();
        for p in self.points() {
            let local: Vec<f64> = (0..d).map(|i| p.coords[i] - lo[i]).collect();
            if domain.contains(&local) {
                ids.push(p.id);
                coords.extend_from_slice(&local);
            }
        }
        let meta = match &self.meta {
            PatternMeta::Plain => PatternMeta::Plain,
            PatternMeta::Grid { shift } => PatternMeta::Grid {
                shift: shift
                    .iter()
                    .zip(lo)
                    .map(|(u, l)| {
                        let v = (u - l).rem_euclid(1.0);
                        if v >= 1.0 { 0.0 } else { v }
                    })
                    .collect(),
            },
            PatternMeta::Cluster { roles } => {
                let mut local_id = vec![usize::MAX; self.len()];
                for (k, &id) in ids.iter().enumerate() {
                    local_id[id] = k;
                }
                let mut sub = Vec::with_capacity(ids.len());
                for &id in &ids {
                    match roles[id] {
                        ClusterRole::Child { parent } if local_id[parent] == usize::MAX => {
                            return Err(Error::config(
                                "sub-window cuts a cluster child from its parent; cluster ladders are unsupported",
                            ));
                        }
                        ClusterRole::Child { parent } => sub.push(ClusterRole::Child { parent: local_id[parent] }),
                        r => sub.push(r),
                    }
                }
                PatternMeta::Cluster { roles: sub }
            }
        };
        Ok((Self::from_flat(domain, coords, meta)?, ids))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PatternFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PatternFile = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        file.into_pattern()
    }
}

/// On-disk form of a pattern. Field order is fixed so output is byte-stable.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternFile {
    pub schema_version: u32,
    pub dimension: usize,
    pub domain: Domain,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<ClusterRole>>,
}

impl From<&PointPattern> for PatternFile {
    fn from(p: &PointPattern) -> Self {
        PatternFile {
            schema_version: SCHEMA_VERSION,
            dimension: p.dim(),
            domain: p.domain.clone(),
            points: p.points().map(|q| q.coords.to_vec()).collect(),
            grid_shift: p.grid_shift().map(|s| s.to_vec()),
            clusters: p.cluster_roles().map(|r| r.to_vec()),
        }
    }
}

impl PatternFile {
    pub fn into_pattern(self) -> Result<PointPattern> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.dimension != self.domain.dim() {
            return Err(Error::Schema(format!(
                "dimension {} disagrees with domain extents {:?}",
                self.dimension, self.domain.extents
            )));
        }
        let meta = match (self.grid_shift, self.clusters) {
            (None, None) => PatternMeta::Plain,
            (Some(shift), None) => PatternMeta::Grid { shift },
            (None, Some(roles)) => PatternMeta::Cluster { roles },
            (Some(_), Some(_)) => {
                return Err(Error::Schema("a pattern cannot be both a grid and a cluster pattern".into()))
            }
        };
        let d = self.dimension;
        let mut coords = Vec::with_capacity(self.points.len() * d);
        for p in &self.points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        PointPattern::from_flat(self.domain, coords, meta)
    }
}
