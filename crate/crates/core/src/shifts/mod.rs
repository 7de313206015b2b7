//! Point-shifts evaluated on a finite realization.
//!
//! A [`ShiftMap`] is the restriction of the point-shift to the pattern: every point gets
//! either an image id or a censoring flag. A point is censored when the region its rule
//! has to inspect is not fully observed (window mode), so every image that *is* reported
//! agrees with the image the same point would get in any extension of the pattern.

mod condenser;
mod mnn;
mod next_row;
mod strip;

use serde::{Deserialize, Serialize};

use crate::domain::{ClusterRole, DomainKind, PointPattern};
use crate::error::{Error, Result};

pub use condenser::condenser_marks;
pub use next_row::grid_indices;

/// How the condenser measures "closest" among eligible targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closeness {
    #[default]
    Euclidean,
    FirstCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftKind {
    Strip,
    Mnn,
    NextRow,
    Condenser {
        ball_radius: f64,
        #[serde(default)]
        closeness: Closeness,
    },
    MultiTypeStrip,
}

impl ShiftKind {
    pub fn condenser() -> Self {
        ShiftKind::Condenser { ball_radius: 1.0, closeness: Closeness::Euclidean }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShiftKind::Strip => "strip",
            ShiftKind::Mnn => "mnn",
            ShiftKind::NextRow => "next_row",
            ShiftKind::Condenser { .. } => "condenser",
            ShiftKind::MultiTypeStrip => "multi_type_strip",
        }
    }

    /// Parse the CLI spelling (`strip`, `mnn`, `next-row`, `condenser`, `multi-type-strip`).
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "strip" => Ok(ShiftKind::Strip),
            "mnn" => Ok(ShiftKind::Mnn),
            "next_row" | "nextrow" => Ok(ShiftKind::NextRow),
            "condenser" => Ok(ShiftKind::condenser()),
            "multi_type_strip" | "multitypestrip" => Ok(ShiftKind::MultiTypeStrip),
            other => Err(Error::config(format!("unknown shift '{other}'"))),
        }
    }

    /// Domain kinds on which the shift is defined.
    pub fn supports(&self, kind: DomainKind) -> bool {
        match self {
            ShiftKind::Mnn | ShiftKind::NextRow => true,
            ShiftKind::Strip | ShiftKind::Condenser { .. } | ShiftKind::MultiTypeStrip => kind == DomainKind::Window,
        }
    }

    pub fn check(&self, pattern: &PointPattern) -> Result<()> {
        let dom = pattern.domain();
        if !self.supports(dom.kind) {
            return Err(Error::config(format!(
                "the {} shift is not defined on a {:?} domain",
                self.name(),
                dom.kind
            )));
        }
        match self {
            ShiftKind::Strip if dom.dim() != 2 => Err(Error::config("the strip shift needs dimension 2")),
            ShiftKind::MultiTypeStrip if dom.dim() != 2 => Err(Error::config("the multi-type strip shift needs dimension 2")),
            ShiftKind::MultiTypeStrip if pattern.cluster_roles().is_none() => {
                Err(Error::config("the multi-type strip shift needs cluster annotations"))
            }
            ShiftKind::NextRow if pattern.grid_shift().is_none() => {
                Err(Error::config("the next-row shift needs a Bernoulli grid pattern"))
            }
            ShiftKind::NextRow if dom.dim() < 2 => Err(Error::config("the next-row shift needs dimension >= 2")),
            ShiftKind::Condenser { ball_radius, .. } if !(ball_radius.is_finite() && *ball_radius > 0.0) => {
                Err(Error::config(format!("condenser ball radius must be positive, got {ball_radius}")))
            }
            _ => Ok(()),
        }
    }
}

/// The point-shift restricted to a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMap {
    kind: ShiftKind,
    image: Vec<Option<usize>>,
    censored: Vec<bool>,
}

impl ShiftMap {
    /// Build from raw images; `None` marks a censored point.
    pub fn from_images(kind: ShiftKind, image: Vec<Option<usize>>) -> Result<Self> {
        let n = image.len();
        if let Some((i, t)) = image.iter().enumerate().find_map(|(i, t)| t.filter(|&t| t >= n).map(|t| (i, t))) {
            return Err(Error::Domain(format!("image {t} of point {i} is not a valid id (n = {n})")));
        }
        let censored = image.iter().map(Option::is_none).collect();
        Ok(ShiftMap { kind, image, censored })
    }

    /// A total map given as a target table (handy for hand-made functional graphs).
    pub fn from_targets(targets: &[usize]) -> Result<Self> {
        Self::from_images(ShiftKind::Strip, targets.iter().map(|&t| Some(t)).collect())
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn image(&self, x: usize) -> Option<usize> {
        self.image[x]
    }

    pub fn images(&self) -> &[Option<usize>] {
        &self.image
    }

    #[inline]
    pub fn is_censored(&self, x: usize) -> bool {
        self.censored[x]
    }

    pub fn censored(&self) -> &[bool] {
        &self.censored
    }

    pub fn is_total(&self) -> bool {
        !self.censored.iter().any(|&c| c)
    }

    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }

    /// `F^n(x)` when every intermediate image is defined.
    pub fn iterate(&self, x: usize, n: usize) -> Option<usize> {
        let mut y = x;
        for _ in 0..n {
            y = self.image[y]?;
        }
        Some(y)
    }

    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<MapEntry> = (0..self.len())
            .map(|id| MapEntry { id, image: self.image[id], censored: self.censored[id], role: None })
            .collect();
        Ok(serde_json::to_string(&entries)?)
    }

    pub fn from_json(kind: ShiftKind, s: &str) -> Result<Self> {
        let entries: Vec<MapEntry> = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        let mut image = vec![None; entries.len()];
        for (k, e) in entries.iter().enumerate() {
            if e.id != k {
                return Err(Error::Schema(format!("entry {k} carries id {}", e.id)));
            }
            if e.censored != e.image.is_none() {
                return Err(Error::Schema(format!("entry {k}: censored flag disagrees with image")));
            }
            image[k] = e.image;
        }
        Self::from_images(kind, image).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// One row of the map serialization: `{id, image|null, censored}` (plus `role` for stable maps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub id: usize,
    pub image: Option<usize>,
    pub censored: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

/// Evaluate `kind` on every point of the pattern.
pub fn evaluate(pattern: &PointPattern, kind: ShiftKind) -> Result<ShiftMap> {
    kind.check(pattern)?;
    let image = match kind {
        ShiftKind::Strip => {
            let ids: Vec<usize> = (0..pattern.len()).collect();
            strip::strip_images(pattern, &ids)
        }
        ShiftKind::Mnn => mnn::mnn_images(pattern)?,
        ShiftKind::NextRow => next_row::next_row_images(pattern)?,
        ShiftKind::Condenser { ball_radius, closeness } => condenser::condenser_images(pattern, ball_radius, closeness),
        ShiftKind::MultiTypeStrip => multitype_strip_images(pattern)?,
    };
    ShiftMap::from_images(kind, image)
}

pub fn eval_strip(pattern: &PointPattern) -> Result<ShiftMap> {
    evaluate(pattern, ShiftKind::Strip)
}

pub fn eval_mnn(pattern: &PointPattern) -> Result<ShiftMap> {
    evaluate(pattern, ShiftKind::Mnn)
}

pub fn eval_next_row(pattern: &PointPattern) -> Result<ShiftMap> {
    evaluate(pattern, ShiftKind::NextRow)
}

pub fn eval_condenser(pattern: &PointPattern, ball_radius: f64) -> Result<ShiftMap> {
    evaluate(pattern, ShiftKind::Condenser { ball_radius, closeness: Closeness::Euclidean })
}

pub fn eval_multitype_strip(pattern: &PointPattern) -> Result<ShiftMap> {
    evaluate(pattern, ShiftKind::MultiTypeStrip)
}

/// Children go to their parent; parents follow the strip rule among parents of the same type.
fn multitype_strip_images(pattern: &PointPattern) -> Result<Vec<Option<usize>>> {
    let roles = pattern.cluster_roles().ok_or_else(|| Error::config("missing cluster annotations"))?;
    let mut image = vec![None; pattern.len()];
    let mut by_type: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, r) in roles.iter().enumerate() {
        match *r {
            ClusterRole::Child { parent } => {
                if !pattern.is_censored(i) {
                    image[i] = Some(parent);
                }
            }
            ClusterRole::Parent { cluster_size } => by_type.entry(cluster_size).or_default().push(i),
        }
    }
    for ids in by_type.values() {
        for (k, img) in ids.iter().zip(strip::strip_images(pattern, ids)) {
            image[*k] = img;
        }
    }
    Ok(image)
}
