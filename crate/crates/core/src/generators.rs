//! Seeded generators for homogeneous Poisson patterns, Bernoulli grids and Poisson
//! cluster patterns (points on circles around Poisson parents).
//!
//! All randomness comes from xoshiro256++ seeded through SplitMix64 (`seed_from_u64`),
//! so a `(GenSpec, seed)` pair reproduces the same pattern bit for bit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::domain::{ClusterRole, Domain, PatternMeta, PointPattern};
use crate::error::{Error, Result};

/// Identifier of the only supported generator algorithm.
pub const RNG_ALGORITHM: &str = "xoshiro256pp-splitmix64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    Poisson {
        intensity: f64,
    },
    BernoulliGrid {
        p: f64,
    },
    PoissonCluster {
        parent_intensity: f64,
        #[serde(default = "one")]
        mark_circle_radius: f64,
        #[serde(default = "one")]
        mark_intensity: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub model: Model,
    pub domain: Domain,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        match self.model {
            Model::Poisson { intensity } => positive("intensity", intensity),
            Model::BernoulliGrid { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config(format!("retention probability p={p} must lie in [0,1]")));
                }
                if self.domain.is_torus() && self.domain.extents.iter().any(|e| e.fract() != 0.0) {
                    return Err(Error::config(format!(
                        "a Bernoulli grid on a torus needs integer extents, got {:?}",
                        self.domain.extents
                    )));
                }
                Ok(())
            }
            Model::PoissonCluster { parent_intensity, mark_circle_radius, mark_intensity } => {
                positive("parent intensity", parent_intensity)?;
                positive("mark circle radius", mark_circle_radius)?;
                positive("mark intensity", mark_intensity)?;
                if self.domain.dim() != 2 {
                    return Err(Error::config("cluster marks live on circles: dimension must be 2"));
                }
                Ok(())
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn rng_for(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn poisson_count(rng: &mut Xoshiro256PlusPlus, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::config(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

fn uniform_point(rng: &mut Xoshiro256PlusPlus, dom: &Domain, out: &mut Vec<f64>) {
    for e in &dom.extents {
        out.push(rng.random::<f64>() * e);
    }
}

/// Generate a pattern for any model.
pub fn generate(spec: &GenSpec) -> Result<PointPattern> {
    match spec.model {
        Model::Poisson { .. } => gen_poisson(spec),
        Model::BernoulliGrid { .. } => gen_bernoulli_grid(spec),
        Model::PoissonCluster { .. } => gen_poisson_cluster(spec),
    }
}

pub fn gen_poisson(spec: &GenSpec) -> Result<PointPattern> {
    spec.validate()?;
    let Model::Poisson { intensity } = spec.model else {
        return Err(Error::config("gen_poisson needs a Poisson model"));
    };
    let mut rng = rng_for(spec.seed);
    let n = poisson_count(&mut rng, intensity * spec.domain.volume())?;
    let mut coords = Vec::with_capacity(n as usize * spec.domain.dim());
    for _ in 0..n {
        uniform_point(&mut rng, &spec.domain, &mut coords);
    }
    PointPattern::from_flat(spec.domain.clone(), coords, PatternMeta::Plain)
}

pub fn gen_bernoulli_grid(spec: &GenSpec) -> Result<PointPattern> {
    spec.validate()?;
    let Model::BernoulliGrid { p } = spec.model else {
        return Err(Error::config("gen_bernoulli_grid needs a BernoulliGrid model"));
    };
    let dom = &spec.domain;
    let d = dom.dim();
    let mut rng = rng_for(spec.seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    // number of lattice sites k + u along each axis that fall in the domain
    let sites: Vec<usize> = dom
        .extents
        .iter()
        .zip(&shift)
        .map(|(e, u)| {
            if dom.is_torus() {
                *e as usize
            } else {
                ((e - u).floor() as usize) + 1
            }
        })
        .collect();
    let total: usize = sites.iter().product();
    let mut coords = Vec::new();
    let mut k = vec![0usize; d];
    for _ in 0..total {
        if rng.random::<f64>() < p {
            coords.extend(k.iter().zip(&shift).map(|(&ki, u)| ki as f64 + u));
        }
        for axis in (0..d).rev() {
            k[axis] += 1;
            if k[axis] < sites[axis] {
                break;
            }
            k[axis] = 0;
        }
    }
    PointPattern::from_flat(dom.clone(), coords, PatternMeta::Grid { shift })
}

/// Poisson parents, each carrying a Poisson number of children placed uniformly on a
/// circle of `mark_circle_radius` centred at the parent. Parents take the first ids;
/// children follow, grouped by parent. Window mode drops children that fall outside,
/// but the parent's type stays the generated cluster cardinality.
pub fn gen_poisson_cluster(spec: &GenSpec) -> Result<PointPattern> {
    spec.validate()?;
    let Model::PoissonCluster { parent_intensity, mark_circle_radius, mark_intensity } = spec.model else {
        return Err(Error::config("gen_poisson_cluster needs a PoissonCluster model"));
    };
    let dom = &spec.domain;
    let mut rng = rng_for(spec.seed);
    let n_parents = poisson_count(&mut rng, parent_intensity * dom.volume())? as usize;
    let mut coords = Vec::with_capacity(2 * n_parents);
    for _ in 0..n_parents {
        uniform_point(&mut rng, dom, &mut coords);
    }
    let mean_children = 2.0 * PI * mark_intensity * mark_circle_radius;
    let mut roles: Vec<ClusterRole> = Vec::with_capacity(n_parents);
    let mut children = Vec::new();
    let mut child_roles = Vec::new();
    for parent in 0..n_parents {
        let m = poisson_count(&mut rng, mean_children)? as usize;
        roles.push(ClusterRole::Parent { cluster_size: m });
        let (px, py) = (coords[2 * parent], coords[2 * parent + 1]);
        for _ in 0..m {
            let theta = rng.random::<f64>() * 2.0 * PI;
            let mut c = [px + mark_circle_radius * theta.cos(), py + mark_circle_radius * theta.sin()];
            if dom.is_torus() {
                dom.wrap(&mut c);
            } else if !dom.contains(&c) {
                continue;
            }
            children.extend_from_slice(&c);
            child_roles.push(ClusterRole::Child { parent });
        }
    }
    coords.extend(children);
    roles.extend(child_roles);
    PointPattern::from_flat(dom.clone(), coords, PatternMeta::Cluster { roles })
}
