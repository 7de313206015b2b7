//! Window ladders: the same realization observed through nested, centred sub-windows.
//! Growth of the observed component and foil sizes of a fixed set of reference points gives a
//! diagnostic for the infinite-volume class (any finite realization is literally FF).

use serde::{Deserialize, Serialize};

use crate::domain::{PointPattern, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::foliation::{descendant_stats, ComponentClass, FoliationResult};
use crate::palm::{evaporation_profile, EvaporationPoint};
use crate::shifts::{evaluate, ShiftKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    /// Side of each level as a fraction of the full window, strictly increasing in (0, 1].
    pub fractions: Vec<f64>,
    /// Component growth slope above which a component counts as growing.
    #[serde(default = "default_component_slope")]
    pub component_slope_min: f64,
    /// Foil growth slope above which foils count as growing.
    #[serde(default = "default_foil_slope")]
    pub foil_slope_max: f64,
    /// Orders of the evaporation profile, reported at the largest level.
    #[serde(default = "default_profile_order")]
    pub profile_order: usize,
}

fn default_component_slope() -> f64 {
    0.5
}

fn default_foil_slope() -> f64 {
    0.1
}

fn default_profile_order() -> usize {
    8
}

impl LadderConfig {
    pub fn new(fractions: Vec<f64>) -> Self {
        LadderConfig {
            fractions,
            component_slope_min: default_component_slope(),
            foil_slope_max: default_foil_slope(),
            profile_order: default_profile_order(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::config("a ladder needs at least one fraction"));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::config(format!("ladder fractions must lie in (0, 1]: {:?}", self.fractions)));
        }
        if self.fractions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(format!("ladder fractions must be strictly increasing: {:?}", self.fractions)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub fraction: f64,
    /// Side along the first axis.
    pub side: f64,
    pub n_points: usize,
    pub n_reference: usize,
    pub mean_component_size: f64,
    pub mean_foil_size: f64,
    pub censored_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub schema_version: u32,
    pub shift: String,
    pub levels: Vec<LadderLevel>,
    pub component_slope: f64,
    pub foil_slope: f64,
    pub class: ComponentClass,
    /// Evaporation profile of the reference points, observed at the largest level.
    pub evaporation: Vec<EvaporationPoint>,
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn classify_growth(component_slope: f64, foil_slope: f64, cfg: &LadderConfig) -> ComponentClass {
    if !(component_slope.is_finite() && foil_slope.is_finite()) {
        ComponentClass::Unknown
    } else if component_slope <= cfg.component_slope_min {
        ComponentClass::FF
    } else if foil_slope <= cfg.foil_slope_max {
        ComponentClass::IfDiagnostic
    } else {
        ComponentClass::IiDiagnostic
    }
}

/// Run `kind` on nested centred sub-windows of a window pattern (same buffer at every level).
pub fn run_ladder(pattern: &PointPattern, kind: ShiftKind, cfg: &LadderConfig) -> Result<LadderReport> {
    cfg.validate()?;
    let dom = pattern.domain();
    if dom.is_torus() {
        return Err(Error::config("a ladder needs a window pattern"));
    }
    let mut levels = Vec::new();
    let mut reference: Vec<usize> = Vec::new();
    let mut evaporation = Vec::new();
    let last = cfg.fractions.len() - 1;
    for (li, &f) in cfg.fractions.iter().enumerate() {
        let extents: Vec<f64> = dom.extents.iter().map(|e| e * f).collect();
        let lo: Vec<f64> = dom.extents.iter().zip(&extents).map(|(e, s)| (e - s) / 2.0).collect();
        let (sub, ids) = pattern.sub_window(&lo, &extents, dom.buffer)?;
        let map = evaluate(&sub, kind)?;
        let fol = FoliationResult::from_map(&map);
        let mut local = vec![usize::MAX; pattern.len()];
        for (k, &id) in ids.iter().enumerate() {
            local[id] = k;
        }
        if li == 0 {
            reference = (0..sub.len()).filter(|&k| !map.is_censored(k)).map(|k| ids[k]).collect();
            if reference.is_empty() {
                return Err(Error::Domain("no reference point survives censoring at the smallest level".into()));
            }
        }
        let members = fol.component_members();
        let foil_sizes: Vec<usize> = fol.foil_members().iter().map(Vec::len).collect();
        let (mut comp_sum, mut foil_sum) = (0.0, 0.0);
        for &id in &reference {
            let k = local[id];
            comp_sum += members[fol.component_id[k]].len() as f64;
            foil_sum += foil_sizes[fol.foil_id[k]] as f64;
        }
        let r = reference.len() as f64;
        levels.push(LadderLevel {
            fraction: f,
            side: extents[0],
            n_points: sub.len(),
            n_reference: reference.len(),
            mean_component_size: comp_sum / r,
            mean_foil_size: foil_sum / r,
            censored_fraction: if sub.is_empty() { 0.0 } else { map.censored_count() as f64 / sub.len() as f64 },
        });
        if li == last {
            let desc = descendant_stats(&map, &fol, cfg.profile_order);
            let mut core = vec![false; sub.len()];
            for &id in &reference {
                core[local[id]] = true;
            }
            let orders: Vec<usize> = (1..=cfg.profile_order).collect();
            evaporation = evaporation_profile(&desc, &core, &orders)?;
        }
    }
    let (component_slope, foil_slope, class) = if levels.len() < 2 {
        (f64::NAN, f64::NAN, ComponentClass::Unknown)
    } else {
        let x: Vec<f64> = levels.iter().map(|l| l.side.ln()).collect();
        let yc: Vec<f64> = levels.iter().map(|l| l.mean_component_size.ln()).collect();
        let yf: Vec<f64> = levels.iter().map(|l| l.mean_foil_size.ln()).collect();
        let (cs, fs) = (ls_slope(&x, &yc), ls_slope(&x, &yf));
        (cs, fs, classify_growth(cs, fs, cfg))
    };
    Ok(LadderReport {
        schema_version: SCHEMA_VERSION,
        shift: kind.name().to_string(),
        levels,
        component_slope,
        foil_slope,
        class,
        evaporation,
    })
}

impl LadderReport {
    /// One row per level: `fraction,side,n_points,n_reference,mean_component_size,mean_foil_size,component_slope,foil_slope,class`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "fraction",
            "side",
            "n_points",
            "n_reference",
            "mean_component_size",
            "mean_foil_size",
            "component_slope",
            "foil_slope",
            "class",
        ])?;
        for l in &self.levels {
            wr.write_record([
                l.fraction.to_string(),
                l.side.to_string(),
                l.n_points.to_string(),
                l.n_reference.to_string(),
                l.mean_component_size.to_string(),
                l.mean_foil_size.to_string(),
                self.component_slope.to_string(),
                self.foil_slope.to_string(),
                self.class.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
