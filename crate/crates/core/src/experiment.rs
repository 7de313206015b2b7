//! Batch experiments: generate realizations, evaluate a shift, foliate, and aggregate the
//! identity, transport and Palm reports. Realization `i` uses seed `base + i`; results are
//! collected in index order so outputs do not depend on the worker count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, PointPattern};
use crate::error::{Error, Result};
use crate::foliation::{descendant_stats, FoliationResult};
use crate::generators::{generate, GenSpec, Model};
use crate::ladder::{run_ladder, LadderConfig, LadderReport};
use crate::orders::stable_maps_for;
use crate::palm::{
    aggregate_evaporation, aggregate_identities, check_mass_transport, evaporation_profile, palm_mean, relative_intensity_aggregate,
    transport_discrepancy, verify_identities, write_reports_csv, EvaporationPoint, IdentityOutcome, IterateKernel,
    RelativeIntensity, RelativeIntensityKernel, ReportBundle, StatReport, TransportKernel,
};
use crate::shifts::{evaluate, ShiftKind};

/// Orders of the iterate kernels checked for mass-transport balance.
pub const TRANSPORT_ORDERS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default = "five")]
    pub n_max: usize,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Ladder fractions; window domains only.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub save_patterns: bool,
    pub model: Model,
    pub domain: Domain,
    pub shift: ShiftKind,
}

fn one() -> usize {
    1
}

fn five() -> usize {
    5
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn gen_spec(&self, index: usize) -> GenSpec {
        GenSpec { model: self.model.clone(), domain: self.domain.clone(), seed: self.seed.wrapping_add(index as u64) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::config("realizations must be at least 1"));
        }
        if self.n_max == 0 {
            return Err(Error::config("n_max must be at least 1"));
        }
        self.gen_spec(0).validate()?;
        if !self.shift.supports(self.domain.kind) {
            return Err(Error::config(format!(
                "the {} shift is not defined on a {:?} domain",
                self.shift.name(),
                self.domain.kind
            )));
        }
        match (&self.shift, &self.model) {
            (ShiftKind::NextRow, Model::BernoulliGrid { .. }) | (ShiftKind::MultiTypeStrip, Model::PoissonCluster { .. }) => {}
            (ShiftKind::NextRow, _) => return Err(Error::config("the next-row shift needs a bernoulli_grid model")),
            (ShiftKind::MultiTypeStrip, _) => {
                return Err(Error::config("the multi-type strip shift needs a poisson_cluster model"))
            }
            _ => {}
        }
        if let Some(fr) = &self.ladder {
            if self.domain.is_torus() {
                return Err(Error::config("a ladder needs a window domain"));
            }
            LadderConfig::new(fr.clone()).validate()?;
        }
        Ok(())
    }
}

/// One summary row per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub index: usize,
    pub seed: u64,
    pub n_points: usize,
    pub n_components: usize,
    pub n_foils: usize,
    pub censored_points: usize,
    pub censored_components: usize,
    pub max_cycle_length: usize,
}

/// Everything computed on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationAnalysis {
    pub summary: RealizationSummary,
    pub identities: IdentityOutcome,
    /// `(kernel name, order, discrepancy)`.
    pub transport: Vec<(String, usize, f64)>,
    pub censoring_fraction: f64,
    pub evaporation: Vec<EvaporationPoint>,
    pub relative_intensity: RelativeIntensity,
    /// Per point: component size and foil size (`None` inside censored components).
    pub component_size: Vec<Option<f64>>,
    pub foil_size: Vec<Option<f64>>,
    /// Uncensored components whose foil count equals their cycle length, and how many were checked.
    pub foil_cycle_match: (usize, usize),
}

pub fn analyze(pattern: &PointPattern, kind: ShiftKind, n_max: usize, index: usize, seed: u64) -> Result<RealizationAnalysis> {
    let map = evaluate(pattern, kind)?;
    let fol = FoliationResult::from_map(&map);
    let desc = descendant_stats(&map, &fol, n_max);
    let identities = verify_identities(&fol, &desc, n_max)?;
    let (_, stable) = stable_maps_for(pattern, &map, &fol);
    let n = pattern.len();
    let core: Vec<bool> = (0..n).map(|x| !map.is_censored(x)).collect();
    let censoring_fraction = if n == 0 { 0.0 } else { map.censored_count() as f64 / n as f64 };

    let mut transport = Vec::new();
    for k in TRANSPORT_ORDERS {
        let kern = IterateKernel { map: &map, n: k };
        transport.push((kern.name(), k, transport_discrepancy(&kern, &core)?));
    }
    let kern = RelativeIntensityKernel { map: &map, stable: &stable };
    transport.push((kern.name(), 1, transport_discrepancy(&kern, &core)?));

    // evaporation over points whose component is fully observed, or over the non-buffer
    // points when every component is censored
    let mut ref_pts: Vec<bool> = (0..n).map(|x| !fol.is_censored_point(x)).collect();
    if !ref_pts.iter().any(|&b| b) {
        ref_pts = (0..n).map(|x| !pattern.is_censored(x)).collect();
    }
    let orders: Vec<usize> = (1..=n_max).collect();
    let evaporation = evaporation_profile(&desc, &ref_pts, &orders)?;
    let relative_intensity = relative_intensity_aggregate(&map, &stable, |_| true);

    let members = fol.component_members();
    let foil_sizes: Vec<usize> = fol.foil_members().iter().map(Vec::len).collect();
    let component_size = (0..n)
        .map(|x| (!fol.is_censored_point(x)).then(|| members[fol.component_id[x]].len() as f64))
        .collect();
    let foil_size = (0..n).map(|x| (!fol.is_censored_point(x)).then(|| foil_sizes[fol.foil_id[x]] as f64)).collect();
    let finite: Vec<_> = fol.components.iter().filter(|c| !c.censored).collect();
    let foil_cycle_match = (finite.iter().filter(|c| c.n_foils == c.cycle_length).count(), finite.len());

    let summary = RealizationSummary {
        index,
        seed,
        n_points: n,
        n_components: fol.n_components(),
        n_foils: fol.n_foils,
        censored_points: map.censored_count(),
        censored_components: fol.components.iter().filter(|c| c.censored).count(),
        max_cycle_length: fol.components.iter().map(|c| c.cycle_length).max().unwrap_or(0),
    };
    Ok(RealizationAnalysis {
        summary,
        identities,
        transport,
        censoring_fraction,
        evaporation,
        relative_intensity,
        component_size,
        foil_size,
        foil_cycle_match,
    })
}

pub fn identity_reports(analyses: &[RealizationAnalysis]) -> Vec<StatReport> {
    let outcomes: Vec<IdentityOutcome> = analyses.iter().map(|a| a.identities.clone()).collect();
    aggregate_identities(&outcomes)
}

pub fn transport_reports(analyses: &[RealizationAnalysis]) -> Vec<StatReport> {
    let Some(first) = analyses.first() else { return Vec::new() };
    (0..first.transport.len())
        .map(|k| {
            let (name, order, _) = &first.transport[k];
            let vals: Vec<(f64, f64)> = analyses.iter().map(|a| (a.transport[k].2, a.censoring_fraction)).collect();
            check_mass_transport(name, *order, &vals)
        })
        .collect()
}

pub fn stat_reports(analyses: &[RealizationAnalysis]) -> Vec<StatReport> {
    let mut out = aggregate_evaporation(&analyses.iter().map(|a| a.evaporation.clone()).collect::<Vec<_>>());
    let ri: Vec<f64> = analyses.iter().filter_map(|a| a.relative_intensity.value).collect();
    let mut r = StatReport::new("relative_intensity", 0, ri);
    r.dropped = analyses.len() - r.realizations();
    out.push(r);
    let sizes: Vec<Vec<Option<f64>>> = analyses.iter().map(|a| a.component_size.clone()).collect();
    out.push(palm_mean("component_size", 0, &sizes));
    let foils: Vec<Vec<Option<f64>>> = analyses.iter().map(|a| a.foil_size.clone()).collect();
    out.push(palm_mean("foil_size", 0, &foils));
    let matches: Vec<f64> = analyses
        .iter()
        .filter(|a| a.foil_cycle_match.1 > 0)
        .map(|a| a.foil_cycle_match.0 as f64 / a.foil_cycle_match.1 as f64)
        .collect();
    let mut m = StatReport::new("foils_equal_cycle_length", 0, matches);
    m.exact = m.per_realization.iter().all(|&v| v == 1.0);
    m.dropped = analyses.len() - m.realizations();
    out.push(m);
    let cens: Vec<f64> = analyses.iter().map(|a| a.censoring_fraction).collect();
    out.push(StatReport::new("censored_fraction", 0, cens));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub realization: usize,
    pub component_slope: f64,
    pub foil_slope: f64,
    pub class: crate::foliation::ComponentClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub summaries: Vec<RealizationSummary>,
    pub identities: Vec<StatReport>,
    pub transport: Vec<StatReport>,
    pub stats: Vec<StatReport>,
    pub ladders: Vec<LadderReport>,
    pub patterns: Vec<PointPattern>,
}

impl ExperimentOutcome {
    /// True when no exact identity failed (torus transport balance included).
    pub fn exact_ok(&self) -> bool {
        self.identities.iter().all(|r| r.exact) && (!self.spec.domain.is_torus() || self.transport.iter().all(|r| r.exact))
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    type One = (RealizationAnalysis, Option<LadderReport>, Option<PointPattern>);
    let results: Vec<One> = pool.install(|| {
        (0..spec.realizations)
            .into_par_iter()
            .map(|i| -> Result<One> {
                let gs = spec.gen_spec(i);
                let pattern = generate(&gs)?;
                let analysis = analyze(&pattern, spec.shift, spec.n_max, i, gs.seed)?;
                let ladder = match &spec.ladder {
                    Some(fr) => Some(run_ladder(&pattern, spec.shift, &LadderConfig::new(fr.clone()))?),
                    None => None,
                };
                Ok((analysis, ladder, spec.save_patterns.then_some(pattern)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut analyses = Vec::with_capacity(results.len());
    let mut ladders = Vec::new();
    let mut patterns = Vec::new();
    for (a, l, p) in results {
        analyses.push(a);
        ladders.extend(l);
        patterns.extend(p);
    }
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        summaries: analyses.iter().map(|a| a.summary.clone()).collect(),
        identities: identity_reports(&analyses),
        transport: transport_reports(&analyses),
        stats: stat_reports(&analyses),
        ladders,
        patterns,
    })
}

pub fn write_csv_file(path: &Path, reports: &[StatReport]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_reports_csv(reports, std::io::BufWriter::new(f))
}

pub fn write_summaries_csv(path: &Path, rows: &[RealizationSummary]) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Write every artefact of an experiment into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv_file(&dir.join("identities.csv"), &outcome.identities)?;
    write_csv_file(&dir.join("transport.csv"), &outcome.transport)?;
    write_csv_file(&dir.join("stats.csv"), &outcome.stats)?;
    write_summaries_csv(&dir.join("realizations.csv"), &outcome.summaries)?;
    let mut all = outcome.identities.clone();
    all.extend(outcome.transport.iter().cloned());
    all.extend(outcome.stats.iter().cloned());
    std::fs::write(dir.join("reports.json"), ReportBundle::new(all).to_json()?)?;
    if !outcome.ladders.is_empty() {
        let mut wr = csv::Writer::from_path(dir.join("ladder.csv"))?;
        for (i, l) in outcome.ladders.iter().enumerate() {
            wr.serialize(LadderRow {
                realization: i,
                component_slope: l.component_slope,
                foil_slope: l.foil_slope,
                class: l.class,
            })?;
        }
        wr.flush()?;
    }
    if !outcome.patterns.is_empty() {
        let pdir = dir.join("patterns");
        std::fs::create_dir_all(&pdir)?;
        for (i, p) in outcome.patterns.iter().enumerate() {
            std::fs::write(pdir.join(format!("realization_{i}.json")), p.to_json()?)?;
        }
    }
    Ok(())
}

/// Reports of a single pattern, as written by the `verify` stage.
pub fn verify_pattern(pattern: &PointPattern, kind: ShiftKind, n_max: usize) -> Result<(Vec<StatReport>, Vec<StatReport>)> {
    let a = analyze(pattern, kind, n_max, 0, 0)?;
    let all = [a];
    Ok((identity_reports(&all), transport_reports(&all)))
}

/// Palm statistics of a single pattern, as written by the `stats` stage.
pub fn stats_pattern(pattern: &PointPattern, kind: ShiftKind, n_max: usize) -> Result<Vec<StatReport>> {
    Ok(stat_reports(&[analyze(pattern, kind, n_max, 0, 0)?]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MNN_TORUS: &str = r#"
seed = 11
realizations = 3
n_max = 3

[model]
kind = "poisson"
intensity = 1.0

[domain]
kind = "torus"
extents = [20.0, 20.0]
buffer = 0.0

[shift]
kind = "mnn"
"#;

    #[test]
    fn parse_and_run() {
        let spec = ExperimentSpec::from_toml_str(MNN_TORUS).unwrap();
        assert_eq!(spec.realizations, 3);
        let out = run_experiment(&spec).unwrap();
        assert!(out.exact_ok());
        assert_eq!(out.identities.len(), 18);
        assert!(out.summaries.iter().all(|s| s.max_cycle_length <= 2));
        let m = out.stats.iter().find(|r| r.name == "foils_equal_cycle_length").unwrap();
        assert!(m.exact);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut spec = ExperimentSpec::from_toml_str(MNN_TORUS).unwrap();
        spec.jobs = Some(1);
        let a = run_experiment(&spec).unwrap();
        spec.jobs = Some(3);
        let b = run_experiment(&spec).unwrap();
        assert_eq!((a.summaries, a.identities, a.stats), (b.summaries, b.identities, b.stats));
    }

    #[test]
    fn invalid_specs() {
        let bad = MNN_TORUS.replace("kind = \"mnn\"", "kind = \"next_row\"");
        assert!(matches!(ExperimentSpec::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = MNN_TORUS.replace("kind = \"mnn\"", "kind = \"strip\"");
        assert!(matches!(ExperimentSpec::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = MNN_TORUS.replace("realizations = 3", "realizations = 0");
        assert!(ExperimentSpec::from_toml_str(&bad).is_err());
        let bad = MNN_TORUS.replace("n_max = 3", "n_max = 3\nbogus = 1");
        assert!(ExperimentSpec::from_toml_str(&bad).is_err());
    }
}
