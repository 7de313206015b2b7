//! Point-averaged (Palm) statistics: report aggregation, mass-transport balance, the exact
//! counting identities between descendant and cousin counts, the evaporation profile,
//! relative intensities of consecutive foils and a markability check.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, PatternMeta, PointPattern, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::foliation::{DescendantStats, FoliationResult};
use crate::orders::{delta, FoilOrder, StableMaps};
use crate::shifts::ShiftMap;

/// Tolerance under which an identity counts as exact.
pub const EXACT_TOL: f64 = 1e-12;

/// One statistic aggregated over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    /// Order `n` the statistic refers to (0 when not applicable).
    pub n: usize,
    pub per_realization: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub exact: bool,
    /// Largest per-realization |lhs - rhs| for identities, 0 otherwise.
    pub max_abs_discrepancy: f64,
    pub n_points_used: u64,
    pub censoring_fraction: f64,
    /// Realizations without a usable value.
    pub dropped: usize,
}

/// Sample mean and standard error (sample sd / sqrt(k)); stderr is 0 for k < 2.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

impl StatReport {
    pub fn new(name: impl Into<String>, n: usize, per_realization: Vec<f64>) -> Self {
        let (mean, stderr) = mean_stderr(&per_realization);
        StatReport {
            name: name.into(),
            n,
            per_realization,
            mean,
            stderr,
            exact: false,
            max_abs_discrepancy: 0.0,
            n_points_used: 0,
            censoring_fraction: 0.0,
            dropped: 0,
        }
    }

    pub fn realizations(&self) -> usize {
        self.per_realization.len()
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// CSV rows `name,n,mean,stderr,exact,realizations,censoring_fraction`.
pub fn write_reports_csv<W: std::io::Write>(reports: &[StatReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["name", "n", "mean", "stderr", "exact", "realizations", "censoring_fraction"])?;
    for r in reports {
        wr.write_record([
            r.name.clone(),
            r.n.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.exact.to_string(),
            r.realizations().to_string(),
            r.censoring_fraction.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub reports: Vec<StatReport>,
}

impl ReportBundle {
    pub fn new(reports: Vec<StatReport>) -> Self {
        ReportBundle { schema_version: SCHEMA_VERSION, reports }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: ReportBundle = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if b.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported schema_version {}", b.schema_version)));
        }
        Ok(b)
    }
}

/// Average a per-point statistic (`None` = censored) within each realization, then across
/// realizations. Realizations with no usable point are dropped.
pub fn palm_mean(name: &str, n: usize, per_point: &[Vec<Option<f64>>]) -> StatReport {
    let mut values = Vec::new();
    let (mut used, mut total, mut dropped) = (0u64, 0u64, 0usize);
    for real in per_point {
        total += real.len() as u64;
        let vals: Vec<f64> = real.iter().flatten().copied().collect();
        if vals.is_empty() {
            dropped += 1;
            continue;
        }
        used += vals.len() as u64;
        values.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    let mut r = StatReport::new(name, n, values);
    r.n_points_used = used;
    r.censoring_fraction = if total == 0 { 0.0 } else { 1.0 - used as f64 / total as f64 };
    r.dropped = dropped;
    r
}

/// A nonnegative sparse kernel `w(x, y)` given by out-lists.
pub trait TransportKernel {
    fn name(&self) -> String;
    /// Visit `(y, w(x, y))` for every `y` receiving mass from `x`; nothing for censored `x`.
    fn for_each_out(&self, x: usize, f: &mut dyn FnMut(usize, f64));
}

/// `w(x, y) = 1{F^n(x) = y}`.
pub struct IterateKernel<'a> {
    pub map: &'a ShiftMap,
    pub n: usize,
}

impl TransportKernel for IterateKernel<'_> {
    fn name(&self) -> String {
        format!("transport_iterate_{}", self.n)
    }

    fn for_each_out(&self, x: usize, f: &mut dyn FnMut(usize, f64)) {
        if let Some(y) = self.map.iterate(x, self.n) {
            f(y, 1.0);
        }
    }
}

/// `w(x, y) = 1` when `y` is in the foil of `F(x)` with `0 <= delta(F(x), y) < delta(F(x), F(f_perp(x)))`.
pub struct RelativeIntensityKernel<'a> {
    pub map: &'a ShiftMap,
    pub stable: &'a StableMaps,
}

impl TransportKernel for RelativeIntensityKernel<'_> {
    fn name(&self) -> String {
        "transport_relative_intensity".into()
    }

    fn for_each_out(&self, x: usize, f: &mut dyn FnMut(usize, f64)) {
        let (Some(fx), Some(fy)) = (self.map.image(x), self.map.image(self.stable.f_perp[x])) else {
            return;
        };
        let span = delta(self.stable, fx, fy).expect("images of one foil share a foil");
        for k in 0..span.max(0) {
            f(self.stable.iterate_f_perp(fx, k), 1.0);
        }
    }
}

/// Per realization `sum_x w+(x) - sum_y w-(y)` over the given points (`core[x]`); outgoing
/// mass counts for core senders, incoming mass for core receivers.
pub fn transport_discrepancy(kernel: &dyn TransportKernel, core: &[bool]) -> Result<f64> {
    let n = core.len();
    let mut w_in = vec![0.0f64; n];
    let mut out_total = 0.0;
    let mut negative = None;
    for x in (0..n).filter(|&x| core[x]) {
        let mut row = 0.0;
        kernel.for_each_out(x, &mut |y, w| {
            if w < 0.0 {
                negative = Some((x, y));
            }
            row += w;
            w_in[y] += w;
        });
        out_total += row;
    }
    if let Some((x, y)) = negative {
        return Err(Error::Domain(format!("kernel {} is negative at ({x}, {y})", kernel.name())));
    }
    let in_total: f64 = (0..n).filter(|&y| core[y]).map(|y| w_in[y]).sum();
    Ok(out_total - in_total)
}

/// Mass-transport balance across realizations: one kernel per realization, all of the same family.
pub fn check_mass_transport(name: &str, n: usize, per_realization: &[(f64, f64)]) -> StatReport {
    // (discrepancy, censoring fraction)
    let disc: Vec<f64> = per_realization.iter().map(|p| p.0).collect();
    let mut r = StatReport::new(name, n, disc.clone());
    r.max_abs_discrepancy = disc.iter().fold(0.0, |m, d| m.max(d.abs()));
    r.exact = r.max_abs_discrepancy < EXACT_TOL;
    r.censoring_fraction = if per_realization.is_empty() {
        0.0
    } else {
        per_realization.iter().map(|p| p.1).sum::<f64>() / per_realization.len() as f64
    };
    r
}

/// Points whose component is fully observed.
pub fn uncensored_core(foliation: &FoliationResult) -> Vec<bool> {
    (0..foliation.len()).map(|x| !foliation.is_censored_point(x)).collect()
}

/// One identity evaluated on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityOutcome {
    pub checks: Vec<IdentityCheck>,
    pub n_points_used: u64,
    pub n_points_total: u64,
}

/// Test function applied to cousin and descendant counts.
type Weight = fn(u128) -> u128;

/// `sum_x 1/l(x)` over `xs`, grouped by value so each distinct `l` contributes one rounding.
fn sum_reciprocal(values: impl Iterator<Item = u64>) -> f64 {
    let mut counts = std::collections::BTreeMap::<u64, u64>::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.iter().map(|(&k, &c)| c as f64 / k as f64).sum()
}

/// Counting identities for `n = 1..=n_max` on the points of uncensored components (the whole
/// realization on a torus):
/// mean d_n = 1; mean 1/l_n = |F^n(S)|/N; mean h(l_n) = mean d_n h(d_n) for h in {1, id, square};
/// mean(d_n | d_n > 0) = 1 / mean(1/l_n).
pub fn verify_identities(foliation: &FoliationResult, desc: &DescendantStats, n_max: usize) -> Result<IdentityOutcome> {
    if n_max > desc.max_order {
        return Err(Error::config(format!("descendant counts only reach order {}", desc.max_order)));
    }
    let core = uncensored_core(foliation);
    let xs: Vec<usize> = (0..core.len()).filter(|&x| core[x]).collect();
    let big_n = xs.len() as u128;
    let mut checks = Vec::new();
    if big_n > 0 {
        let nf = big_n as f64;
        for n in 1..=n_max {
            let d = &desc.d[n];
            let l = &desc.l[n];
            let sum_d: u128 = xs.iter().map(|&x| d[x] as u128).sum();
            let image_size = xs.iter().filter(|&&x| d[x] > 0).count() as u128;
            let sum_inv_l = sum_reciprocal(xs.iter().map(|&x| l[x]));
            let mut push = |name: &str, lhs: f64, rhs: f64| {
                checks.push(IdentityCheck { name: name.into(), n, lhs, rhs })
            };
            push("mean_d_n", sum_d as f64 / nf, 1.0);
            push("mean_inv_l_n", sum_inv_l / nf, image_size as f64 / nf);
            let hs: [(&str, Weight); 3] = [("h_one", |_| 1), ("h_identity", |k| k), ("h_square", |k| k * k)];
            for (name, h) in hs {
                let lhs: u128 = xs.iter().map(|&x| h(l[x] as u128)).sum();
                let rhs: u128 = xs.iter().map(|&x| d[x] as u128 * h(d[x] as u128)).sum();
                push(name, lhs as f64 / nf, rhs as f64 / nf);
            }
            let cond = if image_size == 0 { f64::NAN } else { sum_d as f64 / image_size as f64 };
            push("conditional_d_n", cond, nf / sum_inv_l);
        }
    }
    Ok(IdentityOutcome { checks, n_points_used: big_n as u64, n_points_total: core.len() as u64 })
}

/// Merge per-realization identity outcomes into one report per (identity, n).
pub fn aggregate_identities(outcomes: &[IdentityOutcome]) -> Vec<StatReport> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for o in outcomes {
        for c in &o.checks {
            if !keys.iter().any(|(k, n)| k == &c.name && *n == c.n) {
                keys.push((c.name.clone(), c.n));
            }
        }
    }
    keys.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| identity_rank(&a.0).cmp(&identity_rank(&b.0))));
    let used: u64 = outcomes.iter().map(|o| o.n_points_used).sum();
    let total: u64 = outcomes.iter().map(|o| o.n_points_total).sum();
    keys.into_iter()
        .map(|(name, n)| {
            let mut vals = Vec::new();
            let mut worst = 0.0f64;
            let mut dropped = 0;
            for o in outcomes {
                match o.checks.iter().find(|c| c.name == name && c.n == n) {
                    Some(c) => {
                        vals.push(c.lhs);
                        worst = if c.discrepancy().is_nan() { f64::INFINITY } else { worst.max(c.discrepancy()) };
                    }
                    None => dropped += 1,
                }
            }
            let mut r = StatReport::new(name, n, vals);
            r.max_abs_discrepancy = worst;
            r.exact = worst < EXACT_TOL;
            r.n_points_used = used;
            r.censoring_fraction = if total == 0 { 0.0 } else { 1.0 - used as f64 / total as f64 };
            r.dropped = dropped;
            r
        })
        .collect()
}

fn identity_rank(name: &str) -> usize {
    ["mean_d_n", "mean_inv_l_n", "h_one", "h_identity", "h_square", "conditional_d_n"]
        .iter()
        .position(|k| *k == name)
        .unwrap_or(usize::MAX)
}

/// `P(0 in F^n)` estimate and mean `1/l_n` over reference points, for one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaporationPoint {
    pub n: usize,
    pub p_hat: f64,
    pub mean_inv_l: f64,
}

/// `p_hat(n) = #{y in core : d_n(y) > 0} / #core`, with mean `1/l_n` over core points whose
/// `F^n` is defined. On a torus the two sequences coincide exactly.
pub fn evaporation_profile(desc: &DescendantStats, core: &[bool], n_list: &[usize]) -> Result<Vec<EvaporationPoint>> {
    let xs: Vec<usize> = (0..core.len()).filter(|&x| core[x]).collect();
    n_list
        .iter()
        .map(|&n| {
            if n > desc.max_order {
                return Err(Error::config(format!("order {n} exceeds computed order {}", desc.max_order)));
            }
            let alive = xs.iter().filter(|&&y| desc.d[n][y] > 0).count();
            let defined: Vec<u64> = xs.iter().map(|&x| desc.l[n][x]).filter(|&l| l > 0).collect();
            let k = defined.len();
            Ok(EvaporationPoint {
                n,
                p_hat: if xs.is_empty() { f64::NAN } else { alive as f64 / xs.len() as f64 },
                mean_inv_l: if k == 0 { f64::NAN } else { sum_reciprocal(defined.into_iter()) / k as f64 },
            })
        })
        .collect()
}

/// Profiles of several realizations as reports `evaporation_p` and `evaporation_inv_l`.
pub fn aggregate_evaporation(profiles: &[Vec<EvaporationPoint>]) -> Vec<StatReport> {
    let Some(first) = profiles.first() else { return Vec::new() };
    let mut out = Vec::new();
    for (i, pt) in first.iter().enumerate() {
        let p: Vec<f64> = profiles.iter().map(|r| r[i].p_hat).filter(|v| v.is_finite()).collect();
        let l: Vec<f64> = profiles.iter().map(|r| r[i].mean_inv_l).filter(|v| v.is_finite()).collect();
        let mut a = StatReport::new("evaporation_p", pt.n, p);
        a.dropped = profiles.len() - a.realizations();
        let mut b = StatReport::new("evaporation_inv_l", pt.n, l);
        b.dropped = profiles.len() - b.realizations();
        out.push(a);
        out.push(b);
    }
    out
}

/// `delta(F(x), F(f_perp^m(x))) / m` for the largest feasible `m <= n`. Cyclic-lex foils
/// give `|L+| / |L|`. `None` when no step is feasible.
pub fn relative_intensity(map: &ShiftMap, stable: &StableMaps, x: usize, n: usize) -> Option<(f64, usize)> {
    let fx = map.image(x)?;
    let f = stable.foil_id[x];
    match stable.foil_order[f] {
        FoilOrder::CyclicLex => {
            let plus = stable.foil_len[stable.foil_id[fx]];
            Some((plus as f64 / stable.foil_len[f] as f64, stable.foil_len[f]))
        }
        FoilOrder::Rls => {
            let room = stable.foil_len[f] - 1 - stable.foil_position[x];
            let mut m = 0;
            let mut z = x;
            let mut last = fx;
            while m < n.min(room) {
                z = stable.f_perp[z];
                match map.image(z) {
                    Some(fz) => last = fz,
                    None => break,
                }
                m += 1;
            }
            if m == 0 {
                return None;
            }
            let d = delta(stable, fx, last).ok()?;
            Some((d as f64 / m as f64, m))
        }
    }
}

/// Point-weighted relative intensity of a family of foils in one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeIntensity {
    /// `numerator / denominator`, absent when no foil was usable.
    pub value: Option<f64>,
    /// Sum of `|L+|` (cyclic-lex foils) or of `delta` (RLS foils).
    pub numerator: f64,
    /// Sum of `|L|` or of step counts.
    pub denominator: f64,
    pub foils_used: usize,
    pub foils_dropped: usize,
}

/// Aggregate over the foils accepted by `select`. Each foil contributes its estimate weighted
/// by its point count (cyclic-lex) or by the steps walked from its first member (RLS).
pub fn relative_intensity_aggregate(
    map: &ShiftMap,
    stable: &StableMaps,
    select: impl Fn(usize) -> bool,
) -> RelativeIntensity {
    let (mut num, mut den, mut used, mut dropped) = (0.0, 0.0, 0, 0);
    for (f, members) in stable.foils.iter().enumerate() {
        if !select(f) {
            continue;
        }
        match relative_intensity(map, stable, members[0], members.len()) {
            Some((v, w)) => {
                num += v * w as f64;
                den += w as f64;
                used += 1;
            }
            None => dropped += 1,
        }
    }
    RelativeIntensity {
        value: (den > 0.0).then(|| num / den),
        numerator: num,
        denominator: den,
        foils_used: used,
        foils_dropped: dropped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkabilityVerdict {
    /// The mark is flow-adapted and constant on every checked foil.
    Witness,
    /// Flow-adapted but not constant on some foil: no conclusion.
    Inconclusive,
    /// Translating the pattern changed the mark of some point.
    RejectedAtGate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkabilityReport {
    pub verdict: MarkabilityVerdict,
    pub gate_mismatches: usize,
    pub foils_checked: usize,
    pub foils_constant: usize,
}

/// A candidate per-point mark; `None` where it cannot be computed.
pub type MarkFn<'a> = dyn Fn(&PointPattern) -> Vec<Option<i64>> + 'a;

/// The pattern translated by `t`: in place on a torus, into a window enlarged by `t` otherwise.
fn shifted_copy(pattern: &PointPattern, t: &[f64]) -> Result<PointPattern> {
    let dom = pattern.domain();
    if dom.is_torus() {
        return pattern.translated(t);
    }
    if t.len() != dom.dim() || t.iter().any(|v| *v < 0.0) {
        return Err(Error::config("window translations must be nonnegative vectors of the pattern dimension"));
    }
    let extents: Vec<f64> = dom.extents.iter().zip(t).map(|(e, v)| e + v).collect();
    let domain = Domain::window(extents, dom.buffer)?;
    let coords = pattern.coords().chunks_exact(dom.dim()).flat_map(|p| p.iter().zip(t).map(|(x, v)| x + v)).collect();
    let meta = match pattern.meta() {
        PatternMeta::Grid { shift } => PatternMeta::Grid {
            shift: shift.iter().zip(t).map(|(u, v)| (u + v).rem_euclid(1.0)).collect(),
        },
        m => m.clone(),
    };
    PointPattern::from_flat(domain, coords, meta)
}

/// Gate: the mark must be unchanged by translating the pattern by `t` (on a window only
/// points with a mark in the original are compared). Then check constancy on each foil.
pub fn markability_diagnostic(
    pattern: &PointPattern,
    foliation: &FoliationResult,
    mark: &MarkFn<'_>,
    t: &[f64],
) -> Result<MarkabilityReport> {
    let m0 = mark(pattern);
    let m1 = mark(&shifted_copy(pattern, t)?);
    if m0.len() != pattern.len() || m1.len() != pattern.len() {
        return Err(Error::config("mark function must return one value per point"));
    }
    let gate_mismatches = m0.iter().zip(&m1).filter(|(a, b)| a.is_some() && a != b).count();
    let mut first: Vec<Option<i64>> = vec![None; foliation.n_foils];
    let mut broken = vec![false; foliation.n_foils];
    for (x, m) in m0.iter().enumerate() {
        let Some(m) = *m else { continue };
        let f = foliation.foil_id[x];
        match first[f] {
            None => first[f] = Some(m),
            Some(v) if v != m => broken[f] = true,
            _ => {}
        }
    }
    let foils_checked = first.iter().filter(|v| v.is_some()).count();
    let foils_constant = foils_checked - broken.iter().filter(|&&b| b).count();
    let verdict = if gate_mismatches > 0 {
        MarkabilityVerdict::RejectedAtGate
    } else if foils_constant == foils_checked {
        MarkabilityVerdict::Witness
    } else {
        MarkabilityVerdict::Inconclusive
    };
    Ok(MarkabilityReport { verdict, gate_mismatches, foils_checked, foils_constant })
}

/// Condenser marks as a candidate mark function.
pub fn condenser_mark_fn(ball_radius: f64) -> impl Fn(&PointPattern) -> Vec<Option<i64>> {
    move |p| crate::shifts::condenser_marks(p, ball_radius).into_iter().map(|m| m.map(|v| v as i64)).collect()
}

/// Before/after summary of re-rooting every point at `f_perp` of itself: mean foil size and
/// mean nearest-neighbour distance seen from the root. A bijection keeps both unchanged on a
/// finite realization, so this is a weak sanity check only.
pub fn reroot_summary(pattern: &PointPattern, stable: &StableMaps) -> [(f64, f64); 2] {
    let n = pattern.len();
    if n < 2 {
        return [(f64::NAN, f64::NAN); 2];
    }
    let idx = crate::index::GridIndex::new(pattern);
    let nn: Vec<f64> = (0..n).map(|x| idx.two_nearest(x)[0].map_or(f64::NAN, |p| p.1)).collect();
    let size = |x: usize| stable.foil_len[stable.foil_id[x]] as f64;
    let avg = |g: &dyn Fn(usize) -> f64| (0..n).map(g).sum::<f64>() / n as f64;
    [
        (avg(&size), avg(&|x| size(stable.f_perp[x]))),
        (avg(&|x| nn[x]), avg(&|x| nn[stable.f_perp[x]])),
    ]
}
