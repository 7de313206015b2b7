use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use foliate::domain::{Domain, PointPattern};
use foliate::error::{Error, Result};
use foliate::experiment::{run_experiment, stats_pattern, verify_pattern, write_csv_file, write_outputs, ExperimentSpec};
use foliate::foliation::{classify, FoliationResult};
use foliate::generators::{generate, GenSpec, Model};
use foliate::ladder::{run_ladder, LadderConfig};
use foliate::orders::stable_maps_for;
use foliate::palm::{ReportBundle, StatReport};
use foliate::shifts::{evaluate, Closeness, ShiftKind};

#[derive(Parser)]
#[command(name = "foliate", version, about = "Point-shift foliations of simulated point patterns")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate one pattern and write it as JSON.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a shift on a pattern and write the map, foliation and stable maps.
    Foliate {
        #[command(flatten)]
        io: InputOut,
        #[command(flatten)]
        shift: ShiftArgs,
    },
    /// Check the exact identities and mass-transport balance on a pattern.
    Verify {
        #[command(flatten)]
        io: InputOut,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
    /// Palm statistics of a pattern (evaporation profile, relative intensity, sizes).
    Stats {
        #[command(flatten)]
        io: InputOut,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
    /// Growth diagnostic over nested centred sub-windows of a window pattern.
    Ladder {
        #[command(flatten)]
        io: InputOut,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
        fractions: Vec<f64>,
    },
    /// Full batch experiment, from a TOML spec or from flags.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        /// Also write every generated pattern.
        #[arg(long)]
        save_patterns: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputOut {
    /// Pattern JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Default)]
struct GenArgs {
    /// Generator config (TOML with `[model]`, `[domain]` and optional `seed`); flags override it.
    #[arg(long = "gen-config")]
    gen_config: Option<PathBuf>,
    /// poisson, bernoulli-grid or poisson-cluster.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    parent_intensity: Option<f64>,
    #[arg(long)]
    mark_radius: Option<f64>,
    #[arg(long)]
    mark_intensity: Option<f64>,
    /// Torus extents, e.g. 50x50.
    #[arg(long, conflicts_with = "window")]
    torus: Option<String>,
    /// Window extents, e.g. 200x200 or 10000.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    buffer: Option<f64>,
    /// Base seed; falls back to the config file, then to `FOLIATE_SEED`, then to 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ShiftArgs {
    /// strip, mnn, next-row, condenser or multi-type-strip.
    #[arg(long)]
    shift: Option<String>,
    #[arg(long)]
    ball_radius: Option<f64>,
    /// euclidean or first-coordinate.
    #[arg(long)]
    closeness: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenFile {
    model: Model,
    domain: Domain,
    #[serde(default)]
    seed: Option<u64>,
}

fn parse_extents(s: &str) -> Result<Vec<f64>> {
    s.split(['x', 'X'])
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad extents '{s}'"))))
        .collect()
}

impl GenArgs {
    fn sets_model_or_domain(&self) -> bool {
        self.gen_config.is_some()
            || self.model.is_some()
            || [self.intensity, self.p, self.parent_intensity, self.mark_radius, self.mark_intensity, self.buffer]
                .iter()
                .any(Option::is_some)
            || self.torus.is_some()
            || self.window.is_some()
    }

    fn model(&self, base: Option<Model>) -> Result<Model> {
        let name = match (&self.model, &base) {
            (Some(m), _) => m.to_ascii_lowercase().replace('-', "_"),
            (None, Some(Model::Poisson { .. })) => "poisson".into(),
            (None, Some(Model::BernoulliGrid { .. })) => "bernoulli_grid".into(),
            (None, Some(Model::PoissonCluster { .. })) => "poisson_cluster".into(),
            (None, None) => return Err(Error::Config("--model is required".into())),
        };
        let m = match name.as_str() {
            "poisson" => {
                let old = match base {
                    Some(Model::Poisson { intensity }) => intensity,
                    _ => 1.0,
                };
                Model::Poisson { intensity: self.intensity.unwrap_or(old) }
            }
            "bernoulli_grid" | "grid" => {
                let old = match base {
                    Some(Model::BernoulliGrid { p }) => p,
                    _ => 0.5,
                };
                Model::BernoulliGrid { p: self.p.unwrap_or(old) }
            }
            "poisson_cluster" | "cluster" => {
                let (pi, r, mi) = match base {
                    Some(Model::PoissonCluster { parent_intensity, mark_circle_radius, mark_intensity }) => {
                        (parent_intensity, mark_circle_radius, mark_intensity)
                    }
                    _ => (self.intensity.unwrap_or(0.01), 1.0, 1.0),
                };
                Model::PoissonCluster {
                    parent_intensity: self.parent_intensity.unwrap_or(pi),
                    mark_circle_radius: self.mark_radius.unwrap_or(r),
                    mark_intensity: self.mark_intensity.unwrap_or(mi),
                }
            }
            other => return Err(Error::Config(format!("unknown model '{other}'"))),
        };
        Ok(m)
    }

    fn domain(&self, base: Option<Domain>) -> Result<Domain> {
        match (&self.torus, &self.window, base) {
            (Some(t), _, _) => Domain::torus(parse_extents(t)?),
            (None, Some(w), base) => {
                let old = base.map(|d| d.buffer).unwrap_or(0.0);
                Domain::window(parse_extents(w)?, self.buffer.unwrap_or(old))
            }
            (None, None, Some(mut d)) => {
                if let Some(b) = self.buffer {
                    d.buffer = b;
                    d.validate()?;
                }
                Ok(d)
            }
            (None, None, None) => Err(Error::Config("one of --torus or --window is required".into())),
        }
    }

    fn spec(&self) -> Result<GenSpec> {
        let file = match &self.gen_config {
            Some(p) => Some(toml::from_str::<GenFile>(&std::fs::read_to_string(p)?).map_err(|e| Error::Config(e.to_string()))?),
            None => None,
        };
        let (bm, bd, bs) = match file {
            Some(f) => (Some(f.model), Some(f.domain), f.seed),
            None => (None, None, None),
        };
        let spec = GenSpec {
            model: self.model(bm)?,
            domain: self.domain(bd)?,
            seed: self.seed.or(bs).or_else(env_seed).unwrap_or(0),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ShiftArgs {
    fn kind(&self, base: Option<ShiftKind>) -> Result<ShiftKind> {
        let mut kind = match (&self.shift, base) {
            (Some(s), _) => ShiftKind::parse(s)?,
            (None, Some(k)) => k,
            (None, None) => return Err(Error::Config("--shift is required".into())),
        };
        if let ShiftKind::Condenser { ball_radius, closeness } = &mut kind {
            if let Some(r) = self.ball_radius {
                *ball_radius = r;
            }
            if let Some(c) = &self.closeness {
                *closeness = match c.to_ascii_lowercase().replace('-', "_").as_str() {
                    "euclidean" => Closeness::Euclidean,
                    "first_coordinate" => Closeness::FirstCoordinate,
                    other => return Err(Error::Config(format!("unknown closeness '{other}'"))),
                };
            }
        }
        Ok(kind)
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("FOLIATE_SEED").ok().and_then(|v| v.trim().parse().ok())
}

fn read_pattern(path: &Path) -> Result<PointPattern> {
    PointPattern::from_json(&std::fs::read_to_string(path)?)
}

fn write_bundle(path: &Path, reports: Vec<StatReport>) -> Result<()> {
    std::fs::write(path, ReportBundle::new(reports).to_json()?)?;
    Ok(())
}

/// `Ok(true)` when every exact check held.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Generate { gen, out } => {
            let pattern = generate(&gen.spec()?)?;
            let json = pattern.to_json()?;
            match out {
                Some(p) => std::fs::write(p, json)?,
                None => println!("{json}"),
            }
            Ok(true)
        }
        Cmd::Foliate { io, shift } => {
            let pattern = read_pattern(&io.input)?;
            let kind = shift.kind(None)?;
            let map = evaluate(&pattern, kind)?;
            let mut fol = FoliationResult::from_map(&map);
            fol.set_class(&classify(&fol, None));
            let (_, stable) = stable_maps_for(&pattern, &map, &fol);
            std::fs::create_dir_all(&io.out)?;
            std::fs::write(io.out.join("map.json"), map.to_json()?)?;
            std::fs::write(io.out.join("foliation.json"), fol.to_json()?)?;
            std::fs::write(io.out.join("stable.json"), stable.to_json()?)?;
            fol.write_csv(std::fs::File::create(io.out.join("components.csv"))?)?;
            Ok(true)
        }
        Cmd::Verify { io, shift, n_max } => {
            let pattern = read_pattern(&io.input)?;
            let kind = shift.kind(None)?;
            let (ids, transport) = verify_pattern(&pattern, kind, n_max)?;
            std::fs::create_dir_all(&io.out)?;
            write_csv_file(&io.out.join("identities.csv"), &ids)?;
            write_csv_file(&io.out.join("transport.csv"), &transport)?;
            let ok = ids.iter().all(|r| r.exact) && (!pattern.domain().is_torus() || transport.iter().all(|r| r.exact));
            let mut all = ids;
            all.extend(transport);
            write_bundle(&io.out.join("verify.json"), all)?;
            Ok(ok)
        }
        Cmd::Stats { io, shift, n_max } => {
            let pattern = read_pattern(&io.input)?;
            let reports = stats_pattern(&pattern, shift.kind(None)?, n_max)?;
            std::fs::create_dir_all(&io.out)?;
            write_csv_file(&io.out.join("stats.csv"), &reports)?;
            write_bundle(&io.out.join("stats.json"), reports)?;
            Ok(true)
        }
        Cmd::Ladder { io, shift, fractions } => {
            let pattern = read_pattern(&io.input)?;
            let report = run_ladder(&pattern, shift.kind(None)?, &LadderConfig::new(fractions))?;
            std::fs::create_dir_all(&io.out)?;
            report.write_csv(std::fs::File::create(io.out.join("ladder.csv"))?)?;
            std::fs::write(io.out.join("ladder.json"), report.to_json()?)?;
            eprintln!(
                "class {} (component slope {:.3}, foil slope {:.3})",
                report.class, report.component_slope, report.foil_slope
            );
            Ok(true)
        }
        Cmd::Run { config, gen, shift, realizations, n_max, jobs, fractions, save_patterns, out } => {
            let mut spec = match &config {
                Some(p) => ExperimentSpec::from_toml_file(p)?,
                None => {
                    let g = gen.spec()?;
                    ExperimentSpec {
                        seed: g.seed,
                        realizations: 1,
                        n_max: 5,
                        jobs: None,
                        out: None,
                        ladder: None,
                        save_patterns: false,
                        model: g.model,
                        domain: g.domain,
                        shift: shift.kind(None)?,
                    }
                }
            };
            if config.is_some() {
                // a config fixes model and domain; only the run-level knobs are overridable
                if gen.sets_model_or_domain() {
                    return Err(Error::Config("model and domain flags cannot be combined with --config".into()));
                }
                if let Some(seed) = gen.seed {
                    spec.seed = seed;
                }
                spec.shift = shift.kind(Some(spec.shift))?;
            }
            if let Some(r) = realizations {
                spec.realizations = r;
            }
            if let Some(n) = n_max {
                spec.n_max = n;
            }
            if jobs.is_some() {
                spec.jobs = jobs;
            }
            if fractions.is_some() {
                spec.ladder = fractions;
            }
            spec.save_patterns |= save_patterns;
            let dir = out.or_else(|| spec.out.clone()).unwrap_or_else(|| PathBuf::from("foliate-out"));
            let outcome = run_experiment(&spec)?;
            write_outputs(&outcome, &dir)?;
            let bad: Vec<&StatReport> = outcome.identities.iter().filter(|r| !r.exact).collect();
            for r in &bad {
                eprintln!("exact check failed: {} n={} (max discrepancy {:e})", r.name, r.n, r.max_abs_discrepancy);
            }
            Ok(outcome.exact_ok())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
