use std::path::Path;
use std::process::{Command, Output};

fn foliate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foliate"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FOLIATE_SEED")
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const TORUS_SPEC: &str = r#"
seed = 7
realizations = 4
n_max = 5
jobs = 2

[model]
kind = "poisson"
intensity = 1.0

[domain]
kind = "torus"
extents = [30.0, 30.0]
buffer = 0.0

[shift]
kind = "mnn"
"#;

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.toml"), TORUS_SPEC).unwrap();
    for out in ["a", "b"] {
        let o = foliate(&["run", "--config", "spec.toml", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let c = foliate(&["run", "--config", "spec.toml", "--jobs", "1", "--out", "c"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    for f in ["identities.csv", "transport.csv", "stats.csv", "realizations.csv", "reports.json"] {
        let a = read(&dir.path().join("a").join(f));
        assert_eq!(a, read(&dir.path().join("b").join(f)), "{f}");
        assert_eq!(a, read(&dir.path().join("c").join(f)), "{f}");
    }
    let ids = read(&dir.path().join("a/identities.csv"));
    assert!(ids.starts_with("name,n,mean,stderr,exact,realizations,censoring_fraction\n"));
    assert!(ids.lines().skip(1).all(|l| l.contains(",true,")));
    assert!(read(&dir.path().join("a/reports.json")).contains("\"schema_version\": 1"));
}

#[test]
fn pipeline_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = foliate(
        &["generate", "--model", "bernoulli-grid", "--p", "0.5", "--torus", "40x40", "--seed", "3", "--out", "p.json"],
        d,
    );
    assert_eq!(g.status.code(), Some(0), "{}", String::from_utf8_lossy(&g.stderr));
    let v = foliate(&["verify", "--input", "p.json", "--shift", "next-row", "--n-max", "4", "--out", "v"], d);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    let s = foliate(&["stats", "--input", "p.json", "--shift", "next-row", "--n-max", "4", "--out", "v"], d);
    assert_eq!(s.status.code(), Some(0));
    let r = foliate(
        &[
            "run", "--model", "bernoulli-grid", "--p", "0.5", "--torus", "40x40", "--seed", "3", "--shift", "next-row",
            "--n-max", "4", "--save-patterns", "--out", "r",
        ],
        d,
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["identities.csv", "transport.csv", "stats.csv"] {
        assert_eq!(read(&d.join("v").join(f)), read(&d.join("r").join(f)), "{f}");
    }
    assert_eq!(read(&d.join("p.json")), read(&d.join("r/patterns/realization_0.json")));
}

#[test]
fn foliate_and_ladder_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = foliate(
        &["generate", "--model", "poisson", "--window", "60x60", "--buffer", "3", "--seed", "1", "--out", "w.json"],
        d,
    );
    assert_eq!(g.status.code(), Some(0));
    let f = foliate(&["foliate", "--input", "w.json", "--shift", "strip", "--out", "f"], d);
    assert_eq!(f.status.code(), Some(0), "{}", String::from_utf8_lossy(&f.stderr));
    for name in ["map.json", "foliation.json", "stable.json", "components.csv"] {
        assert!(d.join("f").join(name).exists(), "{name}");
    }
    assert!(read(&d.join("f/components.csv")).starts_with("id,size,cycle_length,n_foils,class\n"));
    let l = foliate(&["ladder", "--input", "w.json", "--shift", "strip", "--fractions", "0.5,0.75,1.0", "--out", "l"], d);
    assert_eq!(l.status.code(), Some(0), "{}", String::from_utf8_lossy(&l.stderr));
    assert_eq!(read(&d.join("l/ladder.csv")).lines().count(), 4);
}

#[test]
fn generate_to_stdout_uses_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--model", "poisson", "--intensity", "1", "--torus", "50x50"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_foliate"))
        .args(args)
        .env("FOLIATE_SEED", "7")
        .current_dir(dir.path())
        .output()
        .unwrap();
    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "7"]);
    let with_flag = foliate(&flagged, dir.path());
    assert_eq!(with_env.status.code(), Some(0));
    assert_eq!(with_env.stdout, with_flag.stdout);
    assert!(String::from_utf8_lossy(&with_flag.stdout).contains("\"schema_version\":1"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = foliate(&["run", "--model", "poisson", "--torus", "20x20", "--shift", "next-row", "--out", "x"], d);
    assert_eq!(o.status.code(), Some(2));
    let g = foliate(&["generate", "--model", "poisson", "--torus", "20x20", "--out", "p.json"], d);
    assert_eq!(g.status.code(), Some(0));
    let v = foliate(&["verify", "--input", "p.json", "--shift", "next-row"], d);
    assert_eq!(v.status.code(), Some(2));
    let s = foliate(&["verify", "--input", "p.json", "--shift", "strip"], d);
    assert_eq!(s.status.code(), Some(2));
    std::fs::write(d.join("bad.json"), read(&d.join("p.json")).replace("\"schema_version\":1", "\"schema_version\":2")).unwrap();
    assert_eq!(foliate(&["verify", "--input", "bad.json", "--shift", "mnn"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.toml"), TORUS_SPEC.replace("realizations = 4", "realizations = 0")).unwrap();
    assert_eq!(foliate(&["run", "--config", "bad.toml"], d).status.code(), Some(2));
    assert_eq!(foliate(&["run", "--config", "missing.toml"], d).status.code(), Some(2));
    std::fs::write(d.join("ok.toml"), TORUS_SPEC).unwrap();
    assert_eq!(foliate(&["run", "--config", "ok.toml", "--torus", "10x10"], d).status.code(), Some(2));
    let l = foliate(&["ladder", "--input", "p.json", "--shift", "mnn", "--fractions", "0.75,0.5"], d);
    assert_eq!(l.status.code(), Some(2));
}
