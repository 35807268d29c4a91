use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amestctl::config::{Config, DEFAULT_CONFIG};
use amestctl::csvlog::parse_csv;

fn amestctl(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_amestctl"));
    cmd.args(args).env_remove("AMESTCTL_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn amestctl")
}

fn config_path(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Default config with `[sim]` and other overrides spliced in.
fn write_config(dir: &Path, name: &str, edit: impl Fn(&mut Config)) -> String {
    let mut cfg = Config::default();
    edit(&mut cfg);
    let path = dir.join(name);
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_config_is_byte_stable() {
    let text = std::fs::read_to_string(golden("default.toml")).unwrap();
    assert_eq!(DEFAULT_CONFIG, text);
    assert_eq!(Config::parse(&text).unwrap(), Config::default());
    let out = amestctl(&["default-config"], &[]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
    let json = std::fs::read_to_string(golden("default.json")).unwrap();
    assert_eq!(Config::default().to_json(), json);
}

#[test]
fn default_simulation_recovers_payload() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = amestctl(&["simulate", &config_path("default.toml"), "-o", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["run.csv", "summary.txt", "tracking.svg", "params.svg", "config.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let value = |key: &str| -> f64 {
        let line = summary.lines().find(|l| l.starts_with(key)).expect(key);
        line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
    };
    let m2 = value("final m2_hat");
    assert!((0.475..=0.525).contains(&m2), "{summary}");
    assert!((value("payload estimate") - 0.4).abs() <= 0.025, "{summary}");

    let (header, rows) = parse_csv(&std::fs::read_to_string(out.join("run.csv")).unwrap()).unwrap();
    assert_eq!(header.len(), 48);
    assert_eq!(rows.len(), 10_000);
}

#[test]
fn minimal_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.toml", |c| {
        c.sim.duration = 0.001;
        c.sim.dt = 0.001;
    });
    let out = dir.path().join("out");
    let o = amestctl(&["simulate", &cfg, "-o", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("run.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(!text.contains('\r'));
    let first = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = first.split('e').next().unwrap().replace(['-', '.'], "");
    assert!(mantissa.len() >= 12, "{first}");
}

#[test]
fn zero_dt_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", |c| c.sim.dt = 0.0);
    let o = amestctl(&["simulate", &cfg, "-o", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dt"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_bad_syntax_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, "[sim]\nduration = 1.0\nstepsize = 0.01\n").unwrap();
    let o = amestctl(&["simulate", path.to_str().unwrap(), "-o", "unused"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("stepsize") && err.contains("line 3"), "{err}");

    std::fs::write(&path, "[sim\n").unwrap();
    let o = amestctl(&["simulate", path.to_str().unwrap(), "-o", "unused"], &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = amestctl(&["simulate", "/nonexistent/config.toml", "-o", "unused"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = amestctl(&["frobnicate"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_3_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "coarse.toml", |c| {
        c.sim.dt = 5e-3;
        c.sim.duration = 5.0;
    });
    let out = dir.path().join("out");
    let o = amestctl(&["simulate", &cfg, "-o", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let (_, rows) = parse_csv(&std::fs::read_to_string(out.join("run.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty() && rows.len() < 1000);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("DIVERGED"));
}

#[test]
fn seed_environment_variable_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "noisy.toml", |c| {
        c.sim.duration = 0.05;
        c.noise.qdd = 0.1;
    });
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = amestctl(&["simulate", &cfg, "-o", out.to_str().unwrap()], &[("AMESTCTL_SEED", seed)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
        assert_eq!(json["sim"]["seed"].as_u64(), Some(seed.parse().unwrap()));
        std::fs::read(out.join("run.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);

    let o = amestctl(&["simulate", &cfg, "-o", "unused"], &[("AMESTCTL_SEED", "abc")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_ranks_proposed_above_asmc_under_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = amestctl(
        &[
            "compare",
            &config_path("asmc-noisy.toml"),
            &config_path("proposed-noisy.toml"),
            "-o",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert!(rows[0].starts_with("proposed-noisy,passivity-adaptive"), "{table}");
    assert!(rows[1].starts_with("asmc-noisy,asmc"), "{table}");
    for d in ["1-asmc-noisy", "2-proposed-noisy"] {
        assert!(out.join(d).join("run.csv").is_file());
    }
    assert!(out.join("params.svg").is_file() && out.join("tracking.svg").is_file());
}

#[test]
fn compare_identical_configs_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "short.toml", |c| c.sim.duration = 0.5);
    let out = dir.path().join("cmp");
    let o = amestctl(&["compare", &cfg, &cfg, "-o", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn compare_rejects_different_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.toml", |c| c.sim.duration = 0.1);
    let b = write_config(dir.path(), "b.toml", |c| {
        c.sim.duration = 0.1;
        c.truth.m2 = 0.3;
    });
    let o = amestctl(&["compare", &a, &b, "-o", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("payload"), "{}", stderr(&o));
    let o = amestctl(&["compare", &a, "-o", "unused"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_passes_on_a_fresh_build() {
    let o = amestctl(&["validate", "--seed", "3"], &[]);
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{report}{}", stderr(&o));
    let skew = report.lines().find(|l| l.contains("skew-symmetry")).unwrap();
    assert!(skew.starts_with("PASS"), "{skew}");
    let worst: f64 = skew.split("worst = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(worst <= 1e-6);
    assert_eq!(report.lines().filter(|l| l.starts_with("PASS")).count(), 11);
}

#[test]
fn injected_fault_fails_skew_symmetry() {
    let o = amestctl(&["validate", "--samples", "100", "--inject-fault"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("FAIL skew-symmetry"), "{err}");
    assert!(err.contains("failed: skew-symmetry"), "{err}");
}
