use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn climabm(args: &[&str], cwd: &Path, out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_climabm"));
    cmd.args(args).current_dir(cwd).env_remove("CLIMABM_OUT");
    if let Some(dir) = out_env {
        cmd.env("CLIMABM_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A short scenario on the shipped inputs, with extra TOML lines appended.
fn scenario(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    let text = format!(
        "hazard_grid = {:?}\nimpact_curve = {:?}\nseed = 3\nsteps = 12\n{extra}",
        data("flood_rcp85.txt"),
        data("impact_curve.txt"),
    );
    fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_shipped_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = climabm(&["validate", "--config", p(&data("scenario.toml"))], tmp.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        text.trim(),
        "OK: 80x50 grid, 9 return periods, 1 epoch(s), 15 firms, 75 households, 320 steps"
    );
}

#[test]
fn missing_config_file_is_a_one_line_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = climabm(&["run", "--config", "nope.toml"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: ") && err.contains("nope.toml"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [&["run"][..], &["frobnicate"], &["compare", "--config", "x.toml", "--seeds", "0"]] {
        let o = climabm(args, tmp.path(), None);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unknown_and_invalid_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let typo = scenario(tmp.path(), "typo.toml", "n_firm = 4\n");
    let o = climabm(&["validate", "--config", p(&typo)], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_firm"), "{}", stderr(&o));

    let negative = tmp.path().join("negative.toml");
    fs::write(&negative, fs::read_to_string(&typo).unwrap().replace("n_firm = 4", "steps = -1").replace("steps = 12\n", "")).unwrap();
    let o = climabm(&["validate", "--config", p(&negative)], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));

    let missing_grid = tmp.path().join("missing.toml");
    fs::write(&missing_grid, "hazard_grid = \"absent.txt\"\nseed = 1\n").unwrap();
    let o = climabm(&["validate", "--config", p(&missing_grid)], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.txt"), "{}", stderr(&o));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let plain = scenario(root, "plain.toml", "");
    let with_dir = scenario(root, "with_dir.toml", "output_dir = \"from_config\"\n");
    let env_dir = root.join("from_env");
    let flag_dir = root.join("from_flag");

    let run = |config: &Path, flag: Option<&Path>, env: Option<&Path>| {
        let mut args = vec!["run", "--config", p(config)];
        if let Some(f) = flag {
            args.extend(["--out", p(f)]);
        }
        let o = climabm(&args, root, env);
        assert!(o.status.success(), "{}", stderr(&o));
    };

    run(&with_dir, Some(&flag_dir), Some(&env_dir));
    assert!(flag_dir.join("metrics.csv").exists());
    assert!(!root.join("from_config").exists() && !env_dir.exists());

    run(&with_dir, None, Some(&env_dir));
    assert!(root.join("from_config/metrics.csv").exists());
    assert!(!env_dir.exists());

    run(&plain, None, Some(&env_dir));
    assert!(env_dir.join("metrics.csv").exists());
    assert!(!root.join("out").exists());

    run(&plain, None, None);
    assert!(root.join("out/metrics.csv").exists());
}

#[test]
fn run_writes_metrics_charts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenario(tmp.path(), "s.toml", "");
    let out = tmp.path().join("res");
    let o = climabm(&["run", "--config", p(&config), "--seed", "17", "--no-evolution", "--out", p(&out)], tmp.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("step,year,mean_production,"));

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 12);

    let charts: Vec<_> = fs::read_dir(out.join("charts")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(charts.len(), 8);
    assert!(charts.iter().all(|c| c.extension().unwrap() == "svg"));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["seed"], 17);
    assert_eq!(manifest["config"]["seed"], 17);
    assert_eq!(manifest["hazard_enabled"], true);
    assert_eq!(manifest["evolution_enabled"], false);
    assert_eq!(manifest["config"]["steps"], 12);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 10);
    let started = manifest["started_at"].as_str().unwrap();
    let finished = manifest["finished_at"].as_str().unwrap();
    assert!(started <= finished);
}

#[test]
fn seed_flag_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenario(tmp.path(), "s.toml", "");
    let read = |seed: &str| {
        let out = tmp.path().join(seed);
        let o = climabm(&["run", "--config", p(&config), "--seed", seed, "--out", p(&out)], tmp.path(), None);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("metrics.csv")).unwrap()
    };
    assert_eq!(read("3"), read("3"));
    assert_ne!(read("3"), read("4"));
}

#[test]
fn compare_writes_summary_and_averaged_charts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenario(tmp.path(), "s.toml", "");
    let out = tmp.path().join("cmp");
    let o = climabm(&["compare", "--config", p(&config), "--seeds", "2", "--jobs", "2", "--out", p(&out)], tmp.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));

    let table = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), table);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("seed,baseline_final_price,hazard_final_price,price_ratio"));
    assert!(lines[1].starts_with("3,") && lines[2].starts_with("4,"));
    let ratios: Vec<f64> = lines[1..3].iter().map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    let mean: f64 = lines[3].strip_prefix("mean,,,").unwrap().trim_end_matches(",,").parse().unwrap();
    assert!((mean - (ratios[0] + ratios[1]) / 2.0).abs() < 1e-12);

    for seed in ["seed_3", "seed_4"] {
        for arm in ["baseline", "hazard"] {
            let csv = fs::read_to_string(out.join(seed).join(arm).join("metrics.csv")).unwrap();
            assert_eq!(csv.lines().count(), 13);
        }
    }
    let charts = fs::read_dir(out.join("charts")).unwrap().count();
    assert_eq!(charts, 9);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "compare");
}

#[test]
fn zero_steps_gives_header_only_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("zero.toml");
    fs::write(&config, fs::read_to_string(scenario(tmp.path(), "s.toml", "")).unwrap().replace("steps = 12", "steps = 0")).unwrap();
    let out = tmp.path().join("z");
    let o = climabm(&["run", "--config", p(&config), "--out", p(&out)], tmp.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(!out.join("charts").exists());

    let o = climabm(&["compare", "--config", p(&config), "--out", p(&out)], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
}
