use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fbflow::cli::{EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, TRAJECTORY_HEADER};

const CONE: &str = "window = [-2, 2]\nz0 = 1.0\nM = 40\nstride = 20\nsnapshot_times = [0.1, 0.2]\n[profile]\nkind = \"cone\"\n";
const CATENOID_PAIR: &str = "window = [-2, 2]\nz0 = [-1.0, 1.0]\nM = 40\nt_max = 0.5\ncompare_times = [0.1, 0.25, 0.5]\n[profile]\nkind = \"catenoid\"\n";

fn fbflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn evolve_writes_trajectory_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cone.toml", CONE);
    let out = fbflow(&["evolve", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());

    let traj = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 2);
    assert!(rows.iter().all(|r| r.len() == 8));
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(rows[0][1], 1.0);

    for k in 0..2 {
        let snap = fs::read_to_string(dir.path().join(format!("out/snapshot_{k:04}.csv"))).unwrap();
        assert_eq!(snap.lines().count(), 1 + 41);
    }
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("Pinched"), "{summary}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cone.toml", CONE);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let status = fbflow(&["evolve", "--config", &cfg, "--out", run, "--quiet"], dir.path()).status;
        assert_eq!(status.code(), Some(EXIT_OK));
        outputs.push(fs::read(dir.path().join(run).join("trajectory.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn stride_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cone.toml", CONE);
    let count = |stride: &str, out: &str| {
        let status = fbflow(&["evolve", "--config", &cfg, "--stride", stride, "--out", out, "--quiet"], dir.path()).status;
        assert_eq!(status.code(), Some(EXIT_OK));
        fs::read_to_string(dir.path().join(out).join("trajectory.csv")).unwrap().lines().count()
    };
    assert!(count("5", "fine") > 2 * count("40", "coarse"));
}

#[test]
fn singularity_reports_type_one_for_cone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cone.toml", CONE);
    let out = fbflow(&["singularity", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = fs::read_to_string(dir.path().join("out/singularity.txt")).unwrap();
    let report: toml::Table = text.parse().unwrap();
    assert_eq!(report["kind"].as_str(), Some("TypeI"));
    assert_eq!(String::from_utf8_lossy(&out.stdout), text);
}

#[test]
fn classify_lists_regions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cos.toml",
        "window = [-1, 7]\n[profile]\nkind = \"cosine\"\nA = 2\nB = 1\nk = 1\n",
    );
    let out = fbflow(&["classify", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/regions.txt")).unwrap();
    assert!(text.contains("belly") && text.contains("shrinking-neck"), "{text}");
}

#[test]
fn foliate_reports_ordered_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pair.toml", CATENOID_PAIR);
    let out = fbflow(&["foliate", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let report: toml::Table = fs::read_to_string(dir.path().join("out/foliation.txt")).unwrap().parse().unwrap();
    assert_eq!(report["ordered"].as_bool(), Some(true));
    assert_eq!(report["checked_times"].as_integer(), Some(3));
}

#[test]
fn geometry_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbflow(&["geometry-check"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn bad_configs_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fbflow(&["evolve"], dir.path()).status.code(), Some(EXIT_CONFIG));
    assert_eq!(
        fbflow(&["evolve", "--config", "missing.toml"], dir.path()).status.code(),
        Some(EXIT_CONFIG)
    );
    for (name, text) in [
        ("unknown.toml", "window = [-2, 2]\nz0 = 1.0\nbogus = 3\n[profile]\nkind = \"cone\"\n"),
        ("syntax.toml", "window = [-2, 2\n"),
        ("kind.toml", "window = [-2, 2]\nz0 = 1.0\n[profile]\nkind = \"torus\"\n"),
        ("apex.toml", "window = [-2, 2]\nz0 = 0.0\n[profile]\nkind = \"cone\"\n"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let out = fbflow(&["evolve", "--config", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{name}");
        assert!(!out.stderr.is_empty());
        assert!(!dir.path().join("out").exists(), "{name}");
    }
}

#[test]
fn step_failure_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "short.toml", &format!("max_steps = 50\n{CONE}"));
    let out = fbflow(&["evolve", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME));
    assert!(dir.path().join("out/trajectory.csv").exists());
    assert!(fs::read_to_string(dir.path().join("out/summary.txt")).unwrap().contains("StepFailure"));
}
