use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rendezvous_tools::formats::{read_run, read_trajectory, Document};
use rendezvous_tools::sweep::{mean_std, run_points, summarize_sweep1, sweep1_points};
use rendezvous_tools::RunConfig;
use tempfile::TempDir;

/// Faster than the nominal case (shorter horizon) but otherwise default.
const QUICK: &str = "target.omega = 0.3\n";

fn rendezvous(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rendezvous")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn read_doc(path: &Path) -> Document {
    Document::read(fs::File::open(path).unwrap()).unwrap()
}

fn column(doc: &Document, name: &str) -> Vec<String> {
    let i = doc.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    doc.rows.iter().map(|r| r[i].clone()).collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn plan_into(dir: &Path, cfg: &Path) -> PathBuf {
    let out = dir.join("plan");
    let o = rendezvous(&["plan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "plan failed: {}", String::from_utf8_lossy(&o.stderr));
    out.join("trajectory.csv")
}

fn track_into(out: &Path, cfg: &Path, trajectory: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "track",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--trajectory",
        trajectory.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    rendezvous(&args)
}

#[test]
fn plan_track_audit_round_trip() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), QUICK);
    let trajectory = plan_into(tmp.path(), &cfg);

    let doc = read_doc(&trajectory);
    doc.expect("trajectory", &rendezvous_tools::formats::TRAJECTORY_COLUMNS).unwrap();
    assert_eq!(doc.version, 1);
    let mut expected = RunConfig::parse(QUICK).unwrap();
    expected.out_dir = tmp.path().join("plan").to_string_lossy().into_owned();
    assert_eq!(doc.config().unwrap(), expected);
    let plan = read_trajectory(&doc).unwrap();
    assert!(plan.converged);
    assert_eq!(column(&doc, "t").len(), plan.states.len());

    let out = tmp.path().join("track");
    let o = track_into(&out, &cfg, &trajectory, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("terminal rel speed"));
    let run = read_doc(&out.join("run.csv"));
    let (times, states) = read_run(&run).unwrap();
    assert_eq!(times.len(), states.len());
    assert_eq!(states[0], plan.states[0]);
    let firing = read_doc(&out.join("firing.csv"));
    assert_eq!(firing.columns.len(), 9);
    assert!(firing.rows.iter().flatten().skip(1).all(|v| !v.is_empty()));

    let o = rendezvous(&["audit", "--run", out.join("run.csv").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("min keep-out g"));
}

#[test]
fn tracking_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), QUICK);
    let trajectory = plan_into(tmp.path(), &cfg);
    // the embedded config includes the output directory, so both runs share it
    let out = tmp.path().join("track");
    let mut runs = Vec::new();
    for seed in ["11", "11", "12"] {
        assert!(track_into(&out, &cfg, &trajectory, &["--seed", seed]).status.success());
        runs.push((fs::read(out.join("run.csv")).unwrap(), fs::read(out.join("firing.csv")).unwrap()));
    }
    assert!(runs[0] == runs[1], "same seed, different bytes");
    assert_ne!(runs[0].0, runs[2].0);
}

#[test]
fn zero_gains_still_complete() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), QUICK);
    let trajectory = plan_into(tmp.path(), &cfg);
    let loose = write_config(
        tmp.path(),
        &format!("{QUICK}control.kp_pos = 0\ncontrol.kd_pos = 0\ncontrol.kp_att = 0\ncontrol.kd_att = 0\n"),
    );
    let o = track_into(&tmp.path().join("loose"), &loose, &trajectory, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("terminal pos error"));
}

#[test]
fn static_target_plans() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "target.omega = 0\nopt.static_durations = 20, 40\n");
    let trajectory = plan_into(tmp.path(), &cfg);
    let plan = read_trajectory(&read_doc(&trajectory)).unwrap();
    assert!(plan.converged);
    assert!([20.0, 40.0].iter().any(|t| (plan.duration() - t).abs() < 1e-9));
    assert!(plan.terminal_position_error() < 0.01);
}

#[test]
fn impossible_actuation_reports_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "target.omega = 0.5\nopt.force_bound_fraction = 0\nopt.max_outer = 40\n");
    let o = rendezvous(&["plan", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("planning failed"), "{err}");
    assert!(!tmp.path().join("trajectory.csv").exists());
}

#[test]
fn invalid_config_is_rejected_with_its_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "body.mass = -1\nkos.margin_fraction = -0.1\n");
    let o = rendezvous(&["plan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("body.mass") && err.contains("kos.margin_fraction"), "{err}");
}

#[test]
fn track_rejects_wrong_file_kind() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), QUICK);
    let trajectory = plan_into(tmp.path(), &cfg);
    let out = tmp.path().join("track");
    assert!(track_into(&out, &cfg, &trajectory, &[]).status.success());
    let o = track_into(&tmp.path().join("again"), &cfg, &out.join("run.csv"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("trajectory"));
}

#[test]
fn single_point_sweep_matches_plan() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{QUICK}sweep1.omega = 0.3\nsweep1.f_thr = 0.3\n"));
    let trajectory = plan_into(tmp.path(), &cfg);
    let plan = read_trajectory(&read_doc(&trajectory)).unwrap();
    let out = tmp.path().join("sweep");
    let o = rendezvous(&["sweep1", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let points = read_doc(&out.join("sweep1_points.csv"));
    assert_eq!(points.rows.len(), 1);
    let err: f64 = column(&points, "terminal_position_error")[0].parse().unwrap();
    let duration: f64 = column(&points, "duration")[0].parse().unwrap();
    assert_eq!(err, plan.terminal_position_error());
    assert_eq!(duration, plan.duration());
    let goal: f64 = column(&points, "objective_goal")[0].parse().unwrap();
    assert_eq!(goal, plan.objective_breakdown.goal);
}

#[test]
fn sweep_summary_recomputes_from_points() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep1.omega = 0.3:0.2:0.5\nsweep1.f_thr = 0.3:0.3:0.6\n");
    let out = tmp.path().join("sweep");
    let o =
        rendezvous(&["sweep1", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--parallel", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let points = read_doc(&out.join("sweep1_points.csv"));
    let summary = read_doc(&out.join("sweep1_summary.csv"));
    assert_eq!(points.digest, summary.digest);
    let i_col = column(&points, "i");
    let errors = column(&points, "terminal_position_error");
    for (row, (i, mean)) in column(&summary, "i").iter().zip(column(&summary, "error_mean")).enumerate() {
        let group: Vec<f64> =
            i_col.iter().zip(&errors).filter(|(k, _)| *k == i).map(|(_, e)| e.parse().unwrap()).collect();
        let (m, s) = mean_std(&group);
        let mean: f64 = mean.parse().unwrap();
        let std: f64 = column(&summary, "error_std")[row].parse().unwrap();
        assert!((m - mean).abs() <= 1e-12 && (s - std).abs() <= 1e-12, "row {row}");
    }
}

#[test]
fn aggregates_do_not_depend_on_grid_order() {
    let cfg = RunConfig::parse("sweep1.omega = 0.3:0.2:0.5\nsweep1.f_thr = 0.3:0.3:0.6\n").unwrap();
    let points = sweep1_points(&cfg);
    let mut reversed = points.clone();
    reversed.reverse();
    let a = summarize_sweep1(&run_points(&cfg, &points, 1).unwrap());
    let b = summarize_sweep1(&run_points(&cfg, &reversed, 1).unwrap());
    assert_eq!(a, b);
}

#[test]
fn polar_sweep_with_one_angle() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep2.theta_approach_deg = 135\nsweep2.omega = 0.3\nsweep2.f_thr = 0.3\n");
    let out = tmp.path().join("polar");
    let o = rendezvous(&["sweep2", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let polar = read_doc(&out.join("sweep2_polar.csv"));
    assert_eq!(polar.rows.len(), 1);
    assert_eq!(column(&polar, "rear_sector"), ["false"]);
}
