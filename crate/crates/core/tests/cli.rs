use std::path::Path;
use std::process::Command;

use kn_lanczos::cli::{convergence_rows, read_error_csv, state_output, sweep_rows, RunConfig};
use kn_lanczos::problems::desk_problem;

fn knlanczos(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_knlanczos"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--output").arg(o);
    }
    cmd.output().unwrap()
}

#[test]
fn variant_filter_keeps_only_requested_rows() {
    let problem = desk_problem().unwrap();
    let cfg = RunConfig::from_json(
        r#"{"m_max": 20, "m_stride": 5, "shifts": [[1e-3, 0.0], [0.0, 1e-2]], "variants": ["gauss"]}"#,
    )
    .unwrap();
    let rows = convergence_rows(&cfg, &problem).unwrap();
    assert_eq!(rows.len(), 4 * 2);
    assert!(rows.iter().all(|r| r.variant == "gauss" && r.phi_used.is_none()));
    let ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    assert_eq!(ms, [5, 5, 10, 10, 15, 15, 20, 20]);
}

#[test]
fn kn_rows_need_a_phi_policy() {
    let problem = desk_problem().unwrap();
    let base = r#""m_max": 12, "m_stride": 4, "shifts": [[1e-3, 0.0]], "variants": ["gauss", "kn"]"#;
    let without = RunConfig::from_json(&format!("{{{base}}}")).unwrap();
    let rows = convergence_rows(&without, &problem).unwrap();
    assert!(rows.iter().all(|r| r.variant == "gauss"));

    let fixed = RunConfig::from_json(&format!(r#"{{{base}, "phi_policy": {{"fixed": 2.5}}}}"#)).unwrap();
    let rows = convergence_rows(&fixed, &problem).unwrap();
    let kn: Vec<_> = rows.iter().filter(|r| r.variant == "kn").collect();
    assert_eq!(kn.len(), 3);
    assert!(kn.iter().all(|r| r.phi_used == Some(2.5)));
}

#[test]
fn sweep_agrees_with_convergence_at_the_same_shift() {
    let problem = desk_problem().unwrap();
    let sweep = RunConfig::from_json(
        r#"{"m_max": 30, "sweep": {"decades": [-3.0, -1.0], "points": 3, "imaginary": false},
            "variants": ["gauss", "radau", "average"]}"#,
    )
    .unwrap();
    let conv = RunConfig::from_json(
        r#"{"m_max": 30, "m_stride": 30, "shifts": [[0.01, 0.0]], "variants": ["gauss", "radau", "average"]}"#,
    )
    .unwrap();
    let sweep_rows = sweep_rows(&sweep, &problem).unwrap();
    assert_eq!(sweep_rows.len(), 9);
    let conv_rows = convergence_rows(&conv, &problem).unwrap();
    for row in &conv_rows {
        let twin = sweep_rows
            .iter()
            .find(|r| r.variant == row.variant && (r.shift_re - 0.01).abs() < 1e-15)
            .unwrap();
        assert_eq!(twin.rel_error_fro, row.rel_error_fro);
    }
}

#[test]
fn strongly_damped_states_agree() {
    let problem = desk_problem().unwrap();
    let cfg = RunConfig::from_json(
        r#"{"m_max": 40, "m_stride": 40, "variants": ["gauss", "radau", "kn"],
            "phi_policy": {"fixed": 1.0}, "omega": 0.3, "epsilon": 30.0}"#,
    )
    .unwrap();
    let out = state_output(&cfg, &problem).unwrap();
    assert_eq!(out.states.len(), 3);
    let gauss = &out.states[0].1;
    for (name, u) in &out.states[1..] {
        let diff = (u - gauss).norm() / gauss.norm();
        assert!(diff <= 1e-4, "{name}: {diff:e}");
    }
}

#[test]
fn state_command_writes_snapshots_and_cross_sections() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("state.json");
    std::fs::write(
        &config,
        r#"{"m_max": 30, "m_stride": 30, "variants": ["gauss", "radau"], "times": [0.0]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = knlanczos(&["state"], Some(&config), Some(&out));
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let snapshots = std::fs::read_to_string(out.join("state_snapshots.csv")).unwrap();
    let mut lines = snapshots.lines();
    assert_eq!(lines.next(), Some("variant,source,t,node,x,y,value"));
    let problem = desk_problem().unwrap();
    assert_eq!(lines.count(), 2 * problem.a.n());
    assert!(out.join("cross_section_gauss_0.csv").exists());
    assert!(out.join("cross_section_radau_0.csv").exists());
}

#[test]
fn convergence_command_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("conv.json");
    std::fs::write(&config, r#"{"m_max": 10, "m_stride": 5, "shifts": [[1e-2, 0.0]]}"#).unwrap();
    let out = dir.path().join("out");
    let result = knlanczos(&["convergence"], Some(&config), Some(&out));
    assert!(result.status.success());
    let rows = read_error_csv(&out.join("convergence.csv")).unwrap();
    // Default variants without a φ policy: gauss, radau, average at two checkpoints.
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.wall_ms == 0.0));
}

#[test]
fn selftest_exit_codes() {
    let ok = knlanczos(&["selftest"], None, None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("selftest passed"));

    let broken = knlanczos(&["selftest", "--inject-fault"], None, None);
    assert_eq!(broken.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&broken.stdout).contains("FAIL ldl_round_trip"));
}

#[test]
fn invalid_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"m_max": 10, "unknown_field": 1}"#).unwrap();
    let result = knlanczos(&["convergence"], Some(&config), Some(dir.path()));
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).starts_with("error:"));
}
