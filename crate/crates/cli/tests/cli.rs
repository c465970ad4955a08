use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;
use std::process::{Command, Output};

use raygeom::curves::bloch_latitude;
use serde_json::Value;
use tempfile::TempDir;

fn tool(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npm-tool")).current_dir(dir).args(args).output().expect("spawn npm-tool")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn geodesic_generation_writes_curve_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = tool(dir.path(), &["geodesic", "--dim", "4", "--seed", "1", "--mesh", "1000", "--out", "g.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["command"], "geodesic");
    assert_eq!(r["values"]["samples"], 1000);
    let curve: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(curve["states"].as_array().unwrap().len(), 1000);
    let check = tool(dir.path(), &["npc-check", "--in", "g.json"]);
    assert_eq!(code(&check), 0, "{}", stderr(&check));
    assert_eq!(report(&check)["ok"], true);
}

#[test]
fn octant_triangle_preset() {
    let dir = TempDir::new().unwrap();
    let out = tool(dir.path(), &["triangle-check", "--dim", "2", "--preset", "octant"]);
    assert_eq!(code(&out), 0);
    let v = &report(&out)["values"];
    assert!((v["phase"].as_f64().unwrap() + FRAC_PI_4).abs() < 1e-6);
    assert!((v["arg_delta3"].as_f64().unwrap() - FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn latitude_circle_fails_npc_check_with_witness() {
    let dir = TempDir::new().unwrap();
    let curve = bloch_latitude(PI / 3.0, 120).unwrap();
    std::fs::write(dir.path().join("bad_curve.json"), serde_json::to_string(&curve).unwrap()).unwrap();
    let out = tool(dir.path(), &["npc-check", "--in", "bad_curve.json"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert_eq!(r["ok"], false);
    let triple = r["witness"]["triple"].as_array().expect("worst triple");
    assert_eq!(triple.len(), 3);
    assert!(r["witness"]["arg"].as_f64().unwrap() > 1e-3);
}

#[test]
fn npc_generators_are_accepted_by_the_checker() {
    let dir = TempDir::new().unwrap();
    for preset in ["sphere-path", "general"] {
        let gen = tool(dir.path(), &["npc-gen", "--preset", preset, "--dim", "4", "--mesh", "300", "--out", "c.json"]);
        assert_eq!(code(&gen), 0, "{preset}: {}", stderr(&gen));
        let check = tool(dir.path(), &["npc-check", "--in", "c.json"]);
        assert_eq!(code(&check), 0, "{preset}");
    }
}

#[test]
fn chart_presets_round_trip_through_checkers() {
    let dir = TempDir::new().unwrap();
    let gen = tool(dir.path(), &["npm-check", "--preset", "positive-sphere", "--dim", "3", "--out", "ps.json"]);
    assert_eq!(code(&gen), 0);
    for cmd in ["npm-check", "isotropy", "characterize"] {
        let out = tool(dir.path(), &[cmd, "--in", "ps.json"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
    }
    let ext = tool(dir.path(), &["hull-extend", "--in", "ps.json", "--out", "h.json"]);
    assert_eq!(code(&ext), 0);
    let member = tool(dir.path(), &["hull-member", "--in", "h.json"]);
    assert_eq!(code(&member), 0);
    assert!(report(&member)["values"]["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn gaussian_chart_is_isotropic_but_translates_are_not_totally_geodesic() {
    let dir = TempDir::new().unwrap();
    let gen = tool(dir.path(), &["gaussian-npm", "--dim", "2", "--nodes", "4", "--out", "gc.json"]);
    assert_eq!(code(&gen), 0, "{}", stderr(&gen));
    assert_eq!(code(&tool(dir.path(), &["isotropy", "--in", "gc.json"])), 0);
    let tg = tool(dir.path(), &["tg-check", "--in", "gc.json"]);
    assert_eq!(code(&tg), 1);
    assert!(report(&tg)["witness"]["reason"].is_string());
    let ch = tool(dir.path(), &["characterize", "--in", "gc.json"]);
    assert_eq!(code(&ch), 0);
    assert_eq!(report(&ch)["values"]["strict_extension"], true);
}

#[test]
fn non_isotropic_control_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = tool(dir.path(), &["isotropy", "--preset", "bloch"]);
    assert_eq!(code(&out), 1);
    assert!(report(&out)["witness"]["omega"].as_f64().unwrap() > 0.1);
}

#[test]
fn gaussian_overlap_matches_quadrature() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("pair.json"),
        r#"[{"N": 1, "y": [0.0], "U": [[1.0]]}, {"N": 1, "y": [2.0], "U": [[1.0]]}]"#,
    )
    .unwrap();
    let out = tool(dir.path(), &["gaussian-overlap", "--in", "pair.json"]);
    assert_eq!(code(&out), 0);
    let v = &report(&out)["values"];
    assert!((v["overlap"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-10);
    assert!(v["difference"].as_f64().unwrap() < 1e-8);
}

#[test]
fn phase_writes_csv_series() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&tool(dir.path(), &["geodesic", "--dim", "3", "--mesh", "50", "--out", "g.json"])), 0);
    let out = tool(dir.path(), &["phase", "--in", "g.json", "--csv", "p.csv"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,dynamical,geometric");
    assert_eq!(lines.len(), 51);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&tool(dir.path(), &["geodesic", "--bogus"])), 2);
    assert_eq!(code(&tool(dir.path(), &["geodesic", "--mesh", "1"])), 2);
    assert_eq!(code(&tool(dir.path(), &["isotropy", "--tol", "-1"])), 2);
    let missing = tool(dir.path(), &["npc-check", "--in", "nope.json"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("nope.json"));
    std::fs::write(dir.path().join("bad.json"), r#"{"params": [0.0, 1.0]}"#).unwrap();
    let bad = tool(dir.path(), &["npc-check", "--in", "bad.json"]);
    assert_eq!(code(&bad), 2);
    let msg = stderr(&bad);
    assert!(msg.contains("bad.json") && msg.contains("states"), "{msg}");
}

#[test]
fn identical_arguments_give_identical_reports() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 4] = [
        &["rand-state", "--dim", "5", "--seed", "9"],
        &["bargmann", "--dim", "3", "--seed", "4"],
        &["characterize", "--preset", "positive-sphere", "--dim", "3"],
        &["suite", "--criterion", "5"],
    ];
    for args in cases {
        let a = tool(dir.path(), args);
        let b = tool(dir.path(), args);
        assert_eq!(code(&a), 0, "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let other = tool(dir.path(), &["rand-state", "--dim", "5", "--seed", "10"]);
    assert_ne!(other.stdout, tool(dir.path(), &["rand-state", "--dim", "5", "--seed", "9"]).stdout);
}
