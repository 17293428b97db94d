use std::process::Command;

use convopd::cli::CheckOutput;
use convopd::io::{read_kinded_csv, read_snapshots_csv, read_trace_csv, read_triangle_csv};
use convopd::kernels::l1_kernels;
use convopd::mesh::TimeMesh;

fn run(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_convopd")).args(args).envs(envs.iter().copied()).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn a_only_emission_uses_plain_triangle_format() {
    let (code, out, err) = run(&["kernels", "--mesh", "uniform:T=1,N=6", "--gen", "l1:alpha=0.3"], &[]);
    assert_eq!(code, 0, "{err}");
    let t = read_triangle_csv(out.as_bytes()).unwrap();
    assert_eq!(&t, l1_kernels(&TimeMesh::uniform(1.0, 6).unwrap(), 0.3).unwrap().triangle());
    assert!(err.contains("L1"));
}

#[test]
fn emission_subset_and_unknown_kind() {
    let (code, out, _) = run(&["kernels", "--mesh", "uniform:T=1,N=4", "--gen", "rl:gamma=0.5", "--emit", "p"], &[]);
    assert_eq!(code, 0);
    let blocks = read_kinded_csv(out.as_bytes()).unwrap();
    assert_eq!(blocks.len(), 1);
    assert_eq!(blocks[0].0, "p");
    let (code, _, err) = run(&["kernels", "--gen", "l1:alpha=0.5", "--emit", "a,q"], &[]);
    assert_eq!(code, 2);
    assert!(err.contains("'q'"));
}

#[test]
fn rtol_override() {
    let args = ["kernels", "--mesh", "uniform:T=1,N=4", "--gen", "l1:alpha=0.5", "--emit", "a,theta"];
    assert_eq!(run(&args, &[("CONVOPD_RTOL", "1e-4")]).0, 0);
    assert_eq!(run(&args, &[("CONVOPD_RTOL", "nope")]).0, 2);
}

#[test]
fn malformed_specs_exit_two() {
    for args in [
        vec!["mesh", "--mesh", "graded:T=1,N=4"],
        vec!["mesh", "--mesh", "uniform:T=-1,N=4"],
        vec!["mesh", "--mesh", "file:/nonexistent/mesh.json"],
        vec!["kernels", "--gen", "unknown:x=1"],
        vec!["kernels", "--gen", "constant:1,x"],
        vec!["check", "--gen", "volterra-exp:rate=-1"],
        vec!["solve", "volterra", "--kappa", "power:beta=2"],
        vec!["solve", "wave", "--gamma", "1.2"],
        vec!["solve", "ac", "--u0", "random"],
        vec!["solve", "ac", "--f", "osc"],
        vec!["frobnicate"],
    ] {
        let (code, _, err) = run(&args, &[]);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn check_exit_codes_and_json() {
    let (code, out, _) = run(&["check", "--mesh", "random:T=1,N=30,low=0.5,high=2,seed=6", "--gen", "volterra-power:beta=0.4"], &[]);
    assert_eq!(code, 0);
    let r: CheckOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(r.levels, 30);
    assert!(r.conditions.theorem_holds());
    // weighted averages with μ = 1 are all ones: only semidefinite variants hold
    let (code, out, _) = run(&["check", "--mesh", "uniform:T=1,N=5", "--gen", "weight:mu=1"], &[]);
    let r: CheckOutput = serde_json::from_str(&out).unwrap();
    assert_eq!((code, r.conditions.classification.as_str()), (0, "semidef-certified"));
    let (code, out, _) = run(&["check", "--mesh", "uniform:T=1,N=10", "--gen", "l1plus:alpha=0.3", "--weak-c4-all-levels"], &[]);
    let r: CheckOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(code, 3);
    assert!(!r.conditions.c4.pass && r.pd.lambda_min > 0.0);
}

#[test]
fn checks_are_deterministic() {
    let args = ["check", "--mesh", "random:T=1,N=20,low=0.2,high=5,seed=11", "--gen", "l1plus:alpha=0.5"];
    let first = run(&args, &[]);
    let second = run(&args, &[]);
    assert_eq!(first.0, second.0);
    assert_eq!(first.1, second.1);
}

#[test]
fn solve_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let snaps = dir.path().join("snaps.csv");
    let (code, _, err) = run(
        &[
            "solve", "volterra", "--mesh", "random:T=1,N=20,low=0.5,high=2,seed=2", "--M", "16", "--kappa", "exp:rate=2",
            "--f", "osc", "--u0", "random", "--seed", "9", "--out", trace.to_str().unwrap(), "--snapshots", snaps.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code, 0, "{err}");
    let records = read_trace_csv(std::fs::read(&trace).unwrap().as_slice()).unwrap();
    let states = read_snapshots_csv(std::fs::read(&snaps).unwrap().as_slice()).unwrap();
    assert_eq!(records.len(), 21);
    assert_eq!(states.len(), 21);
    assert!(states.iter().all(|s| s.len() == 16));
    assert!(records.iter().all(|r| r.bound.is_some() && r.energy.is_none()));
}

#[test]
fn uncertified_allen_cahn_regime_still_runs() {
    let (code, out, err) = run(&["solve", "ac", "--mesh", "uniform:T=1,N=10", "--S", "0", "--M", "16"], &[]);
    assert_eq!(code, 0);
    assert!(err.contains("not applied"));
    assert_eq!(read_trace_csv(out.as_bytes()).unwrap().len(), 11);
}
