use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrel")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn classical_roundtrip_passes() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "r.json", r#"{"kind":"classical","n":2,"pairs":[[0,1]]}"#);
    let out = qrel(&["roundtrip", &f]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["command"], "roundtrip");
    assert_eq!(v["report"]["relation_dim"], 1);
    // J annihilates E_01 only, so its support is I - |e_{01}><e_{01}| on l²(2)⊗l²(2).
    assert_eq!(v["report"]["support_rank"], 3);
    assert_eq!(v["report"]["classical_recovered"], true);
    assert!(v["report"]["relation_gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn corrupted_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", r#"{"kind":"classical","n":2,"pairs":[[0,"#);
    assert_eq!(qrel(&["roundtrip", &f]).status.code(), Some(2));
    let f = write(dir.path(), "nan.json", r#"{"kind":"relation","algebra":"diag:2","basis":[{"dim":3,"re":[[1]]}]}"#);
    assert_eq!(qrel(&["relation", &f]).status.code(), Some(2));
    assert_eq!(qrel(&["algebra", "nonsense:3"]).status.code(), Some(2));
}

#[test]
fn non_bimodule_relation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // span{E_00 + E_11} is not closed under the diagonal commutant.
    let f = write(dir.path(), "v.json", r#"{"kind":"relation","algebra":"diag:2","basis":[{"dim":2,"re":[[1,0],[0,1]]}]}"#);
    let out = qrel(&["relation", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bimodule"));
}

#[test]
fn cyclic_two_ideal_gives_two_dimensional_relation() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "q.json", r#"{"elements":[{"re":[1,1]}]}"#);
    let out = qrel(&["group", "cyclic:2", "--ideal", &f]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["report"]["ideal"]["relation_dim"], 2);
    assert_eq!(v["report"]["ideal"]["ideal_dim"], 1);
}

#[test]
fn non_ideal_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // δ_0 alone is not closed under translation in ℂ[ℤ₃].
    let f = write(dir.path(), "q.json", r#"{"elements":[{"re":[1,0,0]}]}"#);
    let out = qrel(&["group", "cyclic:3", "--ideal", &f]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_invariant_relation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "v.json", r#"{"dim":3,"basis":[{"dim":3,"re":[[0,1,0],[0,0,0],[0,0,0]]}]}"#);
    assert_eq!(qrel(&["group", "cyclic:3", "--relation", &f]).status.code(), Some(1));
}

#[test]
fn sampled_group_duality_passes() {
    let out = qrel(&["group", "sym:3", "--samples", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn triangle_violation_names_the_triple() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "d.json", r#"{"distances":[[0,1,5],[1,0,1],[5,1,0]]}"#);
    let out = qrel(&["metric", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 1, 2)"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn word_metric_recovers() {
    let out = qrel(&["metric", "cyclic:6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["report"]["recovered_exactly"], true);
}

#[test]
fn semigroup_csv_has_one_row_per_time_and_radius() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "e.json",
        r#"{"group":"cyclic:8","generator":"cycle-laplacian","times":[0.1,0.5,1,2],"radii":[0,1,2,3,4]}"#,
    );
    let out = qrel(&["semigroup", &f, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "t,r,op_norm,hs_norm,sup_norm");
    assert_eq!(lines.len(), 1 + 4 * 5);
}

#[test]
fn empty_times_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "e.json", r#"{"group":"cyclic:8","generator":"cycle-laplacian","times":[],"radii":[0]}"#);
    assert_eq!(qrel(&["semigroup", &f]).status.code(), Some(2));
}

#[test]
fn csv_is_rejected_for_tableless_commands() {
    assert_eq!(qrel(&["algebra", "diag:2", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn algebra_report_lists_blocks() {
    let out = qrel(&["algebra", "block:1x2,2x1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["report"]["d"], 4);
    assert_eq!(v["report"]["center_dim"], 2);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("o.json");
    let out = qrel(&["algebra", "full:2", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
}

#[test]
fn named_heat_experiment_uses_default_grid() {
    let out = qrel(&["semigroup", "cycle:8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // Default times 0.1, 0.5, 1, 2 and radii 0..=4.
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 4 * 5);
}

#[test]
fn generated_bimodule_over_full_three_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "g.json",
        r#"{"kind":"generated","algebra":"full:3","generators":[{"dim":3,"re":[[0.3,-1,0],[2,0.5,0],[0,0.1,-0.7]],"im":[[0,0.2,1],[0,0,0],[0.4,0,0]]}]}"#,
    );
    let out = qrel(&["roundtrip", &f]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // M' = scalars, so the bimodule generated by one matrix is its span.
    assert_eq!(report(&out)["report"]["relation_dim"], 1);
}

#[test]
fn ideal_instance_roundtrips_through_its_kernel() {
    let dir = tempfile::tempdir().unwrap();
    // The left ideal of M ⊗ M_op (M = diag:2, d² = 4) spanned by the Schur projection onto E_01.
    let action = r#"{"dim":4,"re":[[0,0,0,0],[0,0,0,0],[0,0,1,0],[0,0,0,0]]}"#;
    let f = write(dir.path(), "j.json", &format!(r#"{{"kind":"ideal","algebra":"diag:2","basis":[{action}]}}"#));
    let out = qrel(&["roundtrip", &f]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["report"]["relation_dim"], 3);
}

#[test]
fn verify_at_machine_precision_reports_failures() {
    let out = qrel(&["verify", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
    let v = report(&out);
    assert_eq!(v["passed"], false);
    assert!(v["report"]["failed"].as_u64().unwrap() > 0);
}
