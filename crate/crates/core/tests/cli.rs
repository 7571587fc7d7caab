use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bhcluster::commands::{
    ApproxResult, ClusteringResult, CompareResult, CompareRow, ExactResult, KpResult, MomentRow, MomentsResult,
};
use bhcluster::expansion::KpEntry;
use bhcluster::oracle::ClusteringScanRow;
use bhcluster::report::{parse_csv, parse_json};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bhcluster"));
    c.env_remove("BHCLUSTER_WORKERS");
    c
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, config: &Path, sets: &[&str]) -> Output {
    let mut c = bin();
    c.arg(sub).arg(config);
    for s in sets {
        c.arg("--set").arg(s);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_object(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap()
}

const PAIR: &str = r#"
[model]
dims = [2]
coupling = "finite_range"
g = 0.6
cutoff = 1
u = 1.0
mu = 0.0
beta = 0.5

[expansion]
m = 2
q = 1
"#;

fn zero_chain(n: usize) -> String {
    let row = format!("[{}]", vec!["0.0"; n].join(", "));
    let matrix = vec![row; n];
    format!(
        "[model]\ndims = [{n}]\ncoupling = \"explicit\"\nmatrix = [{}]\nu = 1.0\nmu = 0.3\nbeta = 0.4\n\n[expansion]\nm = 3\nq = 2\n",
        matrix.join(", ")
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn same_shape(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => close(x.as_f64().unwrap(), y.as_f64().unwrap(), 1e-12),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_shape(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same_shape(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn version_reports_schema() {
    let o = bin().arg("--version").output().unwrap();
    let s = stdout(&o);
    assert!(s.contains(env!("CARGO_PKG_VERSION")) && s.contains("schema 1"), "{s}");
}

#[test]
fn approx_matches_golden_report() {
    let o = run("approx", &repo_file("configs/chain4.toml"), &[]);
    let text = stdout(&o);
    let doc = parse_json::<ApproxResult>(&text, "approx").unwrap();
    assert!(!doc.result.report.per_order.is_empty());
    assert_eq!(doc.result.report.kp_margin.len(), 4);
    let mut v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["timing"]["elapsed_seconds"].is_number());
    v.as_object_mut().unwrap().remove("timing");
    let golden: Value =
        serde_json::from_str(&std::fs::read_to_string(repo_file("crates/core/tests/golden/approx_chain4.json")).unwrap())
            .unwrap();
    assert!(same_shape(&v, &golden), "report drifted from golden file");
}

#[test]
fn approx_zero_coupling_has_zero_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "zero.toml", &zero_chain(3));
    let doc = parse_json::<ApproxResult>(&stdout(&run("approx", &cfg, &[])), "approx").unwrap();
    assert_eq!(doc.result.report.t_m, 0.0);
    assert_eq!(doc.result.report.f_beta, doc.result.report.log_z_w);
}

#[test]
fn output_is_deterministic_across_workers_and_env() {
    let cfg = repo_file("configs/chain4.toml");
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string(&v).unwrap()
    };
    let a = strip(run("approx", &cfg, &["expansion.workers=1"]));
    let b = strip(run("approx", &cfg, &["expansion.workers=4"]));
    let c = strip(bin().env("BHCLUSTER_WORKERS", "3").arg("approx").arg(&cfg).output().unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let csv1 = stdout(&run("compare", &cfg, &["output.format=csv", "expansion.workers=1"]));
    let csv4 = stdout(&run("compare", &cfg, &["output.format=csv", "expansion.workers=4"]));
    assert_eq!(csv1, csv4);
}

#[test]
fn bad_worker_env_is_a_config_error() {
    let o = bin().env("BHCLUSTER_WORKERS", "many").arg("kp").arg(repo_file("configs/chain4.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(error_object(&o)["error"]["message"].as_str().unwrap().contains("BHCLUSTER_WORKERS"));
}

#[test]
fn missing_beta_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "nobeta.toml", &PAIR.replace("beta = 0.5\n", ""));
    let o = run("approx", &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_object(&o);
    assert_eq!(e["error"]["kind"], "config");
    assert!(e["error"]["messages"].as_array().unwrap().iter().any(|m| m.as_str().unwrap().contains("model.beta")));
}

#[test]
fn all_config_errors_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "bad.toml", &PAIR.replace("beta = 0.5\n", "").replace("g = 0.6\n", ""));
    let o = run("approx", &cfg, &["expansion.m=0", "output.format=yaml"]);
    assert_eq!(o.status.code(), Some(2));
    let msgs = error_object(&o)["error"]["messages"].as_array().unwrap().len();
    assert!(msgs >= 4, "{msgs}");
}

#[test]
fn unreadable_config_is_a_config_error() {
    let o = run("approx", Path::new("/nonexistent/config.toml"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resource_cap_reports_required_and_allowed() {
    let o = run("exact", &repo_file("configs/long_range6.toml"), &["oracle.dimension_cap=100"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_object(&o);
    assert_eq!(e["error"]["required"], 4096);
    assert_eq!(e["error"]["allowed"], 100);
}

#[test]
fn exact_single_site_is_onsite_sum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "one.toml", &zero_chain(1));
    let doc = parse_json::<ExactResult>(&stdout(&run("exact", &cfg, &[])), "exact").unwrap();
    let expected: f64 = (0..=2u32)
        .map(|n| {
            let x = f64::from(n);
            (-0.4 * (x * (x - 1.0) / 2.0 - 0.3 * x)).exp()
        })
        .sum::<f64>()
        .ln();
    assert!(close(doc.result.log_z, expected, 1e-14));
    assert_eq!(doc.result.dimension, 3);
}

#[test]
fn exact_pair_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "pair.toml", PAIR);
    let doc = parse_json::<ExactResult>(&stdout(&run("exact", &cfg, &["oracle.partitions=[[0]]"])), "exact").unwrap();
    let bj: f64 = 0.5 * 0.6;
    assert!(close(doc.result.log_z, (2.0 + 2.0 * bj.cosh()).ln(), 1e-14));
    assert_eq!(doc.result.mutual_information.len(), 1);
    assert!(doc.result.mutual_information[0].value > 0.0);
    let p = &doc.result.occupation[0].values;
    assert_eq!(p.len(), 2);
    assert!(close(p.iter().sum::<f64>(), 1.0, 1e-12));
}

#[test]
fn exact_whole_lattice_partition_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "pair.toml", PAIR);
    let o = run("exact", &cfg, &["oracle.partitions=[[0, 1]]"]);
    assert_eq!(o.status.code(), Some(2));
    let text = error_object(&o).to_string();
    assert!(text.contains("B is empty"), "{text}");
}

#[test]
fn compare_zero_coupling_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "zero.toml", &zero_chain(3));
    let text = stdout(&run("compare", &cfg, &["compare.m_list=[1]"]));
    let rows: Vec<CompareRow> = parse_csv(&text, "compare").unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].abs_error <= 1e-13, "{}", rows[0].abs_error);
    assert!(text.lines().nth(1).unwrap() == "m,q,f_beta,oracle_log_z,abs_error,m_error_bound");
}

#[test]
fn compare_improves_with_m_and_reports_q_differences() {
    let cfg = repo_file("configs/chain4.toml");
    let o = run("compare", &cfg, &["compare.m_list=[2, 4]", "compare.q_list=[3, 5]", "output.format=json"]);
    let doc = parse_json::<CompareResult>(&stdout(&o), "compare").unwrap();
    let rows = &doc.result.rows;
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        assert_eq!((pair[0].m, pair[1].m), (2, 4));
        assert!(pair[1].abs_error <= pair[0].abs_error);
    }
    let d = &doc.result.q_differences;
    assert_eq!((d[0].q_low, d[0].q_high), (3, 5));
    assert!(close(d[0].abs_diff, (rows[0].oracle_log_z - rows[2].oracle_log_z).abs(), 1e-15));
}

#[test]
fn clustering_zero_coupling_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "zero.toml", &zero_chain(4));
    let rows: Vec<ClusteringScanRow> = parse_csv(&stdout(&run("clustering", &cfg, &[])), "clustering").unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.correlation == 0.0));
    let json = stdout(&run("clustering", &cfg, &["output.format=json", "scan.family=density"]));
    let doc = parse_json::<ClusteringResult>(&json, "clustering").unwrap();
    assert!(doc.result.rows.iter().all(|r| r.correlation.abs() < 1e-14));
}

#[test]
fn clustering_long_range_has_bound_columns() {
    let rows: Vec<ClusteringScanRow> =
        parse_csv(&stdout(&run("clustering", &repo_file("configs/long_range6.toml"), &["oracle.q=2"])), "clustering")
            .unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.bound_ref.is_some() && r.ratio.is_some()));
}

#[test]
fn moments_at_two_temperatures_give_eight_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "one.toml", &zero_chain(1));
    let o = run("moments", &cfg, &["oracle.l_max=4", "oracle.betas=[0.05, 0.1]", "oracle.q=30"]);
    let text = stdout(&o);
    let rows: Vec<MomentRow> = parse_csv(&text, "moments").unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(text.lines().nth(1).unwrap(), "beta,site,l,moment");
    assert!(rows[..4].iter().zip(&rows[4..]).all(|(hot, cold)| hot.moment > cold.moment));
    let json = stdout(&run("moments", &cfg, &["oracle.betas=[0.05, 0.1]", "output.format=json"]));
    assert_eq!(parse_json::<MomentsResult>(&json, "moments").unwrap().result.rows.len(), 8);
}

#[test]
fn kp_zero_coupling_has_zero_lhs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "zero.toml", &zero_chain(3));
    let rows: Vec<KpEntry> = parse_csv(&stdout(&run("kp", &cfg, &[])), "kp").unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.lhs == 0.0 && r.satisfied));
    let json = stdout(&run("kp", &cfg, &["output.format=json"]));
    assert!(!parse_json::<KpResult>(&json, "kp").unwrap().result.violated);
}

#[test]
fn output_path_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let cfg = write_config(&dir, "pair.toml", &format!("{PAIR}\n[output]\npath = {:?}\n", out.to_str().unwrap()));
    let o = run("approx", &cfg, &[]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    parse_json::<ApproxResult>(&std::fs::read_to_string(out).unwrap(), "approx").unwrap();
}

#[test]
fn extra_positional_arguments_rejected() {
    let o = bin().args(["approx", "a.toml", "b.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
