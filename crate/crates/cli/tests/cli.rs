use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use qp_core::lab::{sample_variety, VarietySpec, VarietyTarget};
use qp_core::plateau::{circle_problem, ProblemSpec};
use qp_core::{build_disk_mesh, DiskMesh, QField, QValue};
use serde_json::Value;

fn qplateau(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qplateau"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env("QP_THREADS", "1")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn mesh_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = qplateau(dir.path(), &["mesh", "--level", "3"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("mesh-L3.qpmesh")).unwrap();
    assert!(text.starts_with("qpmesh v1 "));
    let loaded = DiskMesh::from_qpmesh(&text).unwrap();
    let built = build_disk_mesh(3).unwrap();
    assert_eq!(loaded.vertices(), built.vertices());
    assert_eq!(loaded.triangles(), built.triangles());
    assert_eq!(loaded.boundary_loop(), built.boundary_loop());
    let report = json(&dir.path().join("mesh-L3.json"));
    assert_eq!(report["level"], 3);
    assert_eq!(report["tool"], "qplateau");
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn oversized_level_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = qplateau(dir.path(), &["mesh", "--level", "99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("guard"));
}

#[test]
fn unknown_suite_and_builtin_are_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qplateau(dir.path(), &["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(qplateau(dir.path(), &["dirichlet", "--boundary", "nonsense"]).status.code(), Some(2));
    assert_eq!(qplateau(dir.path(), &["plateau", "--level", "3"]).status.code(), Some(2));
}

#[test]
fn harmonic_boundary_gives_linear_solve_energy() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qplateau(dir.path(), &["dirichlet", "--boundary", "re-z", "--level", "4"]).status.success());
    let r = json(&dir.path().join("dirichlet.json"));
    let e = r["result"]["energy"].as_f64().unwrap();
    let direct = r["result"]["linear_solve_energy"].as_f64().unwrap();
    assert!((e - direct).abs() / direct < 1e-6);
    assert!((e - PI).abs() / PI < 0.01);
}

#[test]
fn same_seed_gives_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["dirichlet", "--boundary", "sqrt-z", "--level", "3", "--restarts", "4", "--seed", "7"];
    assert!(qplateau(a.path(), &args).status.success());
    assert!(qplateau(b.path(), &args).status.success());
    for f in ["dirichlet.json", "dirichlet.qpfield"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    assert_eq!(json(&a.path().join("dirichlet.json"))["seed"], 7);
}

#[test]
fn boundary_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let m = build_disk_mesh(3).unwrap();
    let mut text = String::from("qpfield v1\n");
    for &v in m.boundary_loop() {
        let p = m.vertex(v);
        let r = p[0].hypot(p[1]).sqrt();
        let t = p[1].atan2(p[0]) / 2.0;
        let (x, y) = (r * t.cos(), r * t.sin());
        text.push_str(&format!("2 2 {x:?} {y:?} {:?} {:?}\n", -x, -y));
    }
    let file = dir.path().join("boundary.qpfield");
    std::fs::write(&file, text).unwrap();
    let from_file = dir.path().join("file");
    let builtin = dir.path().join("builtin");
    assert!(qplateau(&from_file, &["dirichlet", "--level", "3", "--boundary-file", file.to_str().unwrap()])
        .status
        .success());
    assert!(qplateau(&builtin, &["dirichlet", "--level", "3", "--boundary", "sqrt-z"]).status.success());
    let e1 = json(&from_file.join("dirichlet.json"))["result"]["energy"].as_f64().unwrap();
    let e2 = json(&builtin.join("dirichlet.json"))["result"]["energy"].as_f64().unwrap();
    assert!((e1 - e2).abs() < 1e-9 * e2);

    let short = dir.path().join("short.qpfield");
    std::fs::write(&short, "qpfield v1\n2 1 0.0 1.0\n").unwrap();
    let out = qplateau(dir.path(), &["dirichlet", "--level", "3", "--boundary-file", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plateau_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let b = build_disk_mesh(4).unwrap().boundary_loop().len();
    let spec = ProblemSpec::from_problem(&circle_problem(1.5, 8 * b, b).unwrap());
    let spec = ProblemSpec { params: None, pins: None, ..spec };
    let file = dir.path().join("circle.json");
    std::fs::write(&file, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = qplateau(dir.path(), &["plateau", "--level", "4", "--problem", file.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("plateau.json"));
    let e = r["result"]["energy"].as_f64().unwrap();
    let target = 2.0 * PI * 1.5 * 1.5;
    assert!((e - target).abs() / target < 0.02);
    assert_eq!(r["result"]["homeomorphism"][0]["homeomorphism"], true);
    let solved: ProblemSpec = serde_json::from_str(&std::fs::read_to_string(dir.path().join("plateau-problem.json")).unwrap()).unwrap();
    assert_eq!(solved.params.unwrap()[0].increments.len(), b);

    let bad = ProblemSpec { q: Some(2), ..ProblemSpec::from_problem(&circle_problem(1.0, 8 * b, b).unwrap()) };
    let bad_file = dir.path().join("bad.json");
    std::fs::write(&bad_file, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = qplateau(dir.path(), &["plateau", "--level", "4", "--problem", bad_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiplicity"));
}

#[test]
fn verify_writes_verdicts_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qplateau(dir.path(), &["verify", "metric-oracle"]).status.code(), Some(0));
    assert_eq!(json(&dir.path().join("verify-metric-oracle.json"))["result"]["passed"], true);

    assert_eq!(qplateau(dir.path(), &["verify", "degeneracy", "--level", "3"]).status.code(), Some(0));
    let notes = json(&dir.path().join("verify-degeneracy.json"))["result"]["notes"].to_string();
    assert!(notes.contains("witness"), "{notes}");

    assert_eq!(qplateau(dir.path(), &["verify", "sqrt-variety", "--level", "3"]).status.code(), Some(0));
    for f in ["sqrt-variety-selections.csv", "sqrt-variety-selection_re.svg", "sqrt-variety-selection_im.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(dir.path().join("sqrt-variety-selection_re.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

fn write_field(dir: &Path, name: &str, field: &QField) -> String {
    let p = dir.join(name);
    std::fs::write(&p, field.to_qpfield()).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let m = Arc::new(build_disk_mesh(4).unwrap());

    let constant = QField::constant(m.clone(), &QValue::from_points(&[[1.0, 0.0], [0.0, 1.0]]).unwrap()).unwrap();
    let f = write_field(dir.path(), "constant.qpfield", &constant);
    assert!(qplateau(&dir.path().join("c"), &["analyze", &f]).status.success());
    let r = json(&dir.path().join("c/analyze.json"));
    assert_eq!(r["result"]["branches"]["count"], 0);
    assert_eq!(r["level"], 4);

    let variety = sample_variety(&VarietySpec::default(), m.clone(), VarietyTarget::Plane).unwrap();
    let f = write_field(dir.path(), "variety.qpfield", &variety);
    assert!(qplateau(&dir.path().join("v"), &["analyze", &f]).status.success());
    let r = json(&dir.path().join("v/analyze.json"));
    assert_eq!(r["result"]["branches"]["count"], 2);
    let mut xs: Vec<f64> = r["result"]["branches"]["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["position"][0].as_f64().unwrap())
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let edge = m.max_edge_length();
    assert!((xs[0] + 0.5).abs() <= edge && (xs[1] - 0.5).abs() <= edge, "{xs:?}");
    assert_eq!(r["result"]["band_decomposition"]["split"]["single_valued"], true);

    let sqrt = QField::from_fn(m.clone(), |p| {
        let r = p[0].hypot(p[1]).sqrt();
        let t = p[1].atan2(p[0]) / 2.0;
        QValue::from_points(&[[r * t.cos(), r * t.sin()], [-r * t.cos(), -r * t.sin()]]).unwrap()
    })
    .unwrap();
    let f = write_field(dir.path(), "sqrt.qpfield", &sqrt);
    assert!(qplateau(&dir.path().join("s"), &["analyze", &f]).status.success());
    let r = json(&dir.path().join("s/analyze.json"));
    assert_eq!(r["result"]["branches"]["count"], 1);
    assert_eq!(r["result"]["band_decomposition"]["split"]["single_valued"], false);

    let mesh_file = dir.path().join("m.qpmesh");
    std::fs::write(&mesh_file, m.to_qpmesh()).unwrap();
    let out = qplateau(&dir.path().join("s2"), &["analyze", &f, "--mesh", mesh_file.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&dir.path().join("s2/analyze.json"))["result"]["branches"]["count"], 1);
}
