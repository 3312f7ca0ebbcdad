use std::path::PathBuf;
use std::process::{Command, Output};

use ddr_core::matrix_io::MatrixFile;

fn ddr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddr")).args(args).output().expect("ddr runs")
}

fn mesh(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../meshes").join(name).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tetra_suite_passes_with_enough_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = ddr(&["check", "--mesh", &mesh("tetra.json"), "--degrees", "0..3", "--suite", "all", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let checks = report.as_array().unwrap();
    let passed = checks.iter().filter(|c| c["status"] == "pass").count();
    assert_eq!(passed, checks.len());
    assert!(passed >= 120, "only {passed} checks");
    for k in 0..4 {
        assert!(checks.iter().any(|c| c["k"] == k && c["name"] == "exact.euler"));
    }
}

#[test]
fn missing_mesh_exits_2_naming_the_path() {
    let o = ddr(&["check", "--mesh", "/no/such/dir/cell.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/dir/cell.json"), "{}", stderr(&o));
}

#[test]
fn malformed_mesh_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"vertices\": [[0, 0, 0]]").unwrap();
    let o = ddr(&["check", "--mesh", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json"));
}

#[test]
fn unknown_suite_exits_2() {
    let o = ddr(&["check", "--shape", "triangle", "--suite", "convergence"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    let o = ddr(&["check", "--shape", "triangle", "--degrees", "1", "--suite", "exactness", "--rank-tol", "1e-2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("rank-tolerance") && text.contains("FAIL"));
}

#[test]
fn dof_table_row_matches_reference() {
    let o = ddr(&["check", "--suite", "dof-tables", "--shape", "tetra", "--degrees", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("| X_grad | 2 | 1 (1) | 2 (2) | 3 (1) | 4 (0) | 32 (20) |"), "{text}");
    let o = ddr(&["dof-tables", "--shape", "triangle", "--degrees", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("27 (24)"));
}

#[test]
fn cube_dump_has_layout_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddr(&["dump", "--shape", "cube", "--degree", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ug = MatrixFile::load(&dir.path().join("uG_T_c0_k1.txt")).unwrap();
    // X_grad: 8 vertices + 12 edges + 6 faces + 1 cell, one coefficient each.
    // X_curl: 12 edges × 2 + 6 faces × (2 + 1) + cell (3 + 1).
    assert_eq!(ug.data.shape(), (46, 27));
    assert_eq!((ug.rows.space.as_str(), ug.cols.space.as_str()), ("X_curl", "X_grad"));
    assert_eq!(ug.cols.blocks.iter().map(|b| b.2).sum::<usize>(), 27);
    for name in ["uC_T", "D_T", "P_grad", "P_curl", "P_div", "Gram_grad_T", "Gram_curl_T", "Gram_div_T"] {
        assert!(dir.path().join(format!("{name}_c0_k1.txt")).exists(), "{name}");
    }
    for name in ["Gram_grad_T", "Gram_curl_T", "Gram_div_T"] {
        let g = MatrixFile::load(&dir.path().join(format!("{name}_c0_k1.txt"))).unwrap();
        for i in 0..g.data.nrows() {
            for j in 0..i {
                assert_eq!(g.data[(i, j)].to_bits(), g.data[(j, i)].to_bits(), "{name} ({i}, {j})");
            }
        }
    }
}

#[test]
fn lowest_order_triangle_records_empty_face_block() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddr(&["dump", "--mesh", &mesh("triangle.json"), "--degree", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("uG_F_c0_k0.txt")).unwrap();
    assert!(text.lines().nth(2).unwrap().contains("F0:0+0"), "{text}");
}

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let run = |jobs: &str| {
        let o = ddr(&["check", "--shape", "prism", "--degrees", "0..1", "--format", "json", "--no-timing", "--jobs", jobs, "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    assert_eq!(run("1"), run("4"));
}
