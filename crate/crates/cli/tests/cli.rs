use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vem"))
        .args(args)
        .output()
        .expect("run vem")
}

fn vem_json(args: &[&str]) -> Value {
    let out = vem(args);
    assert!(
        out.status.success(),
        "vem {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_mesh(dir: &Path, family: &str, n: usize) -> String {
    let path = dir.join(format!("{family}{n}.json"));
    let n = n.to_string();
    vem_json(&[
        "mesh",
        "--family",
        family,
        "--n",
        &n,
        "--out",
        path_str(&path),
    ]);
    path.to_str().unwrap().to_owned()
}

#[test]
fn mesh_then_solve_reproduces_the_first_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "rect", 16);
    let text = std::fs::read_to_string(&mesh).unwrap();
    let parsed: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["cells"].as_array().unwrap().len(), 256);
    let out = vem_json(&[
        "solve", "--mesh", &mesh, "--k", "0", "--sigma", "1.0", "--modes", "5",
    ]);
    let scaled = out["scaled"].as_array().unwrap();
    assert_eq!(scaled.len(), 5);
    assert!((scaled[0].as_f64().unwrap() - 0.8174).abs() < 1e-4);
    assert_eq!(out["kernel_multiplicity"].as_u64(), Some(225));
    assert!(out["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r.as_f64().unwrap() < 1e-8));
    assert_eq!(out["eigenvalues"].as_array().unwrap().len(), 5);
}

#[test]
fn shift_invert_matches_dense_and_counts_kernel_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "hex", 8);
    let dense = vem_json(&["solve", "--mesh", &mesh, "--method", "dense"]);
    let si = vem_json(&["solve", "--mesh", &mesh, "--method", "si", "--shift", "4.0"]);
    assert!(si["kernel_multiplicity"].is_null());
    for (a, b) in dense["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .zip(si["eigenvalues"].as_array().unwrap())
    {
        let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
        assert!(((a - b) / a).abs() < 1e-8);
    }
    let si = vem_json(&[
        "solve",
        "--mesh",
        &mesh,
        "--method",
        "si",
        "--kernel-oracle",
    ]);
    assert_eq!(si["kernel_multiplicity"], dense["kernel_multiplicity"]);
}

#[test]
fn solve_writes_vtk_matrices_and_element_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "tri", 6);
    let vtk = dir.path().join("mode.vtk");
    let prefix = dir.path().join("sys");
    let out = vem_json(&[
        "solve",
        "--mesh",
        &mesh,
        "--modes",
        "2",
        "--vtk",
        path_str(&vtk),
        "--dump-element",
        "3",
        "--dump-system",
        path_str(&prefix),
    ]);
    let text = std::fs::read_to_string(&vtk).unwrap();
    assert!(text.starts_with("# vtk DataFile Version"));
    assert!(text.contains("SCALARS pressure") && text.contains("VECTORS displacement"));
    for m in ["K", "M"] {
        let mtx = std::fs::read_to_string(format!("{}.{m}.mtx", path_str(&prefix))).unwrap();
        assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real"));
    }
    let element = &out["element"];
    assert_eq!(element["vertices"].as_array().unwrap().len(), 3);
    let k = element["stiffness"].as_array().unwrap();
    assert_eq!(k.len(), 3);
}

#[test]
fn interp_check_reports_residuals_and_rates() {
    let out = vem_json(&[
        "interp-check",
        "--family",
        "rect",
        "--k",
        "0",
        "--field",
        "w11",
        "--n",
        "4,8,16",
        "--refinement",
        "2",
    ]);
    let residuals = out["residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 3);
    assert!(residuals.iter().all(|r| r.as_f64().unwrap() <= 1e-8));
    let rate = out["rates"]["l2"].as_f64().unwrap();
    assert!((rate - 1.0).abs() < 0.15, "{rate}");
}

#[test]
fn study_writes_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.json");
    std::fs::write(
        &config,
        r#"{"families": ["rect"], "ns": [4, 8, 16], "sigmas": [1.0], "modes": 2}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let table = dir.path().join("out.txt");
    let status = Command::new(env!("CARGO_BIN_EXE_vem"))
        .args([
            "study",
            "--config",
            path_str(&config),
            "--csv",
            path_str(&csv),
            "--table",
            path_str(&table),
        ])
        .env("VEM_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("family,sigma,n,h,dofs,mode,lambda,lambda_hat,exact_hat,error\n"));
    assert_eq!(csv_text.lines().count(), 1 + 3 * 2);
    let table_text = std::fs::read_to_string(&table).unwrap();
    assert!(table_text.contains("N=16"));
    // a second run is byte-identical
    let csv2 = dir.path().join("again.csv");
    let out = vem(&[
        "study",
        "--config",
        path_str(&config),
        "--csv",
        path_str(&csv2),
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&csv2).unwrap(), csv_text);
    assert!(String::from_utf8_lossy(&out.stdout).contains("N=8"));
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"vertices": [[0,0],[1,0],[0,1]], "cells": [[0,2,1]]}"#,
    )
    .unwrap();
    let out = vem(&["solve", "--mesh", path_str(&bad)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = vem(&[
        "mesh",
        "--family",
        "pentagon",
        "--n",
        "4",
        "--out",
        path_str(&bad),
    ]);
    assert!(!out.status.success());
    let mesh = write_mesh(dir.path(), "rect", 4);
    let out = vem(&["solve", "--mesh", &mesh, "--dump-element", "999"]);
    assert!(!out.status.success());
    let out = vem(&["solve", "--mesh", &mesh, "--sigma", "-1"]);
    assert!(!out.status.success());
}
