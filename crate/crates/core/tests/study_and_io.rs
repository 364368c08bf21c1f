use std::path::Path;

use proptest::prelude::*;

use vem_core::assembly::assemble;
use vem_core::eigensolve::{solve, EigenOptions, Method};
use vem_core::io::{
    export_eigenfunction, mesh_from_json, mesh_to_json, parse_vtk, read_matrix_market,
    read_mesh_json, write_matrix_market_file, write_mesh_json,
};
use vem_core::mesh::{generate, MeshFamily};
use vem_core::study::{exact_eigenvalues, run_study, StudyConfig};

fn config_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_configs_parse_and_validate() {
    for name in ["table1.json", "table2.json", "families.json"] {
        let text = std::fs::read_to_string(config_dir().join(name)).unwrap();
        let cfg: StudyConfig = serde_json::from_str(&text).unwrap();
        cfg.validate().unwrap();
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    assert!(serde_json::from_str::<StudyConfig>(r#"{"sigma": [1.0]}"#).is_err());
    let cfg: StudyConfig = serde_json::from_str(r#"{"ns": [16, 8]}"#).unwrap();
    assert!(cfg.validate().is_err());
}

#[test]
fn studies_are_deterministic_and_report_the_exact_spectrum() {
    let cfg = StudyConfig {
        families: vec![MeshFamily::Tri, MeshFamily::Hex],
        ns: vec![4, 8, 16],
        sigmas: vec![1.0, 0.0625],
        modes: 3,
        ..Default::default()
    };
    let a = run_study(&cfg).unwrap();
    let b = run_study(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_table(), b.to_table());
    let exact: Vec<f64> = exact_eigenvalues(1.0, 1.1, 3)
        .iter()
        .map(|e| e.scaled)
        .collect();
    for line in a.to_csv().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let mode: usize = f[5].parse().unwrap();
        let exact_hat: f64 = f[8].parse().unwrap();
        assert!((exact_hat - exact[mode - 1]).abs() < 1e-11);
    }
    assert_eq!(a.runs.len(), 2 * 2 * 3);
    assert_eq!(a.orders.len(), 2 * 2 * 3);
}

#[test]
fn rectangular_orders_stay_above_the_guard() {
    let cfg = StudyConfig {
        ns: vec![8, 16, 32],
        sigmas: vec![1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0],
        modes: 1,
        ..Default::default()
    };
    let report = run_study(&cfg).unwrap();
    for o in &report.orders {
        assert!(o.order.unwrap() >= 1.9, "{o:?}");
    }
}

#[test]
fn single_level_reports_no_order() {
    let cfg = StudyConfig {
        ns: vec![8],
        modes: 1,
        ..Default::default()
    };
    let report = run_study(&cfg).unwrap();
    assert_eq!(report.orders[0].order, None);
    assert!(report.to_table().contains("n/a"));
}

#[test]
fn mesh_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for family in [MeshFamily::Tri, MeshFamily::Rect, MeshFamily::Hex] {
        let mesh = generate(family, 1.0, 1.1, 5).unwrap();
        let path = dir.path().join(format!("{}.json", family.name()));
        write_mesh_json(&mesh, &path).unwrap();
        let back = read_mesh_json(&path).unwrap();
        assert_eq!(back.num_edges(), mesh.num_edges());
        let (s1, s2) = (
            assemble(&mesh, 0, 1.0).unwrap(),
            assemble(&back, 0, 1.0).unwrap(),
        );
        assert_eq!(
            s1.stiffness.triplets().collect::<Vec<_>>(),
            s2.stiffness.triplets().collect::<Vec<_>>()
        );
        assert_eq!(
            s1.mass.triplets().collect::<Vec<_>>(),
            s2.mass.triplets().collect::<Vec<_>>()
        );
    }
}

#[test]
fn malformed_meshes_are_rejected() {
    for text in [
        r#"{"vertices": [[0,0],[1,0],[0,1]], "cells": [[0,2,1]]}"#,
        r#"{"vertices": [[0,0],[1,0],[0,1]], "cells": [[0,1,7]]}"#,
        r#"{"vertices": [], "cells": []}"#,
        r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,1,2]]}"#,
        r#"{"vertices": [[0,0]], "cells": [[0]], "extra": 1}"#,
    ] {
        assert!(mesh_from_json(text).is_err(), "{text}");
    }
}

#[test]
fn matrix_market_dump_reads_back_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let sys = assemble(&generate(MeshFamily::Hex, 1.0, 1.1, 4).unwrap(), 0, 0.25).unwrap();
    let path = dir.path().join("sys.K.mtx");
    write_matrix_market_file(&sys.stiffness, &path).unwrap();
    let back = read_matrix_market(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(
        back.triplets().collect::<Vec<_>>(),
        sys.stiffness.triplets().collect::<Vec<_>>()
    );
}

#[test]
fn vtk_export_of_the_first_mode() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate(MeshFamily::Rect, 1.0, 1.1, 27).unwrap();
    let sys = assemble(&mesh, 0, 1.0).unwrap();
    let sp = solve(
        &sys,
        &EigenOptions {
            method: Method::Dense,
            modes: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let path = dir.path().join("mode.vtk");
    export_eigenfunction(&sys, &sp.eigenvectors[0], &path).unwrap();
    let vtk = parse_vtk(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(vtk.cells.len(), mesh.num_cells());
    assert_eq!(vtk.pressure.len(), mesh.num_cells());
    assert_eq!(vtk.displacement.len(), mesh.num_cells());
    // 27 rows of cells: 13 on either side of the nodal line, the middle row on it
    let positive = vtk.pressure.iter().filter(|p| **p > 0.0).count();
    assert!((13 * 27..=14 * 27).contains(&positive), "{positive}");
    assert!(vtk.pressure[0] * vtk.pressure[mesh.num_cells() - 1] < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn json_round_trip_preserves_geometry(family_idx in 0usize..3, n in 2usize..9, a in 0.5f64..3.0, b in 0.5f64..3.0) {
        let family = [MeshFamily::Tri, MeshFamily::Rect, MeshFamily::Hex][family_idx];
        let mesh = generate(family, a, b, n).unwrap();
        let back = mesh_from_json(&mesh_to_json(&mesh).unwrap()).unwrap();
        prop_assert_eq!(back.cells(), mesh.cells());
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.edges(), mesh.edges());
    }
}
