//! File formats: mesh JSON, Matrix Market coordinate files and legacy ASCII VTK.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::GlobalSystem;
use crate::eigensolve::{pressure_field, projected_field_at_centroids};
use crate::error::{Result, VemError};
use crate::geometry::Point;
use crate::mesh::PolygonalMesh;
use crate::sparse::CsrMatrix;

/// `{"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`; cells are
/// counter-clockwise vertex loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshJson {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
}

impl From<&PolygonalMesh> for MeshJson {
    fn from(mesh: &PolygonalMesh) -> Self {
        MeshJson {
            vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
            cells: mesh.cells().to_vec(),
        }
    }
}

impl MeshJson {
    /// Rebuilds and validates the topology.
    pub fn into_mesh(self) -> Result<PolygonalMesh> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Point::new(v[0], v[1]))
            .collect();
        PolygonalMesh::from_cells(vertices, self.cells)
    }
}

pub fn mesh_to_json(mesh: &PolygonalMesh) -> Result<String> {
    Ok(serde_json::to_string(&MeshJson::from(mesh))?)
}

pub fn mesh_from_json(text: &str) -> Result<PolygonalMesh> {
    serde_json::from_str::<MeshJson>(text)?.into_mesh()
}

pub fn write_mesh_json(mesh: &PolygonalMesh, path: &Path) -> Result<()> {
    fs::write(path, mesh_to_json(mesh)?).map_err(|e| file_error(path, e))
}

pub fn read_mesh_json(path: &Path) -> Result<PolygonalMesh> {
    let text = fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    mesh_from_json(&text).map_err(|e| e.context(path.display().to_string()))
}

fn file_error(path: &Path, e: std::io::Error) -> VemError {
    VemError::Io(e).context(path.display().to_string())
}

/// Writes `a` as a general real coordinate Matrix Market file (1-based indices).
pub fn write_matrix_market(a: &CsrMatrix, out: &mut impl Write) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_matrix_market_file(a: &CsrMatrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| file_error(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a real coordinate Matrix Market file (general or symmetric).
pub fn read_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| VemError::Parse("empty Matrix Market file".into()))?;
    let h = header.to_ascii_lowercase();
    if !h.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(VemError::Parse(format!(
            "unsupported Matrix Market header '{header}'"
        )));
    }
    let symmetric = h.contains("symmetric");
    let mut body = lines.filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let size = body
        .next()
        .ok_or_else(|| VemError::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| VemError::Parse(format!("bad size line '{size}'")))
        })
        .collect::<Result<_>>()?;
    let [nr, nc, nnz] = dims[..] else {
        return Err(VemError::Parse(format!("bad size line '{size}'")));
    };
    let mut triplets = Vec::with_capacity(nnz);
    for line in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || VemError::Parse(format!("bad entry '{line}'"));
        if t.len() != 3 {
            return Err(bad());
        }
        let i: usize = t[0].parse().map_err(|_| bad())?;
        let j: usize = t[1].parse().map_err(|_| bad())?;
        let v: f64 = t[2].parse().map_err(|_| bad())?;
        if i == 0 || j == 0 || i > nr || j > nc {
            return Err(bad());
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if triplets.len() < nnz {
        return Err(VemError::Parse(format!(
            "expected {nnz} entries, found {}",
            triplets.len()
        )));
    }
    Ok(CsrMatrix::from_triplets(nr, nc, &triplets))
}

/// Writes the mesh as a legacy ASCII unstructured grid of polygons with
/// cell data `pressure` and `displacement`.
pub fn write_vtk(
    mesh: &PolygonalMesh,
    pressure: &[f64],
    displacement: &[Point],
    out: &mut impl Write,
) -> Result<()> {
    let nc = mesh.num_cells();
    if pressure.len() != nc || displacement.len() != nc {
        return Err(VemError::InvalidParameter(format!(
            "{} pressures and {} displacements for {nc} cells",
            pressure.len(),
            displacement.len()
        )));
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "acoustic cavity mode")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(out, "{:.17e} {:.17e} 0", p.x, p.y)?;
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    writeln!(out, "CELLS {nc} {size}")?;
    for c in mesh.cells() {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{} {}", c.len(), ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        // VTK_POLYGON
        writeln!(out, "7")?;
    }
    writeln!(out, "CELL_DATA {nc}")?;
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for p in pressure {
        writeln!(out, "{p:.17e}")?;
    }
    writeln!(out, "VECTORS displacement double")?;
    for d in displacement {
        writeln!(out, "{:.17e} {:.17e} 0", d.x, d.y)?;
    }
    Ok(())
}

pub fn write_vtk_file(
    mesh: &PolygonalMesh,
    pressure: &[f64],
    displacement: &[Point],
    path: &Path,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| file_error(path, e))?;
    let mut w = BufWriter::new(file);
    write_vtk(mesh, pressure, displacement, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes the pressure `-div w_h` (cell mean) and `Π_h w_h` at the centroids
/// of the mode `vector` of `system`.
pub fn export_eigenfunction(system: &GlobalSystem, vector: &[f64], path: &Path) -> Result<()> {
    let (pressure, displacement) = eigenfunction_cell_data(system, vector)?;
    write_vtk_file(&system.mesh, &pressure, &displacement, path)
}

/// Cell data of [`export_eigenfunction`]: the pressure is evaluated at the centroid.
pub fn eigenfunction_cell_data(
    system: &GlobalSystem,
    vector: &[f64],
) -> Result<(Vec<f64>, Vec<Point>)> {
    let coeffs = pressure_field(system, vector)?;
    let pressure = system
        .locals
        .iter()
        .zip(&coeffs)
        .map(|(ops, c)| ops.evaluate_poly(c, ops.geometry.centroid))
        .collect();
    Ok((pressure, projected_field_at_centroids(system, vector)))
}

/// Contents of a legacy VTK file as written by [`write_vtk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub pressure: Vec<f64>,
    pub displacement: Vec<[f64; 3]>,
}

/// Parses the subset of the legacy ASCII format produced by [`write_vtk`].
pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let mut tokens = text
        .lines()
        .skip(3)
        .flat_map(|l| l.split_whitespace())
        .peekable();
    let mut next = |what: &str| -> Result<String> {
        tokens
            .next()
            .map(str::to_owned)
            .ok_or_else(|| VemError::Parse(format!("unexpected end of file reading {what}")))
    };
    fn num<T: std::str::FromStr>(s: String) -> Result<T> {
        s.parse()
            .map_err(|_| VemError::Parse(format!("bad number '{s}'")))
    }
    let mut data = VtkData {
        points: Vec::new(),
        cells: Vec::new(),
        cell_types: Vec::new(),
        pressure: Vec::new(),
        displacement: Vec::new(),
    };
    let expect = |got: String, want: &str| -> Result<()> {
        if got == want {
            Ok(())
        } else {
            Err(VemError::Parse(format!("expected '{want}', found '{got}'")))
        }
    };
    expect(next("dataset")?, "DATASET")?;
    expect(next("dataset")?, "UNSTRUCTURED_GRID")?;
    expect(next("points")?, "POINTS")?;
    let np: usize = num(next("points")?)?;
    next("points")?;
    for _ in 0..np {
        data.points
            .push([num(next("x")?)?, num(next("y")?)?, num(next("z")?)?]);
    }
    expect(next("cells")?, "CELLS")?;
    let nc: usize = num(next("cells")?)?;
    next("cells")?;
    for _ in 0..nc {
        let len: usize = num(next("cell")?)?;
        let ids = (0..len)
            .map(|_| num(next("cell")?))
            .collect::<Result<Vec<usize>>>()?;
        if ids.iter().any(|&i| i >= np) {
            return Err(VemError::Parse("cell refers to a missing point".into()));
        }
        data.cells.push(ids);
    }
    expect(next("cell types")?, "CELL_TYPES")?;
    next("cell types")?;
    for _ in 0..nc {
        data.cell_types.push(num(next("cell type")?)?);
    }
    expect(next("cell data")?, "CELL_DATA")?;
    next("cell data")?;
    while let Ok(kw) = next("section") {
        match kw.as_str() {
            "SCALARS" => {
                expect(next("scalars")?, "pressure")?;
                next("scalars")?;
                next("scalars")?;
                expect(next("lookup table")?, "LOOKUP_TABLE")?;
                next("lookup table")?;
                data.pressure = (0..nc)
                    .map(|_| num(next("pressure")?))
                    .collect::<Result<_>>()?;
            }
            "VECTORS" => {
                expect(next("vectors")?, "displacement")?;
                next("vectors")?;
                data.displacement = (0..nc)
                    .map(|_| Ok([num(next("u")?)?, num(next("v")?)?, num(next("w")?)?]))
                    .collect::<Result<_>>()?;
            }
            other => return Err(VemError::Parse(format!("unexpected section '{other}'"))),
        }
    }
    Ok(data)
}
