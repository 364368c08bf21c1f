//! Polygonal meshes of a rectangle: topology, orientation and generators.

mod generate;
mod quality;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use generate::{generate, generate_hexagonal, generate_rectangular, generate_triangular};
pub use quality::{check_mesh_assumptions, CellQuality, MeshQualityReport};

use crate::error::{Result, VemError};
use crate::geometry::{signed_area, ElementGeometry, Point};

/// The three structured families used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    #[serde(alias = "triangular")]
    Tri,
    #[serde(alias = "rectangular")]
    Rect,
    #[serde(alias = "hexagonal")]
    Hex,
}

impl MeshFamily {
    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Tri => "tri",
            MeshFamily::Rect => "rect",
            MeshFamily::Hex => "hex",
        }
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tri" | "triangular" => Ok(MeshFamily::Tri),
            "rect" | "rectangular" => Ok(MeshFamily::Rect),
            "hex" | "hexagonal" => Ok(MeshFamily::Hex),
            other => Err(VemError::InvalidParameter(format!(
                "unknown mesh family '{other}' (expected tri, rect or hex)"
            ))),
        }
    }
}

impl std::fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned rectangle `(x0, x0 + a) × (y0, y0 + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub b: f64,
}

impl Rectangle {
    pub fn area(&self) -> f64 {
        self.a * self.b
    }
}

/// A conforming polygonal mesh.
///
/// Edges are stored as `(lo, hi)` vertex pairs with `lo < hi`. The global
/// normal of an edge is its `lo → hi` tangent rotated by +90°. For cell `c`,
/// local edge `l` joins `cells[c][l]` and `cells[c][l+1]`; its sign is `+1`
/// when the global normal points out of `c`.
#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<Vec<(usize, f64)>>,
    edge_cells: Vec<Vec<usize>>,
    boundary_edge: Vec<bool>,
    domain: Rectangle,
}

impl PolygonalMesh {
    /// Builds topology from vertex coordinates and CCW vertex loops, and validates it.
    /// The domain is taken as the bounding box of the vertices.
    pub fn from_cells(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if vertices.is_empty() || cells.is_empty() {
            return Err(VemError::InvalidMesh("empty mesh".into()));
        }
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &vertices {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(VemError::InvalidMesh("non-finite vertex".into()));
            }
            xmin = xmin.min(p.x);
            ymin = ymin.min(p.y);
            xmax = xmax.max(p.x);
            ymax = ymax.max(p.y);
        }
        let domain = Rectangle {
            x0: xmin,
            y0: ymin,
            a: xmax - xmin,
            b: ymax - ymin,
        };

        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, loop_) in cells.iter().enumerate() {
            if loop_.len() < 3 {
                return Err(VemError::InvalidMesh(format!(
                    "cell {c} has {} vertices",
                    loop_.len()
                )));
            }
            if let Some(&bad) = loop_.iter().find(|&&v| v >= vertices.len()) {
                return Err(VemError::InvalidMesh(format!(
                    "cell {c} references missing vertex {bad}"
                )));
            }
            let poly: Vec<Point> = loop_.iter().map(|&v| vertices[v]).collect();
            crate::geometry::check_simple_ccw(&poly)
                .map_err(|e| VemError::InvalidMesh(format!("cell {c}: {e}")))?;
            let n = loop_.len();
            let mut ce = Vec::with_capacity(n);
            for l in 0..n {
                let (va, vb) = (loop_[l], loop_[(l + 1) % n]);
                let key = (va.min(vb), va.max(vb));
                let id = *edge_id.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_cells.push(Vec::new());
                    edges.len() - 1
                });
                edge_cells[id].push(c);
                // traversal lo→hi means the left (global) normal points inward
                let sign = if va < vb { -1.0 } else { 1.0 };
                ce.push((id, sign));
            }
            cell_edges.push(ce);
        }
        let boundary_edge = edge_cells.iter().map(|c| c.len() == 1).collect();
        let mesh = PolygonalMesh {
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            boundary_edge,
            domain,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks the structural invariants: edge incidence, opposite signs on
    /// shared edges and the area partition of the bounding rectangle.
    pub fn validate(&self) -> Result<()> {
        for (e, cells) in self.edge_cells.iter().enumerate() {
            match cells.len() {
                1 => {}
                2 => {
                    let s0 = self.edge_sign(cells[0], e);
                    let s1 = self.edge_sign(cells[1], e);
                    if s0 + s1 != 0.0 {
                        return Err(VemError::InvalidMesh(format!(
                            "edge {e} is traversed in the same direction by cells {} and {}",
                            cells[0], cells[1]
                        )));
                    }
                }
                k => {
                    return Err(VemError::InvalidMesh(format!(
                        "edge {e} is shared by {k} cells"
                    )))
                }
            }
        }
        let total: f64 = (0..self.num_cells()).map(|c| self.cell_area(c)).sum();
        let expected = self.domain.area();
        if (total - expected).abs() > 1e-10 * expected {
            return Err(VemError::InvalidMesh(format!(
                "cell areas sum to {total}, bounding box area is {expected}"
            )));
        }
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.boundary_edge[e] && !self.on_domain_boundary(a, b) {
                return Err(VemError::InvalidMesh(format!(
                    "edge {e} has a single cell but is not on the rectangle boundary"
                )));
            }
        }
        Ok(())
    }

    fn on_domain_boundary(&self, a: usize, b: usize) -> bool {
        let d = &self.domain;
        let tol = 1e-10 * d.a.max(d.b);
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let on = |v: f64, t: f64| (v - t).abs() <= tol;
        (on(p.x, d.x0) && on(q.x, d.x0))
            || (on(p.x, d.x0 + d.a) && on(q.x, d.x0 + d.a))
            || (on(p.y, d.y0) && on(q.y, d.y0))
            || (on(p.y, d.y0 + d.b) && on(q.y, d.y0 + d.b))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn domain(&self) -> Rectangle {
        self.domain
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_internal_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|b| !**b).count()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    /// `(edge id, orientation sign)` per local edge of `cell`.
    pub fn cell_edges(&self, cell: usize) -> &[(usize, f64)] {
        &self.cell_edges[cell]
    }

    pub fn edge_cells(&self, edge: usize) -> &[usize] {
        &self.edge_cells[edge]
    }

    pub fn edge_sign(&self, cell: usize, edge: usize) -> f64 {
        self.cell_edges[cell]
            .iter()
            .find(|(e, _)| *e == edge)
            .map(|(_, s)| *s)
            .unwrap_or(0.0)
    }

    pub fn cell_polygon(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        signed_area(&self.cell_polygon(cell))
    }

    /// Global unit normal of `edge` (tangent `lo → hi` rotated by +90°).
    pub fn edge_normal(&self, edge: usize) -> Point {
        let [a, b] = self.edges[edge];
        let t = self.vertices[b] - self.vertices[a];
        t.perp() * (1.0 / t.norm())
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Element geometry of `cell` with every edge parametrised `lo → hi`,
    /// so local edge moments agree with the global ones up to the sign.
    pub fn element_geometry(&self, cell: usize) -> ElementGeometry {
        let reversed: Vec<bool> = self.cell_edges[cell]
            .iter()
            .map(|&(_, s)| s > 0.0)
            .collect();
        ElementGeometry::with_edge_directions(self.cell_polygon(cell), &reversed)
            .expect("cells are validated at construction")
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| crate::geometry::diameter(&self.cell_polygon(c)))
            .fold(0.0, f64::max)
    }

    /// Vertices not on the rectangle boundary.
    pub fn num_internal_vertices(&self) -> usize {
        let mut on_boundary = vec![false; self.vertices.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.boundary_edge[e] {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        on_boundary.iter().filter(|b| !**b).count()
    }
}
