use std::collections::BTreeMap;

use super::{MeshFamily, PolygonalMesh};
use crate::error::{Result, VemError};
use crate::geometry::Point;

fn check_args(a: f64, b: f64, n: usize, min_n: usize) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(VemError::InvalidParameter(format!(
            "rectangle sides must be positive, got a={a}, b={b}"
        )));
    }
    if n < min_n {
        return Err(VemError::InvalidParameter(format!(
            "refinement parameter N must be at least {min_n}, got {n}"
        )));
    }
    Ok(())
}

fn grid_vertices(a: f64, b: f64, n: usize) -> Vec<Point> {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(a * i as f64 / n as f64, b * j as f64 / n as f64));
        }
    }
    v
}

pub fn generate(family: MeshFamily, a: f64, b: f64, n: usize) -> Result<PolygonalMesh> {
    match family {
        MeshFamily::Tri => generate_triangular(a, b, n),
        MeshFamily::Rect => generate_rectangular(a, b, n),
        MeshFamily::Hex => generate_hexagonal(a, b, n),
    }
}

/// `n × n` axis-aligned rectangles on `(0,a) × (0,b)`.
pub fn generate_rectangular(a: f64, b: f64, n: usize) -> Result<PolygonalMesh> {
    check_args(a, b, n, 1)?;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::from_cells(grid_vertices(a, b, n), cells)
}

/// The rectangular grid with every rectangle cut along its
/// lower-left → upper-right diagonal; `2n²` triangles.
pub fn generate_triangular(a: f64, b: f64, n: usize) -> Result<PolygonalMesh> {
    check_args(a, b, n, 1)?;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::from_cells(grid_vertices(a, b, n), cells)
}

/// Brick-laid pointy-top hexagons clipped to `(0,a) × (0,b)`.
///
/// There are `n` rows of height `b/n`. Even rows hold `n` cells of width
/// `a/n`; odd rows are shifted by half a cell and hold `n - 1` full cells
/// plus two half cells at the sides. Interior row interfaces zig-zag by
/// `±b/(6n)`, which makes interior cells regular when `a/n = (2/√3)·b/n`.
/// Cells along `y = 0` and `y = b` become pentagons, side cells of odd
/// rows become quadrilaterals. Requires `n ≥ 2`.
pub fn generate_hexagonal(a: f64, b: f64, n: usize) -> Result<PolygonalMesh> {
    check_args(a, b, n, 2)?;
    let dx = a / n as f64;
    let dy = b / n as f64;
    let delta = dy / 6.0;
    let half_max = 2 * n;

    // (first, last) half-column index of every cell in `row`
    let row_cells = |row: usize| -> Vec<(usize, usize)> {
        if row % 2 == 0 {
            (0..n).map(|i| (2 * i, 2 * i + 2)).collect()
        } else {
            let mut v = vec![(0, 1)];
            v.extend((1..n).map(|i| (2 * i - 1, 2 * i + 1)));
            v.push((half_max - 1, half_max));
            v
        }
    };
    // half-column m is the centre of a cell in `row`
    let is_center = |row: usize, m: usize| if row % 2 == 0 { m % 2 == 1 } else { m % 2 == 0 };

    let mut vertex_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |line: usize, m: usize| -> usize {
        *vertex_ids.entry((line, m)).or_insert_with(|| {
            let x = if m == half_max {
                a
            } else {
                m as f64 * dx / 2.0
            };
            let y = if line == 0 {
                0.0
            } else if line == n {
                b
            } else if is_center(line, m) {
                line as f64 * dy - delta
            } else {
                line as f64 * dy + delta
            };
            vertices.push(Point::new(x, y));
            vertices.len() - 1
        })
    };

    let mut cells = Vec::new();
    for row in 0..n {
        for (m0, m1) in row_cells(row) {
            let mut loop_ = Vec::with_capacity(6);
            // bottom interface left → right; on the flat boundary keep corners only
            for m in m0..=m1 {
                if row == 0 && m != m0 && m != m1 {
                    continue;
                }
                loop_.push(vertex(row, m));
            }
            for m in (m0..=m1).rev() {
                if row + 1 == n && m != m0 && m != m1 {
                    continue;
                }
                loop_.push(vertex(row + 1, m));
            }
            cells.push(loop_);
        }
    }
    PolygonalMesh::from_cells(vertices, cells)
}
