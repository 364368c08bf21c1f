//! Planar points and per-polygon geometry.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotation by +90° (counter-clockwise).
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}

pub fn centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    let area = signed_area(vertices);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let c = p.cross(q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    Point::new(cx / (6.0 * area), cy / (6.0 * area))
}

pub fn diameter(vertices: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in vertices.iter().enumerate() {
        for q in &vertices[i + 1..] {
            d = d.max((*p - *q).norm());
        }
    }
    d
}

fn segments_intersect_properly(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Rejects polygons that are clockwise, have repeated or zero-length edges,
/// or whose non-adjacent edges cross.
pub fn check_simple_ccw(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(VemError::DegeneratePolygon(format!("{n} vertices")));
    }
    let area = signed_area(vertices);
    let h = diameter(vertices);
    if area <= 1e-14 * h * h {
        return Err(VemError::DegeneratePolygon(format!(
            "non-positive signed area {area:e} (polygon must be counter-clockwise)"
        )));
    }
    for i in 0..n {
        if (vertices[(i + 1) % n] - vertices[i]).norm() <= 1e-14 * h {
            return Err(VemError::DegeneratePolygon(format!("zero-length edge {i}")));
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect_properly(
                vertices[i],
                vertices[(i + 1) % n],
                vertices[j],
                vertices[(j + 1) % n],
            ) {
                return Err(VemError::DegeneratePolygon(format!(
                    "edges {i} and {j} cross"
                )));
            }
        }
    }
    Ok(())
}

/// One edge of a polygon as seen from that polygon.
///
/// `start → end` fixes the parametrisation used for edge moments (it may run
/// against the polygon's traversal); `normal` is always the outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    pub normal: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub vertices: Vec<Point>,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
    /// Centre used for the scaled monomials.
    pub scaling_center: Point,
    pub edges: Vec<EdgeGeometry>,
}

impl ElementGeometry {
    /// Geometry of a counter-clockwise polygon with edge `l` running from
    /// vertex `l` to vertex `l+1`, parametrised in traversal direction.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        Self::with_edge_directions(vertices, &vec![false; n])
    }

    /// Like [`ElementGeometry::new`], but `reversed[l]` flips the moment
    /// parametrisation of edge `l` (used to align with a global edge direction).
    pub fn with_edge_directions(vertices: Vec<Point>, reversed: &[bool]) -> Result<Self> {
        check_simple_ccw(&vertices)?;
        let n = vertices.len();
        if reversed.len() != n {
            return Err(VemError::InvalidParameter(format!(
                "{} edge directions for {n} edges",
                reversed.len()
            )));
        }
        let area = signed_area(&vertices);
        let c = centroid(&vertices);
        let edges = (0..n)
            .map(|l| {
                let a = vertices[l];
                let b = vertices[(l + 1) % n];
                let t = b - a;
                let length = t.norm();
                // outward normal of a CCW polygon lies to the right of the traversal
                let normal = Point::new(t.y / length, -t.x / length);
                let (start, end) = if reversed[l] { (b, a) } else { (a, b) };
                EdgeGeometry {
                    start,
                    end,
                    length,
                    normal,
                }
            })
            .collect();
        Ok(ElementGeometry {
            area,
            diameter: diameter(&vertices),
            centroid: c,
            scaling_center: c,
            edges,
            vertices,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Largest disc inside the intersection of the inner half-planes of all edges
/// (the kernel of the polygon). Returns `(center, radius)`; a non-positive
/// radius means the polygon is not star-shaped with respect to any disc.
///
/// Solves `max r  s.t.  n_i · x + r ≤ n_i · v_i` by enumerating the vertices
/// of the three-variable feasible region, which is cheap for polygons.
pub fn chebyshev_center(vertices: &[Point]) -> (Point, f64) {
    let n = vertices.len();
    // constraints a·x + r <= b with unit outward normals a
    let cons: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            let t = q - p;
            let len = t.norm();
            let a = Point::new(t.y / len, -t.x / len);
            (a, a.dot(p))
        })
        .collect();
    let scale = diameter(vertices).max(1.0);
    let tol = 1e-12 * scale;
    let mut best: Option<(Point, f64)> = None;
    let feasible = |x: Point, r: f64| cons.iter().all(|(a, b)| a.dot(x) + r <= b + tol);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // solve 3x3: [a_x a_y 1] [x y r]^T = b
                let rows = [cons[i], cons[j], cons[k]];
                let m = [
                    [rows[0].0.x, rows[0].0.y, 1.0],
                    [rows[1].0.x, rows[1].0.y, 1.0],
                    [rows[2].0.x, rows[2].0.y, 1.0],
                ];
                let rhs = [rows[0].1, rows[1].1, rows[2].1];
                if let Some(sol) = solve3(m, rhs) {
                    let x = Point::new(sol[0], sol[1]);
                    if feasible(x, sol[2]) && best.is_none_or(|(_, r)| sol[2] > r) {
                        best = Some((x, sol[2]));
                    }
                }
            }
        }
    }
    best.unwrap_or((centroid(vertices), 0.0))
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    #[test]
    fn square_geometry() {
        let g = ElementGeometry::new(unit_square()).unwrap();
        assert!((g.area - 1.0).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.centroid - Point::new(0.5, 0.5)).norm() < 1e-15);
        let flux: Point = g
            .edges
            .iter()
            .fold(Point::default(), |acc, e| acc + e.normal * e.length);
        assert!(flux.norm() < 1e-12);
        assert_eq!(g.edges[0].normal, Point::new(0.0, -1.0));
    }

    #[test]
    fn clockwise_and_self_intersecting_polygons_are_rejected() {
        let mut cw = unit_square();
        cw.reverse();
        assert!(ElementGeometry::new(cw).is_err());
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(check_simple_ccw(&bowtie).is_err());
    }

    #[test]
    fn chebyshev_center_of_square_and_nonconvex_arrow() {
        let (c, r) = chebyshev_center(&unit_square());
        assert!((c - Point::new(0.5, 0.5)).norm() < 1e-12);
        assert!((r - 0.5).abs() < 1e-12);

        // L-shape: kernel is the lower-left unit square
        let l = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        let (c, r) = chebyshev_center(&l);
        assert!((r - 0.5).abs() < 1e-12);
        assert!((c - Point::new(0.5, 0.5)).norm() < 1e-12);
    }
}
