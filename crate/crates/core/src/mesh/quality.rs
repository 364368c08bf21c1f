use serde::Serialize;

use super::PolygonalMesh;
use crate::geometry::{chebyshev_center, diameter, Point};

#[derive(Debug, Clone, Serialize)]
pub struct CellQuality {
    /// Shortest edge over cell diameter.
    pub min_edge_to_diameter: f64,
    pub star_center_found: bool,
    pub star_center: Point,
    /// Radius of the largest disc the cell is star-shaped about, over its diameter.
    pub star_radius_to_diameter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshQualityReport {
    pub cells: Vec<CellQuality>,
    /// Worst-case constant over the mesh: min of both ratios.
    pub c_t_estimate: f64,
    /// All cells are star-shaped about some disc.
    pub star_shaped: bool,
}

impl MeshQualityReport {
    pub fn min_edge_ratio(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.min_edge_to_diameter)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_star_ratio(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.star_radius_to_diameter)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn cell_quality(polygon: &[Point]) -> CellQuality {
    let h = diameter(polygon);
    let n = polygon.len();
    let min_edge = (0..n)
        .map(|i| (polygon[(i + 1) % n] - polygon[i]).norm())
        .fold(f64::INFINITY, f64::min);
    let (center, radius) = chebyshev_center(polygon);
    let found = radius > 1e-12 * h;
    CellQuality {
        min_edge_to_diameter: min_edge / h,
        star_center_found: found,
        star_center: center,
        star_radius_to_diameter: if found { radius / h } else { 0.0 },
    }
}

/// Per-cell shortest-edge and star-shapedness ratios.
pub fn check_mesh_assumptions(mesh: &PolygonalMesh) -> MeshQualityReport {
    let cells: Vec<CellQuality> = (0..mesh.num_cells())
        .map(|c| cell_quality(&mesh.cell_polygon(c)))
        .collect();
    let star_shaped = cells.iter().all(|c| c.star_center_found);
    let c_t_estimate = cells
        .iter()
        .map(|c| c.min_edge_to_diameter.min(c.star_radius_to_diameter))
        .fold(f64::INFINITY, f64::min);
    if !star_shaped {
        log::warn!("mesh has cells that are not star-shaped with respect to a disc");
    }
    MeshQualityReport {
        cells,
        c_t_estimate,
        star_shaped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_rectangular;

    #[test]
    fn unit_square_ratios() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let q = cell_quality(&sq);
        assert!((q.min_edge_to_diameter - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((q.star_radius_to_diameter - 0.5 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn regular_hexagon_of_unit_diameter() {
        let hex: Vec<Point> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI / 3.0 * i as f64;
                Point::new(0.5 * t.cos(), 0.5 * t.sin())
            })
            .collect();
        let q = cell_quality(&hex);
        assert!((q.min_edge_to_diameter - 0.5).abs() < 1e-12);
        assert!((q.star_radius_to_diameter - 3f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn congruent_rectangles_share_ratios() {
        let m = generate_rectangular(1.0, 1.1, 6).unwrap();
        let r = check_mesh_assumptions(&m);
        assert!(r.star_shaped);
        let first = &r.cells[0];
        for c in &r.cells {
            assert!((c.min_edge_to_diameter - first.min_edge_to_diameter).abs() < 1e-12);
            assert!((c.star_radius_to_diameter - first.star_radius_to_diameter).abs() < 1e-12);
        }
    }

    #[test]
    fn non_star_shaped_cell_is_flagged() {
        // a "U" whose two arms see no common point
        let u = [
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 3.0),
            Point::new(2.0, 3.0),
            Point::new(2.0, 0.5),
            Point::new(1.0, 0.5),
            Point::new(1.0, 3.0),
            Point::new(0.0, 3.0),
        ];
        assert!(!cell_quality(&u).star_center_found);
    }
}
