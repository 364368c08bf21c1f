//! The interpolation operator onto the virtual space and its properties:
//! the commuting identity `div v_I = P_k(div v)`, divergence stability and
//! `L²` interpolation rates measured through local evaluation of virtual
//! functions.

mod field;
mod rates;
mod virtual_eval;

use rayon::prelude::*;
use serde::Serialize;

pub use field::{AnalyticField, CavityMode, Regularity};
pub use rates::{interpolation_rate_study, RateLevel, RateReport, EXACT_TOLERANCE};
pub use virtual_eval::{virtual_evaluate, LocalNeumannSolver, VirtualField};

use crate::assembly::{local_operators, DofMap};
use crate::element::{dim_p, LocalElementOps, ScaledMonomialBasis};
use crate::error::Result;
use crate::mesh::PolygonalMesh;
use crate::quadrature::{polygon_rule, segment_rule};

const MAX_EDGE_POINTS: usize = 128;

#[derive(Debug, Clone, Copy)]
pub struct InterpOptions {
    /// Initial Gauss points per edge for the flux moments of smooth traces;
    /// doubled until two rules agree.
    pub edge_points: usize,
    /// Polynomial degree the cell rules integrate exactly.
    pub cell_degree: usize,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions {
            edge_points: 8,
            cell_degree: 16,
        }
    }
}

/// Degrees of freedom of `v_I` over every edge (boundary included) and cell.
#[derive(Debug, Clone)]
pub struct InterpolantDofs {
    pub k: usize,
    pub dof_map: DofMap,
    pub values: Vec<f64>,
    /// Largest change of an edge moment at the last doubling of the edge rule.
    pub edge_quadrature_drift: f64,
}

impl InterpolantDofs {
    /// Local dof vector of `cell` (outward orientation).
    pub fn local(&self, cell: usize) -> Vec<f64> {
        self.dof_map.gather(cell, &self.values)
    }

    /// Restriction to the numbering of `free` (wall dofs dropped).
    pub fn restrict(&self, mesh: &PolygonalMesh, free: &DofMap) -> Vec<f64> {
        let mut out = vec![0.0; free.len()];
        for e in 0..mesh.num_edges() {
            if let (Some(dst), Some(src)) = (free.edge_dofs(e), self.dof_map.edge_dofs(e)) {
                out[dst].copy_from_slice(&self.values[src]);
            }
        }
        for c in 0..mesh.num_cells() {
            let dst = free.cell_internal_dofs(c);
            let src = self.dof_map.cell_internal_dofs(c);
            out[dst].copy_from_slice(&self.values[src]);
        }
        out
    }
}

fn edge_moments(
    mesh: &PolygonalMesh,
    e: usize,
    k: usize,
    field: &AnalyticField,
    points: usize,
) -> Vec<f64> {
    let [a, b] = mesh.edges()[e];
    let (start, end) = (mesh.vertices()[a], mesh.vertices()[b]);
    let n = mesh.edge_normal(e);
    let (rule, s) = segment_rule(start, end, points);
    let mut out = vec![0.0; k + 1];
    for ((p, w), &si) in rule.points.iter().zip(&rule.weights).zip(&s) {
        let vn = field.value(*p).dot(n);
        for (o, q) in out
            .iter_mut()
            .zip(crate::quadrature::legendre_values(k, si))
        {
            *o += w * vn * q;
        }
    }
    out
}

/// Interpolant fixed by the degrees of freedom: edge moments of `v·n`
/// against Legendre polynomials and cell moments `∫_E v·∇m_α`.
pub fn interpolate_with(
    mesh: &PolygonalMesh,
    k: usize,
    field: &AnalyticField,
    opts: InterpOptions,
) -> InterpolantDofs {
    let dof_map = DofMap::with_boundary(mesh, k);
    let mut values = vec![0.0; dof_map.len()];
    let mut drift: f64 = 0.0;
    for e in 0..mesh.num_edges() {
        let mut points = opts.edge_points;
        let mut m = edge_moments(mesh, e, k, field, points);
        loop {
            let fine = edge_moments(mesh, e, k, field, 2 * points);
            let scale = fine
                .iter()
                .fold(mesh.edge_length(e), |acc, v| acc.max(v.abs()));
            let diff = m
                .iter()
                .zip(&fine)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            m = fine;
            points *= 2;
            if diff <= 1e-14 * scale || points >= MAX_EDGE_POINTS {
                drift = drift.max(diff);
                break;
            }
        }
        let r = dof_map.edge_dofs(e).expect("all edges carry dofs");
        values[r].copy_from_slice(&m);
    }
    if k >= 1 {
        for c in 0..mesh.num_cells() {
            let geom = mesh.element_geometry(c);
            let basis = ScaledMonomialBasis::for_element(&geom, k);
            let rule = polygon_rule(&geom.vertices, geom.centroid, opts.cell_degree);
            let mut mom = vec![0.0; dim_p(k) - 1];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let v = field.value(*p);
                for (o, g) in mom.iter_mut().zip(basis.gradients(*p).iter().skip(1)) {
                    *o += w * v.dot(*g);
                }
            }
            let r = dof_map.cell_internal_dofs(c);
            values[r].copy_from_slice(&mom);
        }
    }
    InterpolantDofs {
        k,
        dof_map,
        values,
        edge_quadrature_drift: drift,
    }
}

pub fn interpolate(mesh: &PolygonalMesh, k: usize, field: &AnalyticField) -> InterpolantDofs {
    interpolate_with(mesh, k, field, InterpOptions::default())
}

/// Coefficients of the `L²(E)` projection of `div v` onto `P_k(E)`.
pub fn project_divergence(
    ops: &LocalElementOps,
    field: &AnalyticField,
    cell_degree: usize,
) -> Vec<f64> {
    let geom = &ops.geometry;
    let basis = ScaledMonomialBasis::for_element(geom, ops.k);
    let rule = polygon_rule(&geom.vertices, geom.centroid, cell_degree);
    let mut rhs = vec![0.0; basis.len()];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let d = field.divergence(*p);
        for (r, m) in rhs.iter_mut().zip(basis.values(*p)) {
            *r += w * d * m;
        }
    }
    let llt = ops
        .poly_mass
        .llt(faer::Side::Lower)
        .expect("monomial mass matrix is positive definite");
    let b = faer::Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = faer::linalg::solvers::Solve::solve(&llt, &b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CellCommuting {
    /// `‖div v_I − P_k(div v)‖_{L²(E)}`.
    pub residual: f64,
    pub div_interpolant_norm: f64,
    pub div_field_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutingReport {
    pub max_residual: f64,
    /// `max_E (‖div v_I‖_E − ‖div v‖_E)`; non-positive when divergence is stable.
    pub max_div_excess: f64,
    pub edge_quadrature_drift: f64,
    pub cells: Vec<CellCommuting>,
}

/// Commuting-diagram residual and divergence-stability check on every cell.
pub fn commuting_residual(
    mesh: &PolygonalMesh,
    k: usize,
    field: &AnalyticField,
) -> Result<CommutingReport> {
    let opts = InterpOptions::default();
    let interp = interpolate_with(mesh, k, field, opts);
    let locals = local_operators(mesh, k, 1.0)?;
    let cells: Vec<CellCommuting> = locals
        .par_iter()
        .enumerate()
        .map(|(c, ops)| {
            let div_i = ops.divergence_coefficients(&interp.local(c));
            let proj = project_divergence(ops, field, opts.cell_degree);
            let diff: Vec<f64> = div_i.iter().zip(&proj).map(|(a, b)| a - b).collect();
            let geom = &ops.geometry;
            let rule = polygon_rule(&geom.vertices, geom.centroid, opts.cell_degree);
            let div_norm = rule
                .integrate(|p| field.divergence(p).powi(2))
                .max(0.0)
                .sqrt();
            CellCommuting {
                residual: ops.poly_l2_norm(&diff),
                div_interpolant_norm: ops.poly_l2_norm(&div_i),
                div_field_norm: div_norm,
            }
        })
        .collect();
    Ok(CommutingReport {
        max_residual: cells.iter().map(|c| c.residual).fold(0.0, f64::max),
        max_div_excess: cells
            .iter()
            .map(|c| c.div_interpolant_norm - c.div_field_norm)
            .fold(f64::NEG_INFINITY, f64::max),
        edge_quadrature_drift: interp.edge_quadrature_drift,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::mesh::{generate_hexagonal, generate_rectangular};

    #[test]
    fn constant_field_dofs_are_exact_fluxes() {
        let mesh = generate_rectangular(1.0, 1.1, 3).unwrap();
        let f = AnalyticField::constant(Point::new(1.0, 0.0));
        let vi = interpolate(&mesh, 0, &f);
        for e in 0..mesh.num_edges() {
            let exact = mesh.edge_normal(e).x * mesh.edge_length(e);
            let got = vi.values[vi.dof_map.edge_dofs(e).unwrap()][0];
            assert!((got - exact).abs() < 1e-14);
        }
        let report = commuting_residual(&mesh, 0, &f).unwrap();
        assert!(report.max_residual < 1e-12);
    }

    #[test]
    fn divergence_free_gradient_has_zero_interpolated_divergence() {
        let mesh = generate_hexagonal(1.0, 1.1, 4).unwrap();
        let f = AnalyticField::new("grad (x²-y²)/2", |p| Point::new(p.x, -p.y), |_| 0.0);
        let vi = interpolate(&mesh, 0, &f);
        let locals = local_operators(&mesh, 0, 1.0).unwrap();
        for (c, ops) in locals.iter().enumerate() {
            assert!(ops.divergence_coefficients(&vi.local(c))[0].abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_fields_commute_for_k1() {
        let mesh = generate_hexagonal(1.0, 1.1, 3).unwrap();
        // ∇(x³/3 + x y²) = (x² + y², 2xy), divergence 4x
        let f = AnalyticField::new(
            "cubic gradient",
            |p| Point::new(p.x * p.x + p.y * p.y, 2.0 * p.x * p.y),
            |p| 4.0 * p.x,
        );
        let r = commuting_residual(&mesh, 1, &f).unwrap();
        assert!(r.max_residual < 1e-12, "{}", r.max_residual);
    }
}
