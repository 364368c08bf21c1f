use rayon::prelude::*;
use serde::Serialize;

use super::{commuting_residual, interpolate, AnalyticField, LocalNeumannSolver};
use crate::assembly::local_operators;
use crate::error::{Result, VemError};
use crate::mesh::{generate, MeshFamily, PolygonalMesh};
use crate::quadrature::polygon_rule;
use crate::study::least_squares_slope;

#[derive(Debug, Clone, Serialize)]
pub struct RateLevel {
    pub n: usize,
    pub h: f64,
    /// `‖v - v_I‖_{L²}` with `v_I` evaluated by local Neumann solves.
    pub error: f64,
    /// `‖v - Π v_I‖_{L²}`, a computable surrogate.
    pub projected_error: f64,
    pub commuting_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub family: MeshFamily,
    pub k: usize,
    pub field: String,
    pub refinement: usize,
    pub levels: Vec<RateLevel>,
    /// The field is reproduced on every level: errors are at sub-mesh accuracy
    /// and no rate is fitted.
    pub exact: bool,
    /// Least-squares slopes of `log error` against `log h`.
    pub rate: Option<f64>,
    pub projected_rate: Option<f64>,
    /// Slope over the last three levels only.
    pub asymptotic_rate: Option<f64>,
}

/// Errors below this count as exact reproduction.
pub const EXACT_TOLERANCE: f64 = 1e-10;

fn level_errors(
    mesh: &PolygonalMesh,
    k: usize,
    field: &AnalyticField,
    refinement: usize,
) -> Result<(f64, f64)> {
    let interp = interpolate(mesh, k, field);
    let locals = local_operators(mesh, k, 1.0)?;
    let per_cell: Vec<(f64, f64)> = locals
        .par_iter()
        .enumerate()
        .map(|(c, ops)| -> Result<(f64, f64)> {
            let local = interp.local(c);
            let solver = LocalNeumannSolver::new(&ops.geometry, refinement)?;
            let virt = solver.solve(ops, &local)?.l2_error_squared(field);
            let coeffs = ops.projection_coefficients(&local);
            let g = &ops.geometry;
            let proj = polygon_rule(&g.vertices, g.centroid, 2 * k + 8).integrate(|p| {
                let d = field.value(p) - ops.evaluate_gradient_poly(&coeffs, p);
                d.dot(d)
            });
            Ok((virt, proj))
        })
        .collect::<Result<_>>()?;
    let (a, b) = per_cell
        .iter()
        .fold((0.0, 0.0), |acc, e| (acc.0 + e.0, acc.1 + e.1));
    Ok((a.sqrt(), b.sqrt()))
}

/// Interpolation errors of `field` over a sequence of meshes of `(0,a) × (0,b)`.
pub fn interpolation_rate_study(
    family: MeshFamily,
    a: f64,
    b: f64,
    k: usize,
    field: &AnalyticField,
    ns: &[usize],
    refinement: usize,
) -> Result<RateReport> {
    if ns.len() < 2 {
        return Err(VemError::InvalidParameter(
            "a rate needs at least two mesh levels".into(),
        ));
    }
    let mut levels = Vec::with_capacity(ns.len());
    for &n in ns {
        let mesh = generate(family, a, b, n)?;
        let (error, projected_error) = level_errors(&mesh, k, field, refinement)?;
        let commuting = commuting_residual(&mesh, k, field)?.max_residual;
        levels.push(RateLevel {
            n,
            h: mesh.mesh_size(),
            error,
            projected_error,
            commuting_residual: commuting,
        });
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let errs: Vec<f64> = levels.iter().map(|l| l.error).collect();
    let perrs: Vec<f64> = levels.iter().map(|l| l.projected_error).collect();
    let exact = errs.iter().chain(&perrs).all(|e| *e <= EXACT_TOLERANCE);
    let fit = |h: &[f64], e: &[f64]| {
        if exact {
            None
        } else {
            least_squares_slope(h, e).ok()
        }
    };
    let tail = hs.len().saturating_sub(3);
    Ok(RateReport {
        family,
        k,
        field: field.name.clone(),
        refinement,
        exact,
        rate: fit(&hs, &errs),
        projected_rate: fit(&hs, &perrs),
        asymptotic_rate: fit(&hs[tail..], &errs[tail..]),
        levels,
    })
}
