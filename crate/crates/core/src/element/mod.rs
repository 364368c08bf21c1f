//! Element-local virtual element computations for `H(div)` fields with
//! polynomial normal traces and divergence of degree `k` and vanishing rotor.
//!
//! Local degrees of freedom of a field `v` on a polygon `E`:
//!
//! * edge moments `∫_e (v·n_E) q_i ds`, `i = 0..=k`, with `n_E` the outward
//!   normal and `q_i` the Legendre polynomials of the edge,
//! * internal moments `∫_E v·∇m_α` for the scaled monomials `1 ≤ |α| ≤ k`.
//!
//! Everything the discrete forms need is computable from these numbers:
//! the divergence (a polynomial of degree `k`), the `L²` projection onto
//! `∇P_{k+1}(E)` and the stabilised mass matrix.

mod basis;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::Serialize;

pub use basis::{dim_p, DofLayout, EdgeMomentBasis, ScaledMonomialBasis};

use crate::error::{Result, VemError};
use crate::geometry::{ElementGeometry, Point};
use crate::quadrature::{polygon_rule, segment_rule};

/// `∫_E m_α` for every scaled monomial of degree `≤ max_degree`.
pub fn polygon_moments(geom: &ElementGeometry, max_degree: usize) -> Vec<f64> {
    let basis = ScaledMonomialBasis::for_element(geom, max_degree);
    let rule = polygon_rule(&geom.vertices, geom.centroid, max_degree);
    let mut out = vec![0.0; basis.len()];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        for (o, v) in out.iter_mut().zip(basis.values(*p)) {
            *o += w * v;
        }
    }
    out
}

/// Stabilisation matrix in local dofs: `σ_E · I`.
///
/// For `k = 0` the local dofs are exactly the edge fluxes `∫_e v·n`, so this is
/// `σ_E Σ_e (∫_e u·n)(∫_e v·n)`. For `k ≥ 1` the same scaled Euclidean product
/// is taken over all dofs.
pub fn stabilization_matrix(layout: &DofLayout, sigma: f64) -> Result<Mat<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(VemError::InvalidParameter(format!(
            "stability constant must be non-negative, got {sigma}"
        )));
    }
    let n = layout.total();
    Ok(Mat::from_fn(n, n, |i, j| if i == j { sigma } else { 0.0 }))
}

fn spd_solve(a: &Mat<f64>, b: &Mat<f64>, what: &str) -> Result<Mat<f64>> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| VemError::Factorization(format!("{what} is not positive definite: {e:?}")))?;
    Ok(llt.solve(b))
}

fn symmetrize(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// All element matrices for one polygon, order `k` and stability constant `σ_E`.
#[derive(Debug, Clone)]
pub struct LocalElementOps {
    pub k: usize,
    pub sigma: f64,
    pub layout: DofLayout,
    pub geometry: ElementGeometry,
    pub basis: ScaledMonomialBasis,
    /// `dim P_k × n_dof`: monomial coefficients of `div φ_j`.
    pub div: Mat<f64>,
    /// `dim P_k × dim P_k`: `∫_E m_α m_β`.
    pub poly_mass: Mat<f64>,
    /// `n_dof × n_dof`: `∫_E div φ_i div φ_j`.
    pub stiffness: Mat<f64>,
    /// Gradient Gram matrix `∫_E ∇m_a·∇m_b`, `1 ≤ |a|,|b| ≤ k+1`.
    pub grad_gram: Mat<f64>,
    /// `n_Π × n_dof`: `∫_E φ_j·∇m_a`, computable from the dofs.
    pub proj_rhs: Mat<f64>,
    /// `n_Π × n_dof`: projection of `φ_j` in the `∇m_a` basis.
    pub pi_coeff: Mat<f64>,
    /// `n_dof × n_Π`: dofs of `∇m_a`.
    pub grad_dofs: Mat<f64>,
    /// `n_dof × n_dof`: dofs of the projection of `φ_j`.
    pub pi_dof: Mat<f64>,
    pub stab: Mat<f64>,
    /// Stabilised local mass matrix.
    pub mass: Mat<f64>,
}

impl LocalElementOps {
    pub fn new(geometry: &ElementGeometry, k: usize, sigma: f64) -> Result<Self> {
        let layout = DofLayout::new(k, geometry.num_edges());
        let stab = stabilization_matrix(&layout, sigma)?;
        let n_dof = layout.total();
        let nk = dim_p(k);
        let nk1 = dim_p(k + 1);
        let n_pi = nk1 - 1;
        let basis = ScaledMonomialBasis::for_element(geometry, k + 1);

        // monomial mass and gradient Gram up to degree k+1
        let rule = polygon_rule(&geometry.vertices, geometry.centroid, 2 * k + 2);
        let mut mass_full = Mat::<f64>::zeros(nk1, nk1);
        let mut gram_full = Mat::<f64>::zeros(nk1, nk1);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let vals = basis.values(*p);
            let grads = basis.gradients(*p);
            for a in 0..nk1 {
                for b in 0..nk1 {
                    mass_full[(a, b)] += w * vals[a] * vals[b];
                    gram_full[(a, b)] += w * grads[a].dot(grads[b]);
                }
            }
        }

        // edge integrals ∫_e q_i m_a and ∫_e q_i ∇m_a·n
        let edge_basis = EdgeMomentBasis::new(k);
        let ne = geometry.num_edges();
        let mut trace_mono = vec![vec![vec![0.0; nk1]; k + 1]; ne];
        let mut trace_grad = vec![vec![vec![0.0; nk1]; k + 1]; ne];
        for (l, edge) in geometry.edges.iter().enumerate() {
            let (erule, s) = segment_rule(edge.start, edge.end, k + 3);
            for ((p, w), &si) in erule.points.iter().zip(&erule.weights).zip(&s) {
                let q = edge_basis.values_at(si);
                let vals = basis.values(*p);
                let grads = basis.gradients(*p);
                for i in 0..=k {
                    for a in 0..nk1 {
                        trace_mono[l][i][a] += w * q[i] * vals[a];
                        trace_grad[l][i][a] += w * q[i] * grads[a].dot(edge.normal);
                    }
                }
            }
        }

        // boundary term ∮ (φ_j·n) m_a for a basis dof j; φ_j·n on edge l is (2r+1)/|e| q_r
        let boundary = |j: usize, a: usize| -> f64 {
            if j >= layout.n_edge_dofs() {
                return 0.0;
            }
            let (l, r) = (j / (k + 1), j % (k + 1));
            (2 * r + 1) as f64 / geometry.edges[l].length * trace_mono[l][r][a]
        };

        // divergence: ∫ div φ_j m_β = -∫ φ_j·∇m_β + ∮ (φ_j·n) m_β
        let poly_mass = Mat::from_fn(nk, nk, |a, b| mass_full[(a, b)]);
        let div_rhs = Mat::from_fn(nk, n_dof, |beta, j| {
            let internal = if beta >= 1 && j == layout.internal_dof(beta) {
                -1.0
            } else {
                0.0
            };
            internal + boundary(j, beta)
        });
        let div = spd_solve(&poly_mass, &div_rhs, "monomial mass matrix")?;

        let stiffness = symmetrize(&(div.transpose() * &poly_mass * &div));

        // projector right-hand side: ∫ φ_j·∇m_a = -∫ div φ_j m_a + ∮ (φ_j·n) m_a
        let grad_gram = Mat::from_fn(n_pi, n_pi, |a, b| gram_full[(a + 1, b + 1)]);
        let proj_rhs = Mat::from_fn(n_pi, n_dof, |a, j| {
            let vol: f64 = (0..nk)
                .map(|beta| div[(beta, j)] * mass_full[(beta, a + 1)])
                .sum();
            -vol + boundary(j, a + 1)
        });
        let pi_coeff = spd_solve(&grad_gram, &proj_rhs, "gradient Gram matrix")?;

        let grad_dofs = Mat::from_fn(n_dof, n_pi, |j, a| {
            if j < layout.n_edge_dofs() {
                let (l, i) = (j / (k + 1), j % (k + 1));
                trace_grad[l][i][a + 1]
            } else {
                let alpha = j - layout.n_edge_dofs() + 1;
                gram_full[(a + 1, alpha)]
            }
        });
        let pi_dof = &grad_dofs * &pi_coeff;

        let complement = Mat::<f64>::identity(n_dof, n_dof) - &pi_dof;
        let consistent = pi_coeff.transpose() * &grad_gram * &pi_coeff;
        let stabilizing = complement.transpose() * &stab * &complement;
        let mass = symmetrize(&(consistent + stabilizing));

        Ok(LocalElementOps {
            k,
            sigma,
            layout,
            geometry: geometry.clone(),
            basis,
            div,
            poly_mass,
            stiffness,
            grad_gram,
            proj_rhs,
            pi_coeff,
            grad_dofs,
            pi_dof,
            stab,
            mass,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.layout.total()
    }

    /// Monomial coefficients of `div v_h` for local dofs `local`.
    pub fn divergence_coefficients(&self, local: &[f64]) -> Vec<f64> {
        mat_vec(&self.div, local)
    }

    /// Coefficients of `Π v_h` in the basis `∇m_a`, `1 ≤ |a| ≤ k+1`.
    pub fn projection_coefficients(&self, local: &[f64]) -> Vec<f64> {
        mat_vec(&self.pi_coeff, local)
    }

    /// Evaluates `Σ c_a ∇m_a` at `p`.
    pub fn evaluate_gradient_poly(&self, coeffs: &[f64], p: Point) -> Point {
        self.basis
            .gradients(p)
            .iter()
            .skip(1)
            .zip(coeffs)
            .fold(Point::default(), |acc, (g, c)| acc + *g * *c)
    }

    /// Evaluates `Σ c_β m_β` (degree ≤ k) at `p`.
    pub fn evaluate_poly(&self, coeffs: &[f64], p: Point) -> f64 {
        self.basis
            .values(p)
            .iter()
            .zip(coeffs)
            .map(|(v, c)| v * c)
            .sum()
    }

    /// `‖Σ c_β m_β‖_{L²(E)}` for a polynomial of degree `≤ k`.
    pub fn poly_l2_norm(&self, coeffs: &[f64]) -> f64 {
        let hc = mat_vec(&self.poly_mass, coeffs);
        coeffs
            .iter()
            .zip(&hc)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Local matrices as nested arrays, for debugging dumps.
    pub fn to_dump(&self) -> ElementDump {
        ElementDump {
            k: self.k,
            sigma: self.sigma,
            vertices: self.geometry.vertices.iter().map(|p| [p.x, p.y]).collect(),
            area: self.geometry.area,
            diameter: self.geometry.diameter,
            div: to_rows(&self.div),
            stiffness: to_rows(&self.stiffness),
            grad_gram: to_rows(&self.grad_gram),
            pi_coeff: to_rows(&self.pi_coeff),
            pi_dof: to_rows(&self.pi_dof),
            stab: to_rows(&self.stab),
            mass: to_rows(&self.mass),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ElementDump {
    pub k: usize,
    pub sigma: f64,
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    pub diameter: f64,
    pub div: Vec<Vec<f64>>,
    pub stiffness: Vec<Vec<f64>>,
    pub grad_gram: Vec<Vec<f64>>,
    pub pi_coeff: Vec<Vec<f64>>,
    pub pi_dof: Vec<Vec<f64>>,
    pub stab: Vec<Vec<f64>>,
    pub mass: Vec<Vec<f64>>,
}

pub(crate) fn to_rows(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn mat_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), x.len());
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}
