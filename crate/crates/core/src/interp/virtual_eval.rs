//! Pointwise evaluation of virtual functions.
//!
//! A local function `v_h = ∇γ` is fixed by `Δγ = div v_h` in `E` and
//! `∂γ/∂n = v_h·n` on `∂E`. The Neumann problem is solved with continuous
//! linear elements on a uniformly refined fan sub-triangulation of the cell.

use std::collections::HashMap;

use crate::element::{EdgeMomentBasis, LocalElementOps};
use crate::error::{Result, VemError};
use crate::geometry::{chebyshev_center, ElementGeometry, Point};
use crate::interp::AnalyticField;
use crate::quadrature::{segment_rule, triangle_points_for_degree, triangle_rule};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Apex,
    /// Point `t/s` of the way from the apex to vertex `l`.
    Spoke(usize, usize),
    /// Interior point `j/s` along polygon edge `l`.
    Edge(usize, usize),
    Interior(usize, usize, usize),
}

/// Sub-triangulation of one cell together with its P1 stiffness matrix.
#[derive(Debug, Clone)]
pub struct LocalNeumannSolver {
    pub apex: Point,
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// `(polygon edge, node a, node b)` in traversal order.
    boundary: Vec<(usize, usize, usize)>,
    areas: Vec<f64>,
    /// Gradients of the three barycentric coordinates of every triangle.
    bary_grads: Vec<[Point; 3]>,
    stiffness: CsrMatrix,
}

/// Result of one local solve: a piecewise constant gradient on the sub-triangles.
#[derive(Debug, Clone)]
pub struct VirtualField<'a> {
    solver: &'a LocalNeumannSolver,
    pub potential: Vec<f64>,
    pub gradients: Vec<Point>,
    pub cg_iterations: usize,
}

fn fan_apex(vertices: &[Point]) -> Result<Point> {
    let n = vertices.len();
    let area: f64 = crate::geometry::signed_area(vertices);
    let visible = |c: Point| {
        (0..n).all(|l| (vertices[l] - c).cross(vertices[(l + 1) % n] - c) > 1e-10 * area)
    };
    let c = crate::geometry::centroid(vertices);
    if visible(c) {
        return Ok(c);
    }
    let (center, r) = chebyshev_center(vertices);
    if r > 0.0 && visible(center) {
        Ok(center)
    } else {
        Err(VemError::DegeneratePolygon(
            "cell is not star-shaped with respect to an interior point".into(),
        ))
    }
}

impl LocalNeumannSolver {
    /// Fan triangles from an interior apex, each split into `4^refinement` pieces.
    pub fn new(geometry: &ElementGeometry, refinement: usize) -> Result<Self> {
        let verts = &geometry.vertices;
        let nv = verts.len();
        let apex = fan_apex(verts)?;
        let s = 1usize << refinement;
        let mut index: HashMap<NodeKey, usize> = HashMap::new();
        let mut nodes: Vec<Point> = Vec::new();
        let mut triangles = Vec::new();
        for l in 0..nv {
            let (a, b) = (verts[l], verts[(l + 1) % nv]);
            let mut node = |i: usize, j: usize| -> usize {
                let key = if i == 0 && j == 0 {
                    NodeKey::Apex
                } else if j == 0 {
                    NodeKey::Spoke(l, i)
                } else if i == 0 {
                    NodeKey::Spoke((l + 1) % nv, j)
                } else if i + j == s {
                    NodeKey::Edge(l, j)
                } else {
                    NodeKey::Interior(l, i, j)
                };
                *index.entry(key).or_insert_with(|| {
                    let (fi, fj) = (i as f64 / s as f64, j as f64 / s as f64);
                    nodes.push(apex + (a - apex) * fi + (b - apex) * fj);
                    nodes.len() - 1
                })
            };
            for i in 0..s {
                for j in 0..s - i {
                    triangles.push([node(i, j), node(i + 1, j), node(i, j + 1)]);
                    if i + j + 2 <= s {
                        triangles.push([node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
                    }
                }
            }
        }
        let mut boundary = Vec::with_capacity(nv * s);
        for l in 0..nv {
            let at = |j: usize| -> usize {
                let key = if j == 0 {
                    NodeKey::Spoke(l, s)
                } else if j == s {
                    NodeKey::Spoke((l + 1) % nv, s)
                } else {
                    NodeKey::Edge(l, j)
                };
                index[&key]
            };
            for j in 0..s {
                boundary.push((l, at(j), at(j + 1)));
            }
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut bary_grads = Vec::with_capacity(triangles.len());
        let mut triplets = Vec::with_capacity(9 * triangles.len());
        for t in &triangles {
            let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            let twice = (p[1] - p[0]).cross(p[2] - p[0]);
            // ∇λ_i is the inward normal of the opposite side over twice the area
            let g: [Point; 3] = std::array::from_fn(|i| {
                let side = p[(i + 2) % 3] - p[(i + 1) % 3];
                Point::new(-side.y, side.x) * (1.0 / twice)
            });
            let area = 0.5 * twice;
            for i in 0..3 {
                for j in 0..3 {
                    triplets.push((t[i], t[j], area * g[i].dot(g[j])));
                }
            }
            areas.push(area);
            bary_grads.push(g);
        }
        let n = nodes.len();
        Ok(LocalNeumannSolver {
            apex,
            nodes,
            triangles,
            boundary,
            areas,
            bary_grads,
            stiffness: CsrMatrix::from_triplets(n, n, &triplets),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let tri = self.triangles[t];
        let g = &self.bary_grads[t];
        std::array::from_fn(|i| {
            let far = self.nodes[tri[(i + 1) % 3]];
            g[i].dot(p - far)
        })
    }

    /// Solves for `γ_h` with the divergence and normal traces of the local
    /// function with dofs `local`.
    pub fn solve<'a>(&'a self, ops: &LocalElementOps, local: &[f64]) -> Result<VirtualField<'a>> {
        if local.len() != ops.n_dof() {
            return Err(VemError::InvalidParameter(format!(
                "{} local dofs for an element with {}",
                local.len(),
                ops.n_dof()
            )));
        }
        let k = ops.k;
        let n = self.num_nodes();
        let div = ops.divergence_coefficients(local);
        let mut load = vec![0.0; n];

        let npts = triangle_points_for_degree(k + 1);
        for (t, tri) in self.triangles.iter().enumerate() {
            let rule = triangle_rule(
                self.nodes[tri[0]],
                self.nodes[tri[1]],
                self.nodes[tri[2]],
                npts,
            );
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let f = ops.evaluate_poly(&div, *p);
                for (i, lam) in self.barycentric(t, *p).iter().enumerate() {
                    load[tri[i]] -= w * f * lam;
                }
            }
        }

        let edge_basis = EdgeMomentBasis::new(k);
        let traces: Vec<Vec<f64>> = ops
            .geometry
            .edges
            .iter()
            .enumerate()
            .map(|(l, e)| {
                edge_basis.trace_from_moments(e.length, &local[l * (k + 1)..(l + 1) * (k + 1)])
            })
            .collect();
        for &(l, a, b) in &self.boundary {
            let edge = &ops.geometry.edges[l];
            let (pa, pb) = (self.nodes[a], self.nodes[b]);
            let (rule, s) = segment_rule(pa, pb, k + 2);
            for ((p, w), si) in rule.points.iter().zip(&rule.weights).zip(&s) {
                let q = edge_basis.values_at(EdgeMomentBasis::coordinate(edge, *p));
                let g: f64 = traces[l].iter().zip(&q).map(|(c, qi)| c * qi).sum();
                let tb = 0.5 * (si + 1.0);
                load[a] += w * g * (1.0 - tb);
                load[b] += w * g * tb;
            }
        }

        // the net flux equals ∫ div v_h for consistent dofs; the rounding
        // remainder is removed so the singular system stays consistent
        let total: f64 = load.iter().sum();
        let scale: f64 = load
            .iter()
            .map(|v| v.abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        if total.abs() > 1e-10 * scale {
            return Err(VemError::Incompatible(format!(
                "Neumann data: net flux minus divergence is {total:e}"
            )));
        }
        load.iter_mut().for_each(|v| *v -= total / n as f64);

        let (mut potential, iterations) =
            conjugate_gradient(&self.stiffness, &load, 1e-13, 20 * n)?;
        let weights = self.node_weights();
        let mean = potential
            .iter()
            .zip(&weights)
            .map(|(u, w)| u * w)
            .sum::<f64>()
            / weights.iter().sum::<f64>();
        potential.iter_mut().for_each(|u| *u -= mean);

        let gradients = self
            .triangles
            .iter()
            .zip(&self.bary_grads)
            .map(|(tri, g)| (0..3).fold(Point::default(), |acc, i| acc + g[i] * potential[tri[i]]))
            .collect();
        Ok(VirtualField {
            solver: self,
            potential,
            gradients,
            cg_iterations: iterations,
        })
    }

    /// Lumped mass weights `∫ ψ_i`.
    fn node_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.num_nodes()];
        for (tri, a) in self.triangles.iter().zip(&self.areas) {
            for &i in tri {
                w[i] += a / 3.0;
            }
        }
        w
    }

    /// Sub-triangle containing `p`, if any.
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.triangles.len()).find(|&t| self.barycentric(t, p).iter().all(|&l| l >= -1e-12))
    }
}

impl VirtualField<'_> {
    pub fn gradient_at(&self, p: Point) -> Option<Point> {
        self.solver.locate(p).map(|t| self.gradients[t])
    }

    /// `∫_E ∇γ_h / |E|`.
    pub fn average(&self) -> Point {
        let area: f64 = self.solver.areas.iter().sum();
        self.gradients
            .iter()
            .zip(&self.solver.areas)
            .fold(Point::default(), |acc, (g, a)| acc + *g * *a)
            * (1.0 / area)
    }

    /// `∫_E ∇γ_h·∇γ'_h` for two fields solved on the same sub-mesh.
    pub fn inner_product(&self, other: &VirtualField<'_>) -> f64 {
        self.gradients
            .iter()
            .zip(&other.gradients)
            .zip(&self.solver.areas)
            .map(|((g, h), a)| a * g.dot(*h))
            .sum()
    }

    /// `‖v - ∇γ_h‖²_{L²(E)}`.
    pub fn l2_error_squared(&self, field: &AnalyticField) -> f64 {
        let s = self.solver;
        s.triangles
            .iter()
            .zip(&self.gradients)
            .map(|(tri, g)| {
                triangle_rule(s.nodes[tri[0]], s.nodes[tri[1]], s.nodes[tri[2]], 4).integrate(|p| {
                    let d = field.value(p) - *g;
                    d.dot(d)
                })
            })
            .sum()
    }
}

/// Evaluates the local function with dofs `local` at `points`.
pub fn virtual_evaluate(
    ops: &LocalElementOps,
    local: &[f64],
    points: &[Point],
    refinement: usize,
) -> Result<Vec<Point>> {
    let solver = LocalNeumannSolver::new(&ops.geometry, refinement)?;
    let field = solver.solve(ops, local)?;
    points
        .iter()
        .map(|p| {
            field.gradient_at(*p).ok_or_else(|| {
                VemError::InvalidParameter(format!(
                    "point ({}, {}) lies outside the cell",
                    p.x, p.y
                ))
            })
        })
        .collect()
}

fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        if rr.sqrt() <= rel_tol * b_norm {
            return Ok((x, it));
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(VemError::NoConvergence(
                "conjugate gradient lost positivity".into(),
            ));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= 1e-9 * b_norm {
        Ok((x, max_iter))
    } else {
        Err(VemError::NoConvergence(format!(
            "conjugate gradient: relative residual {:e} after {max_iter} steps",
            rr.sqrt() / b_norm
        )))
    }
}
