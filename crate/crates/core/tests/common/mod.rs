//! Oracles shared by the integration tests and the acceptance suite.
//! Each one is computed from geometry and quadrature alone, without the
//! element matrices it is compared against.

#![allow(dead_code)]

use std::f64::consts::PI;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vem_core::assembly::{assemble, GlobalSystem};
use vem_core::eigensolve::symmetric_pencil_eigen;
use vem_core::element::{EdgeMomentBasis, LocalElementOps};
use vem_core::geometry::{ElementGeometry, Point};
use vem_core::interp::LocalNeumannSolver;
use vem_core::mesh::PolygonalMesh;
use vem_core::quadrature::{polygon_rule, segment_rule, triangle_rule};
use vem_core::sparse::CsrMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Polygon with `n` vertices at sorted random angles and radii in `[0.45, 1]`
/// around a random centre, scaled by `scale`. It is star-shaped with respect
/// to a disc around the centre.
pub fn random_star_polygon(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<Point> {
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let gaps_ok = (0..n).all(|i| {
            let next = if i + 1 < n {
                angles[i + 1]
            } else {
                angles[0] + 2.0 * PI
            };
            let gap = next - angles[i];
            gap > 0.15 && gap < 0.9 * PI
        });
        if !gaps_ok {
            continue;
        }
        let c = Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        return angles
            .iter()
            .map(|&t| {
                let r = scale * rng.random_range(0.45..1.0);
                c + Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
    }
}

pub fn max_abs(m: &Mat<f64>) -> f64 {
    let mut v: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].abs());
        }
    }
    v
}

/// Dofs of the field `v` computed directly from their definition.
pub fn dofs_of(ops: &LocalElementOps, v: &dyn Fn(Point) -> Point) -> Vec<f64> {
    let k = ops.k;
    let g = &ops.geometry;
    let eb = EdgeMomentBasis::new(k);
    let mut out = Vec::with_capacity(ops.n_dof());
    for edge in &g.edges {
        let (rule, s) = segment_rule(edge.start, edge.end, k + 6);
        for i in 0..=k {
            out.push(
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .zip(&s)
                    .map(|((p, w), si)| w * v(*p).dot(edge.normal) * eb.values_at(*si)[i])
                    .sum(),
            );
        }
    }
    let rule = polygon_rule(&g.vertices, g.centroid, 2 * k + 8);
    for alpha in 1..ops.layout.n_internal_dofs() + 1 {
        out.push(rule.integrate(|p| v(p).dot(ops.basis.gradients(p)[alpha])));
    }
    out
}

/// `max_{m, j} |(B_E dof(∇m))_j − (−∫ div φ_j m + ∮ (φ_j·n) m)|` over the scaled
/// monomials of degree `≤ k+1`, relative to `max |B_E|`.
pub fn consistency_residual(ops: &LocalElementOps) -> f64 {
    let k = ops.k;
    let g = &ops.geometry;
    let eb = EdgeMomentBasis::new(k);
    let area_rule = polygon_rule(&g.vertices, g.centroid, 2 * k + 4);
    let n_dof = ops.n_dof();
    let n_mono = ops.basis.len();
    let mut worst: f64 = 0.0;
    for a in 0..n_mono {
        let grad = |p: Point| ops.basis.gradients(p)[a];
        let d = dofs_of(ops, &grad);
        for j in 0..n_dof {
            let lhs: f64 = (0..n_dof).map(|i| ops.mass[(j, i)] * d[i]).sum();
            let div_j: Vec<f64> = (0..ops.div.nrows()).map(|b| ops.div[(b, j)]).collect();
            let vol =
                area_rule.integrate(|p| ops.evaluate_poly(&div_j, p) * ops.basis.values(p)[a]);
            let mut bnd = 0.0;
            if j < ops.layout.n_edge_dofs() {
                let (l, r) = (j / (k + 1), j % (k + 1));
                let edge = &g.edges[l];
                let (rule, s) = segment_rule(edge.start, edge.end, k + 4);
                for ((p, w), si) in rule.points.iter().zip(&rule.weights).zip(&s) {
                    let trace = (2 * r + 1) as f64 / edge.length * eb.values_at(*si)[r];
                    bnd += w * trace * ops.basis.values(*p)[a];
                }
            }
            worst = worst.max((lhs - (bnd - vol)).abs());
        }
    }
    worst / max_abs(&ops.mass)
}

/// `‖Π² − Π‖_max` in dof space.
pub fn idempotence_defect(ops: &LocalElementOps) -> f64 {
    let p = &ops.pi_dof;
    max_abs(&(p * p - p))
}

/// Largest defect of the patch test for the two unit constant fields:
/// `Π` reproduces them, `K_E` and the stabilisation term annihilate them.
pub fn patch_defect(ops: &LocalElementOps) -> f64 {
    let n = ops.n_dof();
    let mut worst: f64 = 0.0;
    for c in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)] {
        let d = dofs_of(ops, &|_| c);
        let pd: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| ops.pi_dof[(i, j)] * d[j]).sum())
            .collect();
        for i in 0..n {
            worst = worst.max((pd[i] - d[i]).abs());
            let kd: f64 = (0..n).map(|j| ops.stiffness[(i, j)] * d[j]).sum();
            worst = worst.max(kd.abs());
        }
        // (I − Π)ᵀ S (I − Π) d
        let res: Vec<f64> = (0..n).map(|i| d[i] - pd[i]).collect();
        for i in 0..n {
            let s: f64 = (0..n).map(|j| ops.stab[(i, j)] * res[j]).sum();
            worst = worst.max(s.abs());
        }
        // Π d reproduces c pointwise
        let coeffs = ops.projection_coefficients(&d);
        for v in &ops.geometry.vertices {
            worst = worst.max((ops.evaluate_gradient_poly(&coeffs, *v) - c).norm());
        }
    }
    worst
}

/// Lowest-order Raviart–Thomas basis on a CCW triangle: the field attached to
/// local edge `l` (from vertex `l` to `l+1`) is `(x − P)/(2|T|)` with `P` the
/// opposite vertex, carrying unit outward flux through that edge.
pub struct Rt0Triangle {
    pub vertices: [Point; 3],
    pub area: f64,
}

impl Rt0Triangle {
    pub fn new(v: [Point; 3]) -> Self {
        let area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]);
        Rt0Triangle { vertices: v, area }
    }

    fn opposite(&self, l: usize) -> Point {
        self.vertices[(l + 2) % 3]
    }

    pub fn value(&self, l: usize, x: Point) -> Point {
        (x - self.opposite(l)) * (1.0 / (2.0 * self.area))
    }

    /// `div φ_l`: the field is `I/(2|T|)` applied to `x − P`, whose trace is `1/|T|`.
    pub fn divergence(&self, _l: usize, _x: Point) -> f64 {
        1.0 / self.area
    }

    /// `∫_{e_m} φ_l·n` by quadrature; the identity for RT0 is `δ_lm`.
    pub fn flux(&self, l: usize, m: usize) -> f64 {
        let (a, b) = (self.vertices[m], self.vertices[(m + 1) % 3]);
        let t = b - a;
        let n = Point::new(t.y, -t.x) * (1.0 / t.norm());
        let (rule, _) = segment_rule(a, b, 2);
        rule.integrate(|p| self.value(l, p).dot(n))
    }

    /// `∫_T div φ_i div φ_j` by quadrature.
    pub fn stiffness(&self) -> [[f64; 3]; 3] {
        let [a, b, c] = self.vertices;
        let rule = triangle_rule(a, b, c, 3);
        let mut k = [[0.0; 3]; 3];
        for (i, row) in k.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rule.integrate(|p| self.divergence(i, p) * self.divergence(j, p));
            }
        }
        k
    }

    /// `∫_T φ_i·φ_j` by quadrature.
    pub fn mass(&self) -> [[f64; 3]; 3] {
        let [a, b, c] = self.vertices;
        let rule = triangle_rule(a, b, c, 3);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rule.integrate(|p| self.value(i, p).dot(self.value(j, p)));
            }
        }
        m
    }
}

/// RT0 div-div and mass matrices of a triangular mesh over the unknowns of
/// `system`. Orientation signs come from the geometric normals, not the mesh tables.
pub fn rt0_global(mesh: &PolygonalMesh, system: &GlobalSystem) -> (CsrMatrix, CsrMatrix) {
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for c in 0..mesh.num_cells() {
        let cell = &mesh.cells()[c];
        assert_eq!(cell.len(), 3, "RT0 oracle needs triangles");
        let v = mesh.cell_polygon(c);
        let t = Rt0Triangle::new([v[0], v[1], v[2]]);
        let (k, m) = (t.stiffness(), t.mass());
        let global: Vec<Option<(usize, f64)>> = (0..3)
            .map(|l| {
                let (a, b) = (cell[l], cell[(l + 1) % 3]);
                let e = mesh
                    .edges()
                    .iter()
                    .position(|&[p, q]| (p, q) == (a.min(b), a.max(b)))
                    .expect("edge of cell");
                let tangent = v[(l + 1) % 3] - v[l];
                let outward = Point::new(tangent.y, -tangent.x);
                let sign = outward.dot(mesh.edge_normal(e)).signum();
                system.dofs.edge_dofs(e).map(|r| (r.start, sign))
            })
            .collect();
        for i in 0..3 {
            let Some((gi, si)) = global[i] else { continue };
            for j in 0..3 {
                let Some((gj, sj)) = global[j] else { continue };
                kt.push((gi, gj, si * sj * k[i][j]));
                mt.push((gi, gj, si * sj * m[i][j]));
            }
        }
    }
    let n = system.len();
    (
        CsrMatrix::from_triplets(n, n, &kt),
        CsrMatrix::from_triplets(n, n, &mt),
    )
}

pub fn max_entry_difference(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let d = a.add_scaled(-1.0, b);
    d.max_abs()
}

/// Mass matrix `∫_E φ_i·φ_j` of the virtual basis, with every basis function
/// resolved by a sub-triangulated Neumann solve.
pub fn exact_local_mass(ops: &LocalElementOps, refinement: usize) -> Mat<f64> {
    let solver = LocalNeumannSolver::new(&ops.geometry, refinement).expect("sub-mesh");
    let n = ops.n_dof();
    let fields: Vec<_> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            solver.solve(ops, &e).expect("Neumann solve")
        })
        .collect();
    Mat::from_fn(n, n, |i, j| fields[i].inner_product(&fields[j]))
}

/// Extreme generalized eigenvalues of `(B_E, exact mass)`.
pub fn stability_bounds(ops: &LocalElementOps, refinement: usize) -> (f64, f64) {
    let exact = exact_local_mass(ops, refinement);
    let (vals, _) = symmetric_pencil_eigen(&ops.mass, &exact).expect("pencil");
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Two unit squares sharing one edge; the only unknown is the flux through it.
pub fn two_unit_squares() -> PolygonalMesh {
    let v = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(2.0, 0.0),
        Point::new(0.0, 1.0),
        Point::new(1.0, 1.0),
        Point::new(2.0, 1.0),
    ];
    PolygonalMesh::from_cells(v, vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]]).unwrap()
}

pub fn element(vertices: Vec<Point>, k: usize, sigma: f64) -> LocalElementOps {
    LocalElementOps::new(&ElementGeometry::new(vertices).unwrap(), k, sigma).unwrap()
}

pub fn two_squares_system(sigma: f64) -> GlobalSystem {
    assemble(&two_unit_squares(), 0, sigma).unwrap()
}
