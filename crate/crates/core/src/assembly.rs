//! Global degrees of freedom and the sparse matrices of the discrete eigenproblem
//! `K w = λ M w`, with `K` the div-div form and `M` the stabilised mass form.

use faer::Mat;
use rayon::prelude::*;

use crate::element::{dim_p, LocalElementOps};
use crate::error::{Result, VemError};
use crate::mesh::PolygonalMesh;
use crate::sparse::CsrMatrix;

/// Global numbering: `k+1` consecutive moments per edge in global edge
/// order, then one block of internal moments per cell.
///
/// With `eliminate_boundary` (the discrete space with `v·n = 0` on the walls)
/// boundary edges carry no unknowns.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    pub eliminate_boundary: bool,
    edge_first: Vec<Option<usize>>,
    cell_first: Vec<usize>,
    n_internal_per_cell: usize,
    n: usize,
    local_to_global: Vec<Vec<Option<(usize, f64)>>>,
}

impl DofMap {
    fn build(mesh: &PolygonalMesh, k: usize, eliminate_boundary: bool) -> Self {
        let mut next = 0;
        let edge_first: Vec<Option<usize>> = (0..mesh.num_edges())
            .map(|e| {
                if eliminate_boundary && mesh.is_boundary_edge(e) {
                    None
                } else {
                    let first = next;
                    next += k + 1;
                    Some(first)
                }
            })
            .collect();
        let n_internal_per_cell = dim_p(k) - 1;
        let cell_first: Vec<usize> = (0..mesh.num_cells())
            .map(|_| {
                let first = next;
                next += n_internal_per_cell;
                first
            })
            .collect();
        let local_to_global = (0..mesh.num_cells())
            .map(|c| {
                let mut map = Vec::new();
                for &(e, sign) in mesh.cell_edges(c) {
                    for i in 0..=k {
                        map.push(edge_first[e].map(|f| (f + i, sign)));
                    }
                }
                for s in 0..n_internal_per_cell {
                    map.push(Some((cell_first[c] + s, 1.0)));
                }
                map
            })
            .collect();
        DofMap {
            k,
            eliminate_boundary,
            edge_first,
            cell_first,
            n_internal_per_cell,
            n: next,
            local_to_global,
        }
    }

    /// Unknowns of every edge, boundary included (used for interpolation).
    pub fn with_boundary(mesh: &PolygonalMesh, k: usize) -> Self {
        Self::build(mesh, k, false)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edge_dofs(&self, edge: usize) -> Option<std::ops::Range<usize>> {
        self.edge_first[edge].map(|f| f..f + self.k + 1)
    }

    pub fn cell_internal_dofs(&self, cell: usize) -> std::ops::Range<usize> {
        let f = self.cell_first[cell];
        f..f + self.n_internal_per_cell
    }

    /// `(global index, sign)` for every local dof of `cell`; `None` for eliminated ones.
    pub fn local_to_global(&self, cell: usize) -> &[Option<(usize, f64)>] {
        &self.local_to_global[cell]
    }

    /// Local dof vector of `cell` extracted from a global vector.
    pub fn gather(&self, cell: usize, global: &[f64]) -> Vec<f64> {
        self.local_to_global[cell]
            .iter()
            .map(|m| m.map_or(0.0, |(g, s)| s * global[g]))
            .collect()
    }
}

/// Numbering of the discrete space with `v·n = 0` on the boundary.
pub fn build_dof_map(mesh: &PolygonalMesh, k: usize) -> DofMap {
    DofMap::build(mesh, k, true)
}

#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub k: usize,
    pub sigma: f64,
    pub dofs: DofMap,
    /// div-div matrix.
    pub stiffness: CsrMatrix,
    /// Stabilised mass matrix.
    pub mass: CsrMatrix,
    pub locals: Vec<LocalElementOps>,
    pub mesh: PolygonalMesh,
}

impl GlobalSystem {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }
}

/// Local element matrices for every cell, computed in parallel.
pub fn local_operators(mesh: &PolygonalMesh, k: usize, sigma: f64) -> Result<Vec<LocalElementOps>> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            LocalElementOps::new(&mesh.element_geometry(c), k, sigma)
                .map_err(|e| e.context(format!("cell {c}")))
        })
        .collect()
}

/// Assembles `K` and `M` over free dofs for order `k` and stability constant `σ_E`.
pub fn assemble(mesh: &PolygonalMesh, k: usize, sigma: f64) -> Result<GlobalSystem> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(VemError::InvalidParameter(format!(
            "stability constant must be non-negative, got {sigma}"
        )));
    }
    assemble_with_dofs(mesh, build_dof_map(mesh, k), sigma)
}

/// Scatters the local matrices over an arbitrary numbering, e.g. one that keeps
/// the boundary unknowns.
pub fn assemble_with_dofs(mesh: &PolygonalMesh, dofs: DofMap, sigma: f64) -> Result<GlobalSystem> {
    let k = dofs.k;
    let locals = local_operators(mesh, k, sigma)?;
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for (c, ops) in locals.iter().enumerate() {
        let map = dofs.local_to_global(c);
        for (i, gi) in map.iter().enumerate() {
            let Some((gi, si)) = *gi else { continue };
            for (j, gj) in map.iter().enumerate() {
                let Some((gj, sj)) = *gj else { continue };
                kt.push((gi, gj, si * sj * ops.stiffness[(i, j)]));
                mt.push((gi, gj, si * sj * ops.mass[(i, j)]));
            }
        }
    }
    let n = dofs.len();
    Ok(GlobalSystem {
        k,
        sigma,
        stiffness: CsrMatrix::from_triplets(n, n, &kt),
        mass: CsrMatrix::from_triplets(n, n, &mt),
        dofs,
        locals,
        mesh: mesh.clone(),
    })
}

/// Numerical rank of a symmetric positive semi-definite matrix by
/// diagonally pivoted Cholesky; pivots below `rel_tol · max diag` stop the sweep.
pub fn psd_rank(a: &Mat<f64>, rel_tol: f64) -> usize {
    let n = a.nrows();
    let mut w = a.clone();
    let max_diag = (0..n).map(|i| w[(i, i)]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return 0;
    }
    let tol = rel_tol * max_diag;
    let mut perm: Vec<usize> = (0..n).collect();
    for r in 0..n {
        let (p, piv) =
            (r..n)
                .map(|i| (i, w[(perm[i], perm[i])]))
                .fold((r, f64::NEG_INFINITY), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
        if piv <= tol {
            return r;
        }
        perm.swap(r, p);
        let pr = perm[r];
        let d = piv.sqrt();
        // column of L below the pivot
        let col: Vec<f64> = (r + 1..n).map(|i| w[(perm[i], pr)] / d).collect();
        for (ii, i) in (r + 1..n).enumerate() {
            let pi = perm[i];
            for (jj, j) in (r + 1..=i).enumerate() {
                let pj = perm[j];
                let v = w[(pi, pj)] - col[ii] * col[jj];
                w[(pi, pj)] = v;
                w[(pj, pi)] = v;
            }
        }
    }
    n
}

/// `n - rank(K)`: dimension of the discretely divergence-free subspace.
pub fn kernel_dimension_oracle(system: &GlobalSystem) -> usize {
    let n = system.len();
    if n == 0 {
        return 0;
    }
    n - psd_rank(&system.stiffness.to_dense(), 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::mesh::generate_rectangular;

    pub(crate) fn two_unit_squares() -> PolygonalMesh {
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

    #[test]
    fn dof_counts() {
        assert_eq!(
            build_dof_map(&generate_rectangular(1.0, 1.1, 1).unwrap(), 0).len(),
            0
        );
        assert_eq!(build_dof_map(&two_unit_squares(), 0).len(), 1);
        assert_eq!(
            build_dof_map(&generate_rectangular(1.0, 1.1, 2).unwrap(), 0).len(),
            4
        );
        let m = generate_rectangular(1.0, 1.1, 3).unwrap();
        // k = 1: two moments per internal edge plus two internal dofs per cell
        assert_eq!(build_dof_map(&m, 1).len(), 2 * 12 + 2 * 9);
        assert_eq!(DofMap::with_boundary(&m, 0).len(), 24);
    }

    #[test]
    fn two_unit_squares_closed_form() {
        for sigma in [0.0, 1.0 / 16.0, 1.0] {
            let s = assemble(&two_unit_squares(), 0, sigma).unwrap();
            assert!((s.stiffness.get(0, 0) - 2.0).abs() < 1e-12);
            assert!((s.mass.get(0, 0) - (0.5 + sigma)).abs() < 1e-12);
            assert_eq!(kernel_dimension_oracle(&s), 0);
        }
    }

    #[test]
    fn kernel_dimension_equals_internal_vertices_on_grids() {
        for n in [2, 4] {
            let m = generate_rectangular(1.0, 1.1, n).unwrap();
            let s = assemble(&m, 0, 1.0).unwrap();
            let kd = kernel_dimension_oracle(&s);
            assert_eq!(kd, s.len() - (m.num_cells() - 1));
            assert_eq!(kd, m.num_internal_vertices());
        }
    }

    #[test]
    fn negative_sigma_is_rejected() {
        assert!(assemble(&two_unit_squares(), 0, -0.5).is_err());
    }

    #[test]
    fn psd_rank_of_low_rank_product() {
        let b = Mat::<f64>::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let a = &b * b.transpose();
        assert_eq!(psd_rank(&a, 1e-12), 3);
    }
}
