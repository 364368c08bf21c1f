use crate::geometry::{EdgeGeometry, ElementGeometry, Point};
use crate::quadrature::legendre_values;

/// Scaled monomials `((x - x_E)/h_E)^a ((y - y_E)/h_E)^b` of total degree
/// `≤ max_degree`, graded lexicographically: `1, ξ, η, ξ², ξη, η², ...`.
#[derive(Debug, Clone)]
pub struct ScaledMonomialBasis {
    pub max_degree: usize,
    pub center: Point,
    pub scale: f64,
    exponents: Vec<(usize, usize)>,
}

/// Number of monomials of total degree `≤ d` in two variables.
pub fn dim_p(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

impl ScaledMonomialBasis {
    pub fn new(max_degree: usize, center: Point, scale: f64) -> Self {
        let mut exponents = Vec::with_capacity(dim_p(max_degree));
        for d in 0..=max_degree {
            for j in 0..=d {
                exponents.push((d - j, j));
            }
        }
        ScaledMonomialBasis {
            max_degree,
            center,
            scale,
            exponents,
        }
    }

    pub fn for_element(geom: &ElementGeometry, max_degree: usize) -> Self {
        Self::new(max_degree, geom.scaling_center, geom.diameter)
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }

    fn powers(&self, p: Point) -> (Vec<f64>, Vec<f64>) {
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        let mut px = vec![1.0; self.max_degree + 1];
        let mut py = vec![1.0; self.max_degree + 1];
        for i in 1..=self.max_degree {
            px[i] = px[i - 1] * xi;
            py[i] = py[i - 1] * eta;
        }
        (px, py)
    }

    pub fn values(&self, p: Point) -> Vec<f64> {
        let (px, py) = self.powers(p);
        self.exponents.iter().map(|&(a, b)| px[a] * py[b]).collect()
    }

    pub fn gradients(&self, p: Point) -> Vec<Point> {
        let (px, py) = self.powers(p);
        let s = 1.0 / self.scale;
        self.exponents
            .iter()
            .map(|&(a, b)| {
                let gx = if a > 0 {
                    a as f64 * px[a - 1] * py[b] * s
                } else {
                    0.0
                };
                let gy = if b > 0 {
                    b as f64 * px[a] * py[b - 1] * s
                } else {
                    0.0
                };
                Point::new(gx, gy)
            })
            .collect()
    }
}

/// Legendre polynomials `q_0..q_k` on an edge, pulled back from `[-1, 1]`
/// along `start → end`, so that `q_i(end) = 1` and `∫_e q_i q_j = δ_ij |e|/(2i+1)`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeMomentBasis {
    pub order: usize,
}

impl EdgeMomentBasis {
    pub fn new(order: usize) -> Self {
        EdgeMomentBasis { order }
    }

    /// Reference coordinate of `p` on the edge.
    pub fn coordinate(edge: &EdgeGeometry, p: Point) -> f64 {
        let mid = (edge.start + edge.end) * 0.5;
        let half = (edge.end - edge.start) * 0.5;
        (p - mid).dot(half) / half.dot(half)
    }

    pub fn values_at(&self, s: f64) -> Vec<f64> {
        legendre_values(self.order, s)
    }

    /// Coefficients of a trace `Σ c_i q_i` whose moments `∫_e trace·q_i` are `moments`.
    pub fn trace_from_moments(&self, length: f64, moments: &[f64]) -> Vec<f64> {
        moments
            .iter()
            .enumerate()
            .map(|(i, m)| m * (2 * i + 1) as f64 / length)
            .collect()
    }
}

/// Local numbering of the degrees of freedom of one element:
/// edge moments first (edge-major), then the internal gradient moments
/// against the non-constant monomials of degree `≤ k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub k: usize,
    pub num_edges: usize,
}

impl DofLayout {
    pub fn new(k: usize, num_edges: usize) -> Self {
        DofLayout { k, num_edges }
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.k + 1
    }

    pub fn n_edge_dofs(&self) -> usize {
        self.num_edges * (self.k + 1)
    }

    pub fn n_internal_dofs(&self) -> usize {
        dim_p(self.k) - 1
    }

    pub fn total(&self) -> usize {
        self.n_edge_dofs() + self.n_internal_dofs()
    }

    pub fn edge_dof(&self, edge: usize, moment: usize) -> usize {
        debug_assert!(edge < self.num_edges && moment <= self.k);
        edge * (self.k + 1) + moment
    }

    /// Local index of the internal dof tested against monomial `alpha ≥ 1`.
    pub fn internal_dof(&self, alpha: usize) -> usize {
        debug_assert!(alpha >= 1 && alpha < dim_p(self.k));
        self.n_edge_dofs() + alpha - 1
    }
}
