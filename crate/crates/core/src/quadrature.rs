//! Gauss rules on intervals, triangles and polygons.
//!
//! Polygon rules fan the polygon into triangles around an apex point and
//! weight each triangle by its *signed* area, so the rule integrates
//! polynomials exactly for any apex, even one outside a non-convex cell.

use crate::geometry::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(±1) = (±1)^{n-1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Legendre polynomial values `P_0(s), ..., P_k(s)`.
pub fn legendre_values(k: usize, s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0);
    if k >= 1 {
        out.push(s);
    }
    for j in 2..=k {
        let jf = j as f64;
        let v = ((2.0 * jf - 1.0) * s * out[j - 1] - (jf - 1.0) * out[j - 2]) / jf;
        out.push(v);
    }
    out
}

/// Quadrature points with weights already scaled by the measure of the domain.
#[derive(Debug, Clone, Default)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }

    fn extend(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Number of Gauss points per direction making the collapsed triangle rule
/// exact for polynomials of total degree `degree`.
pub fn triangle_points_for_degree(degree: usize) -> usize {
    degree / 2 + 2
}

/// Collapsed (Duffy) tensor Gauss rule on a triangle with `n × n` points.
/// Weights carry the signed area, so a clockwise triangle contributes negatively.
pub fn triangle_rule(p0: Point, p1: Point, p2: Point, n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let jac = e1.cross(e2);
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(n * n),
        weights: Vec::with_capacity(n * n),
    };
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        let wu = 0.5 * w[i];
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            let wv = 0.5 * w[j];
            let xi = u;
            let eta = v * (1.0 - u);
            rule.points.push(p0 + e1 * xi + e2 * eta);
            rule.weights.push(wu * wv * (1.0 - u) * jac);
        }
    }
    rule
}

/// Signed fan rule on a closed polygon, exact for polynomials of total degree `degree`.
pub fn polygon_rule(vertices: &[Point], apex: Point, degree: usize) -> QuadratureRule {
    let n = triangle_points_for_degree(degree);
    let mut rule = QuadratureRule::default();
    let nv = vertices.len();
    for i in 0..nv {
        let a = vertices[i];
        let b = vertices[(i + 1) % nv];
        rule.extend(triangle_rule(apex, a, b, n));
    }
    rule
}

/// Gauss rule on the segment `start → end` with weights scaled by its length.
/// Also returns the reference coordinate `s ∈ [-1, 1]` of each node.
pub fn segment_rule(start: Point, end: Point, n: usize) -> (QuadratureRule, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (end - start).norm();
    let mid = (start + end) * 0.5;
    let dir = (end - start) * 0.5;
    let rule = QuadratureRule {
        points: x.iter().map(|&s| mid + dir * s).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
    };
    (rule, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let got: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * xi.powi(p as i32))
                    .sum();
                let exact = if p % 2 == 1 {
                    0.0
                } else {
                    2.0 / (p as f64 + 1.0)
                };
                assert!((got - exact).abs() < 1e-14, "n={n} p={p} got={got}");
            }
        }
    }

    #[test]
    fn triangle_rule_matches_closed_form_monomials() {
        // ∫_T x^p y^q over the unit right triangle = p! q! / (p+q+2)!
        let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
        let tri = triangle_rule(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            triangle_points_for_degree(8),
        );
        for p in 0..=4 {
            for q in 0..=(8 - p).min(4) {
                let got = tri.integrate(|pt| pt.x.powi(p as i32) * pt.y.powi(q as i32));
                let exact = fact(p) * fact(q) / fact(p + q + 2);
                assert!((got - exact).abs() < 1e-15, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn fan_rule_is_exact_with_apex_outside_polygon() {
        let square = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let rule = polygon_rule(&square, Point::new(3.0, -2.0), 4);
        let got = rule.integrate(|p| p.x * p.x * p.y * p.y);
        assert!((got - 1.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_endpoint_normalisation() {
        for k in 0..6 {
            let v = legendre_values(k, 1.0);
            assert!(v.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        }
    }
}
