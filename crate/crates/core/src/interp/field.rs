use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, VemError};
use crate::geometry::Point;

/// Rigid-cavity mode `(n, m)` of the rectangle `(0,a) × (0,b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    pub n: u32,
    pub m: u32,
    pub a: f64,
    pub b: f64,
}

impl CavityMode {
    /// `π² ((n/a)² + (m/b)²)`.
    pub fn eigenvalue(&self) -> f64 {
        PI * PI * self.scaled_eigenvalue()
    }

    pub fn scaled_eigenvalue(&self) -> f64 {
        (self.n as f64 / self.a).powi(2) + (self.m as f64 / self.b).powi(2)
    }
}

/// Smoothness class of a field, `v ∈ H^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularity {
    Analytic,
    Sobolev(f64),
}

type VectorFn = dyn Fn(Point) -> Point + Send + Sync;
type ScalarFn = dyn Fn(Point) -> f64 + Send + Sync;

/// A smooth vector field together with its divergence.
#[derive(Clone)]
pub struct AnalyticField {
    pub name: String,
    pub mode: Option<CavityMode>,
    pub regularity: Regularity,
    value: Arc<VectorFn>,
    divergence: Arc<ScalarFn>,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .finish()
    }
}

impl AnalyticField {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(Point) -> Point + Send + Sync + 'static,
        divergence: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AnalyticField {
            name: name.into(),
            mode: None,
            regularity: Regularity::Analytic,
            value: Arc::new(value),
            divergence: Arc::new(divergence),
        }
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn constant(c: Point) -> Self {
        Self::new(format!("constant ({}, {})", c.x, c.y), move |_| c, |_| 0.0)
    }

    /// Displacement of cavity mode `(n, m)`:
    /// `w = ((n/a) sin(nπx/a) cos(mπy/b), (m/b) cos(nπx/a) sin(mπy/b))`,
    /// with `div w = π((n/a)² + (m/b)²) cos(nπx/a) cos(mπy/b)` and `w·n = 0` on the walls.
    pub fn cavity_mode(n: u32, m: u32, a: f64, b: f64) -> Self {
        let mode = CavityMode { n, m, a, b };
        let (kx, ky) = (n as f64 / a, m as f64 / b);
        let mut f = Self::new(
            format!("w{n}{m}"),
            move |p| {
                let (sx, cx) = (PI * kx * p.x).sin_cos();
                let (sy, cy) = (PI * ky * p.y).sin_cos();
                Point::new(kx * sx * cy, ky * cx * sy)
            },
            move |p| PI * (kx * kx + ky * ky) * (PI * kx * p.x).cos() * (PI * ky * p.y).cos(),
        );
        f.mode = Some(mode);
        f
    }

    /// Parses `wNM` (cavity mode), `const` (the field `(1, 0)`) or `linear`
    /// (the gradient `(x, -y)`).
    pub fn from_name(name: &str, a: f64, b: f64) -> Result<Self> {
        match name {
            "const" | "constant" => Ok(Self::constant(Point::new(1.0, 0.0))),
            "linear" => Ok(Self::new("linear", |p| Point::new(p.x, -p.y), |_| 0.0)),
            s if s.starts_with('w') && s.len() == 3 => {
                let digits: Vec<u32> = s[1..].chars().filter_map(|c| c.to_digit(10)).collect();
                match digits.as_slice() {
                    [n, m] if n + m > 0 => Ok(Self::cavity_mode(*n, *m, a, b)),
                    _ => Err(VemError::InvalidParameter(format!(
                        "bad mode field '{name}'"
                    ))),
                }
            }
            _ => Err(VemError::InvalidParameter(format!(
                "unknown field '{name}' (expected wNM, const or linear)"
            ))),
        }
    }

    pub fn value(&self, p: Point) -> Point {
        (self.value)(p)
    }

    pub fn divergence(&self, p: Point) -> f64 {
        (self.divergence)(p)
    }
}
