//! Generalized symmetric eigensolvers for `K w = λ M w`.
//!
//! The discrete kernel (discretely divergence-free fields, `λ = 0`) has a
//! large multiplicity. It is separated by a relative threshold rather than
//! approximated; the rank of `K` gives an independent count of it.

mod dense;
mod lanczos;

use serde::{Deserialize, Serialize};

pub use dense::{solve_dense, symmetric_pencil_eigen};
pub use lanczos::solve_shift_invert;

use crate::assembly::{kernel_dimension_oracle, GlobalSystem};
use crate::error::{Result, VemError};
use crate::geometry::Point;

/// Systems up to this size use the dense solver when the method is `Auto`.
pub const AUTO_DENSE_LIMIT: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Dense,
    #[serde(alias = "si")]
    ShiftInvert,
}

impl std::str::FromStr for Method {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "dense" => Ok(Method::Dense),
            "si" | "shift-invert" => Ok(Method::ShiftInvert),
            other => Err(VemError::InvalidParameter(format!(
                "unknown eigensolver '{other}' (expected auto, dense or si)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    pub method: Method,
    /// Number of positive modes wanted.
    pub modes: usize,
    /// Shift of the shift-invert transform, in the units of `λ`.
    pub shift: f64,
    /// Eigenvalues with `|λ| ≤ zero_threshold_rel · λ_max` belong to the kernel.
    pub zero_threshold_rel: f64,
    pub dense_cutoff: usize,
    pub max_iter: usize,
    /// Relative Ritz residual for Lanczos convergence.
    pub tol: f64,
    /// Keep the kernel eigenvectors (dense solver only).
    pub keep_kernel_vectors: bool,
    /// Count the kernel with the rank oracle when the solver does not see it.
    pub kernel_oracle: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            method: Method::Auto,
            modes: 5,
            shift: 4.0,
            zero_threshold_rel: 1e-8,
            dense_cutoff: 6000,
            max_iter: 600,
            tol: 1e-11,
            keep_kernel_vectors: false,
            kernel_oracle: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Lowest positive eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal eigenvectors; the largest-magnitude entry is positive.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// Size of the zero cluster; `None` when the solver does not see it.
    pub kernel_multiplicity: Option<usize>,
    pub kernel_eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub kernel_vectors: Vec<Vec<f64>>,
    pub lambda_max: Option<f64>,
    pub zero_threshold: f64,
    pub method: Method,
    pub shift: Option<f64>,
    /// `‖K w - λ M w‖ / ((‖K‖ + |λ| ‖M‖) ‖w‖)` per returned pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl Spectrum {
    pub fn empty(method: Method) -> Self {
        Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
            kernel_multiplicity: None,
            kernel_eigenvalues: Vec::new(),
            kernel_vectors: Vec::new(),
            lambda_max: None,
            zero_threshold: 0.0,
            method,
            shift: None,
            residuals: Vec::new(),
            iterations: 0,
        }
    }

    /// `λ / π²`.
    pub fn scaled(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|l| l / std::f64::consts::PI.powi(2))
            .collect()
    }
}

/// Normalises, fixes signs, computes residuals and stores the pairs.
pub(crate) fn finalize_pairs(
    system: &GlobalSystem,
    spectrum: &mut Spectrum,
    mut pairs: Vec<(f64, Vec<f64>)>,
) -> Result<()> {
    let k_norm = system.stiffness.norm_one();
    let m_norm = system.mass.norm_one();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (lam, mut v) in pairs {
        let mv = system.mass.mul_vec(&v);
        let scale = v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().sqrt();
        let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |acc, (i, x)| {
            if x.abs() > acc.1 {
                (i, x.abs())
            } else {
                acc
            }
        });
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / scale);
        let kv = system.stiffness.mul_vec(&v);
        let mv = system.mass.mul_vec(&v);
        let r = kv
            .iter()
            .zip(&mv)
            .map(|(a, b)| (a - lam * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        spectrum
            .residuals
            .push(r / ((k_norm + lam.abs() * m_norm) * vn));
        spectrum.eigenvalues.push(lam);
        spectrum.eigenvectors.push(v);
    }
    Ok(())
}

/// Dense or shift-invert according to `opts.method`; `Auto` picks dense for
/// small systems and whenever `σ_E = 0`.
pub fn solve(system: &GlobalSystem, opts: &EigenOptions) -> Result<Spectrum> {
    let mut spectrum = match opts.method {
        Method::Dense => solve_dense(system, opts),
        Method::ShiftInvert => solve_shift_invert(system, opts),
        Method::Auto => {
            if system.len() <= AUTO_DENSE_LIMIT || system.sigma == 0.0 {
                solve_dense(system, opts)
            } else {
                solve_shift_invert(system, opts)
            }
        }
    }?;
    if opts.kernel_oracle && spectrum.kernel_multiplicity.is_none() {
        spectrum.kernel_multiplicity = Some(kernel_dimension_oracle(system));
    }
    Ok(spectrum)
}

/// Per-cell monomial coefficients of the pressure `p_h = -div w_h`
/// (one constant per cell for `k = 0`).
pub fn pressure_field(system: &GlobalSystem, eigenvector: &[f64]) -> Result<Vec<Vec<f64>>> {
    if eigenvector.len() != system.len() {
        return Err(VemError::InvalidParameter(format!(
            "vector of length {} for a system with {} dofs",
            eigenvector.len(),
            system.len()
        )));
    }
    Ok(system
        .locals
        .iter()
        .enumerate()
        .map(|(c, ops)| {
            let local = system.dofs.gather(c, eigenvector);
            ops.divergence_coefficients(&local)
                .into_iter()
                .map(|v| -v)
                .collect()
        })
        .collect())
}

/// `Π_h w_h` evaluated at every cell centroid.
pub fn projected_field_at_centroids(system: &GlobalSystem, vector: &[f64]) -> Vec<Point> {
    system
        .locals
        .iter()
        .enumerate()
        .map(|(c, ops)| {
            let local = system.dofs.gather(c, vector);
            let coeffs = ops.projection_coefficients(&local);
            ops.evaluate_gradient_poly(&coeffs, ops.geometry.centroid)
        })
        .collect()
}
