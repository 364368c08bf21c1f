use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{get_global_parallelism, Mat, Side};

use super::{finalize_pairs, EigenOptions, Method, Spectrum};
use crate::assembly::GlobalSystem;
use crate::error::{Result, VemError};

/// Full eigendecomposition of a symmetric pencil `(A, B)` with `B = L Lᵀ`
/// positive definite: returns ascending eigenvalues and `B`-orthonormal vectors.
pub fn symmetric_pencil_eigen(a: &Mat<f64>, b: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let par = get_global_parallelism();
    let llt = b
        .llt(Side::Lower)
        .map_err(|e| VemError::Factorization(format!("matrix is not positive definite: {e:?}")))?;
    let l = llt.L();
    // C = L⁻¹ A L⁻ᵀ
    let mut x = a.clone();
    solve_lower_triangular_in_place(l, x.as_mut(), par);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), par);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| VemError::NoConvergence(format!("dense eigensolver: {e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut vectors = evd.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), vectors.as_mut(), par);
    Ok((values, vectors))
}

/// Solves `K w = λ M w` by a full dense decomposition.
///
/// With `σ_E > 0` the shifted pencil `(K + M) w = (λ + 1) M w` is reduced with
/// the Cholesky factor of `M`. With `σ_E = 0`, where `M` may be singular, the
/// reciprocal pencil `M w = μ (K + M) w` is used instead and `λ = 1/μ - 1`;
/// modes with `μ ≈ 0` have no finite eigenvalue and are dropped.
pub fn solve_dense(system: &GlobalSystem, opts: &EigenOptions) -> Result<Spectrum> {
    let n = system.len();
    if n > opts.dense_cutoff {
        return Err(VemError::InvalidParameter(format!(
            "{n} dofs exceed the dense cutoff {}",
            opts.dense_cutoff
        )));
    }
    if n == 0 {
        return Ok(Spectrum::empty(Method::Dense));
    }
    let k = system.stiffness.to_dense();
    let m = system.mass.to_dense();
    let shifted = &k + &m;

    // (λ, column of `basis`, scale) per finite eigenvalue, ascending
    let (modes, basis): (Vec<(f64, usize, f64)>, Mat<f64>) = if system.sigma > 0.0 {
        let (nu, w) = symmetric_pencil_eigen(&shifted, &m).map_err(|e| match e {
            VemError::Factorization(msg) => {
                VemError::Factorization(format!("mass matrix is indefinite: {msg}"))
            }
            other => other,
        })?;
        (
            nu.iter()
                .enumerate()
                .map(|(j, v)| (v - 1.0, j, 1.0))
                .collect(),
            w,
        )
    } else {
        let (mu, y) = symmetric_pencil_eigen(&m, &shifted)?;
        // μ below this is an infinite eigenvalue of the singular-mass pencil
        let mu_floor = 1e-10;
        let mut modes: Vec<(f64, usize, f64)> = mu
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > mu_floor)
            .map(|(j, &v)| (1.0 / v - 1.0, j, 1.0 / v.sqrt()))
            .collect();
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));
        (modes, y)
    };
    let column =
        |j: usize, scale: f64| -> Vec<f64> { (0..n).map(|i| basis[(i, j)] * scale).collect() };

    let lambda_max = modes.iter().map(|m| m.0).fold(0.0f64, f64::max);
    let threshold = opts.zero_threshold_rel * lambda_max;
    let mut kernel_eigenvalues = Vec::new();
    let mut kernel_vectors = Vec::new();
    let mut positive = Vec::new();
    for &(lam, j, scale) in &modes {
        if lam.abs() <= threshold {
            kernel_eigenvalues.push(lam);
            if opts.keep_kernel_vectors {
                kernel_vectors.push(column(j, scale));
            }
        } else if lam > threshold {
            if positive.len() < opts.modes {
                positive.push((lam, column(j, scale)));
            }
        } else {
            return Err(VemError::Incompatible(format!(
                "negative eigenvalue {lam:e} below the zero threshold {threshold:e}"
            )));
        }
    }
    let mut spectrum = Spectrum::empty(Method::Dense);
    spectrum.kernel_multiplicity = Some(kernel_eigenvalues.len());
    spectrum.kernel_eigenvalues = kernel_eigenvalues;
    spectrum.kernel_vectors = kernel_vectors;
    spectrum.lambda_max = Some(lambda_max);
    spectrum.zero_threshold = threshold;
    finalize_pairs(system, &mut spectrum, positive)?;
    Ok(spectrum)
}
