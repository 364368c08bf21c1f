use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finalize_pairs, EigenOptions, Method, Spectrum};
use crate::assembly::GlobalSystem;
use crate::error::{Result, VemError};
use crate::sparse::CsrMatrix;

const START_SEED: u64 = 0x5eed_1a2c;

struct ShiftInverted<'a> {
    lu: Lu<usize, f64>,
    mass: &'a CsrMatrix,
}

impl ShiftInverted<'_> {
    fn new<'a>(system: &'a GlobalSystem, shift: f64) -> Result<ShiftInverted<'a>> {
        let shifted = system.stiffness.add_scaled(-shift, &system.mass);
        let lu = shifted
            .to_faer()?
            .sp_lu()
            .map_err(|e| VemError::Factorization(format!("K - {shift} M: {e:?}")))?;
        Ok(ShiftInverted {
            lu,
            mass: &system.mass,
        })
    }

    /// `(K - σ M)⁻¹ y` for a precomputed `y = M x`.
    fn apply_to_mass_product(&self, mx: &[f64]) -> Vec<f64> {
        let n = mx.len();
        let mut rhs = Mat::from_fn(n, 1, |i, _| mx[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lowest positive eigenpairs of `K w = λ M w` by Lanczos on the operator
/// `(K - σ M)⁻¹ M`, self-adjoint in the `M` inner product, with full
/// reorthogonalisation.
///
/// Eigenvalues map to `θ = 1/(λ - σ)`: the divergence-free kernel (`λ = 0`)
/// lands on `-1/σ`, modes just above the shift become the largest `θ`, and
/// modes in `(0, σ)` fall below `-1/σ`. Both ends of the Ritz spectrum are
/// therefore inspected and the kernel is filtered out after back-transformation.
pub fn solve_shift_invert(system: &GlobalSystem, opts: &EigenOptions) -> Result<Spectrum> {
    let n = system.len();
    if system.sigma <= 0.0 {
        return Err(VemError::InvalidParameter(
            "shift-invert needs a positive definite mass matrix (σ_E > 0)".into(),
        ));
    }
    if !(opts.shift > 0.0 && opts.shift.is_finite()) {
        return Err(VemError::InvalidParameter(format!(
            "shift must be positive, got {}",
            opts.shift
        )));
    }
    if n == 0 {
        return Ok(Spectrum::empty(Method::ShiftInvert));
    }

    let mut shift = opts.shift;
    let op = match ShiftInverted::new(system, shift) {
        Ok(op) => op,
        Err(first) => {
            shift *= 1.0 + 1e-3;
            log::warn!("{first}; retrying with shift {shift}");
            ShiftInverted::new(system, shift)?
        }
    };

    // Rayleigh quotients of unit vectors bound λ_max from below; good enough
    // to scale the kernel threshold
    let lambda_scale = system
        .stiffness
        .diagonal()
        .iter()
        .zip(system.mass.diagonal())
        .map(|(k, m)| k / m)
        .fold(0.0f64, f64::max);
    let threshold = opts.zero_threshold_rel * lambda_scale;

    let mass = op.mass;
    let max_steps = opts.max_iter.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut mq = mass.mul_vec(&q);
    let nrm = dot(&q, &mq).sqrt();
    q.iter_mut().for_each(|v| *v /= nrm);
    mq.iter_mut().for_each(|v| *v /= nrm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut converged: Option<Vec<(f64, Vec<f64>)>> = None;
    let min_steps = (2 * opts.modes + 20).min(max_steps);

    for step in 0..max_steps {
        let mut w = op.apply_to_mass_product(&mq);
        let a = dot(&w, &mq);
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(q);
        mbasis.push(mq);
        alpha.push(a);
        for _ in 0..2 {
            for (v, mv) in basis.iter().zip(&mbasis) {
                let c = dot(&w, mv);
                axpy(-c, v, &mut w);
            }
        }
        let mw = mass.mul_vec(&w);
        let b = dot(&w, &mw).max(0.0).sqrt();

        let m = basis.len();
        let exhausted = b <= 1e-14 * a.abs().max(1.0);
        if exhausted || (m >= min_steps && (m % 5 == 0 || m == max_steps)) {
            if let Some(pairs) =
                wanted_ritz_pairs(&alpha, &beta, b, shift, threshold, opts, exhausted)?
            {
                let vectors = pairs
                    .into_iter()
                    .map(|(lam, y)| {
                        let mut v = vec![0.0; n];
                        for (yi, qi) in y.iter().zip(&basis) {
                            axpy(*yi, qi, &mut v);
                        }
                        (lam, v)
                    })
                    .collect();
                converged = Some(vectors);
                log::debug!("shift-invert Lanczos converged after {m} steps");
                break;
            }
        }
        if exhausted {
            break;
        }
        beta.push(b);
        q = w.iter().map(|v| v / b).collect();
        mq = mw.iter().map(|v| v / b).collect();
        if step + 1 == max_steps {
            break;
        }
    }

    let Some(pairs) = converged else {
        return Err(VemError::NoConvergence(format!(
            "shift-invert Lanczos: {} wanted modes not converged after {} steps (shift {shift})",
            opts.modes,
            basis.len()
        )));
    };
    for (lam, _) in &pairs {
        if (lam - shift).abs() <= 1e-10 * shift.abs() {
            return Err(VemError::Incompatible(format!(
                "shift {shift} coincides with eigenvalue {lam}"
            )));
        }
    }
    let mut spectrum = Spectrum::empty(Method::ShiftInvert);
    spectrum.shift = Some(shift);
    spectrum.zero_threshold = threshold;
    spectrum.iterations = basis.len();
    finalize_pairs(system, &mut spectrum, pairs)?;
    Ok(spectrum)
}

/// Ritz analysis of the current tridiagonal matrix. Returns the wanted
/// `(λ, y)` pairs once the `modes` lowest positive ones are all converged.
fn wanted_ritz_pairs(
    alpha: &[f64],
    beta: &[f64],
    next_beta: f64,
    shift: f64,
    threshold: f64,
    opts: &EigenOptions,
    exhausted: bool,
) -> Result<Option<Vec<(f64, Vec<f64>)>>> {
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| VemError::NoConvergence(format!("tridiagonal eigensolver: {e:?}")))?;
    let mut candidates: Vec<(f64, bool, Vec<f64>)> = Vec::new();
    for j in 0..m {
        let theta = evd.S()[j];
        if theta == 0.0 {
            continue;
        }
        let lam = shift + 1.0 / theta;
        if lam <= threshold {
            continue;
        }
        let y: Vec<f64> = (0..m).map(|i| evd.U()[(i, j)]).collect();
        let residual = (next_beta * y[m - 1]).abs();
        let ok = exhausted || residual <= opts.tol * theta.abs();
        candidates.push((lam, ok, y));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let wanted = opts.modes.min(candidates.len());
    if wanted < opts.modes && !exhausted {
        return Ok(None);
    }
    if candidates[..wanted].iter().all(|c| c.1) {
        Ok(Some(
            candidates
                .into_iter()
                .take(wanted)
                .map(|(lam, _, y)| (lam, y))
                .collect(),
        ))
    } else {
        Ok(None)
    }
}
