//! Convergence studies against the exact cavity spectrum.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::assemble;
use crate::eigensolve::{solve, EigenOptions, Method};
use crate::error::{Result, VemError};
use crate::mesh::{generate, MeshFamily};

/// Exact eigenvalue `λ_nm = π²((n/a)² + (m/b)²)` with its labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactEigenvalue {
    pub n: u32,
    pub m: u32,
    pub value: f64,
    /// `λ / π²`.
    pub scaled: f64,
}

/// The `count` smallest positive cavity eigenvalues, ascending; ties are
/// ordered by `(n, m)`.
pub fn exact_eigenvalues(a: f64, b: f64, count: usize) -> Vec<ExactEigenvalue> {
    if count == 0 {
        return Vec::new();
    }
    // every (n, m) with n ≤ count and m ≤ count covers the first `count` values
    let lim = count as u32;
    let mut all: Vec<ExactEigenvalue> = (0..=lim)
        .flat_map(|n| (0..=lim).map(move |m| (n, m)))
        .filter(|&(n, m)| n + m > 0)
        .map(|(n, m)| {
            let scaled = (n as f64 / a).powi(2) + (m as f64 / b).powi(2);
            ExactEigenvalue {
                n,
                m,
                value: PI * PI * scaled,
                scaled,
            }
        })
        .collect();
    all.sort_by(|x, y| {
        x.scaled
            .total_cmp(&y.scaled)
            .then((x.n, x.m).cmp(&(y.n, y.m)))
    });
    all.truncate(count);
    all
}

/// Least-squares slope of `log e` against `log h`. Levels with a zero error
/// are skipped with a warning.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() {
        return Err(VemError::InvalidParameter(format!(
            "{} mesh sizes for {} errors",
            h.len(),
            e.len()
        )));
    }
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter_map(|(&hi, &ei)| {
            if ei > 0.0 && hi > 0.0 {
                Some((hi.ln(), ei.ln()))
            } else {
                log::warn!("level with h = {hi} and error {ei} left out of the order fit");
                None
            }
        })
        .collect();
    if pts.len() < 2 {
        return Err(VemError::InvalidParameter(
            "an order fit needs two levels with positive error".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(VemError::InvalidParameter(
            "order fit needs distinct mesh sizes".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Observed order for meshes with `N` subdivisions per side (`h ∝ 1/N`),
/// fitted over at least three levels.
pub fn observed_order(ns: &[usize], errors: &[f64]) -> Result<f64> {
    if ns.len() < 3 {
        return Err(VemError::InvalidParameter(format!(
            "an observed order needs three mesh levels, got {}",
            ns.len()
        )));
    }
    let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    least_squares_slope(&h, errors)
}

/// Parameters of a convergence study, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub families: Vec<MeshFamily>,
    pub ns: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub modes: usize,
    pub method: Method,
    pub shift: f64,
    /// Report `λ` instead of `λ / π²` in the table.
    pub raw: bool,
    pub csv: Option<String>,
    pub table: Option<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            a: 1.0,
            b: 1.1,
            k: 0,
            families: vec![MeshFamily::Rect],
            ns: vec![8, 16, 32, 64],
            sigmas: vec![1.0],
            modes: 5,
            method: Method::Auto,
            shift: 4.0,
            raw: false,
            csv: None,
            table: None,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(VemError::InvalidParameter(
                "side lengths must be positive".into(),
            ));
        }
        if self.families.is_empty() || self.ns.is_empty() || self.sigmas.is_empty() {
            return Err(VemError::InvalidParameter(
                "families, ns and sigmas must be non-empty".into(),
            ));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) || self.ns[0] == 0 {
            return Err(VemError::InvalidParameter(
                "ns must be positive and strictly increasing".into(),
            ));
        }
        if self.modes == 0 {
            return Err(VemError::InvalidParameter(
                "modes must be at least 1".into(),
            ));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(VemError::InvalidParameter(format!(
                "invalid stability constant {s}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRun {
    pub family: MeshFamily,
    pub sigma: f64,
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    /// Computed `λ_h / π²`, ascending.
    pub scaled: Vec<f64>,
    pub errors: Vec<f64>,
    pub kernel_multiplicity: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeOrder {
    pub family: MeshFamily,
    pub sigma: f64,
    pub mode: usize,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub exact: Vec<ExactEigenvalue>,
    pub runs: Vec<StudyRun>,
    pub orders: Vec<ModeOrder>,
}

/// Solves every `(family, σ, N)` combination of `config` and fits orders per mode.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let exact = exact_eigenvalues(config.a, config.b, config.modes);
    let opts = EigenOptions {
        method: config.method,
        modes: config.modes,
        shift: config.shift,
        ..Default::default()
    };
    let mut runs = Vec::new();
    let mut orders = Vec::new();
    for &family in &config.families {
        for &sigma in &config.sigmas {
            let first = runs.len();
            for &n in &config.ns {
                let start = Instant::now();
                let mesh = generate(family, config.a, config.b, n)?;
                let system = assemble(&mesh, config.k, sigma)?;
                let spectrum = solve(&system, &opts)
                    .map_err(|e| e.context(format!("{family} mesh, N = {n}, sigma = {sigma}")))?;
                let scaled = spectrum.scaled();
                let errors = scaled
                    .iter()
                    .zip(&exact)
                    .map(|(h, e)| (h - e.scaled).abs())
                    .collect();
                log::info!("{family} N={n} sigma={sigma}: {} dofs", system.len());
                runs.push(StudyRun {
                    family,
                    sigma,
                    n,
                    h: mesh.mesh_size(),
                    dofs: system.len(),
                    scaled,
                    errors,
                    kernel_multiplicity: spectrum.kernel_multiplicity,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
            let block = &runs[first..];
            for mode in 0..config.modes {
                let errs: Option<Vec<f64>> =
                    block.iter().map(|r| r.errors.get(mode).copied()).collect();
                let order = errs.and_then(|e| observed_order(&config.ns, &e).ok());
                orders.push(ModeOrder {
                    family,
                    sigma,
                    mode: mode + 1,
                    order,
                });
            }
        }
    }
    Ok(ConvergenceReport {
        config: config.clone(),
        exact,
        runs,
        orders,
    })
}

impl ConvergenceReport {
    /// One row per `(family, σ, N, mode)`; timings are left out so the output
    /// is reproducible.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("family,sigma,n,h,dofs,mode,lambda,lambda_hat,exact_hat,error\n");
        for r in &self.runs {
            for (i, (v, e)) in r.scaled.iter().zip(&r.errors).enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.6e}",
                    r.family,
                    r.sigma,
                    r.n,
                    r.h,
                    r.dofs,
                    i + 1,
                    v * PI * PI,
                    v,
                    self.exact[i].scaled,
                    e
                );
            }
        }
        out
    }

    /// Aligned text table: one block per family and `σ`, modes as rows,
    /// mesh levels as columns and the fitted order last.
    pub fn to_table(&self) -> String {
        let unit = if self.config.raw { PI * PI } else { 1.0 };
        let mut out = String::new();
        let ns = &self.config.ns;
        for &family in &self.config.families {
            for &sigma in &self.config.sigmas {
                let quantity = if self.config.raw {
                    "lambda"
                } else {
                    "lambda/pi^2"
                };
                let _ = writeln!(out, "{family} mesh, sigma = {sigma}, {quantity}");
                let mut header = format!("{:<6}", "mode");
                for n in ns {
                    let _ = write!(header, "{:>12}", format!("N={n}"));
                }
                let _ = write!(header, "{:>8}{:>12}", "order", "exact");
                let _ = writeln!(out, "{header}");
                for mode in 0..self.config.modes {
                    let mut line = format!("{:<6}", mode + 1);
                    for n in ns {
                        let v = self
                            .runs
                            .iter()
                            .find(|r| r.family == family && r.sigma == sigma && r.n == *n)
                            .and_then(|r| r.scaled.get(mode));
                        match v {
                            Some(v) => {
                                let _ = write!(line, "{:>12.6}", v * unit);
                            }
                            None => {
                                let _ = write!(line, "{:>12}", "-");
                            }
                        }
                    }
                    let order = self
                        .orders
                        .iter()
                        .find(|o| o.family == family && o.sigma == sigma && o.mode == mode + 1)
                        .and_then(|o| o.order);
                    match order {
                        Some(o) => {
                            let _ = write!(line, "{o:>8.2}");
                        }
                        None => {
                            let _ = write!(line, "{:>8}", "n/a");
                        }
                    }
                    if let Some(e) = self.exact.get(mode) {
                        let _ = write!(line, "{:>12.6}", e.scaled * unit);
                    }
                    let _ = writeln!(out, "{line}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Sizes the global thread pool from `VEM_THREADS` when it holds a positive
/// integer. Returns the thread count in effect.
pub fn configure_threads_from_env() -> usize {
    if let Some(n) = std::env::var("VEM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            log::debug!("thread pool already initialised");
        }
        faer::set_global_parallelism(faer::Par::rayon(rayon::current_num_threads()));
    }
    rayon::current_num_threads()
}
