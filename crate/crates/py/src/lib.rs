use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vem_core::assembly::{assemble, kernel_dimension_oracle, GlobalSystem};
use vem_core::eigensolve::{self, EigenOptions};
use vem_core::interp::{self, AnalyticField};
use vem_core::io::{mesh_from_json, mesh_to_json};
use vem_core::mesh::{generate, MeshFamily, PolygonalMesh};
use vem_core::study::{self, StudyConfig};
use vem_core::VemError;

fn to_py(e: VemError) -> PyErr {
    match e {
        VemError::InvalidParameter(_)
        | VemError::InvalidMesh(_)
        | VemError::Parse(_)
        | VemError::Json(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Polygonal mesh of a rectangle.
#[pyclass(name = "Mesh", module = "vem", frozen)]
struct PyMesh {
    inner: PolygonalMesh,
}

#[pymethods]
impl PyMesh {
    /// Structured mesh of `(0,a) x (0,b)`; `family` is "tri", "rect" or "hex".
    #[staticmethod]
    #[pyo3(signature = (family, n, a = 1.0, b = 1.1))]
    fn generate(family: &str, n: usize, a: f64, b: f64) -> PyResult<Self> {
        let family: MeshFamily = family.parse().map_err(to_py)?;
        Ok(PyMesh {
            inner: generate(family, a, b, n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyMesh {
            inner: mesh_from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        mesh_to_json(&self.inner).map_err(to_py)
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.inner.num_cells()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_internal_vertices(&self) -> usize {
        self.inner.num_internal_vertices()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.mesh_size()
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn cells(&self) -> Vec<Vec<usize>> {
        self.inner.cells().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, cells={}, edges={})",
            self.inner.num_vertices(),
            self.inner.num_cells(),
            self.inner.num_edges()
        )
    }
}

/// Assembled stiffness and mass matrices with wall dofs eliminated.
#[pyclass(name = "System", module = "vem", frozen)]
struct PySystem {
    inner: GlobalSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (mesh, k = 0, sigma = 1.0))]
    fn new(mesh: &PyMesh, k: usize, sigma: f64) -> PyResult<Self> {
        Ok(PySystem {
            inner: assemble(&mesh.inner, k, sigma).map_err(to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    /// `(row, col, value)` entries of `K`.
    fn stiffness(&self) -> Vec<(usize, usize, f64)> {
        self.inner.stiffness.triplets().collect()
    }

    /// `(row, col, value)` entries of `M`.
    fn mass(&self) -> Vec<(usize, usize, f64)> {
        self.inner.mass.triplets().collect()
    }

    /// Dimension of the kernel of `K` from a rank-revealing factorization.
    fn kernel_dimension(&self) -> usize {
        kernel_dimension_oracle(&self.inner)
    }

    /// Local matrices of one cell as a JSON string.
    fn element_json(&self, cell: usize) -> PyResult<String> {
        let ops = self
            .inner
            .locals
            .get(cell)
            .ok_or_else(|| PyValueError::new_err(format!("no cell {cell}")))?;
        serde_json::to_string(&ops.to_dump()).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Lowest positive eigenpairs of `K w = λ M w`.
    #[pyo3(signature = (modes = 5, method = "auto", shift = 4.0))]
    fn solve(
        &self,
        py: Python<'_>,
        modes: usize,
        method: &str,
        shift: f64,
    ) -> PyResult<PySpectrum> {
        let opts = EigenOptions {
            method: method.parse().map_err(to_py)?,
            modes,
            shift,
            ..Default::default()
        };
        let system = &self.inner;
        let spectrum = py
            .detach(|| eigensolve::solve(system, &opts))
            .map_err(to_py)?;
        let pressures = spectrum
            .eigenvectors
            .iter()
            .map(|v| {
                eigensolve::pressure_field(system, v).map(|p| p.into_iter().map(|c| c[0]).collect())
            })
            .collect::<Result<Vec<Vec<f64>>, _>>()
            .map_err(to_py)?;
        Ok(PySpectrum {
            eigenvalues: spectrum.eigenvalues.clone(),
            scaled: spectrum.scaled(),
            kernel_multiplicity: spectrum.kernel_multiplicity,
            residuals: spectrum.residuals,
            eigenvectors: spectrum.eigenvectors,
            pressures,
        })
    }
}

/// Result of an eigenvalue solve.
#[pyclass(name = "Spectrum", module = "vem", frozen, get_all)]
struct PySpectrum {
    eigenvalues: Vec<f64>,
    /// `λ / π²`.
    scaled: Vec<f64>,
    kernel_multiplicity: Option<usize>,
    residuals: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    /// Lowest coefficient of the pressure `-div w_h` per cell and mode.
    pressures: Vec<Vec<f64>>,
}

#[pymethods]
impl PySpectrum {
    fn __repr__(&self) -> String {
        format!("Spectrum(scaled={:?})", self.scaled)
    }
}

/// The `count` smallest `λ / π²` of the cavity `(0,a) x (0,b)`.
#[pyfunction]
#[pyo3(signature = (a, b, count))]
fn exact_eigenvalues(a: f64, b: f64, count: usize) -> Vec<f64> {
    study::exact_eigenvalues(a, b, count)
        .iter()
        .map(|e| e.scaled)
        .collect()
}

/// Largest commuting-diagram residual of the interpolant of a named field.
#[pyfunction]
#[pyo3(signature = (mesh, field, k = 0, a = 1.0, b = 1.1))]
fn commuting_residual(mesh: &PyMesh, field: &str, k: usize, a: f64, b: f64) -> PyResult<f64> {
    let f = AnalyticField::from_name(field, a, b).map_err(to_py)?;
    Ok(interp::commuting_residual(&mesh.inner, k, &f)
        .map_err(to_py)?
        .max_residual)
}

/// Runs a convergence study from a JSON config and returns the report as JSON.
#[pyfunction]
fn run_study(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg: StudyConfig =
        serde_json::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = py.detach(|| study::run_study(&cfg)).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn vem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(exact_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(commuting_residual, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
