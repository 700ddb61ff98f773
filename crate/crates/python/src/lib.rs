//! Python bindings: ensemble specs, kernels, the sampler, linear statistics
//! and cumulant estimates.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use polygin::kernels::{self as k, Convention, KernelPath};
use polygin::polyalg::Exact;
use polygin::sampler::{self as s, replicate_seeds};
use polygin::statistics::{self as st, QuadratureGrid};
use polygin::theory::{self as th};

fn err(e: polygin::Error) -> PyErr {
    use polygin::Error as E;
    match e {
        E::Capacity(_)
        | E::InvalidSpec(_)
        | E::InvalidArgument(_)
        | E::Syntax { .. }
        | E::UnknownIdentifier { .. }
        | E::NonReal(_)
        | E::DegreeBudget { .. }
        | E::GridMismatch(_)
        | E::TooFewReplicates { .. }
        | E::OrderOutOfRange(_)
        | E::Empty(_)
        | E::MixedSpecs => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// `KernelSpec(n, q, variant="full")`.
#[pyclass(frozen, eq, hash, skip_from_py_object, name = "KernelSpec", module = "polygin")]
#[derive(Clone, PartialEq, Eq, Hash)]
struct KernelSpec(k::KernelSpec);

#[pymethods]
impl KernelSpec {
    #[new]
    #[pyo3(signature = (n, q, variant = "full"))]
    fn new(n: u32, q: u32, variant: &str) -> PyResult<Self> {
        let v = variant.parse().map_err(err)?;
        Ok(Self(k::KernelSpec::new(n, q, v).map_err(err)?))
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.n
    }

    #[getter]
    fn q(&self) -> u32 {
        self.0.q
    }

    #[getter]
    fn variant(&self) -> String {
        self.0.variant.to_string()
    }

    /// Number of points in a configuration.
    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.0.r_max()
    }

    fn __repr__(&self) -> String {
        format!("KernelSpec(n={}, q={}, variant='{}')", self.0.n, self.0.q, self.0.variant)
    }
}

/// Parsed test function, e.g. `TestFunction("bump(0.5,0.2)*harm(1)")`.
#[pyclass(frozen, name = "TestFunction", module = "polygin")]
struct TestFunction(th::TestFunction);

#[pymethods]
impl TestFunction {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        Ok(Self(th::TestFunction::parse(src).map_err(err)?))
    }

    fn __call__(&self, z: Complex64) -> f64 {
        self.0.eval(z)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("TestFunction('{}')", self.0)
    }
}

/// Prepared kernel of one spec; `raising=True` also builds the polynomial path.
#[pyclass(frozen, name = "Kernel", module = "polygin")]
struct Kernel(k::PreparedKernel);

#[pymethods]
impl Kernel {
    #[new]
    #[pyo3(signature = (spec, raising = false))]
    fn new(spec: &KernelSpec, raising: bool) -> PyResult<Self> {
        Ok(Self(k::PreparedKernel::new(spec.0, raising).map_err(err)?))
    }

    /// `K(z, w)`; weighted by `e^{-n(|z|^2+|w|^2)/2}` unless `weighted=False`.
    #[pyo3(signature = (z, w, path = "basis", weighted = true))]
    fn __call__(&self, z: Complex64, w: Complex64, path: &str, weighted: bool) -> PyResult<Complex64> {
        let path: KernelPath = path.parse().map_err(err)?;
        let conv = if weighted { Convention::Weighted } else { Convention::Raw };
        self.0.eval(z, w, path, conv).map_err(err)
    }

    /// One-point intensity `K(z,z) e^{-n|z|^2}` at `|z| = radius`.
    fn intensity(&self, radius: f64) -> f64 {
        self.0.intensity(radius)
    }
}

/// Exact sampler; replicates are independent given their seeds.
#[pyclass(frozen, name = "Sampler", module = "polygin")]
struct Sampler(s::Sampler);

#[pymethods]
impl Sampler {
    #[new]
    fn new(spec: &KernelSpec) -> PyResult<Self> {
        Ok(Self(s::Sampler::new(spec.0).map_err(err)?))
    }

    fn sample(&self, py: Python<'_>, seed: u64) -> PyResult<Vec<Complex64>> {
        let sample = py.detach(|| self.0.sample(seed)).map_err(err)?;
        Ok(sample.points)
    }

    /// Configurations for seeds `seed, seed + 1, ..., seed + count - 1`.
    fn sample_many(&self, py: Python<'_>, seed: u64, count: usize) -> PyResult<Vec<Vec<Complex64>>> {
        let samples = py.detach(|| self.0.sample_many(&replicate_seeds(seed, count))).map_err(err)?;
        Ok(samples.into_iter().map(|s| s.points).collect())
    }
}

#[pyclass(frozen, get_all, name = "CumulantReport", module = "polygin")]
struct CumulantReport {
    k: usize,
    value: f64,
    method: String,
    std_error: f64,
    g: String,
    richardson_gap: Option<f64>,
    converged: bool,
    replicates: Option<usize>,
}

#[pymethods]
impl CumulantReport {
    fn __repr__(&self) -> String {
        format!("CumulantReport(k={}, value={}, std_error={}, method='{}')", self.k, self.value, self.std_error, self.method)
    }
}

impl From<st::CumulantReport> for CumulantReport {
    fn from(c: st::CumulantReport) -> Self {
        Self {
            k: c.k,
            value: c.value,
            method: c.method.to_string(),
            std_error: c.std_error,
            g: c.g,
            richardson_gap: c.richardson_gap,
            converged: c.converged,
            replicates: c.replicates,
        }
    }
}

/// Limiting variance `bulk + boundary` of a linear statistic.
#[pyclass(frozen, get_all, name = "VariancePrediction", module = "polygin")]
struct VariancePrediction {
    bulk: f64,
    boundary: f64,
    total: f64,
    h1: f64,
    h_half: f64,
    warning: Option<String>,
}

#[pymethods]
impl VariancePrediction {
    fn __repr__(&self) -> String {
        format!("VariancePrediction(bulk={}, boundary={}, total={})", self.bulk, self.boundary, self.total)
    }
}

/// Weighted kernel value for a spec built on the fly.
#[pyfunction]
#[pyo3(signature = (n, q, z, w, variant = "full", path = "basis", weighted = true))]
fn kernel(n: u32, q: u32, z: Complex64, w: Complex64, variant: &str, path: &str, weighted: bool) -> PyResult<Complex64> {
    let spec = k::KernelSpec::new(n, q, variant.parse().map_err(err)?).map_err(err)?;
    let path: KernelPath = path.parse().map_err(err)?;
    let conv = if weighted { Convention::Weighted } else { Convention::Raw };
    k::eval_kernel(&spec, z, w, path, conv).map_err(err)
}

/// `Σ g(λ_j)` over one configuration.
#[pyfunction]
fn linear_statistic(points: Vec<Complex64>, g: &TestFunction) -> f64 {
    points.iter().map(|&z| g.0.eval(z)).sum()
}

#[pyfunction]
fn predicted_variance(spec: &KernelSpec, g: &TestFunction) -> PyResult<VariancePrediction> {
    let p = th::predicted_variance(&spec.0, &g.0).map_err(err)?;
    Ok(VariancePrediction {
        bulk: p.bulk,
        boundary: p.boundary,
        total: p.total,
        h1: p.h1,
        h_half: p.h_half,
        warning: p.warning,
    })
}

/// Second cumulant by quadrature, reported on the refined grid.
#[pyfunction]
#[pyo3(signature = (spec, g, nr = st::DEFAULT_RADIAL_NODES, ntheta = st::DEFAULT_ANGLES, tolerance = st::DEFAULT_TOLERANCE))]
fn variance_quadrature(
    py: Python<'_>,
    spec: &KernelSpec,
    g: &TestFunction,
    nr: usize,
    ntheta: usize,
    tolerance: f64,
) -> PyResult<CumulantReport> {
    let grid = QuadratureGrid::for_spec(&spec.0, &g.0, nr, ntheta).map_err(err)?;
    let r = py.detach(|| st::variance_quadrature(&spec.0, &g.0, &grid, tolerance)).map_err(err)?;
    Ok(r.into())
}

/// Monte Carlo k-statistics `k_1..k_max` over `count` replicates.
#[pyfunction]
#[pyo3(signature = (spec, g, seed, count, k_max = 4))]
fn mc_cumulants(
    py: Python<'_>,
    spec: &KernelSpec,
    g: &TestFunction,
    seed: u64,
    count: usize,
    k_max: usize,
) -> PyResult<Vec<CumulantReport>> {
    let (reports, _) = py
        .detach(|| st::mc_cumulant_report(&spec.0, &g.0, &replicate_seeds(seed, count), k_max))
        .map_err(err)?;
    Ok(reports.into_iter().map(Into::into).collect())
}

/// Exact cumulant (k <= 3, n <= 8) of a polynomial test function.
#[pyfunction]
fn exact_cumulant(k: usize, spec: &KernelSpec, g: &TestFunction) -> PyResult<f64> {
    let poly = g.0.to_poly::<Exact>().map_err(err)?;
    Ok(st::cumulant_exact_smalln(k, &spec.0, &poly).map_err(err)?.value)
}

/// Runs an exact identity suite; returns `(passed, checks, max_error)`.
#[pyfunction]
#[pyo3(signature = (suite = "identities"))]
fn verify(py: Python<'_>, suite: &str) -> PyResult<(bool, usize, f64)> {
    let r = py.detach(|| polygin::verify::run_suite(suite)).map_err(err)?;
    Ok((r.passed, r.checks.len(), r.max_error()))
}

#[pymodule]
#[pyo3(name = "polygin")]
fn polygin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KernelSpec>()?;
    m.add_class::<TestFunction>()?;
    m.add_class::<Kernel>()?;
    m.add_class::<Sampler>()?;
    m.add_class::<CumulantReport>()?;
    m.add_class::<VariancePrediction>()?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(linear_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_variance, m)?)?;
    m.add_function(wrap_pyfunction!(variance_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(mc_cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(exact_cumulant, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
