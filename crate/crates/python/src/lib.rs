//! Python bindings. Matrices are passed as lists of rows and vectors as
//! lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sparsebench::ensembles::{self, AmplitudeModel, EnsembleKind, EnsembleSpec, Signal, SparseSignalSpec};
use sparsebench::harness::{self, PhaseTable};
use sparsebench::numerics::{RealMatrix, RngStream};
use sparsebench::recovery::{self, RecoveryVerdict};
use sparsebench::{geometry, ric, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Solver(_) | Error::RankDeficient { .. } | Error::Sampling(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<RealMatrix> {
    RealMatrix::from_rows(&rows).map_err(py_err)
}

fn rows_of(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

#[pyclass(frozen, get_all, module = "sparsebench")]
struct BPResult {
    recovered: Vec<f64>,
    support: Vec<usize>,
    objective: f64,
    status: String,
    residual: f64,
    iterations: usize,
}

#[pymethods]
impl BPResult {
    fn __repr__(&self) -> String {
        format!(
            "BPResult(support={:?}, objective={}, status='{}', residual={:e})",
            self.support, self.objective, self.status, self.residual
        )
    }
}

#[pyclass(frozen, get_all, module = "sparsebench")]
struct RicReport {
    r: usize,
    lambda_min: f64,
    lambda_max: f64,
    c_opt: f64,
    delta: f64,
    mode: String,
}

#[pymethods]
impl RicReport {
    fn __repr__(&self) -> String {
        format!(
            "RicReport(r={}, mode='{}', lambda_min={}, lambda_max={}, c_opt={}, delta={})",
            self.r, self.mode, self.lambda_min, self.lambda_max, self.c_opt, self.delta
        )
    }
}

#[pyclass(frozen, get_all, module = "sparsebench")]
struct WidthEstimate {
    mean: f64,
    stderr: f64,
    samples: usize,
    bound: f64,
}

#[pyclass(frozen, get_all, module = "sparsebench")]
struct ConeKernelReport {
    intersects: bool,
    objective: Option<f64>,
    degenerate: bool,
}

/// Real constraint rows of a sampled measurement matrix (complex ensembles
/// are realified).
#[pyfunction]
#[pyo3(signature = (ensemble, n, k, seed=0))]
fn sample_measurements(ensemble: &str, n: usize, k: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let spec = EnsembleSpec::new(parse::<EnsembleKind>(ensemble)?, n, k, seed);
    let phi = spec.sample(&mut RngStream::derive(seed, 0, "python")).map_err(py_err)?;
    Ok(rows_of(&phi.real_constraints()))
}

#[pyfunction]
#[pyo3(signature = (n, r, amplitude="rademacher", seed=0))]
fn sample_sparse_signal(n: usize, r: usize, amplitude: &str, seed: u64) -> PyResult<Vec<f64>> {
    let spec = SparseSignalSpec { n, r, amplitude: parse::<AmplitudeModel>(amplitude)?, seed };
    let f = ensembles::sample_sparse_signal(&spec, &mut RngStream::derive(seed, 1, "python")).map_err(py_err)?;
    Ok(f.into_values())
}

#[pyfunction]
fn basis_pursuit(phi: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<BPResult> {
    let bp = recovery::basis_pursuit(&matrix(phi)?, &y).map_err(py_err)?;
    Ok(BPResult {
        support: bp.recovered.support().to_vec(),
        recovered: bp.recovered.into_values(),
        objective: bp.objective,
        status: format!("{:?}", bp.status).to_lowercase(),
        residual: bp.residual,
        iterations: bp.iterations,
    })
}

/// Whether basis pursuit recovers `f` from `phi @ f` to relative tolerance `tol`.
#[pyfunction]
#[pyo3(signature = (phi, f, tol=recovery::DEFAULT_RECOVERY_TOL))]
fn recovers(phi: Vec<Vec<f64>>, f: Vec<f64>, tol: f64) -> PyResult<bool> {
    let phi = matrix(phi)?;
    let f = Signal::new(f);
    let bp = recovery::basis_pursuit(&phi, &phi.matvec(f.values())).map_err(py_err)?;
    Ok(recovery::verify_recovery(&f, &bp, tol) == RecoveryVerdict::Exact)
}

/// Sparsest solution with at most `r_max` nonzeros, as `(values, support)`.
#[pyfunction]
fn l0_oracle(phi: Vec<Vec<f64>>, y: Vec<f64>, r_max: usize) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let sol = recovery::l0_oracle(&matrix(phi)?, &y, r_max).map_err(py_err)?;
    Ok((sol.signal.into_values(), sol.support))
}

#[pyfunction]
#[pyo3(signature = (phi, r, sampled=None, seed=0))]
fn restricted_isometry_constant(phi: Vec<Vec<f64>>, r: usize, sampled: Option<usize>, seed: u64) -> PyResult<RicReport> {
    let mode = match sampled {
        Some(trials) => ric::RicMode::Sampled { trials, seed },
        None => ric::RicMode::Exact,
    };
    let rep = ric::restricted_isometry_constant(&matrix(phi)?, r, mode).map_err(py_err)?;
    Ok(RicReport {
        r: rep.r,
        lambda_min: rep.lambda_min,
        lambda_max: rep.lambda_max,
        c_opt: rep.c_opt,
        delta: rep.delta,
        mode: mode.to_string(),
    })
}

/// `(verdict, delta_3r, delta_4r)` under one shared scaling.
#[pyfunction]
fn ric_condition_holds(phi: Vec<Vec<f64>>, r: usize) -> PyResult<(bool, f64, f64)> {
    let v = ric::ric_condition_holds(&matrix(phi)?, r).map_err(py_err)?;
    Ok((v.holds, v.delta_3r, v.delta_4r))
}

/// Uniform deviation over `|T| <= r` for the scaled DFT rows indexed by `omega`.
#[pyfunction]
fn operator_lln_deviation(n: usize, omega: Vec<usize>, r: usize) -> PyResult<f64> {
    ric::operator_lln_deviation(&ric::scaled_dft_vectors(n), &omega, r).map_err(py_err)
}

#[pyfunction]
fn d_norm(x: Vec<f64>, r: usize) -> PyResult<f64> {
    geometry::d_norm(&x, r).map_err(py_err)
}

#[pyfunction]
fn cone_contains(f: Vec<f64>, t: Vec<f64>) -> PyResult<bool> {
    geometry::ConeSpec::from_signal(&Signal::new(f)).contains(&t).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (f, seed=0))]
fn sample_cone_sphere(f: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
    geometry::sample_cone_sphere(&Signal::new(f), &mut RngStream::new(seed, 0)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (n, r, samples=100_000, seed=0))]
fn gaussian_width_d_mc(n: usize, r: usize, samples: usize, seed: u64) -> PyResult<WidthEstimate> {
    let est = geometry::gaussian_width_d_mc(n, r, samples, &RngStream::new(seed, 0)).map_err(py_err)?;
    Ok(WidthEstimate { mean: est.mean, stderr: est.stderr, samples: est.samples, bound: est.bound })
}

#[pyfunction]
fn gaussian_width_d_bound(n: usize, r: usize) -> PyResult<f64> {
    geometry::gaussian_width_d_bound(n, r).map_err(py_err)
}

#[pyfunction]
fn sample_complexity_gaussian(r: usize, n: usize) -> PyResult<f64> {
    geometry::sample_complexity_gaussian(r, n).map_err(py_err)
}

/// `(probability, vacuous)`.
#[pyfunction]
fn gordon_escape_probability(k: usize, w: f64) -> PyResult<(f64, bool)> {
    let p = geometry::gordon_escape_probability(k, w).map_err(py_err)?;
    Ok((p.value, p.vacuous))
}

/// `(probability, vacuous)`.
#[pyfunction]
fn recovery_probability_bound(k: usize, r: usize, n: usize) -> PyResult<(f64, bool)> {
    let p = geometry::recovery_probability_bound(k, r, n).map_err(py_err)?;
    Ok((p.value, p.vacuous))
}

#[pyfunction]
fn cone_kernel_intersect(phi: Vec<Vec<f64>>, f: Vec<f64>) -> PyResult<ConeKernelReport> {
    let rep = geometry::cone_kernel_intersect(&matrix(phi)?, &Signal::new(f)).map_err(py_err)?;
    Ok(ConeKernelReport { intersects: rep.intersects, objective: rep.objective, degenerate: rep.degenerate })
}

/// `(z, error)` with the error measured against the scaled DFT rows.
#[pyfunction]
#[pyo3(signature = (y, m, seed=0))]
fn maurey_approximate(y: Vec<f64>, m: usize, seed: u64) -> PyResult<(Vec<f64>, f64)> {
    let x = ric::scaled_dft_vectors(y.len());
    let a = geometry::maurey_approximate(&y, m, &x, &mut RngStream::new(seed, 0)).map_err(py_err)?;
    Ok((a.z, a.error))
}

/// Runs a phase-transition grid and returns its CSV table.
#[pyfunction]
#[pyo3(signature = (ensemble, n, r, k_min, k_max, k_step=1, trials=harness::DEFAULT_TRIALS, seed=0, amplitude="rademacher"))]
#[allow(clippy::too_many_arguments)]
fn run_phase_transition(
    py: Python<'_>,
    ensemble: &str,
    n: usize,
    r: usize,
    k_min: usize,
    k_max: usize,
    k_step: usize,
    trials: usize,
    seed: u64,
    amplitude: &str,
) -> PyResult<String> {
    let mut grid = harness::PhaseGrid::new(parse(ensemble)?, n, r, (k_min, k_max, k_step), trials, seed);
    grid.amplitude = parse(amplitude)?;
    let table = py.detach(|| harness::run_phase_transition(&grid)).map_err(py_err)?;
    Ok(table.to_csv())
}

/// `[(ensemble, n, r, k_star, bound, ratio)]` from a phase CSV table.
#[pyfunction]
#[pyo3(signature = (csv, threshold=harness::DEFAULT_THRESHOLD))]
#[allow(clippy::type_complexity)]
fn empirical_k_star(csv: &str, threshold: f64) -> PyResult<Vec<(String, usize, usize, Option<usize>, f64, Option<f64>)>> {
    let table = PhaseTable::from_csv(csv).map_err(py_err)?;
    let report = harness::empirical_k_star(&table, threshold).map_err(py_err)?;
    Ok(report
        .entries
        .into_iter()
        .map(|e| (e.ensemble, e.n, e.r, e.k_star, e.bound, e.ratio))
        .collect())
}

#[pymodule]
#[pyo3(name = "sparsebench")]
fn sparsebench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<BPResult>()?;
    m.add_class::<RicReport>()?;
    m.add_class::<WidthEstimate>()?;
    m.add_class::<ConeKernelReport>()?;
    m.add_function(wrap_pyfunction!(sample_measurements, m)?)?;
    m.add_function(wrap_pyfunction!(sample_sparse_signal, m)?)?;
    m.add_function(wrap_pyfunction!(basis_pursuit, m)?)?;
    m.add_function(wrap_pyfunction!(recovers, m)?)?;
    m.add_function(wrap_pyfunction!(l0_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(restricted_isometry_constant, m)?)?;
    m.add_function(wrap_pyfunction!(ric_condition_holds, m)?)?;
    m.add_function(wrap_pyfunction!(operator_lln_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(d_norm, m)?)?;
    m.add_function(wrap_pyfunction!(cone_contains, m)?)?;
    m.add_function(wrap_pyfunction!(sample_cone_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_width_d_mc, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_width_d_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sample_complexity_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(gordon_escape_probability, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_probability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(cone_kernel_intersect, m)?)?;
    m.add_function(wrap_pyfunction!(maurey_approximate, m)?)?;
    m.add_function(wrap_pyfunction!(run_phase_transition, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_k_star, m)?)?;
    Ok(())
}
