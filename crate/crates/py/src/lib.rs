//! Python bindings: the main types (grid, kernel operator, trajectory) and
//! operations (perturbation generators, norms, energies, solvers, exponent
//! tables) exposed as a small extension module.

use std::sync::Arc;

use numpy::ndarray::Array2;
use numpy::{Complex64, IntoPyArray, PyArray1, PyArray2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fermibox::dynamics::{self, OrbitalSet, PicardMetric, Rk4Options, Trajectory};
use fermibox::energy as fb_energy;
use fermibox::grid::{self, GridSpec};
use fermibox::kernel::{self, KernelOperator, PerturbationKind};
use fermibox::strichartz;

fn err<T>(r: fermibox::Result<T>) -> PyResult<T> {
    r.map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Discrete periodic box and Fermi-surface data.
#[pyclass(name = "Grid")]
#[derive(Clone)]
struct PyGrid {
    inner: Arc<GridSpec>,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (dimension, modes_per_dim, box_length, mu, fermi_floor=0.0))]
    fn new(
        dimension: usize,
        modes_per_dim: usize,
        box_length: f64,
        mu: f64,
        fermi_floor: f64,
    ) -> PyResult<Self> {
        Ok(PyGrid {
            inner: err(grid::build_grid(dimension, modes_per_dim, box_length, mu, fermi_floor))?,
        })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.d()
    }
    #[getter]
    fn modes_per_dim(&self) -> usize {
        self.inner.modes_per_dim()
    }
    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }
    #[getter]
    fn box_length(&self) -> f64 {
        self.inner.box_length()
    }

    /// Number of modes inside the Fermi sea.
    fn fermi_mode_count(&self) -> usize {
        grid::fermi_projector(&self.inner).selected_count()
    }

    /// Integer mode lattice, one row per mode (canonical order).
    fn modes<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<i64>> {
        let n = self.inner.n_modes();
        let d = self.inner.d();
        let mut arr = Array2::<i64>::zeros((n, d));
        for i in 0..n {
            let k = self.inner.mode_k(i);
            for a in 0..d {
                arr[(i, a)] = k[a];
            }
        }
        arr.into_pyarray(py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(d={}, M={}, L={:.6}, mu={})",
            self.inner.d(),
            self.inner.modes_per_dim(),
            self.inner.box_length(),
            self.inner.mu()
        )
    }
}

/// Dense frequency-space operator kernel.
#[pyclass(name = "Operator")]
#[derive(Clone)]
struct PyOperator {
    inner: KernelOperator,
}

#[pymethods]
impl PyOperator {
    #[getter]
    fn hermitian(&self) -> bool {
        self.inner.hermitian()
    }

    fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    fn op_norm(&self) -> f64 {
        self.inner.op_norm()
    }

    fn schatten_norm(&self, p: f64) -> PyResult<f64> {
        err(kernel::schatten_norm(&self.inner, p))
    }

    fn hs_sobolev_norm(&self, alpha: f64) -> f64 {
        kernel::hs_sobolev_norm(&self.inner, alpha)
    }

    fn trace_h2_norm(&self) -> f64 {
        kernel::trace_h2_norm(&self.inner)
    }

    fn relative_kinetic_energy(&self) -> f64 {
        kernel::relative_kinetic_energy(&self.inner)
    }

    /// (kinetic, potential, total) of the relative energy (d = 2, 3).
    fn relative_energy(&self) -> PyResult<(f64, f64, f64)> {
        let e = err(fb_energy::relative_energy(&self.inner))?;
        Ok((e.kinetic, e.potential, e.total))
    }

    /// Eigenvalues of γ = Π_μ^- + Q, ascending.
    fn gamma_eigenvalues<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        kernel::gamma_eigenvalues(&self.inner).into_pyarray(py)
    }

    fn eigenvalues<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.inner.eigenvalues().into_pyarray(py)
    }

    /// Density ρ_Q sampled on the M^d spatial grid (lexicographic points).
    fn density_values<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        kernel::density(&self.inner).values().to_vec().into_pyarray(py)
    }

    fn density_l2(&self) -> f64 {
        kernel::density(&self.inner).l2_norm()
    }

    /// The dense matrix Q̂(ξ,ξ′) in canonical mode order.
    fn matrix<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        let n = self.inner.n();
        let mut arr = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                arr[(i, j)] = self.inner.data()[(i, j)];
            }
        }
        arr.into_pyarray(py)
    }

    fn sub(&self, other: &PyOperator) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: err(self.inner.sub(&other.inner))? })
    }

    fn add(&self, other: &PyOperator) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: err(self.inner.add(&other.inner))? })
    }

    fn scaled(&self, c: f64) -> PyOperator {
        PyOperator { inner: self.inner.scaled(c) }
    }

    fn __repr__(&self) -> String {
        format!(
            "Operator(n={}, hermitian={}, trace={:.6})",
            self.inner.n(),
            self.inner.hermitian(),
            self.inner.trace().re
        )
    }
}

/// Time-sampled solution with cached diagnostics.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    fn times<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.inner.times().to_vec().into_pyarray(py)
    }

    fn energies<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        let e: Vec<f64> = self.inner.step_diagnostics().iter().map(|d| d.energy).collect();
        e.into_pyarray(py)
    }

    fn energy_drift(&self) -> f64 {
        fb_energy::conservation_report(&self.inner).max_relative_energy_drift
    }

    fn trace_drift(&self) -> f64 {
        fb_energy::conservation_report(&self.inner).max_trace_drift
    }

    fn spectrum_drift(&self) -> f64 {
        fb_energy::conservation_report(&self.inner).spectrum_drift
    }

    fn terminal(&self) -> PyOperator {
        PyOperator { inner: self.inner.terminal().clone() }
    }

    fn initial(&self) -> PyOperator {
        PyOperator { inner: self.inner.initial().clone() }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn fermi_projector(grid: &PyGrid) -> PyOperator {
    PyOperator {
        inner: KernelOperator::from_mask(grid.inner.clone(), &grid::fermi_projector(&grid.inner)),
    }
}

#[pyfunction]
fn zeros(grid: &PyGrid) -> PyOperator {
    PyOperator { inner: KernelOperator::zeros(grid.inner.clone()) }
}

/// Seeded perturbation Q ∈ 𝒦; kind is one of "unitary_conjugation",
/// "particle_hole", "smooth_random".
#[pyfunction]
fn make_perturbation(grid: &PyGrid, kind: &str, seed: u64, size: f64) -> PyResult<PyOperator> {
    let kind = err(PerturbationKind::parse(kind))?;
    Ok(PyOperator { inner: err(kernel::make_perturbation(&grid.inner, kind, seed, size))? })
}

/// RK4 integration of i∂_t Q = [−Δ+ρ_Q, Π+Q].
#[pyfunction]
#[pyo3(signature = (q0, t_final, dt, record_every=10))]
fn evolve_rk4(q0: &PyOperator, t_final: f64, dt: f64, record_every: usize) -> PyResult<PyTrajectory> {
    let opts = Rk4Options { record_every, ..Default::default() };
    Ok(PyTrajectory { inner: err(dynamics::evolve_rk4(&q0.inner, t_final, dt, opts))? })
}

/// Duhamel fixed-point solve; returns (trajectory, iterations, distances).
#[pyfunction]
#[pyo3(signature = (q0, t_final, time_samples=65, max_iters=25, tol=1e-9))]
fn picard_solve(
    q0: &PyOperator,
    t_final: f64,
    time_samples: usize,
    max_iters: usize,
    tol: f64,
) -> PyResult<(PyTrajectory, usize, Vec<f64>)> {
    let out = err(dynamics::picard_solve(
        &q0.inner,
        t_final,
        time_samples,
        max_iters,
        tol,
        &PicardMetric::TraceH2,
    ))?;
    Ok((PyTrajectory { inner: out.trajectory }, out.iterations, out.distances))
}

/// Split-step evolution of the Fermi sea plus `extra` particle states;
/// returns (gamma_terminal, max_gram_drift).
#[pyfunction]
#[pyo3(signature = (grid, extra, seed, t_final, dt))]
fn evolve_fermi_sea_orbitals(
    grid: &PyGrid,
    extra: usize,
    seed: u64,
    t_final: f64,
    dt: f64,
) -> PyResult<(PyOperator, f64)> {
    let set = err(OrbitalSet::fermi_sea_with_particles(grid.inner.clone(), extra, seed))?;
    let traj = err(dynamics::evolve_orbitals(&set, t_final, dt, 1_000_000, 1e-6))?;
    let gamma = dynamics::orbitals_to_kernel(traj.terminal());
    Ok((PyOperator { inner: gamma }, traj.max_gram_drift()))
}

/// Derivative-gain exponent (α₁, regime tag).
#[pyfunction]
fn alpha1_of(d: usize, alpha: f64) -> PyResult<(f64, String)> {
    let (a1, reg) = err(strichartz::alpha1_of(d, alpha))?;
    Ok((a1, reg.tag().to_string()))
}

#[pyfunction]
fn eta_of(d: usize, alpha: f64) -> PyResult<f64> {
    err(strichartz::eta_of(d, alpha))
}

/// Admissible Strichartz pairs on the scaling line, as (q, r) tuples.
#[pyfunction]
fn admissible_pairs(d: usize, count: usize) -> PyResult<Vec<(f64, f64)>> {
    Ok(err(strichartz::admissible_pairs(d, count))?
        .into_iter()
        .map(|p| (p.q, p.r))
        .collect())
}

/// Homogeneous density estimate scan; returns (lhs, rhs, ratio).
#[pyfunction]
#[pyo3(signature = (gamma0, alpha, window, samples=33))]
fn homogeneous_density_estimate(
    gamma0: &PyOperator,
    alpha: f64,
    window: f64,
    samples: usize,
) -> PyResult<(f64, f64, f64)> {
    let out = err(strichartz::homogeneous_density_estimate(&gamma0.inner, alpha, window, samples))?;
    Ok((out.lhs, out.rhs, out.ratio))
}

/// Lieb–Thirring check; returns (lhs, rhs, ratio, clipped_points).
#[pyfunction]
fn lieb_thirring_check(q: &PyOperator) -> PyResult<(f64, f64, f64, usize)> {
    let out = err(fb_energy::lieb_thirring_check(&q.inner))?;
    Ok((out.lhs, out.rhs, out.ratio, out.clipped_points))
}

/// Frequency cutoff Q^{(n)} = PₙQPₙ.
#[pyfunction]
fn pn_truncate(q: &PyOperator, n: f64) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: err(fermibox::approx::pn_truncate(&q.inner, n))? })
}

#[pyfunction]
fn free_conjugate(q: &PyOperator, t: f64) -> PyOperator {
    PyOperator { inner: dynamics::free_conjugate(&q.inner, t) }
}

/// Version string of the underlying crate.
#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[pymodule]
fn fermibox_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(fermi_projector, m)?)?;
    m.add_function(wrap_pyfunction!(zeros, m)?)?;
    m.add_function(wrap_pyfunction!(make_perturbation, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_rk4, m)?)?;
    m.add_function(wrap_pyfunction!(picard_solve, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_fermi_sea_orbitals, m)?)?;
    m.add_function(wrap_pyfunction!(alpha1_of, m)?)?;
    m.add_function(wrap_pyfunction!(eta_of, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_density_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(lieb_thirring_check, m)?)?;
    m.add_function(wrap_pyfunction!(pn_truncate, m)?)?;
    m.add_function(wrap_pyfunction!(free_conjugate, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    Ok(())
}
