//! Python bindings: exposes the rise functions, partial resets,
//! coupling matrices, the event-driven simulator and the analysis
//! routines as an in-process extension module.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pulsereset::analysis;
use pulsereset::classify::classify as classify_rise;
use pulsereset::coupling::CouplingMatrix;
use pulsereset::engine::{self, NetworkState, SimulateOptions};
use pulsereset::experiment;
use pulsereset::maps;
use pulsereset::reset::PartialReset;
use pulsereset::rise::RiseFunction;
use pulsereset::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::CouplingUnsafe { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A rise function `U`: strictly increasing, `U(0) = 0`, `U(1) = 1`.
#[pyclass(name = "Rise", from_py_object)]
#[derive(Clone)]
struct PyRise {
    inner: RiseFunction,
}

#[pymethods]
impl PyRise {
    #[staticmethod]
    fn identity() -> Self {
        PyRise {
            inner: RiseFunction::identity(),
        }
    }

    #[staticmethod]
    fn ub(b: f64) -> PyResult<Self> {
        Ok(PyRise {
            inner: RiseFunction::ub(b).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (e_eq, g_l=1.0))]
    fn lif(e_eq: f64, g_l: f64) -> PyResult<Self> {
        Ok(PyRise {
            inner: RiseFunction::lif(e_eq, g_l).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (e_eq, e_syn, g_l=1.0))]
    fn lif_cb(e_eq: f64, e_syn: f64, g_l: f64) -> PyResult<Self> {
        Ok(PyRise {
            inner: RiseFunction::lif(e_eq, g_l)
                .and_then(|u| u.conductance_based(e_syn))
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn qif(alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(PyRise {
            inner: RiseFunction::qif(alpha, beta).map_err(err)?,
        })
    }

    #[staticmethod]
    fn qif_cb(alpha: f64, beta: f64, e_syn: f64) -> PyResult<Self> {
        Ok(PyRise {
            inner: RiseFunction::qif(alpha, beta)
                .and_then(|u| u.conductance_based(e_syn))
                .map_err(err)?,
        })
    }

    fn eval(&self, phi: f64) -> f64 {
        self.inner.eval(phi)
    }

    fn inv(&self, u: f64) -> f64 {
        self.inner.inv(u)
    }

    fn d1(&self, phi: f64) -> f64 {
        self.inner.d1(phi)
    }

    fn d2(&self, phi: f64) -> f64 {
        self.inner.d2(phi)
    }

    fn d3(&self, phi: f64) -> f64 {
        self.inner.d3(phi)
    }

    fn family(&self) -> String {
        format!("{:?}", self.inner.family())
    }

    /// Shape report: convexity, icpd/dcpd flags and the method used.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = classify_rise(&self.inner).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("convex", rep.convex)?;
        d.set_item("concave", rep.concave)?;
        d.set_item("sigmoidal", rep.sigmoidal)?;
        d.set_item("icpd", rep.icpd)?;
        d.set_item("dcpd", rep.dcpd)?;
        d.set_item("method", format!("{:?}", rep.method))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Rise({:?})", self.inner.family())
    }
}

/// A partial reset function `R` with `R(0) = 0`, monotone increasing.
#[pyclass(name = "Reset", from_py_object)]
#[derive(Clone)]
struct PyReset {
    inner: PartialReset,
}

#[pymethods]
impl PyReset {
    #[staticmethod]
    fn linear(c: f64) -> PyResult<Self> {
        Ok(PyReset {
            inner: PartialReset::linear(c).map_err(err)?,
        })
    }

    #[staticmethod]
    fn absorption() -> Self {
        PyReset {
            inner: PartialReset::absorption(),
        }
    }

    #[staticmethod]
    fn table(points: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(PyReset {
            inner: PartialReset::table(points).map_err(err)?,
        })
    }

    fn eval(&self, zeta: f64) -> f64 {
        self.inner.evaluate(zeta)
    }

    fn derivative(&self, zeta: f64) -> f64 {
        self.inner.derivative(zeta)
    }

    fn is_neuronal(&self, zeta_max: f64) -> bool {
        self.inner.is_neuronal(zeta_max, 400)
    }
}

/// Pulse coupling matrix; entry (i, j) is the strength j delivers to i.
#[pyclass(name = "Coupling", from_py_object)]
#[derive(Clone)]
struct PyCoupling {
    inner: CouplingMatrix,
}

#[pymethods]
impl PyCoupling {
    #[staticmethod]
    fn homogeneous(n: usize, eps: f64) -> PyResult<Self> {
        Ok(PyCoupling {
            inner: CouplingMatrix::homogeneous(n, eps).map_err(err)?,
        })
    }

    #[staticmethod]
    fn meta(sizes: Vec<usize>, eps: f64) -> PyResult<Self> {
        Ok(PyCoupling {
            inner: CouplingMatrix::meta(&sizes, eps).map_err(err)?,
        })
    }

    #[staticmethod]
    fn random_uniform(n: usize, eps_min: f64, eps_max: f64, seed: u64) -> PyResult<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Ok(PyCoupling {
            inner: CouplingMatrix::random_uniform(n, eps_min, eps_max, &mut rng).map_err(err)?,
        })
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn entry(&self, receiver: usize, sender: usize) -> f64 {
        self.inner.get(receiver, sender)
    }
}

/// A configured network: coupling, reset and rise function, with the
/// exact event-driven simulator and the stability analysis attached.
#[pyclass(name = "Network")]
struct PyNetwork {
    coupling: CouplingMatrix,
    reset: PartialReset,
    rise: RiseFunction,
}

#[pymethods]
impl PyNetwork {
    #[new]
    fn new(coupling: PyCoupling, reset: PyReset, rise: PyRise) -> Self {
        PyNetwork {
            coupling: coupling.inner,
            reset: reset.inner,
            rise: rise.inner,
        }
    }

    /// Event-driven run from `phases` (by oscillator id) for `spikes`
    /// pulses. Returns `(events, clusters)` where `events` is a list of
    /// `(time, members)` and `clusters` a dict with the partition.
    #[pyo3(signature = (phases, spikes, detect_window=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        phases: Vec<f64>,
        spikes: u64,
        detect_window: Option<usize>,
    ) -> PyResult<(Vec<(f64, Vec<usize>)>, Bound<'py, PyDict>)> {
        let (state, t0) = NetworkState::from_phases(&phases).map_err(err)?;
        let window = detect_window.unwrap_or(10 * state.n());
        let opts = SimulateOptions {
            budget: engine::Budget::Spikes(spikes),
            ref_osc: 0,
            stop_on_recurrence: Some(1e-7),
            recurrence_window: window,
        };
        let (log, _) =
            engine::simulate(&state, t0, &self.coupling, &self.reset, &self.rise, &opts)
                .map_err(err)?;
        let partition = engine::detect_clusters(&log, window, 1e-7);
        let events: Vec<(f64, Vec<usize>)> = log
            .records
            .iter()
            .map(|r| (r.time, r.members.clone()))
            .collect();
        let d = PyDict::new(py);
        d.set_item("sizes", partition.sizes.clone())?;
        d.set_item("periodic", partition.periodic)?;
        d.set_item("period", partition.period)?;
        d.set_item("max_cluster", partition.max_cluster())?;
        Ok((events, d))
    }

    /// One return map of the reference oscillator from a section state.
    fn return_map(
        &self,
        phases: Vec<f64>,
        ref_osc: usize,
    ) -> PyResult<(Vec<f64>, Vec<(Vec<usize>, f64)>)> {
        let (state, _) = NetworkState::from_phases(&phases).map_err(err)?;
        let (next, seq) =
            engine::return_map(&state, ref_osc, &self.coupling, &self.reset, &self.rise)
                .map_err(err)?;
        Ok((
            next.phases_by_id(),
            seq.events
                .into_iter()
                .map(|e| (e.members, e.sigma))
                .collect(),
        ))
    }

    /// Splay-state existence: `None` when certified non-existent,
    /// otherwise `(sigma_star, phases_by_id, residual)`.
    fn solve_splay(&self) -> PyResult<Option<(Vec<f64>, Vec<f64>, f64)>> {
        let sol = analysis::solve_splay(&self.coupling, &self.reset, &self.rise).map_err(err)?;
        Ok(sol.map(|s| (s.sigma_star, s.state.phases_by_id(), s.residual)))
    }

    /// Linear stability of the splay state: entries, the
    /// Enestroem-Kakeya bound and the spectral radius of the period
    /// product of the firing-map Jacobians.
    fn stability<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sol = analysis::solve_splay(&self.coupling, &self.reset, &self.rise)
            .map_err(err)?
            .ok_or_else(|| PyRuntimeError::new_err("no splay state exists"))?;
        let rep = analysis::jacobian_at(&sol.state, &self.coupling, &self.reset, &self.rise)
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("entries", rep.entries.clone())?;
        d.set_item("ek_bound", rep.ek_bound)?;
        d.set_item("spectral_radius", rep.spectral_radius)?;
        d.set_item("stable", rep.stable)?;
        Ok(d)
    }
}

/// Sub-threshold interaction `H_eps(phi) = U^-1(U(phi) + eps)`.
#[pyfunction]
fn h(phi: f64, eps: f64, rise: PyRise) -> PyResult<f64> {
    maps::h(phi, eps, &rise.inner).map_err(err)
}

/// Inverse interaction `H_eps^-1 = H_{-eps}`.
#[pyfunction]
fn h_inverse(phi: f64, eps: f64, rise: PyRise) -> PyResult<f64> {
    maps::h_inverse(phi, eps, &rise.inner).map_err(err)
}

/// Supra-threshold interaction `J_eps(phi) = U^-1(R(U(phi) + eps - 1))`.
#[pyfunction]
fn j(phi: f64, eps: f64, reset: PyReset, rise: PyRise) -> PyResult<f64> {
    maps::j(phi, eps, &reset.inner, &rise.inner).map_err(err)
}

/// Applies `S_sigma . H_eps` for each `(sigma, eps)` pair in order.
#[pyfunction]
fn compose_chain(phi: f64, chain: Vec<(f64, f64)>, rise: PyRise) -> PyResult<f64> {
    maps::compose_chain(phi, &chain, &rise.inner).map_err(err)
}

/// Critical linear reset strength for cluster size `a` in the convex
/// `U_b` family.
#[pyfunction]
fn c_critical(a: usize, n: usize, eps: f64, b: f64) -> PyResult<f64> {
    analysis::c_critical(a, n, eps, b).map_err(err)
}

/// All bifurcation points `a = 2..=n` as a list of `(a, c_cr)`.
#[pyfunction]
fn c_critical_curve(n: usize, eps: f64, b: f64) -> PyResult<Vec<(usize, f64)>> {
    Ok(analysis::bifurcation_curve(n, eps, b)
        .map_err(err)?
        .points
        .into_iter()
        .map(|p| (p.a, p.c_cr))
        .collect())
}

/// Exact `U_b` phase-difference return map.
#[pyfunction]
fn delta_return_map_ub(dphi: f64, a1: usize, n: usize, eps: f64, c: f64, b: f64) -> PyResult<f64> {
    analysis::delta_return_map_ub(dphi, a1, n, eps, c, b).map_err(err)
}

/// Enestroem-Kakeya root bound for positive coefficients `c_0..c_n`.
#[pyfunction]
fn ek_root_bound(coeffs: Vec<f64>) -> PyResult<f64> {
    analysis::ek_root_bound(&coeffs).map_err(err)
}

/// Deterministic child seed used by parameter sweeps.
#[pyfunction]
fn child_seed(seed: u64, point_index: u64, run_index: u64) -> u64 {
    experiment::child_seed(seed, point_index, run_index)
}

#[pymodule]
fn pulsereset_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRise>()?;
    m.add_class::<PyReset>()?;
    m.add_class::<PyCoupling>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(h, m)?)?;
    m.add_function(wrap_pyfunction!(h_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(j, m)?)?;
    m.add_function(wrap_pyfunction!(compose_chain, m)?)?;
    m.add_function(wrap_pyfunction!(c_critical, m)?)?;
    m.add_function(wrap_pyfunction!(c_critical_curve, m)?)?;
    m.add_function(wrap_pyfunction!(delta_return_map_ub, m)?)?;
    m.add_function(wrap_pyfunction!(ek_root_bound, m)?)?;
    m.add_function(wrap_pyfunction!(child_seed, m)?)?;
    Ok(())
}
