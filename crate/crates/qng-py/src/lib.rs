//! Python bindings for the certification library.
//!
//! The module exposes the target-state constructors, both threshold
//! engines, the pure-loss analysis and the verification suites. States and
//! results are thin wrappers over the core types; amplitudes cross the
//! boundary as (re, im) tuples.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use num_complex::Complex64 as C64;
use qng_core::cmaes::CmaesConfig;
use qng_core::fock::{BasisDescriptor, TwoModeState};
use qng_core::loss;
use qng_core::targets::{self, HybridVariant, TargetSpec};
use qng_core::threshold::{self, EscalationConfig, GridConfig, ThresholdResult};
use qng_core::verify;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Pure two-mode state on a truncated Fock basis.
#[pyclass(name = "State")]
#[derive(Clone)]
struct PyState {
    inner: TwoModeState,
}

#[pymethods]
impl PyState {
    /// Per-mode Fock cutoff.
    #[getter]
    fn cutoff(&self) -> usize {
        self.inner.basis().cutoff()
    }

    /// Norm² weight estimated to live above the cutoff.
    #[getter]
    fn leakage(&self) -> f64 {
        self.inner.leakage()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Amplitude of |k⟩₁|l⟩₂ as (re, im).
    fn amplitude(&self, k: usize, l: usize) -> PyResult<(f64, f64)> {
        if k > self.cutoff() || l > self.cutoff() {
            return Err(PyValueError::new_err("Fock index beyond the cutoff"));
        }
        let a = self.inner.amplitude(k, l);
        Ok((a.re, a.im))
    }

    /// All amplitudes as a nested list [k][l] of (re, im).
    fn amplitudes(&self) -> Vec<Vec<(f64, f64)>> {
        let dim = self.inner.basis().dim();
        (0..dim)
            .map(|k| {
                (0..dim)
                    .map(|l| {
                        let a = self.inner.amplitude(k, l);
                        (a.re, a.im)
                    })
                    .collect()
            })
            .collect()
    }

    /// |⟨self|other⟩|².
    fn fidelity_with(&self, other: &PyState) -> PyResult<f64> {
        let (a, b) = if self.cutoff() >= other.cutoff() {
            (self.inner.clone(), other.inner.with_cutoff(self.cutoff()))
        } else {
            (self.inner.with_cutoff(other.cutoff()), other.inner.clone())
        };
        a.fidelity_with(&b).map_err(err)
    }

    /// Crop or extend to a new cutoff (cropped weight joins the leakage).
    fn with_cutoff(&self, cutoff: usize) -> PyState {
        PyState {
            inner: self.inner.with_cutoff(cutoff),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "State(cutoff={}, norm={:.6}, leakage={:.2e})",
            self.cutoff(),
            self.norm(),
            self.leakage()
        )
    }
}

/// Threshold value with diagnostics.
#[pyclass(name = "Threshold")]
#[derive(Clone)]
struct PyThreshold {
    inner: ThresholdResult,
}

#[pymethods]
impl PyThreshold {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn kind(&self) -> String {
        match self.inner.kind {
            threshold::ThresholdKind::Passive => "passive".into(),
            threshold::ThresholdKind::Gaussian => "gaussian".into(),
        }
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn evaluations(&self) -> u64 {
        self.inner.evaluations
    }

    #[getter]
    fn cutoff_trace(&self) -> Vec<(usize, f64)> {
        self.inner.cutoff_trace.clone()
    }

    /// Optimizing circuit parameters as a dict-compatible JSON string.
    fn best_params_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.best_params)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Amplitudes (re, im) of the optimal product input |φ₁⟩, |φ₂⟩.
    fn best_input(&self) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        fn conv(v: &[C64]) -> Vec<(f64, f64)> {
            v.iter().map(|z| (z.re, z.im)).collect()
        }
        (
            conv(&self.inner.best_input.0),
            conv(&self.inner.best_input.1),
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Threshold(kind={}, value={:.9}, converged={})",
            self.kind(),
            self.inner.value,
            self.inner.converged
        )
    }
}

/// Loss-tolerance result.
#[pyclass(name = "LossTolerance")]
struct PyLoss {
    inner: loss::LossResult,
}

#[pymethods]
impl PyLoss {
    #[getter]
    fn eta_min(&self) -> f64 {
        self.inner.eta_min
    }

    #[getter]
    fn monotone_verified(&self) -> bool {
        self.inner.monotone_verified
    }

    #[getter]
    fn no_margin(&self) -> bool {
        self.inner.no_margin
    }

    #[getter]
    fn fidelity_curve(&self) -> Vec<(f64, f64)> {
        self.inner.fidelity_curve.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "LossTolerance(eta_min={:.6}, monotone={}, no_margin={})",
            self.inner.eta_min, self.inner.monotone_verified, self.inner.no_margin
        )
    }
}

/// Build a target state from a JSON description (same schema as the CLI).
#[pyfunction]
fn target_from_json(json: &str) -> PyResult<PyState> {
    let spec: TargetSpec = serde_json::from_str(json).map_err(err)?;
    Ok(PyState {
        inner: spec.build().map_err(err)?,
    })
}

/// cos θ |0,0⟩ + sin θ |n,n⟩.
#[pyfunction]
#[pyo3(signature = (theta, n, cutoff=None))]
fn fock_pair(theta: f64, n: usize, cutoff: Option<usize>) -> PyResult<PyState> {
    let basis = BasisDescriptor::new(cutoff.unwrap_or(n).max(n));
    Ok(PyState {
        inner: targets::fock_pair(theta, n, basis).map_err(err)?,
    })
}

/// cos θ |0,2n⟩ + sin θ |2n,0⟩.
#[pyfunction]
#[pyo3(signature = (theta, n, cutoff=None))]
fn noon_like(theta: f64, n: usize, cutoff: Option<usize>) -> PyResult<PyState> {
    let basis = BasisDescriptor::new(cutoff.unwrap_or(2 * n).max(2 * n));
    Ok(PyState {
        inner: targets::noon_like(theta, n, basis).map_err(err)?,
    })
}

/// Hybrid cat-qubit state; variant 1 or 2.
#[pyfunction]
#[pyo3(signature = (variant, theta, alpha))]
fn hybrid(variant: u8, theta: f64, alpha: f64) -> PyResult<PyState> {
    let v = match variant {
        1 => HybridVariant::One,
        2 => HybridVariant::Two,
        _ => return Err(PyValueError::new_err("variant must be 1 or 2")),
    };
    Ok(PyState {
        inner: targets::hybrid_auto(v, theta, alpha).map_err(err)?,
    })
}

/// m-photon subtracted two-mode squeezed state S₁(r)S₂(−r)|0,0⟩.
#[pyfunction]
#[pyo3(signature = (m, phis, r, cutoff=None))]
fn photon_subtracted(m: usize, phis: Vec<f64>, r: f64, cutoff: Option<usize>) -> PyResult<PyState> {
    let inner = match cutoff {
        Some(c) => targets::photon_subtracted(m, &phis, r, BasisDescriptor::new(c)),
        None => targets::photon_subtracted_auto(m, &phis, r),
    }
    .map_err(err)?;
    Ok(PyState { inner })
}

/// Finite core state of the photon-subtracted family.
#[pyfunction]
fn core_state(m: usize, phis: Vec<f64>, r: f64) -> PyResult<PyState> {
    Ok(PyState {
        inner: targets::core_state(m, &phis, r).map_err(err)?,
    })
}

/// Mode-intrinsic (passive) threshold by grid scan plus refinement.
#[pyfunction]
#[pyo3(signature = (state, phi_steps=401, theta_steps=401))]
fn passive_threshold(
    state: &PyState,
    phi_steps: usize,
    theta_steps: usize,
) -> PyResult<PyThreshold> {
    let grid = GridConfig {
        phi_steps,
        theta_steps,
        ..Default::default()
    };
    Ok(PyThreshold {
        inner: threshold::passive_threshold(&state.inner, &grid).map_err(err)?,
    })
}

/// Genuine non-Gaussian threshold by CMA-ES with cutoff escalation.
#[pyfunction]
#[pyo3(signature = (state, seed=0, restarts=8, max_evals=4000, start=None, stop=35))]
fn gaussian_threshold(
    state: &PyState,
    seed: u64,
    restarts: usize,
    max_evals: u64,
    start: Option<usize>,
    stop: usize,
) -> PyResult<PyThreshold> {
    let mut cfg = CmaesConfig::new(6, seed);
    cfg.restarts = restarts;
    cfg.max_evals = max_evals;
    let esc = EscalationConfig {
        start,
        stop,
        ..Default::default()
    };
    Ok(PyThreshold {
        inner: threshold::gaussian_threshold(&state.inner, &cfg, &esc).map_err(err)?,
    })
}

/// Fidelity of the lossy state to a pure target at transmission η.
#[pyfunction]
fn lossy_fidelity(target: &PyState, state: &PyState, eta: f64) -> PyResult<f64> {
    loss::lossy_fidelity(&target.inner, &state.inner, eta).map_err(err)
}

/// Minimal transmission keeping the lossy fidelity above the threshold.
#[pyfunction]
#[pyo3(signature = (state, threshold, tol=1e-4))]
fn min_transmission(state: &PyState, threshold: &PyThreshold, tol: f64) -> PyResult<PyLoss> {
    Ok(PyLoss {
        inner: loss::min_transmission(&state.inner, &threshold.inner, tol).map_err(err)?,
    })
}

/// Compare a measured fidelity against a threshold; returns
/// (certified, margin).
#[pyfunction]
fn certify(fidelity: f64, threshold: &PyThreshold) -> PyResult<(bool, f64)> {
    let v = threshold::certify(fidelity, &threshold.inner).map_err(err)?;
    Ok((v.certified, v.margin))
}

/// Run a named verification suite; returns (name, passed, detail, millis)
/// per check.
#[pyfunction]
#[pyo3(signature = (suite, seed=verify::DEFAULT_SEED))]
fn verify_suite(suite: &str, seed: u64) -> PyResult<Vec<(String, bool, String, u128)>> {
    let s = verify::Suite::parse(suite)
        .ok_or_else(|| PyValueError::new_err(format!("unknown suite {suite:?}")))?;
    Ok(verify::run_suite(s, seed)
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail, c.millis))
        .collect())
}

#[pymodule]
fn qng_certify(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyThreshold>()?;
    m.add_class::<PyLoss>()?;
    m.add_function(wrap_pyfunction!(target_from_json, m)?)?;
    m.add_function(wrap_pyfunction!(fock_pair, m)?)?;
    m.add_function(wrap_pyfunction!(noon_like, m)?)?;
    m.add_function(wrap_pyfunction!(hybrid, m)?)?;
    m.add_function(wrap_pyfunction!(photon_subtracted, m)?)?;
    m.add_function(wrap_pyfunction!(core_state, m)?)?;
    m.add_function(wrap_pyfunction!(passive_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(lossy_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(min_transmission, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_suite, m)?)?;
    Ok(())
}
