//! Python bindings for `pp84_core`: closed-form analytics, the run simulator
//! and its aggregated statistics.

use pp84_core::analytics::{self, EveCurve};
use pp84_core::attacks::{AttackParams, AttackStrategy};
use pp84_core::cli::{transcript_row, TRANSCRIPT_HEADER};
use pp84_core::protocol::{self, ControlBasis, QdcStatus, RunConfig, SessionInput, SessionMode, Simulator};
use pp84_core::stats::{self as core_stats, SessionStats};
use pp84_core::validation;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: pp84_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bits(v: &[u8]) -> Vec<u32> {
    v.iter().map(|&b| b as u32).collect()
}

/// An eavesdropping strategy. Build with the static constructors.
#[pyclass(name = "Attack", module = "pp84", frozen, from_py_object)]
#[derive(Clone)]
struct PyAttack {
    inner: AttackStrategy,
}

#[pymethods]
impl PyAttack {
    #[staticmethod]
    fn none() -> Self {
        Self {
            inner: AttackStrategy::NoAttack,
        }
    }

    #[staticmethod]
    fn projective() -> Self {
        Self {
            inner: AttackStrategy::ProjectiveInterceptResend,
        }
    }

    #[staticmethod]
    #[pyo3(signature = (f, x, y, f_prime, x_prime, y_prime))]
    fn incoherent(f: f64, x: f64, y: f64, f_prime: f64, x_prime: f64, y_prime: f64) -> PyResult<Self> {
        let p = AttackParams::new(f, x, y, f_prime, x_prime, y_prime).map_err(err)?;
        Ok(Self {
            inner: AttackStrategy::IncoherentTwoAncilla(p),
        })
    }

    /// `F = F′ = 1`, `x = x′`, `y = y′ = 0`.
    #[staticmethod]
    fn balanced(x: f64) -> PyResult<Self> {
        let p = AttackParams::balanced(x).map_err(err)?;
        Ok(Self {
            inner: AttackStrategy::IncoherentTwoAncilla(p),
        })
    }

    /// Detection probability per applicable control check.
    fn expected_detection(&self) -> PyResult<f64> {
        validation::expected_detection(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Attack({:?})", self.inner)
    }
}

#[pyclass(name = "Config", module = "pp84", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (control_prob=0.5, attack=None, transmission=1.0, seed=0, mode="qkd", control_basis="random"))]
    fn new(
        control_prob: f64,
        attack: Option<PyAttack>,
        transmission: f64,
        seed: u64,
        mode: &str,
        control_basis: &str,
    ) -> PyResult<Self> {
        let mode = match mode {
            "qkd" => SessionMode::Qkd,
            "qdc" => SessionMode::Qdc,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let policy = match control_basis {
            "random" => ControlBasis::Random,
            "match" => ControlBasis::MatchPreparation,
            other => return Err(PyValueError::new_err(format!("unknown control basis {other:?}"))),
        };
        let attack = attack.map(|a| a.inner).unwrap_or(AttackStrategy::NoAttack);
        let inner = RunConfig::new(control_prob, attack, seed)
            .with_transmission(transmission)
            .with_mode(mode)
            .with_control_basis(policy);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    /// Same configuration with loss rates that depend on Alice's mode.
    fn with_mode_transmission(&self, control: f64, encoding: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_mode_transmission(control, encoding);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    /// Detection probability per control run.
    fn per_control_detection(&self) -> PyResult<f64> {
        validation::per_control_detection(&self.inner).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }

    fn __repr__(&self) -> String {
        format!("Config({})", self.to_json())
    }
}

#[pyclass(name = "SessionStats", module = "pp84", skip_from_py_object)]
#[derive(Clone)]
struct PyStats {
    inner: SessionStats,
}

#[pymethods]
impl PyStats {
    #[new]
    fn new() -> Self {
        Self {
            inner: SessionStats::default(),
        }
    }

    #[getter]
    fn runs(&self) -> u64 {
        self.inner.runs
    }

    #[getter]
    fn applicable_checks(&self) -> u64 {
        self.inner.applicable_checks
    }

    #[getter]
    fn detect_e1(&self) -> u64 {
        self.inner.detect_e1
    }

    #[getter]
    fn detect_e2(&self) -> u64 {
        self.inner.detect_e2
    }

    #[getter]
    fn detections(&self) -> u64 {
        self.inner.detections()
    }

    /// `[control, encoding]` run counts.
    #[getter]
    fn mode_runs(&self) -> [u64; 2] {
        self.inner.mode_runs
    }

    /// Alice × Bob tables, `[z, x]`, each `[[n00, n01], [n10, n11]]`.
    #[getter]
    fn alice_bob(&self) -> [[[u64; 2]; 2]; 2] {
        self.inner.alice_bob
    }

    #[getter]
    fn alice_eve(&self) -> [[[u64; 2]; 2]; 2] {
        self.inner.alice_eve
    }

    /// `(rate, stderr)` of detections among applicable checks.
    fn detection_rate(&self) -> PyResult<(f64, f64)> {
        let e = core_stats::estimate_detection(&self.inner).map_err(err)?;
        Ok((e.rate, e.stderr))
    }

    /// `(i_z, i_x, averaged)` plug-in Alice–Bob information.
    fn i_ab(&self) -> PyResult<(f64, f64, f64)> {
        let i = core_stats::i_ab_per_basis(&self.inner).map_err(err)?;
        Ok((i.i_z, i.i_x, i.averaged))
    }

    fn i_ae(&self) -> PyResult<f64> {
        core_stats::mutual_information_from_counts(&self.inner.alice_eve_total()).map_err(err)
    }

    fn merge(&mut self, other: &PyStats) {
        self.inner.merge(&other.inner);
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("stats serialize")
    }

    fn __eq__(&self, other: &PyStats) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "SessionStats(runs={}, checks={}, detections={})",
            self.inner.runs,
            self.inner.applicable_checks,
            self.inner.detections()
        )
    }
}

/// Monte Carlo over `runs` independent runs; deterministic in the seed.
#[pyfunction]
fn simulate(py: Python<'_>, config: &PyConfig, runs: u64) -> PyResult<PyStats> {
    let sim = Simulator::new(config.inner.clone()).map_err(err)?;
    let inner = py.detach(|| sim.simulate(runs)).map_err(err)?;
    Ok(PyStats { inner })
}

/// Per-run records as dicts keyed by the transcript CSV columns.
#[pyfunction]
fn transcript<'py>(py: Python<'py>, config: &PyConfig, runs: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let sim = Simulator::new(config.inner.clone()).map_err(err)?;
    let records = sim.transcript(runs).map_err(err)?;
    records
        .iter()
        .map(|rec| {
            let d = PyDict::new(py);
            for (k, v) in TRANSCRIPT_HEADER.iter().zip(transcript_row(rec)) {
                d.set_item(*k, v)?;
            }
            Ok(d)
        })
        .collect()
}

/// Analytic-vs-empirical reports for `stats` under `config`'s attack.
#[pyfunction]
#[pyo3(signature = (config, stats, z_max=4.0, mi_tolerance=0.01))]
fn compare<'py>(
    py: Python<'py>,
    config: &PyConfig,
    stats: &PyStats,
    z_max: f64,
    mi_tolerance: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = validation::comparisons(&config.inner, &stats.inner, z_max, mi_tolerance).map_err(err)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("quantity", r.quantity)?;
            d.set_item("analytic", r.analytic)?;
            d.set_item("empirical", r.empirical)?;
            d.set_item("stderr", r.stderr)?;
            d.set_item("z", r.z)?;
            d.set_item("verdict", format!("{:?}", r.verdict).to_lowercase())?;
            Ok(d)
        })
        .collect()
}

/// Sends `payload` (a sequence of 0/1) in one direct-communication session.
#[pyfunction]
fn qdc_send<'py>(py: Python<'py>, config: &PyConfig, payload: Vec<u8>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone().with_mode(SessionMode::Qdc);
    let res = protocol::run_session(&cfg, &SessionInput::Payload(payload)).map_err(err)?;
    let q = res.qdc.expect("qdc session reports an outcome");
    let d = PyDict::new(py);
    let status = match q.status {
        QdcStatus::Delivered => "delivered",
        QdcStatus::Aborted => "aborted",
        QdcStatus::Exhausted => "exhausted",
    };
    d.set_item("status", status)?;
    d.set_item("alice_bits", bits(&q.alice_bits))?;
    d.set_item("bob_bits", bits(&q.bob_bits))?;
    d.set_item("detection_run", q.detection_run)?;
    d.set_item("runs", q.runs)?;
    Ok(d)
}

/// `(delivered, total)` over `sessions` independent sessions.
#[pyfunction]
fn qdc_success_frequency(py: Python<'_>, config: &PyConfig, payload: Vec<u8>, sessions: u64) -> PyResult<(u64, u64)> {
    let cfg = config.inner.clone();
    py.detach(|| protocol::qdc_success_frequency(&cfg, &payload, sessions))
        .map_err(err)
}

/// One-way BB84 reference run: `{qubits, sifted, sifted_errors, classical_bits, efficiency}`.
#[pyfunction]
#[pyo3(signature = (runs, attack=None, seed=0))]
fn bb84_baseline<'py>(py: Python<'py>, runs: u64, attack: Option<PyAttack>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let attack = attack.map(|a| a.inner).unwrap_or(AttackStrategy::NoAttack);
    let s = protocol::run_bb84_baseline(runs, &attack, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("qubits", s.qubits)?;
    d.set_item("sifted", s.sifted)?;
    d.set_item("sifted_errors", s.sifted_errors)?;
    d.set_item("classical_bits", s.classical_bits)?;
    d.set_item("efficiency", s.efficiency())?;
    Ok(d)
}

/// Loss-rate comparison between control and encoding runs:
/// `(verdict, z, critical)` with verdict `"consistent"`, `"anomaly"` or `"inconclusive"`.
#[pyfunction]
#[pyo3(signature = (stats, significance=0.01))]
fn loss_anomaly_test(stats: &PyStats, significance: f64) -> PyResult<(String, f64, f64)> {
    let r = protocol::loss_anomaly_test(&stats.inner, significance).map_err(err)?;
    Ok((format!("{:?}", r.verdict).to_lowercase(), r.z, r.critical))
}

#[pyfunction]
fn binary_entropy(p: f64) -> PyResult<f64> {
    analytics::binary_entropy(p).map_err(err)
}

#[pyfunction]
fn p_d_average(f: f64, x: f64, y: f64, f_prime: f64, x_prime: f64, y_prime: f64) -> PyResult<f64> {
    analytics::p_d_average(f, x, y, f_prime, x_prime, y_prime).map_err(err)
}

#[pyfunction]
fn d_min(x: f64, x_prime: f64) -> PyResult<f64> {
    analytics::d_min(x, x_prime).map_err(err)
}

#[pyfunction]
fn d_balanced(x: f64) -> PyResult<f64> {
    analytics::d_balanced(x).map_err(err)
}

#[pyfunction]
fn i_ae(x: f64, x_prime: f64) -> PyResult<f64> {
    analytics::i_ae(x, x_prime).map_err(err)
}

#[pyfunction]
fn i_ae_of_d(d: f64) -> PyResult<f64> {
    analytics::i_ae_of_d(d).map_err(err)
}

#[pyfunction]
fn i_ab(x: f64) -> PyResult<f64> {
    analytics::i_ab(x).map_err(err)
}

#[pyfunction]
fn i_ae_bound(x: f64) -> PyResult<f64> {
    analytics::i_ae_bound(x).map_err(err)
}

#[pyfunction]
fn qdc_eavesdrop_success(c: f64, d: f64, n: u32) -> PyResult<f64> {
    analytics::qdc_eavesdrop_success(c, d, n).map_err(err)
}

/// `(pp84, bb84)` practical efficiencies at one-way transmission `p`.
#[pyfunction]
fn efficiency(p: f64) -> PyResult<(f64, f64)> {
    let (_, pp) = analytics::efficiency(&analytics::EfficiencyInput::pp84(p)).map_err(err)?;
    let (_, bb) = analytics::efficiency(&analytics::EfficiencyInput::bb84(p)).map_err(err)?;
    Ok((pp, bb))
}

/// `(x, d)` where Bob's and Eve's information cross; `curve` is
/// `"incoherent"` or `"bound"`.
#[pyfunction]
#[pyo3(signature = (curve="incoherent"))]
fn security_threshold(curve: &str) -> PyResult<(f64, f64)> {
    let c = match curve {
        "incoherent" => EveCurve::Incoherent,
        "bound" => EveCurve::Bound,
        other => return Err(PyValueError::new_err(format!("unknown curve {other:?}"))),
    };
    let t = analytics::security_threshold(c).map_err(err)?;
    Ok((t.x, t.d))
}

type CurveRow = (f64, f64, f64, f64, f64);

/// Rows `(x, d, i_ab, i_ae, i_ae_bound)` on an even grid over `[0, π/2]`.
#[pyfunction]
#[pyo3(signature = (points=91))]
fn curves(points: usize) -> PyResult<Vec<CurveRow>> {
    let rows = analytics::curve(points).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.x, r.d, r.i_ab, r.i_ae, r.i_ae_bound))
        .collect())
}

#[pymodule]
fn pp84(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAttack>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyStats>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(transcript, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(qdc_send, m)?)?;
    m.add_function(wrap_pyfunction!(qdc_success_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(bb84_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(loss_anomaly_test, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(p_d_average, m)?)?;
    m.add_function(wrap_pyfunction!(d_min, m)?)?;
    m.add_function(wrap_pyfunction!(d_balanced, m)?)?;
    m.add_function(wrap_pyfunction!(i_ae, m)?)?;
    m.add_function(wrap_pyfunction!(i_ae_of_d, m)?)?;
    m.add_function(wrap_pyfunction!(i_ab, m)?)?;
    m.add_function(wrap_pyfunction!(i_ae_bound, m)?)?;
    m.add_function(wrap_pyfunction!(qdc_eavesdrop_success, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(security_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(curves, m)?)?;
    Ok(())
}
