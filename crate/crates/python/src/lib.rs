use std::fs::File;
use std::io::BufWriter;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use swapsim::experiment::{report_row, run, Outcome, Scenario};
use swapsim::export::{write_trace_csv, write_trace_json};
use swapsim::model::{
    normalized_intensity, zoo, HardwareProfile, LayerSpec, NnSpec, DEFAULT_EPSILON_FRAC,
};
use swapsim::Error;

create_exception!(pyswapsim, DeadlockError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Deadlock { .. } => DeadlockError::new_err(e.to_string()),
        Error::Io(io) => io.into(),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Layer", frozen, module = "pyswapsim")]
struct PyLayer {
    inner: LayerSpec,
}

#[pymethods]
impl PyLayer {
    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn input_bytes(&self) -> u64 {
        self.inner.input_bytes
    }

    #[getter]
    fn weight_bytes(&self) -> u64 {
        self.inner.weight_bytes
    }

    #[getter]
    fn output_bytes(&self) -> u64 {
        self.inner.output_bytes
    }

    #[getter]
    fn ops(&self) -> u64 {
        self.inner.ops
    }

    /// Normalized compute-to-IO intensity on `hw`.
    fn intensity(&self, hw: &PyHardware) -> PyResult<f64> {
        normalized_intensity(&self.inner, &hw.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Layer({}, {}, ops={})",
            self.inner.name, self.inner.kind, self.inner.ops
        )
    }
}

#[pyclass(name = "Network", frozen, module = "pyswapsim")]
struct PyNetwork {
    inner: NnSpec,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        zoo::by_name(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown network `{name}`")))
    }

    #[staticmethod]
    fn builtin_names() -> Vec<&'static str> {
        zoo::NAMES.to_vec()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        NnSpec::from_path(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        NnSpec::from_json(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn layers(&self) -> Vec<PyLayer> {
        self.inner
            .layers
            .iter()
            .map(|l| PyLayer { inner: l.clone() })
            .collect()
    }

    #[getter]
    fn footprint_bytes(&self) -> u64 {
        self.inner.footprint_bytes()
    }

    #[getter]
    fn weight_bytes(&self) -> u64 {
        self.inner.weight_bytes()
    }

    /// Per-layer class names: "compute-bound", "io-bound" or "insignificant".
    #[pyo3(signature = (hw, epsilon = DEFAULT_EPSILON_FRAC))]
    fn classify(&self, hw: &PyHardware, epsilon: f64) -> PyResult<Vec<String>> {
        let classes = self.inner.classify(&hw.inner, epsilon).map_err(to_py)?;
        Ok(classes.iter().map(ToString::to_string).collect())
    }

    /// (compute-bound, io-bound, insignificant) layer counts.
    #[pyo3(signature = (hw, epsilon = DEFAULT_EPSILON_FRAC))]
    fn class_counts(&self, hw: &PyHardware, epsilon: f64) -> PyResult<(usize, usize, usize)> {
        let c = self.inner.class_counts(&hw.inner, epsilon).map_err(to_py)?;
        Ok((c.compute_bound, c.io_bound, c.insignificant))
    }

    fn __len__(&self) -> usize {
        self.inner.layers.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network({}, {} layers)",
            self.inner.name,
            self.inner.layers.len()
        )
    }
}

#[pyclass(name = "Hardware", module = "pyswapsim")]
struct PyHardware {
    inner: HardwareProfile,
}

#[pymethods]
impl PyHardware {
    #[staticmethod]
    fn stm32f746() -> Self {
        Self {
            inner: zoo::stm32f746(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        HardwareProfile::from_path(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn cpu_ops_per_sec(&self) -> f64 {
        self.inner.cpu_ops_per_sec
    }

    #[getter]
    fn io_bytes_per_sec(&self) -> f64 {
        self.inner.io_bytes_per_sec
    }

    #[getter]
    fn sram_bytes(&self) -> u64 {
        self.inner.sram_bytes
    }

    #[getter]
    fn io_fixed_overhead_sec(&self) -> f64 {
        self.inner.io_fixed_overhead_sec
    }

    #[setter]
    fn set_io_fixed_overhead_sec(&mut self, sec: f64) -> PyResult<()> {
        let mut hw = self.inner.clone();
        hw.io_fixed_overhead_sec = sec;
        hw.validate().map_err(to_py)?;
        self.inner = hw;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "Hardware({}, {} ops/s, {} B/s)",
            self.inner.name, self.inner.cpu_ops_per_sec, self.inner.io_bytes_per_sec
        )
    }
}

/// Result of one simulated configuration.
#[pyclass(name = "Outcome", frozen, module = "pyswapsim")]
struct PyOutcome {
    scenario: Scenario,
    inner: Outcome,
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn makespan_sec(&self) -> f64 {
        self.inner.report.makespan_sec
    }

    #[getter]
    fn delay_increase_pct(&self) -> f64 {
        self.inner.report.delay_increase_pct
    }

    #[getter]
    fn throughput_fps(&self) -> f64 {
        self.inner.report.throughput_fps
    }

    #[getter]
    fn io_tasks_per_frame(&self) -> u64 {
        self.inner.io_tasks_per_frame()
    }

    #[getter]
    fn compute_tasks_per_frame(&self) -> u64 {
        self.inner.compute_tasks_per_frame()
    }

    /// Every report column as a dict.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let row = report_row(&self.scenario, &self.inner);
        let value = serde_json::to_value(&row).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let dict = PyDict::new(py);
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                match v {
                    serde_json::Value::String(s) => dict.set_item(k, s)?,
                    serde_json::Value::Number(n) if n.is_u64() => dict.set_item(k, n.as_u64())?,
                    serde_json::Value::Number(n) => dict.set_item(k, n.as_f64())?,
                    _ => dict.set_item(k, py.None())?,
                }
            }
        }
        Ok(dict)
    }

    /// Trace events as (kind, frame, layer, tile, resource, start_ns, end_ns).
    fn events(&self) -> Vec<(&'static str, u32, u32, u32, String, u64, u64)> {
        self.inner
            .trace
            .events
            .iter()
            .map(|e| {
                (
                    e.kind.short_name(),
                    e.frame,
                    e.layer,
                    e.tile,
                    e.resource.to_string(),
                    e.start_ns,
                    e.end_ns,
                )
            })
            .collect()
    }

    /// Write the trace as CSV (for `.csv` paths) or trace-viewer JSON.
    fn write_trace(&self, path: &str) -> PyResult<()> {
        let out = BufWriter::new(File::create(path)?);
        let trace = &self.inner.trace;
        if path.to_ascii_lowercase().ends_with(".csv") {
            write_trace_csv(trace, out).map_err(to_py)
        } else {
            let names: Vec<String> = self
                .scenario
                .nn
                .layers
                .iter()
                .map(|l| l.name.clone())
                .collect();
            write_trace_json(trace, &names, out).map_err(to_py)
        }
    }
}

/// Tile, schedule and simulate `network` on `hw`.
#[pyfunction]
#[pyo3(signature = (network, hw, buffer_bytes, frames = 1, sram_bytes = None, arrival_interval_sec = 0.0))]
fn simulate(
    py: Python<'_>,
    network: &PyNetwork,
    hw: &PyHardware,
    buffer_bytes: u64,
    frames: u32,
    sram_bytes: Option<u64>,
    arrival_interval_sec: f64,
) -> PyResult<PyOutcome> {
    if !(arrival_interval_sec.is_finite() && arrival_interval_sec >= 0.0) {
        return Err(PyValueError::new_err(
            "arrival_interval_sec must be non-negative",
        ));
    }
    let mut s = Scenario::new(
        network.inner.clone(),
        hw.inner.clone(),
        buffer_bytes,
        frames,
    );
    if let Some(sram) = sram_bytes {
        s = s.with_sram(sram);
    }
    s.arrival_interval_ns = (arrival_interval_sec * 1e9).round() as u64;
    let inner = py.detach(|| run(&s)).map_err(to_py)?;
    Ok(PyOutcome { scenario: s, inner })
}

#[pymodule]
pub fn pyswapsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLayer>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyHardware>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("DeadlockError", m.py().get_type::<DeadlockError>())?;
    Ok(())
}
