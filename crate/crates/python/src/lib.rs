//! Python bindings for the PDCCH blocking simulator.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pdcch_blocking::coreset::{self, CoresetConfig};
use pdcch_blocking::error::ConfigError;
use pdcch_blocking::hash::{self, AggregationLevel, CandidateCounts, SearchSpaceConfig, SearchSpaceType, UeIdentity};
use pdcch_blocking::io::{self as pio, IoError, BUNDLED_SCENARIOS};
use pdcch_blocking::monte_carlo::{self, AlDistribution, ScenarioConfig, SimulationResult};
use pdcch_blocking::planner::{self, PlanningRequest};
use pdcch_blocking::scheduler::{self, CandidateSelection, MonitoringLimits, SchedulingStrategy, SubcarrierSpacing};

fn config_err(e: ConfigError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: IoError) -> PyErr {
    if e.is_user_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyIOError::new_err(e.to_string())
    }
}

fn level(cces: u32) -> PyResult<AggregationLevel> {
    AggregationLevel::from_cces(cces).map_err(config_err)
}

fn strategy(name: &str) -> PyResult<SchedulingStrategy> {
    match name {
        "low-to-high-al" => Ok(SchedulingStrategy::LowToHighAl),
        "high-to-low-al" => Ok(SchedulingStrategy::HighToLowAl),
        _ => Err(PyValueError::new_err(format!("unknown strategy {name:?}"))),
    }
}

fn selection(name: &str) -> PyResult<CandidateSelection> {
    match name {
        "lowest-index" => Ok(CandidateSelection::LowestIndex),
        "avoid-higher-al" => Ok(CandidateSelection::AvoidHigherAl),
        "least-conflict" => Ok(CandidateSelection::LeastConflict),
        _ => Err(PyValueError::new_err(format!("unknown candidate selection {name:?}"))),
    }
}

fn search_space(candidates: [u8; 5]) -> PyResult<SearchSpaceConfig> {
    Ok(SearchSpaceConfig::uss(CandidateCounts::new(candidates).map_err(config_err)?))
}

/// Number of CCEs in a CORESET of `rb_count` RBs by `symbols` OFDM symbols.
#[pyfunction]
fn cce_count(rb_count: u32, symbols: u32) -> PyResult<u32> {
    coreset::cce_count(rb_count, symbols).map_err(config_err)
}

/// Hashing variable for a UE in a slot; 0 for the common search space.
#[pyfunction]
#[pyo3(signature = (c_rnti, coreset_index=0, slot=0, common=false))]
fn y_value(c_rnti: u32, coreset_index: u32, slot: u32, common: bool) -> PyResult<u32> {
    let ue = UeIdentity::new(c_rnti).map_err(config_err)?;
    let space = if common { SearchSpaceType::Css } else { SearchSpaceType::Uss };
    Ok(hash::y_value(ue, coreset_index, slot, space))
}

/// CCE indices of candidate `k` out of `num_candidates` at `aggregation_level`.
#[pyfunction]
fn candidate_cces(aggregation_level: u32, k: u32, cce_count: u32, num_candidates: u32, y: u32) -> PyResult<Vec<u32>> {
    hash::candidate_cces(level(aggregation_level)?, k, cce_count, num_candidates, y)
        .map(|s| s.as_slice().to_vec())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn bundled_scenarios() -> Vec<&'static str> {
    BUNDLED_SCENARIOS.iter().map(|(n, _)| *n).collect()
}

#[pyclass(name = "Coreset", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCoreset(CoresetConfig);

#[pymethods]
impl PyCoreset {
    #[new]
    #[pyo3(signature = (rb_count, symbols, index=0))]
    fn new(rb_count: u32, symbols: u32, index: u32) -> PyResult<Self> {
        CoresetConfig::new(rb_count, symbols, index).map(Self).map_err(config_err)
    }

    #[staticmethod]
    #[pyo3(signature = (cce_count, index=0))]
    fn from_cce_count(cce_count: u32, index: u32) -> PyResult<Self> {
        CoresetConfig::from_cce_count(cce_count, index).map(Self).map_err(config_err)
    }

    #[getter]
    fn cce_count(&self) -> u32 {
        self.0.cce_count()
    }

    #[getter]
    fn rb_count(&self) -> u32 {
        self.0.rb_count()
    }

    #[getter]
    fn symbols(&self) -> u32 {
        self.0.symbol_duration()
    }

    #[getter]
    fn index(&self) -> u32 {
        self.0.coreset_index()
    }

    fn __repr__(&self) -> String {
        format!("Coreset(rb_count={}, symbols={}, index={})", self.rb_count(), self.symbols(), self.index())
    }
}

#[pyclass(name = "SimulationResult", frozen)]
struct PyResult_(SimulationResult);

#[pymethods]
impl PyResult_ {
    #[getter]
    fn blocking_probability(&self) -> f64 {
        self.0.blocking_probability
    }

    #[getter]
    fn stderr(&self) -> f64 {
        self.0.stderr
    }

    #[getter]
    fn blocked_total(&self) -> u64 {
        self.0.blocked_total
    }

    #[getter]
    fn scheduled_total(&self) -> u64 {
        self.0.scheduled_total
    }

    #[getter]
    fn ue_count(&self) -> u32 {
        self.0.ue_count
    }

    #[getter]
    fn iterations(&self) -> u32 {
        self.0.iterations
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.master_seed
    }

    #[getter]
    fn per_iteration_blocked(&self) -> Option<Vec<u32>> {
        self.0.per_iteration_blocked.clone()
    }

    /// Blocking probability per aggregation level, for levels that occurred.
    fn blocking_by_al<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for al in AggregationLevel::ALL {
            if let Some(b) = self.0.blocking_for(al) {
                d.set_item(al.cces(), b)?;
            }
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimulationResult(blocking_probability={:.6}, stderr={:.6}, ue_count={}, iterations={})",
            self.0.blocking_probability, self.0.stderr, self.0.ue_count, self.0.iterations
        )
    }
}

#[pyclass(name = "Scenario")]
struct PyScenario {
    inner: pio::Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (
        ue_count, cce_count, candidates, al_distribution, *,
        strategy="low-to-high-al", candidate_selection="avoid-higher-al",
        iterations=monte_carlo::DEFAULT_ITERATIONS, seed=monte_carlo::DEFAULT_SEED,
        unique_rnti=false, keep_per_iteration=false, coreset_index=0, slot=0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ue_count: u32,
        cce_count: u32,
        candidates: [u8; 5],
        al_distribution: [f64; 5],
        strategy: &str,
        candidate_selection: &str,
        iterations: u32,
        seed: u64,
        unique_rnti: bool,
        keep_per_iteration: bool,
        coreset_index: u32,
        slot: u32,
    ) -> PyResult<Self> {
        let mut ss = search_space(candidates)?;
        ss.slot_index = slot;
        let mut base = ScenarioConfig::new(
            ue_count,
            CoresetConfig::from_cce_count(cce_count, coreset_index).map_err(config_err)?,
            ss,
            AlDistribution::new(al_distribution).map_err(config_err)?,
        );
        base.strategy = self::strategy(strategy)?;
        base.selection = selection(candidate_selection)?;
        base.iterations = iterations;
        base.master_seed = seed;
        base.unique_rnti = unique_rnti;
        base.keep_per_iteration = keep_per_iteration;
        base.validate().map_err(config_err)?;
        let inner = pio::Scenario { name: "custom".into(), description: String::new(), base, points: None, series: None };
        Ok(Self { inner })
    }

    /// Loads a scenario file, or a bundled scenario by name.
    #[staticmethod]
    fn load(source: &str) -> PyResult<Self> {
        pio::parse_scenario(source).map(|inner| Self { inner }).map_err(io_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn description(&self) -> &str {
        &self.inner.description
    }

    #[getter]
    fn ue_count(&self) -> u32 {
        self.inner.base.ue_count
    }

    #[getter]
    fn cce_count(&self) -> u32 {
        self.inner.base.coreset.cce_count()
    }

    #[getter]
    fn is_sweep(&self) -> bool {
        self.inner.is_sweep()
    }

    #[pyo3(signature = (seed=None, iterations=None))]
    fn set_run(&mut self, seed: Option<u64>, iterations: Option<u32>) {
        self.inner.override_run(seed, iterations);
    }

    /// Runs the base configuration.
    fn run(&self, py: Python<'_>) -> PyResult<PyResult_> {
        let inner = &self.inner;
        py.detach(|| inner.simulate()).map(PyResult_).map_err(config_err)
    }

    /// Runs the sweep; returns one dict per point, in the CSV column layout.
    fn sweep<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        if !self.inner.is_sweep() {
            return Err(PyValueError::new_err(format!("{} has no sweep", self.inner.name)));
        }
        let inner = &self.inner;
        let (records, failures) = py.detach(|| inner.sweep_records());
        if let Some((point, e)) = failures.first() {
            return Err(PyValueError::new_err(format!("{point}: {e}")));
        }
        records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("scenario", &r.scenario)?;
                d.set_item("point", &r.point)?;
                d.set_item("blocking_probability", r.blocking_probability)?;
                d.set_item("stderr", r.stderr)?;
                d.set_item("blocked", r.blocked)?;
                d.set_item("scheduled", r.scheduled)?;
                d.set_item("seed", r.seed)?;
                d.set_item("iterations", r.iterations)?;
                Ok(d)
            })
            .collect()
    }
}

/// Smallest CORESET size in CCEs meeting `target_blocking`.
///
/// Returns `(min_cces, achieved_blocking)`; `min_cces` is None when even
/// `cce_max` misses the target.
#[pyfunction]
#[pyo3(signature = (
    ue_count, target_blocking, al_distribution, candidates, *,
    cce_min=1, cce_max=200, iterations=monte_carlo::DEFAULT_ITERATIONS, seed=monte_carlo::DEFAULT_SEED,
    strategy="low-to-high-al", candidate_selection="avoid-higher-al", require_confidence=false,
))]
#[allow(clippy::too_many_arguments)]
fn plan_min_coreset(
    py: Python<'_>,
    ue_count: u32,
    target_blocking: f64,
    al_distribution: [f64; 5],
    candidates: [u8; 5],
    cce_min: u32,
    cce_max: u32,
    iterations: u32,
    seed: u64,
    strategy: &str,
    candidate_selection: &str,
    require_confidence: bool,
) -> PyResult<(Option<u32>, f64)> {
    let req = PlanningRequest {
        ue_count,
        target_blocking,
        al_distribution: AlDistribution::new(al_distribution).map_err(config_err)?,
        search_space: search_space(candidates)?,
        strategy: self::strategy(strategy)?,
        selection: selection(candidate_selection)?,
        iterations,
        cce_min,
        cce_max,
        master_seed: seed,
        coreset_index: 0,
        require_confidence,
    };
    let res = py.detach(|| planner::plan_min_coreset(&req)).map_err(config_err)?;
    Ok((res.min_cces, res.achieved_blocking))
}

/// Blind-decode and CCE counts of one UE against per-slot limits.
#[pyfunction]
#[pyo3(signature = (candidates, cce_count, c_rnti=1, scs_khz=15, coreset_index=0, slot=0))]
fn validate_limits<'py>(
    py: Python<'py>,
    candidates: [u8; 5],
    cce_count: u32,
    c_rnti: u32,
    scs_khz: u32,
    coreset_index: u32,
    slot: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let mut ss = search_space(candidates)?;
    ss.slot_index = slot;
    let coreset = CoresetConfig::from_cce_count(cce_count, coreset_index).map_err(config_err)?;
    let scs = SubcarrierSpacing::from_khz(scs_khz)
        .ok_or_else(|| PyValueError::new_err(format!("unsupported subcarrier spacing {scs_khz} kHz")))?;
    let ue = UeIdentity::new(c_rnti).map_err(config_err)?;
    let r = scheduler::validate_limits(&ss, &coreset, ue, &MonitoringLimits::for_scs(scs));
    let d = PyDict::new(py);
    d.set_item("scs_khz", r.scs_khz)?;
    d.set_item("blind_decodes", r.blind_decodes)?;
    d.set_item("max_blind_decodes", r.max_blind_decodes)?;
    d.set_item("distinct_cces", r.distinct_cces)?;
    d.set_item("max_nonoverlap_cces", r.max_nonoverlap_cces)?;
    d.set_item("within_limits", r.within_limits())?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "pdcch_blocking")]
fn pdcch_blocking_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cce_count, m)?)?;
    m.add_function(wrap_pyfunction!(y_value, m)?)?;
    m.add_function(wrap_pyfunction!(candidate_cces, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(plan_min_coreset, m)?)?;
    m.add_function(wrap_pyfunction!(validate_limits, m)?)?;
    m.add_class::<PyCoreset>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyResult_>()?;
    Ok(())
}
