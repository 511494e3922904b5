//! Scenario files, the bundled scenario library and result serialization.
//!
//! Scenario and planning files are TOML. Unknown keys are rejected. Every
//! optional key has an explicit default that [`ScenarioFile::normalized`]
//! writes back out.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coreset::CoresetConfig;
use crate::error::ConfigError;
use crate::hash::{AggregationLevel, CandidateCounts, SearchSpaceConfig, SearchSpaceType};
use crate::monte_carlo::{
    run_sweep, AlDistribution, ScenarioConfig, SimulationResult, SweepPoint, DEFAULT_ITERATIONS, DEFAULT_SEED,
};
use crate::planner::{PlanningRequest, PlanningResult};
use crate::scheduler::{CandidateSelection, SchedulingStrategy};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PDCCH_SIM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("parse error in {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid {origin}: {source}")]
    Validation { origin: String, source: ConfigError },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no records to write")]
    EmptyRecords,
}

impl IoError {
    /// Bad input (unreadable, malformed or invalid), as opposed to runtime failures.
    pub fn is_user_error(&self) -> bool {
        matches!(self, Self::Read { .. } | Self::Parse { .. } | Self::Validation { .. } | Self::EmptyRecords)
    }
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        /// Scenario files shipped with the crate, by name.
        pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*
        ];
    };
}

bundled!(
    "baseline",
    "fig4_ue_sweep",
    "fig5_coreset_sweep",
    "fig6_candidates_al1",
    "fig6_candidates_al2",
    "fig6_candidates_al4",
    "fig7_al_fixed",
    "fig8_coverage",
    "fig9_bd_capability",
    "fig10_strategy",
    "fig11_min_coreset",
);

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    BUNDLED_SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Reads `source` as a file path, falling back to a bundled scenario name.
pub fn load_source(source: &str) -> Result<(String, String), IoError> {
    let path = Path::new(source);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
        return Ok((path.display().to_string(), text));
    }
    match bundled_scenario(source) {
        Some(text) => Ok((format!("bundled scenario {source}"), text.to_string())),
        None => Err(IoError::Read {
            path: path.into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or bundled scenario"),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoresetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cce_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<u32>,
    #[serde(default)]
    pub index: u32,
}

impl CoresetSpec {
    fn build(&self) -> Result<CoresetConfig, ConfigError> {
        match (self.cce_count, self.rb_count, self.symbols) {
            (Some(c), None, None) => CoresetConfig::from_cce_count(c, self.index),
            (None, Some(q), Some(d)) => CoresetConfig::new(q, d, self.index),
            _ => Err(ConfigError::InvalidGeometry(
                "give either cce_count, or rb_count together with symbols".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpaceSpec {
    /// `M_L` for ALs 1, 2, 4, 8, 16.
    pub candidates: [u8; 5],
    #[serde(rename = "type", default)]
    pub space_type: SearchSpaceType,
    #[serde(default)]
    pub slot: u32,
}

impl SearchSpaceSpec {
    fn build(&self) -> Result<SearchSpaceConfig, ConfigError> {
        Ok(SearchSpaceConfig {
            candidates: CandidateCounts::new(self.candidates)?,
            space_type: self.space_type,
            slot_index: self.slot,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDistribution {
    pub label: String,
    pub probabilities: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedCandidates {
    pub label: String,
    pub candidates: [u8; 5],
}

/// One sweep axis and its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisSpec {
    UeCount { points: Vec<u32> },
    CoresetSize { points: Vec<u32> },
    CandidateCount { aggregation_level: u32, points: Vec<u8> },
    AlFixed { points: Vec<u32> },
    AlDistribution { points: Vec<NamedDistribution> },
    Strategy { points: Vec<SchedulingStrategy> },
    SearchSpace { points: Vec<NamedCandidates> },
    CandidateSelection { points: Vec<CandidateSelection> },
}

impl AxisSpec {
    pub fn points(&self) -> Result<Vec<SweepPoint>, ConfigError> {
        let pts: Vec<SweepPoint> = match self {
            Self::UeCount { points } => points.iter().map(|&u| SweepPoint::UeCount(u)).collect(),
            Self::CoresetSize { points } => points.iter().map(|&c| SweepPoint::CoresetSize(c)).collect(),
            Self::CandidateCount { aggregation_level, points } => {
                let level = AggregationLevel::from_cces(*aggregation_level)?;
                points.iter().map(|&count| SweepPoint::CandidateCount { level, count }).collect()
            }
            Self::AlFixed { points } => points
                .iter()
                .map(|&l| AggregationLevel::from_cces(l).map(SweepPoint::AlFixed))
                .collect::<Result<_, _>>()?,
            Self::AlDistribution { points } => points
                .iter()
                .map(|d| {
                    Ok(SweepPoint::AlDistribution {
                        label: d.label.clone(),
                        distribution: AlDistribution::new(d.probabilities)?,
                    })
                })
                .collect::<Result<_, ConfigError>>()?,
            Self::Strategy { points } => points.iter().map(|&s| SweepPoint::Strategy(s)).collect(),
            Self::SearchSpace { points } => points
                .iter()
                .map(|c| {
                    Ok(SweepPoint::SearchSpace { label: c.label.clone(), candidates: CandidateCounts::new(c.candidates)? })
                })
                .collect::<Result<_, ConfigError>>()?,
            Self::CandidateSelection { points } => points.iter().map(|&s| SweepPoint::Selection(s)).collect(),
        };
        if pts.is_empty() {
            return Err(ConfigError::InvalidScenario("sweep axis has no points".into()));
        }
        Ok(pts)
    }
}

/// Raw form of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub ue_count: u32,
    /// Probabilities of ALs 1, 2, 4, 8, 16.
    pub al_distribution: [f64; 5],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<SchedulingStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_selection: Option<CandidateSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique_rnti: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_per_iteration: Option<bool>,
    pub coreset: CoresetSpec,
    pub search_space: SearchSpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<AxisSpec>,
    /// Outer axis: the whole sweep is repeated once per series point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<AxisSpec>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Parse { origin: origin.into(), message: e.to_string() })
    }

    /// Same file with every default written out.
    pub fn normalized(&self) -> Self {
        let mut f = self.clone();
        f.iterations.get_or_insert(DEFAULT_ITERATIONS);
        f.seed.get_or_insert(DEFAULT_SEED);
        f.strategy.get_or_insert_with(SchedulingStrategy::default);
        f.candidate_selection.get_or_insert_with(CandidateSelection::default);
        f.unique_rnti.get_or_insert(false);
        f.keep_per_iteration.get_or_insert(false);
        f
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    /// Validates the file into a runnable [`Scenario`].
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let f = self.normalized();
        let mut base = ScenarioConfig::new(
            f.ue_count,
            f.coreset.build()?,
            f.search_space.build()?,
            AlDistribution::new(f.al_distribution)?,
        );
        base.iterations = f.iterations.unwrap_or(DEFAULT_ITERATIONS);
        base.master_seed = f.seed.unwrap_or(DEFAULT_SEED);
        base.strategy = f.strategy.unwrap_or_default();
        base.selection = f.candidate_selection.unwrap_or_default();
        base.unique_rnti = f.unique_rnti.unwrap_or(false);
        base.keep_per_iteration = f.keep_per_iteration.unwrap_or(false);

        let points = f.sweep.as_ref().map(AxisSpec::points).transpose()?;
        let series = f.series.as_ref().map(AxisSpec::points).transpose()?;
        if series.is_some() && points.is_none() {
            return Err(ConfigError::InvalidScenario("series given without a sweep".into()));
        }
        if points.is_none() {
            base.validate()?;
        }
        for p in points.iter().chain(series.iter()).flatten() {
            p.apply_unchecked(&base)?;
        }
        Ok(Scenario { name: f.name, description: f.description, base, points, series })
    }
}

/// A validated scenario, optionally with sweep and series axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub base: ScenarioConfig,
    pub points: Option<Vec<SweepPoint>>,
    pub series: Option<Vec<SweepPoint>>,
}

impl Scenario {
    pub fn is_sweep(&self) -> bool {
        self.points.is_some()
    }

    /// Overrides seed and iteration count from the command line.
    pub fn override_run(&mut self, seed: Option<u64>, iterations: Option<u32>) {
        if let Some(s) = seed {
            self.base.master_seed = s;
        }
        if let Some(i) = iterations {
            self.base.iterations = i;
        }
    }

    /// Runs the base configuration only.
    pub fn simulate(&self) -> Result<SimulationResult, ConfigError> {
        crate::monte_carlo::run_scenario(&self.base)
    }

    /// Runs every (series, point) pair. Returns `(series label, point, result)`.
    pub fn sweep(&self) -> Vec<(Option<String>, crate::monte_carlo::SweepEntry)> {
        let Some(points) = &self.points else {
            return Vec::new();
        };
        match &self.series {
            None => run_sweep(&self.base, points).into_iter().map(|e| (None, e)).collect(),
            Some(series) => series
                .iter()
                .flat_map(|s| {
                    let label = s.label();
                    match s.apply_unchecked(&self.base) {
                        Ok(base) => run_sweep(&base, points).into_iter().map(|e| (Some(label.clone()), e)).collect(),
                        Err(err) => points
                            .iter()
                            .map(|p| {
                                (
                                    Some(label.clone()),
                                    crate::monte_carlo::SweepEntry { point: p.clone(), result: Err(err.clone()) },
                                )
                            })
                            .collect::<Vec<_>>(),
                    }
                })
                .collect(),
        }
    }

    /// Result records for a sweep, skipping failed points.
    pub fn sweep_records(&self) -> (Vec<ResultRecord>, Vec<(String, ConfigError)>) {
        let mut records = Vec::new();
        let mut failures = Vec::new();
        for (series, entry) in self.sweep() {
            let scenario = match &series {
                Some(s) => format!("{}/{}", self.name, s),
                None => self.name.clone(),
            };
            match entry.result {
                Ok(r) => records.push(ResultRecord::new(&scenario, &entry.point.label(), &r)),
                Err(e) => failures.push((format!("{scenario} @ {}", entry.point.label()), e)),
            }
        }
        (records, failures)
    }
}

/// Parses and validates a scenario file or bundled scenario name.
pub fn parse_scenario(source: &str) -> Result<Scenario, IoError> {
    let (origin, text) = load_source(source)?;
    ScenarioFile::from_toml(&text, &origin)?.build().map_err(|source| IoError::Validation { origin, source })
}

/// Raw form of a CORESET planning file. One request is made per
/// `(ue_count, target)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub ue_counts: Vec<u32>,
    pub targets: Vec<f64>,
    pub al_distribution: [f64; 5],
    pub cce_min: u32,
    pub cce_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<SchedulingStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_selection: Option<CandidateSelection>,
    #[serde(default)]
    pub require_confidence: bool,
    #[serde(default)]
    pub coreset_index: u32,
    pub search_space: SearchSpaceSpec,
}

impl PlanFile {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Parse { origin: origin.into(), message: e.to_string() })
    }

    pub fn requests(&self) -> Result<Vec<PlanningRequest>, ConfigError> {
        if self.ue_counts.is_empty() || self.targets.is_empty() {
            return Err(ConfigError::InvalidPlanningRequest("ue_counts and targets must be non-empty".into()));
        }
        let al_distribution = AlDistribution::new(self.al_distribution)?;
        let search_space = self.search_space.build()?;
        let mut out = Vec::new();
        for &ue_count in &self.ue_counts {
            for &target_blocking in &self.targets {
                let req = PlanningRequest {
                    ue_count,
                    target_blocking,
                    al_distribution,
                    search_space,
                    strategy: self.strategy.unwrap_or_default(),
                    selection: self.candidate_selection.unwrap_or_default(),
                    iterations: self.iterations.unwrap_or(DEFAULT_ITERATIONS),
                    cce_min: self.cce_min,
                    cce_max: self.cce_max,
                    master_seed: self.seed.unwrap_or(DEFAULT_SEED),
                    coreset_index: self.coreset_index,
                    require_confidence: self.require_confidence,
                };
                req.validate()?;
                out.push(req);
            }
        }
        Ok(out)
    }
}

pub fn parse_plan(source: &str) -> Result<(PlanFile, Vec<PlanningRequest>), IoError> {
    let (origin, text) = load_source(source)?;
    let file = PlanFile::from_toml(&text, &origin)?;
    let requests = file.requests().map_err(|source| IoError::Validation { origin, source })?;
    Ok((file, requests))
}

/// Formats `x` with its shortest round-trip digits, padded with zeros to at
/// least six significant digits.
pub fn format_significant(x: f64) -> String {
    const MIN_DIGITS: usize = 6;
    if !x.is_finite() {
        return x.to_string();
    }
    let mut s = x.to_string();
    let digits = s.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    let significant = if x == 0.0 { 1 } else { digits.trim_start_matches('0').len() };
    if significant < MIN_DIGITS {
        if !s.contains('.') {
            s.push('.');
        }
        let pad = MIN_DIGITS - significant;
        s.extend(std::iter::repeat_n('0', if x == 0.0 { pad + 1 } else { pad }));
    }
    s
}

fn raw_float<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = serde_json::value::RawValue::from_string(format_significant(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// One row of simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub point: String,
    #[serde(serialize_with = "raw_float")]
    pub blocking_probability: f64,
    #[serde(serialize_with = "raw_float")]
    pub stderr: f64,
    pub blocked: u64,
    pub scheduled: u64,
    pub seed: u64,
    pub iterations: u32,
}

impl ResultRecord {
    pub fn new(scenario: &str, point: &str, r: &SimulationResult) -> Self {
        Self {
            scenario: scenario.into(),
            point: point.into(),
            blocking_probability: r.blocking_probability,
            stderr: r.stderr,
            blocked: r.blocked_total,
            scheduled: r.scheduled_total,
            seed: r.master_seed,
            iterations: r.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

pub const CSV_HEADER: [&str; 8] =
    ["scenario", "point", "blocking_probability", "stderr", "blocked", "scheduled", "seed", "iterations"];

/// Serializes records to a string in `format`.
pub fn render_results(records: &[ResultRecord], format: OutputFormat) -> Result<String, IoError> {
    if records.is_empty() {
        return Err(IoError::EmptyRecords);
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in records {
                w.write_record([
                    r.scenario.clone(),
                    r.point.clone(),
                    format_significant(r.blocking_probability),
                    format_significant(r.stderr),
                    r.blocked.to_string(),
                    r.scheduled.to_string(),
                    r.seed.to_string(),
                    r.iterations.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| IoError::Csv(e.into_error().into()))?;
            Ok(String::from_utf8(bytes).expect("CSV from UTF-8 fields"))
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(records)? + "\n"),
    }
}

pub fn emit_results(records: &[ResultRecord], format: OutputFormat, path: &Path) -> Result<(), IoError> {
    let text = render_results(records, format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.into(), source })?;
    }
    fs::write(path, text).map_err(|source| IoError::Write { path: path.into(), source })
}

pub fn read_results(text: &str, format: OutputFormat) -> Result<Vec<ResultRecord>, IoError> {
    match format {
        OutputFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            Ok(r.deserialize().collect::<Result<_, _>>()?)
        }
        OutputFormat::Json => Ok(serde_json::from_str(text)?),
    }
}

/// Output directory from [`OUT_DIR_ENV`], else [`DEFAULT_OUT_DIR`].
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// One row of planner output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub scenario: String,
    pub ue_count: u32,
    pub target_blocking: f64,
    pub min_cces: Option<u32>,
    pub achieved_blocking: f64,
    pub evaluations: usize,
    pub seed: u64,
    pub iterations: u32,
}

impl PlanRecord {
    pub fn new(scenario: &str, req: &PlanningRequest, res: &PlanningResult) -> Self {
        Self {
            scenario: scenario.into(),
            ue_count: req.ue_count,
            target_blocking: req.target_blocking,
            min_cces: res.min_cces,
            achieved_blocking: res.achieved_blocking,
            evaluations: res.evaluations.len(),
            seed: req.master_seed,
            iterations: req.iterations,
        }
    }
}

pub fn render_plan(records: &[PlanRecord], format: OutputFormat) -> Result<String, IoError> {
    if records.is_empty() {
        return Err(IoError::EmptyRecords);
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in records {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| IoError::Csv(e.into_error().into()))?;
            Ok(String::from_utf8(bytes).expect("CSV from UTF-8 fields"))
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(records)? + "\n"),
    }
}
