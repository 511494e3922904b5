//! Monte Carlo estimation of the PDCCH blocking probability and parameter
//! sweeps over scenario axes.
//!
//! Every iteration draws from its own ChaCha8 stream selected by
//! `(master_seed, iteration)`, so results do not depend on how iterations are
//! spread over threads. Tallies are integers and are summed in a fixed order.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coreset::CoresetConfig;
use crate::error::ConfigError;
use crate::hash::{AggregationLevel, CandidateCounts, SearchSpaceConfig, UeIdentity};
use crate::scheduler::{allocate_compact, visit_order, CandidateSelection, CompactUe, SchedulingStrategy};

pub const DEFAULT_ITERATIONS: u32 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Probabilities of ALs 1, 2, 4, 8 and 16.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlDistribution([f64; 5]);

impl AlDistribution {
    pub fn new(probabilities: [f64; 5]) -> Result<Self, ConfigError> {
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(ConfigError::InvalidDistribution(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(ConfigError::InvalidDistribution(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probabilities))
    }

    /// All UEs use `level`.
    pub fn fixed(level: AggregationLevel) -> Self {
        let mut p = [0.0; 5];
        p[level.index()] = 1.0;
        Self(p)
    }

    pub fn probability(&self, level: AggregationLevel) -> f64 {
        self.0[level.index()]
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.0
    }

    /// Mean CCEs requested per UE.
    pub fn mean_cces(&self) -> f64 {
        AggregationLevel::ALL.iter().map(|al| self.probability(*al) * f64::from(al.cces())).sum()
    }

    fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(self.0).expect("validated distribution has positive mass")
    }
}

/// Everything needed to run one blocking-probability estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub ue_count: u32,
    pub coreset: CoresetConfig,
    pub search_space: SearchSpaceConfig,
    pub al_distribution: AlDistribution,
    pub strategy: SchedulingStrategy,
    pub selection: CandidateSelection,
    pub iterations: u32,
    pub master_seed: u64,
    /// Redraw C-RNTIs until all UEs of an iteration are distinct.
    pub unique_rnti: bool,
    /// Keep the blocked count of every iteration in the result.
    pub keep_per_iteration: bool,
}

impl ScenarioConfig {
    /// Defaults: 10000 iterations, low-to-high strategy, seed 1.
    pub fn new(
        ue_count: u32,
        coreset: CoresetConfig,
        search_space: SearchSpaceConfig,
        al_distribution: AlDistribution,
    ) -> Self {
        Self {
            ue_count,
            coreset,
            search_space,
            al_distribution,
            strategy: SchedulingStrategy::default(),
            selection: CandidateSelection::default(),
            iterations: DEFAULT_ITERATIONS,
            master_seed: DEFAULT_SEED,
            unique_rnti: false,
            keep_per_iteration: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ue_count == 0 {
            return Err(ConfigError::InvalidScenario("ue_count must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(ConfigError::InvalidScenario("iterations must be at least 1".into()));
        }
        if self.unique_rnti && self.ue_count > u32::from(u16::MAX) {
            return Err(ConfigError::InvalidScenario("more UEs than distinct C-RNTIs".into()));
        }
        for al in AggregationLevel::ALL {
            if self.al_distribution.probability(al) > 0.0 && self.search_space.candidates.get(al) == 0 {
                return Err(ConfigError::InvalidScenario(format!(
                    "{al} has nonzero probability but no configured candidates"
                )));
            }
        }
        Ok(())
    }
}

/// Aggregate blocking estimate over all iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub blocking_probability: f64,
    pub blocked_total: u64,
    /// UEs that received a candidate; `blocked_total + scheduled_total == U * iterations`.
    pub scheduled_total: u64,
    /// Binomial normal-approximation standard error of `blocking_probability`.
    pub stderr: f64,
    pub ue_count: u32,
    pub iterations: u32,
    pub master_seed: u64,
    pub blocked_by_al: [u64; 5],
    pub attempts_by_al: [u64; 5],
    pub per_iteration_blocked: Option<Vec<u32>>,
}

impl SimulationResult {
    pub fn trials(&self) -> u64 {
        self.blocked_total + self.scheduled_total
    }

    /// Blocking probability of UEs that drew `level`; `None` if none did.
    pub fn blocking_for(&self, level: AggregationLevel) -> Option<f64> {
        let n = self.attempts_by_al[level.index()];
        (n > 0).then(|| self.blocked_by_al[level.index()] as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct IterationTally {
    blocked: u32,
    blocked_by_al: [u32; 5],
    attempts_by_al: [u32; 5],
}

/// RNG for iteration `iteration` of a run seeded with `master_seed`.
pub fn iteration_rng(master_seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(iteration);
    rng
}

struct Prepared<'a> {
    cfg: &'a ScenarioConfig,
    sampler: WeightedIndex<f64>,
    cce_count: u32,
}

impl Prepared<'_> {
    fn run_iteration(&self, iteration: u64) -> IterationTally {
        let cfg = self.cfg;
        let mut rng = iteration_rng(cfg.master_seed, iteration);
        let n = cfg.ue_count as usize;
        let mut rntis: Vec<u16> = Vec::with_capacity(n);
        let mut ues = Vec::with_capacity(n);
        let mut tally = IterationTally::default();
        for _ in 0..n {
            let mut rnti: u16 = rng.gen_range(1..=u16::MAX);
            if cfg.unique_rnti {
                while rntis.contains(&rnti) {
                    rnti = rng.gen_range(1..=u16::MAX);
                }
                rntis.push(rnti);
            }
            let level = AggregationLevel::ALL[self.sampler.sample(&mut rng)];
            tally.attempts_by_al[level.index()] += 1;
            let identity = UeIdentity::new(u32::from(rnti)).expect("drawn from 1..=65535");
            ues.push(CompactUe::hashed(
                identity,
                level,
                &cfg.search_space,
                cfg.coreset.coreset_index(),
                self.cce_count,
            ));
        }
        let order = visit_order(&ues, cfg.strategy, &mut rng);
        let picks = allocate_compact(&ues, &order, self.cce_count, cfg.selection);
        for (ue, pick) in ues.iter().zip(&picks) {
            if pick.is_none() {
                tally.blocked += 1;
                tally.blocked_by_al[ue.level.index()] += 1;
            }
        }
        tally
    }
}

fn summarize(cfg: &ScenarioConfig, tallies: Vec<IterationTally>) -> SimulationResult {
    let mut blocked_total = 0u64;
    let mut blocked_by_al = [0u64; 5];
    let mut attempts_by_al = [0u64; 5];
    for t in &tallies {
        blocked_total += u64::from(t.blocked);
        for i in 0..5 {
            blocked_by_al[i] += u64::from(t.blocked_by_al[i]);
            attempts_by_al[i] += u64::from(t.attempts_by_al[i]);
        }
    }
    let trials = u64::from(cfg.ue_count) * u64::from(cfg.iterations);
    let b = blocked_total as f64 / trials as f64;
    SimulationResult {
        blocking_probability: b,
        blocked_total,
        scheduled_total: trials - blocked_total,
        stderr: (b * (1.0 - b) / trials as f64).sqrt(),
        ue_count: cfg.ue_count,
        iterations: cfg.iterations,
        master_seed: cfg.master_seed,
        blocked_by_al,
        attempts_by_al,
        per_iteration_blocked: cfg.keep_per_iteration.then(|| tallies.iter().map(|t| t.blocked).collect()),
    }
}

fn prepare(cfg: &ScenarioConfig) -> Result<Prepared<'_>, ConfigError> {
    cfg.validate()?;
    Ok(Prepared { cfg, sampler: cfg.al_distribution.sampler(), cce_count: cfg.coreset.cce_count() })
}

/// Runs all iterations on the rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimulationResult, ConfigError> {
    let prepared = prepare(cfg)?;
    let tallies = (0..u64::from(cfg.iterations))
        .into_par_iter()
        .map(|i| prepared.run_iteration(i))
        .collect();
    Ok(summarize(cfg, tallies))
}

/// Runs all iterations on the calling thread.
pub fn run_scenario_serial(cfg: &ScenarioConfig) -> Result<SimulationResult, ConfigError> {
    let prepared = prepare(cfg)?;
    let tallies = (0..u64::from(cfg.iterations)).map(|i| prepared.run_iteration(i)).collect();
    Ok(summarize(cfg, tallies))
}

/// One value along a sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepPoint {
    UeCount(u32),
    /// CORESET size in CCEs; geometry becomes `6*C` RBs by one symbol.
    CoresetSize(u32),
    CandidateCount { level: AggregationLevel, count: u8 },
    /// Every UE uses this AL.
    AlFixed(AggregationLevel),
    AlDistribution { label: String, distribution: AlDistribution },
    Strategy(SchedulingStrategy),
    /// Whole candidate-count vector replaced.
    SearchSpace { label: String, candidates: CandidateCounts },
    Selection(CandidateSelection),
}

impl SweepPoint {
    pub fn label(&self) -> String {
        match self {
            Self::UeCount(u) => u.to_string(),
            Self::CoresetSize(c) => c.to_string(),
            Self::CandidateCount { count, .. } => count.to_string(),
            Self::AlFixed(al) => al.cces().to_string(),
            Self::AlDistribution { label, .. } | Self::SearchSpace { label, .. } => label.clone(),
            Self::Strategy(s) => s.to_string(),
            Self::Selection(s) => s.to_string(),
        }
    }

    /// `base` with this point substituted.
    pub fn apply(&self, base: &ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
        let cfg = self.apply_unchecked(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Like [`apply`](Self::apply) but skips whole-scenario validation, for
    /// outer axes whose result is completed by an inner point.
    pub fn apply_unchecked(&self, base: &ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = base.clone();
        match self {
            Self::UeCount(u) => cfg.ue_count = *u,
            Self::CoresetSize(c) => cfg.coreset = CoresetConfig::from_cce_count(*c, base.coreset.coreset_index())?,
            Self::CandidateCount { level, count } => {
                cfg.search_space.candidates = base.search_space.candidates.with(*level, *count)?
            }
            Self::AlFixed(al) => cfg.al_distribution = AlDistribution::fixed(*al),
            Self::AlDistribution { distribution, .. } => cfg.al_distribution = *distribution,
            Self::Strategy(s) => cfg.strategy = *s,
            Self::SearchSpace { candidates, .. } => cfg.search_space.candidates = *candidates,
            Self::Selection(s) => cfg.selection = *s,
        }
        Ok(cfg)
    }
}

/// Outcome of one sweep point; a bad point does not stop the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub point: SweepPoint,
    pub result: Result<SimulationResult, ConfigError>,
}

/// Runs `base` once per point, in input order. Every point reuses the base
/// master seed, so points share random draws wherever their configs agree.
pub fn run_sweep(base: &ScenarioConfig, points: &[SweepPoint]) -> Vec<SweepEntry> {
    points
        .iter()
        .map(|p| SweepEntry { point: p.clone(), result: p.apply(base).and_then(|cfg| run_scenario(&cfg)) })
        .collect()
}
