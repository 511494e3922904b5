//! Minimum CORESET size (in CCEs) that meets a blocking-probability target.

use crate::coreset::CoresetConfig;
use crate::error::ConfigError;
use crate::hash::SearchSpaceConfig;
use crate::monte_carlo::{run_scenario, AlDistribution, ScenarioConfig, SimulationResult};
use crate::scheduler::{CandidateSelection, SchedulingStrategy};

/// Sizes below the bisection answer that are re-checked one by one.
pub const CONFIRMATION_WINDOW: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningRequest {
    pub ue_count: u32,
    pub target_blocking: f64,
    pub al_distribution: AlDistribution,
    pub search_space: SearchSpaceConfig,
    pub strategy: SchedulingStrategy,
    pub selection: CandidateSelection,
    pub iterations: u32,
    pub cce_min: u32,
    pub cce_max: u32,
    pub master_seed: u64,
    pub coreset_index: u32,
    /// Require `B + 2*stderr <= target` instead of `B <= target`.
    pub require_confidence: bool,
}

impl PlanningRequest {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::InvalidPlanningRequest(m));
        if !(self.target_blocking > 0.0 && self.target_blocking < 1.0) {
            return bad(format!("target_blocking {} not in (0, 1)", self.target_blocking));
        }
        if self.cce_min < 1 || self.cce_max < self.cce_min {
            return bad(format!("CCE range [{}, {}] is empty", self.cce_min, self.cce_max));
        }
        if self.ue_count == 0 || self.iterations == 0 {
            return bad("ue_count and iterations must be at least 1".into());
        }
        Ok(())
    }

    fn scenario(&self, cces: u32) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::new(
            self.ue_count,
            CoresetConfig::from_cce_count(cces, self.coreset_index)?,
            self.search_space,
            self.al_distribution,
        );
        cfg.strategy = self.strategy;
        cfg.selection = self.selection;
        cfg.iterations = self.iterations;
        cfg.master_seed = self.master_seed;
        Ok(cfg)
    }

    fn meets(&self, r: &SimulationResult) -> bool {
        let b = if self.require_confidence { r.blocking_probability + 2.0 * r.stderr } else { r.blocking_probability };
        b <= self.target_blocking
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cce_count: u32,
    pub blocking_probability: f64,
    pub stderr: f64,
    pub meets_target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningResult {
    pub min_cces: Option<u32>,
    /// Estimate at `min_cces`, or at `cce_max` when nothing qualified.
    pub achieved_blocking: f64,
    /// Every size simulated, in evaluation order.
    pub evaluations: Vec<Evaluation>,
}

impl PlanningResult {
    pub fn evaluation(&self, cces: u32) -> Option<&Evaluation> {
        self.evaluations.iter().find(|e| e.cce_count == cces)
    }

    /// A one-symbol CORESET of `min_cces` CCEs.
    pub fn coreset(&self, coreset_index: u32) -> Option<CoresetConfig> {
        self.min_cces.and_then(|c| CoresetConfig::from_cce_count(c, coreset_index).ok())
    }
}

struct Evaluator<'a> {
    req: &'a PlanningRequest,
    evaluations: Vec<Evaluation>,
}

impl Evaluator<'_> {
    fn meets(&mut self, cces: u32) -> Result<bool, ConfigError> {
        if let Some(e) = self.evaluations.iter().find(|e| e.cce_count == cces) {
            return Ok(e.meets_target);
        }
        let r = run_scenario(&self.req.scenario(cces)?)?;
        let meets_target = self.req.meets(&r);
        self.evaluations.push(Evaluation {
            cce_count: cces,
            blocking_probability: r.blocking_probability,
            stderr: r.stderr,
            meets_target,
        });
        Ok(meets_target)
    }

    fn blocking(&self, cces: u32) -> f64 {
        self.evaluations.iter().find(|e| e.cce_count == cces).map_or(f64::NAN, |e| e.blocking_probability)
    }
}

/// Bisection for the smallest passing size, then a downward scan below it.
///
/// The scan checks the [`CONFIRMATION_WINDOW`] sizes under the bisection
/// answer and restarts the window whenever a smaller size passes, so the size
/// just below the returned answer is always a recorded failure.
pub fn plan_min_coreset(req: &PlanningRequest) -> Result<PlanningResult, ConfigError> {
    req.validate()?;
    let mut ev = Evaluator { req, evaluations: Vec::new() };

    if !ev.meets(req.cce_max)? {
        let achieved_blocking = ev.blocking(req.cce_max);
        return Ok(PlanningResult { min_cces: None, achieved_blocking, evaluations: ev.evaluations });
    }

    // Invariant: `hi` passes; everything below `lo` is unexplored or failing.
    let (mut lo, mut hi) = (req.cce_min, req.cce_max);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ev.meets(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }

    let mut best = hi;
    let mut probe = hi;
    let mut misses = 0;
    while probe > req.cce_min && misses < CONFIRMATION_WINDOW {
        probe -= 1;
        if ev.meets(probe)? {
            best = probe;
            misses = 0;
        } else {
            misses += 1;
        }
    }

    let achieved_blocking = ev.blocking(best);
    Ok(PlanningResult { min_cces: Some(best), achieved_blocking, evaluations: ev.evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::CandidateCounts;

    fn request(ue_count: u32, target: f64) -> PlanningRequest {
        PlanningRequest {
            ue_count,
            target_blocking: target,
            al_distribution: AlDistribution::new([0.05, 0.2, 0.5, 0.2, 0.05]).unwrap(),
            search_space: SearchSpaceConfig::uss(CandidateCounts::new([6, 6, 4, 2, 1]).unwrap()),
            strategy: SchedulingStrategy::LowToHighAl,
            selection: CandidateSelection::default(),
            iterations: 400,
            cce_min: 16,
            cce_max: 128,
            master_seed: 3,
            coreset_index: 0,
            require_confidence: false,
        }
    }

    fn check_invariants(req: &PlanningRequest, res: &PlanningResult) {
        match res.min_cces {
            Some(c) => {
                let e = res.evaluation(c).unwrap();
                assert!(e.meets_target && res.achieved_blocking <= req.target_blocking);
                if c > req.cce_min {
                    assert!(!res.evaluation(c - 1).expect("size below answer evaluated").meets_target);
                }
            }
            None => assert!(res.evaluations.iter().all(|e| !e.meets_target)),
        }
    }

    #[test]
    fn single_ue_takes_minimum() {
        let mut req = request(1, 0.5);
        req.iterations = 100;
        let res = plan_min_coreset(&req).unwrap();
        assert_eq!(res.min_cces, Some(16));
        assert_eq!(res.achieved_blocking, 0.0);
        check_invariants(&req, &res);
    }

    #[test]
    fn unreachable_target_returns_none() {
        let mut req = request(40, 0.01);
        req.cce_max = 20;
        let res = plan_min_coreset(&req).unwrap();
        assert_eq!(res.min_cces, None);
        assert_eq!(res.evaluations.len(), 1);
        check_invariants(&req, &res);
    }

    #[test]
    fn answer_is_backed_by_evaluations() {
        for (u, t) in [(5, 0.2), (10, 0.1), (8, 0.15)] {
            let req = request(u, t);
            let res = plan_min_coreset(&req).unwrap();
            check_invariants(&req, &res);
        }
    }

    #[test]
    fn tighter_target_never_needs_less() {
        let loose = plan_min_coreset(&request(8, 0.2)).unwrap().min_cces.unwrap();
        let tight = plan_min_coreset(&request(8, 0.05)).unwrap().min_cces.unwrap();
        assert!(tight >= loose, "{tight} < {loose}");
    }

    #[test]
    fn confidence_mode_is_stricter() {
        let plain = plan_min_coreset(&request(8, 0.1)).unwrap().min_cces.unwrap();
        let mut req = request(8, 0.1);
        req.require_confidence = true;
        let conf = plan_min_coreset(&req).unwrap().min_cces.unwrap();
        assert!(conf >= plain);
    }

    #[test]
    fn rejects_bad_requests() {
        let mut req = request(5, 0.0);
        assert!(plan_min_coreset(&req).is_err());
        req.target_blocking = 0.1;
        req.cce_min = 0;
        assert!(plan_min_coreset(&req).is_err());
        req.cce_min = 50;
        req.cce_max = 40;
        assert!(plan_min_coreset(&req).is_err());
    }
}
