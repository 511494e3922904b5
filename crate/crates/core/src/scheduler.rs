//! Greedy PDCCH candidate allocation within one CORESET opportunity.
//!
//! UEs are visited in strategy order. Each visited UE takes one of its
//! candidates whose CCEs are all still free, or is blocked. A blocked UE
//! consumes nothing and is never revisited.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coreset::{CceMask, CceSet, CoresetConfig};
use crate::hash::{
    candidate_start, y_value, AggregationLevel, Candidate, SearchSpaceConfig, UeIdentity,
};

/// Most candidates a search space can configure for one AL.
pub(crate) const MAX_CANDIDATES: usize = 8;

/// Order in which UEs are offered to the allocator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulingStrategy {
    /// Lowest aggregation level first.
    #[default]
    LowToHighAl,
    /// Highest aggregation level first.
    HighToLowAl,
}

impl fmt::Display for SchedulingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LowToHighAl => "low-to-high-al",
            Self::HighToLowAl => "high-to-low-al",
        })
    }
}

/// Which free candidate a UE receives when several are available.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSelection {
    /// The free candidate with the lowest candidate index.
    LowestIndex,
    /// The free candidate overlapping the fewest candidates (occupied or
    /// not) of not-yet-visited UEs with a higher AL; ties go to the lowest
    /// candidate index. Reduces to `LowestIndex` when no higher-AL UE is
    /// still pending, e.g. under high-to-low ordering.
    #[default]
    AvoidHigherAl,
    /// The free candidate overlapping the fewest still-free candidates of
    /// all not-yet-visited UEs; ties go to the lowest candidate index.
    LeastConflict,
}

impl fmt::Display for CandidateSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LowestIndex => "lowest-index",
            Self::AvoidHigherAl => "avoid-higher-al",
            Self::LeastConflict => "least-conflict",
        })
    }
}

/// One UE as seen by the allocator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeContext {
    pub identity: UeIdentity,
    pub aggregation_level: AggregationLevel,
    pub candidates: Vec<Candidate>,
}

impl UeContext {
    /// Builds the UE's candidate list for `level` from the hash. An AL that
    /// does not fit in the CORESET yields an empty list, so the UE will be
    /// blocked.
    pub fn new(
        identity: UeIdentity,
        level: AggregationLevel,
        search_space: &SearchSpaceConfig,
        coreset: &CoresetConfig,
    ) -> Self {
        let candidates =
            crate::hash::ue_candidate_set(identity, search_space, coreset, level).unwrap_or_default();
        Self { identity, aggregation_level: level, candidates }
    }
}

/// Result of one allocation round. UEs are referred to by their position in
/// the input list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationOutcome {
    /// `assignments[i]` is the candidate given to UE `i`, `None` if blocked.
    pub assignments: Vec<Option<Candidate>>,
    /// Positions of blocked UEs, ascending.
    pub blocked_ues: Vec<usize>,
    pub used_cces: CceSet,
    /// Positions in the order they were visited.
    pub visit_order: Vec<usize>,
}

impl AllocationOutcome {
    pub fn blocked_count(&self) -> usize {
        self.blocked_ues.len()
    }

    pub fn assigned_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_some()).count()
    }
}

/// Allocates candidates with the default [`CandidateSelection`].
pub fn allocate<R: Rng + ?Sized>(
    ues: &[UeContext],
    coreset: &CoresetConfig,
    strategy: SchedulingStrategy,
    rng: &mut R,
) -> AllocationOutcome {
    allocate_with(ues, coreset, strategy, CandidateSelection::default(), rng)
}

pub fn allocate_with<R: Rng + ?Sized>(
    ues: &[UeContext],
    coreset: &CoresetConfig,
    strategy: SchedulingStrategy,
    selection: CandidateSelection,
    rng: &mut R,
) -> AllocationOutcome {
    let cce_count = coreset.cce_count();
    let compact: Vec<CompactUe> = ues
        .iter()
        .map(|ue| {
            assert!(
                ue.candidates.iter().all(|c| c.aggregation_level == ue.aggregation_level),
                "candidate AL differs from the UE's AL"
            );
            CompactUe::from_starts(ue.aggregation_level, ue.candidates.iter().map(|c| c.first_cce()))
        })
        .collect();
    for ue in &compact {
        assert!(
            ue.starts().iter().all(|&s| s + ue.level.cces() <= cce_count),
            "candidate outside the CORESET"
        );
    }
    let order = visit_order(&compact, strategy, rng);
    let picks = allocate_compact(&compact, &order, cce_count, selection);

    let mut used_cces = CceSet::new();
    let mut blocked_ues = Vec::new();
    let assignments = picks
        .iter()
        .enumerate()
        .map(|(i, pick)| match pick {
            Some(slot) => {
                let cand = ues[i].candidates[*slot as usize].clone();
                used_cces.extend(&cand.cces);
                Some(cand)
            }
            None => {
                blocked_ues.push(i);
                None
            }
        })
        .collect();
    AllocationOutcome { assignments, blocked_ues, used_cces, visit_order: order }
}

/// `blocked / total_ues`.
pub fn blocking_ratio(outcome: &AllocationOutcome, total_ues: usize) -> f64 {
    assert!(total_ues >= 1, "blocking ratio needs at least one UE");
    assert!(outcome.blocked_count() <= total_ues);
    outcome.blocked_count() as f64 / total_ues as f64
}

/// Allocation-ready view of a UE: its AL and candidate start CCEs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CompactUe {
    pub level: AggregationLevel,
    starts: [u32; MAX_CANDIDATES],
    len: u8,
}

impl CompactUe {
    pub(crate) fn from_starts<I: IntoIterator<Item = u32>>(level: AggregationLevel, starts: I) -> Self {
        let mut ue = Self { level, starts: [0; MAX_CANDIDATES], len: 0 };
        for s in starts {
            assert!((ue.len as usize) < MAX_CANDIDATES, "more than {MAX_CANDIDATES} candidates");
            ue.starts[ue.len as usize] = s;
            ue.len += 1;
        }
        ue
    }

    /// Hashes the UE's candidates for `level`; empty when the AL does not fit.
    pub(crate) fn hashed(
        identity: UeIdentity,
        level: AggregationLevel,
        search_space: &SearchSpaceConfig,
        coreset_index: u32,
        cce_count: u32,
    ) -> Self {
        let y = y_value(identity, coreset_index, search_space.slot_index, search_space.space_type);
        let m = u32::from(search_space.candidates.get(level));
        let starts = (0..m).map_while(|k| candidate_start(level, k, cce_count, m, y).ok());
        Self::from_starts(level, starts)
    }

    pub(crate) fn starts(&self) -> &[u32] {
        &self.starts[..self.len as usize]
    }
}

/// Strategy order with equal-AL ties broken by a random permutation.
pub(crate) fn visit_order<R: Rng + ?Sized>(
    ues: &[CompactUe],
    strategy: SchedulingStrategy,
    rng: &mut R,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ues.len()).collect();
    order.shuffle(rng);
    match strategy {
        SchedulingStrategy::LowToHighAl => order.sort_by_key(|&i| ues[i].level),
        SchedulingStrategy::HighToLowAl => order.sort_by_key(|&i| std::cmp::Reverse(ues[i].level)),
    }
    order
}

/// Core greedy pass. Returns, per UE, the chosen candidate slot or `None`.
pub(crate) fn allocate_compact(
    ues: &[CompactUe],
    order: &[usize],
    cce_count: u32,
    selection: CandidateSelection,
) -> Vec<Option<u8>> {
    let mut mask = CceMask::new(cce_count);
    let mut picks = vec![None; ues.len()];
    for (pos, &i) in order.iter().enumerate() {
        let ue = &ues[i];
        let width = ue.level.cces();
        let mut free = ue.starts().iter().enumerate().filter(|(_, &s)| mask.is_free(s, width));
        let pending = &order[pos + 1..];
        let chosen = match selection {
            CandidateSelection::LowestIndex => free.next(),
            CandidateSelection::AvoidHigherAl => free
                .min_by_key(|&(slot, &s)| (higher_al_overlaps(s, ue.level, ues, pending), slot)),
            CandidateSelection::LeastConflict => {
                free.min_by_key(|&(slot, &s)| (free_conflicts(s, width, ues, pending, &mask), slot))
            }
        };
        if let Some((slot, &start)) = chosen {
            mask.occupy(start, width);
            picks[i] = Some(slot as u8);
        }
    }
    picks
}

/// Candidates of pending UEs above `level` that `start..start+level` overlaps.
/// Repeated candidates of one UE count once each.
fn higher_al_overlaps(start: u32, level: AggregationLevel, ues: &[CompactUe], pending: &[usize]) -> u32 {
    let end = start + level.cces();
    let mut n = 0;
    for other in pending.iter().map(|&j| &ues[j]).filter(|o| o.level > level) {
        let w = other.level.cces();
        n += other.starts().iter().filter(|&&s| s < end && start < s + w).count() as u32;
    }
    n
}

/// Distinct still-free candidates of pending UEs that `start..start+width` overlaps.
fn free_conflicts(start: u32, width: u32, ues: &[CompactUe], pending: &[usize], mask: &CceMask) -> u32 {
    let end = start + width;
    let mut n = 0;
    for other in pending.iter().map(|&j| &ues[j]) {
        let w = other.level.cces();
        let starts = other.starts();
        for (c, &s) in starts.iter().enumerate() {
            if !starts[..c].contains(&s) && s < end && start < s + w && mask.is_free(s, w) {
                n += 1;
            }
        }
    }
    n
}

/// Subcarrier spacing, which sets the per-slot monitoring limits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubcarrierSpacing {
    #[default]
    #[serde(rename = "15")]
    Khz15,
    #[serde(rename = "30")]
    Khz30,
    #[serde(rename = "60")]
    Khz60,
    #[serde(rename = "120")]
    Khz120,
}

impl SubcarrierSpacing {
    pub fn from_khz(khz: u32) -> Option<Self> {
        match khz {
            15 => Some(Self::Khz15),
            30 => Some(Self::Khz30),
            60 => Some(Self::Khz60),
            120 => Some(Self::Khz120),
            _ => None,
        }
    }

    pub fn khz(self) -> u32 {
        match self {
            Self::Khz15 => 15,
            Self::Khz30 => 30,
            Self::Khz60 => 60,
            Self::Khz120 => 120,
        }
    }
}

/// Per-slot blind-decode and non-overlapping-CCE budget of a UE
/// (no carrier aggregation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonitoringLimits {
    pub max_blind_decodes: u32,
    pub max_nonoverlap_cces: u32,
    pub scs: SubcarrierSpacing,
}

impl MonitoringLimits {
    pub fn for_scs(scs: SubcarrierSpacing) -> Self {
        let (bd, cce) = match scs {
            SubcarrierSpacing::Khz15 => (44, 56),
            SubcarrierSpacing::Khz30 => (36, 56),
            SubcarrierSpacing::Khz60 => (22, 48),
            SubcarrierSpacing::Khz120 => (20, 32),
        };
        Self { max_blind_decodes: bd, max_nonoverlap_cces: cce, scs }
    }
}

impl Default for MonitoringLimits {
    fn default() -> Self {
        Self::for_scs(SubcarrierSpacing::Khz15)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitReport {
    pub scs_khz: u32,
    pub blind_decodes: u32,
    pub max_blind_decodes: u32,
    pub distinct_cces: u32,
    pub max_nonoverlap_cces: u32,
    pub blind_decodes_exceeded: bool,
    pub cces_exceeded: bool,
}

impl LimitReport {
    pub fn within_limits(&self) -> bool {
        !self.blind_decodes_exceeded && !self.cces_exceeded
    }
}

/// Counts one blind decode per configured candidate (single DCI size) and
/// the distinct CCEs covered by all of the UE's candidates across ALs.
pub fn validate_limits(
    cfg: &SearchSpaceConfig,
    coreset: &CoresetConfig,
    ue: UeIdentity,
    limits: &MonitoringLimits,
) -> LimitReport {
    let blind_decodes = cfg.candidates.total();
    let mut covered = CceSet::new();
    for level in AggregationLevel::ALL {
        if let Ok(cands) = crate::hash::ue_candidate_set(ue, cfg, coreset, level) {
            for c in &cands {
                covered.extend(&c.cces);
            }
        }
    }
    let distinct_cces = covered.len() as u32;
    LimitReport {
        scs_khz: limits.scs.khz(),
        blind_decodes,
        max_blind_decodes: limits.max_blind_decodes,
        distinct_cces,
        max_nonoverlap_cces: limits.max_nonoverlap_cces,
        blind_decodes_exceeded: blind_decodes > limits.max_blind_decodes,
        cces_exceeded: distinct_cces > limits.max_nonoverlap_cces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::{CandidateCounts, SearchSpaceType};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ue(rnti: u32) -> UeIdentity {
        UeIdentity::new(rnti).unwrap()
    }

    fn manual(rnti: u32, al: AggregationLevel, starts: &[u32]) -> UeContext {
        UeContext {
            identity: ue(rnti),
            aggregation_level: al,
            candidates: starts
                .iter()
                .enumerate()
                .map(|(k, &s)| Candidate {
                    aggregation_level: al,
                    candidate_index: k as u32,
                    cces: CceSet::contiguous(s, al.cces()),
                })
                .collect(),
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn single_ue_is_never_blocked() {
        let coreset = CoresetConfig::from_cce_count(54, 0).unwrap();
        let ss = SearchSpaceConfig::uss(CandidateCounts::new([6, 6, 4, 2, 1]).unwrap());
        for al in AggregationLevel::ALL {
            let ues = vec![UeContext::new(ue(999), al, &ss, &coreset)];
            let out = allocate(&ues, &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
            assert_eq!(out.blocked_count(), 0);
            assert_eq!(out.used_cces.len() as u32, al.cces());
        }
    }

    #[test]
    fn three_ue_collision_blocks_one() {
        // UE 1 and UE 2 (AL 4) collide on their first candidate; UE 3 (AL 2)
        // only fits inside the CCEs that UE 2 ends up taking.
        let coreset = CoresetConfig::from_cce_count(16, 0).unwrap();
        let ues = vec![
            manual(1, AggregationLevel::L4, &[8]),
            manual(2, AggregationLevel::L4, &[8, 12]),
            manual(3, AggregationLevel::L2, &[12, 14]),
        ];
        let out = allocate(&ues, &coreset, SchedulingStrategy::HighToLowAl, &mut rng());
        assert_eq!(out.blocked_count(), 1);
        assert!((blocking_ratio(&out, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_al16_candidates_block_all_but_one() {
        let coreset = CoresetConfig::from_cce_count(16, 0).unwrap();
        let ss = SearchSpaceConfig::uss(CandidateCounts::new([0, 0, 0, 0, 1]).unwrap());
        for n in 1..=12u32 {
            let ues: Vec<_> = (1..=n).map(|r| UeContext::new(ue(r * 97), AggregationLevel::L16, &ss, &coreset)).collect();
            let out = allocate(&ues, &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
            assert_eq!(out.blocked_count() as u32, n - 1);
        }
    }

    #[test]
    fn oversized_al_is_blocked() {
        let coreset = CoresetConfig::from_cce_count(12, 0).unwrap();
        let ss = SearchSpaceConfig::uss(CandidateCounts::new([1, 1, 1, 1, 1]).unwrap());
        let ues = vec![UeContext::new(ue(5), AggregationLevel::L16, &ss, &coreset)];
        assert!(ues[0].candidates.is_empty());
        let out = allocate(&ues, &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
        assert_eq!(out.blocked_ues, vec![0]);
        assert!(out.used_cces.is_empty());
    }

    #[test]
    fn empty_input_gives_empty_outcome() {
        let coreset = CoresetConfig::from_cce_count(8, 0).unwrap();
        let out = allocate(&[], &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
        assert!(out.assignments.is_empty() && out.blocked_ues.is_empty() && out.used_cces.is_empty());
    }

    #[test]
    fn blocking_ratio_examples() {
        let coreset = CoresetConfig::from_cce_count(16, 0).unwrap();
        let ten: Vec<_> = (0..10).map(|i| manual(i + 1, AggregationLevel::L1, &[i])).collect();
        let out = allocate(&ten, &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
        assert_eq!(blocking_ratio(&out, 10), 0.0);

        let all16: Vec<_> = (0..4).map(|i| manual(i + 1, AggregationLevel::L16, &[0])).collect();
        let out = allocate(&all16, &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
        assert_eq!(blocking_ratio(&out, 4), 0.75);
        let none = AllocationOutcome { assignments: vec![None; 3], blocked_ues: vec![0, 1, 2], used_cces: CceSet::new(), visit_order: vec![0, 1, 2] };
        assert_eq!(blocking_ratio(&none, 3), 1.0);
    }

    #[test]
    fn strategy_orders() {
        let coreset = CoresetConfig::from_cce_count(32, 0).unwrap();
        let ues = vec![
            manual(1, AggregationLevel::L4, &[0]),
            manual(2, AggregationLevel::L1, &[1]),
            manual(3, AggregationLevel::L16, &[16]),
            manual(4, AggregationLevel::L2, &[10]),
        ];
        let low = allocate(&ues, &coreset, SchedulingStrategy::LowToHighAl, &mut rng());
        assert_eq!(low.visit_order, vec![1, 3, 0, 2]);
        // AL 1 UE takes CCE 1 first, so the AL 4 UE at {0..3} is blocked.
        assert_eq!(low.blocked_ues, vec![0]);
        let high = allocate(&ues, &coreset, SchedulingStrategy::HighToLowAl, &mut rng());
        assert_eq!(high.visit_order, vec![2, 0, 3, 1]);
        assert_eq!(high.blocked_ues, vec![1]);
    }

    #[test]
    fn lowest_index_takes_first_free_candidate() {
        let coreset = CoresetConfig::from_cce_count(8, 0).unwrap();
        let ues = vec![manual(1, AggregationLevel::L2, &[0, 2]), manual(2, AggregationLevel::L2, &[0, 4, 6])];
        let out = allocate(&ues, &coreset, SchedulingStrategy::LowToHighAl, &mut ChaCha8Rng::seed_from_u64(3));
        let first = out.visit_order[0];
        assert_eq!(out.assignments[first].as_ref().unwrap().candidate_index, 0);
        let second = out.visit_order[1];
        assert_eq!(out.assignments[second].as_ref().unwrap().candidate_index, 1);
    }

    #[test]
    fn least_conflict_leaves_room_for_later_ues() {
        // The AL 1 UE can sit in CCE 0 (inside the only AL 8 candidate) or CCE 9.
        let coreset = CoresetConfig::from_cce_count(16, 0).unwrap();
        let ues = vec![manual(1, AggregationLevel::L1, &[0, 9]), manual(2, AggregationLevel::L8, &[0])];
        let greedy = allocate_with(&ues, &coreset, SchedulingStrategy::LowToHighAl, CandidateSelection::LowestIndex, &mut rng());
        assert_eq!(greedy.blocked_ues, vec![1]);
        let look = allocate_with(&ues, &coreset, SchedulingStrategy::LowToHighAl, CandidateSelection::LeastConflict, &mut rng());
        assert_eq!(look.blocked_ues, Vec::<usize>::new());
        assert_eq!(look.assignments[0].as_ref().unwrap().cces.as_slice(), &[9]);
    }

    #[test]
    fn avoid_higher_al_only_looks_at_larger_pending_ues() {
        let coreset = CoresetConfig::from_cce_count(16, 0).unwrap();
        let ues = vec![manual(1, AggregationLevel::L1, &[0, 9]), manual(2, AggregationLevel::L8, &[0])];
        let out = allocate_with(&ues, &coreset, SchedulingStrategy::LowToHighAl, CandidateSelection::AvoidHigherAl, &mut rng());
        assert!(out.blocked_ues.is_empty());
        assert_eq!(out.assignments[0].as_ref().unwrap().cces.as_slice(), &[9]);

        // A pending UE of the same AL is ignored, so the lowest index wins.
        let ues = vec![manual(1, AggregationLevel::L2, &[0, 8]), manual(2, AggregationLevel::L2, &[0])];
        let out = allocate_with(&ues, &coreset, SchedulingStrategy::LowToHighAl, CandidateSelection::AvoidHigherAl, &mut rng());
        let first = out.visit_order[0];
        assert_eq!(out.assignments[first].as_ref().unwrap().candidate_index, 0);
    }

    #[test]
    fn limit_examples() {
        let coreset = CoresetConfig::from_cce_count(54, 0).unwrap();
        let ref_ss = SearchSpaceConfig::uss(CandidateCounts::new([6, 6, 4, 2, 1]).unwrap());
        let r = validate_limits(&ref_ss, &coreset, ue(100), &MonitoringLimits::default());
        assert_eq!(r.blind_decodes, 19);
        assert!(!r.blind_decodes_exceeded);
        assert_eq!(r.max_blind_decodes, 44);

        let case_b = SearchSpaceConfig::uss(CandidateCounts::new([1, 1, 1, 1, 1]).unwrap());
        assert_eq!(validate_limits(&case_b, &coreset, ue(100), &MonitoringLimits::default()).blind_decodes, 5);

        let heavy = SearchSpaceConfig::uss(CandidateCounts::new([8, 8, 8, 8, 8]).unwrap());
        let lim = MonitoringLimits::for_scs(SubcarrierSpacing::Khz120);
        let r = validate_limits(&heavy, &coreset, ue(100), &lim);
        assert_eq!(r.blind_decodes, 40);
        assert!(r.blind_decodes_exceeded);
        assert!(!r.within_limits());
    }

    #[test]
    fn limits_table() {
        let got: Vec<_> = [15, 30, 60, 120]
            .into_iter()
            .map(|k| {
                let l = MonitoringLimits::for_scs(SubcarrierSpacing::from_khz(k).unwrap());
                (l.max_blind_decodes, l.max_nonoverlap_cces)
            })
            .collect();
        assert_eq!(got, vec![(44, 56), (36, 56), (22, 48), (20, 32)]);
    }

    #[test]
    fn css_distinct_cces_counted_once() {
        let coreset = CoresetConfig::from_cce_count(16, 0).unwrap();
        let mut ss = SearchSpaceConfig::uss(CandidateCounts::new([0, 0, 0, 2, 1]).unwrap());
        ss.space_type = SearchSpaceType::Css;
        let r = validate_limits(&ss, &coreset, ue(1), &MonitoringLimits::default());
        assert_eq!(r.blind_decodes, 3);
        assert_eq!(r.distinct_cces, 16);
    }

    fn random_ues(seed: u64, n: usize, c: u32, uniform: Option<AggregationLevel>) -> Vec<UeContext> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let coreset = CoresetConfig::from_cce_count(c, 0).unwrap();
        let ss = SearchSpaceConfig::uss(CandidateCounts::new([6, 6, 4, 2, 1]).unwrap());
        (0..n)
            .map(|_| {
                let al = uniform.unwrap_or(AggregationLevel::ALL[r.gen_range(0..5)]);
                UeContext::new(ue(r.gen_range(1..=65535)), al, &ss, &coreset)
            })
            .collect()
    }

    fn selections() -> impl Strategy<Value = CandidateSelection> {
        prop::sample::select(vec![
            CandidateSelection::LowestIndex,
            CandidateSelection::AvoidHigherAl,
            CandidateSelection::LeastConflict,
        ])
    }

    fn strategies() -> impl Strategy<Value = SchedulingStrategy> {
        prop::sample::select(vec![SchedulingStrategy::LowToHighAl, SchedulingStrategy::HighToLowAl])
    }

    proptest! {
        #[test]
        fn outcome_invariants(seed in any::<u64>(), n in 0usize..40, c in 1u32..100, strat in strategies(), sel in selections()) {
            let ues = random_ues(seed, n, c, None);
            let coreset = CoresetConfig::from_cce_count(c, 0).unwrap();
            let out = allocate_with(&ues, &coreset, strat, sel, &mut ChaCha8Rng::seed_from_u64(seed));
            let assigned: Vec<&Candidate> = out.assignments.iter().flatten().collect();
            for (i, a) in assigned.iter().enumerate() {
                for b in &assigned[i + 1..] {
                    prop_assert!(a.cces.is_disjoint(&b.cces));
                }
            }
            let al_sum: u32 = assigned.iter().map(|c| c.aggregation_level.cces()).sum();
            prop_assert_eq!(al_sum as usize, out.used_cces.len());
            let mut union = CceSet::new();
            for a in &assigned {
                union.extend(&a.cces);
            }
            prop_assert_eq!(&union, &out.used_cces);
            for (i, a) in out.assignments.iter().enumerate() {
                prop_assert_eq!(a.is_none(), out.blocked_ues.contains(&i));
                if let Some(a) = a {
                    prop_assert!(ues[i].candidates.contains(a));
                }
            }
            prop_assert!(out.used_cces.last().is_none_or(|l| l < c));
        }

        #[test]
        fn greedy_prefix_property(seed in any::<u64>(), n in 1usize..40, c in 1u32..100, strat in strategies()) {
            let ues = random_ues(seed, n, c, None);
            let coreset = CoresetConfig::from_cce_count(c, 0).unwrap();
            let out = allocate_with(&ues, &coreset, strat, CandidateSelection::LowestIndex, &mut ChaCha8Rng::seed_from_u64(seed));
            let kept: Vec<usize> = out.visit_order.iter().copied().filter(|i| out.assignments[*i].is_some()).collect();
            let compact: Vec<CompactUe> = kept
                .iter()
                .map(|&i| CompactUe::from_starts(ues[i].aggregation_level, ues[i].candidates.iter().map(|c| c.first_cce())))
                .collect();
            let order: Vec<usize> = (0..kept.len()).collect();
            let picks = allocate_compact(&compact, &order, c, CandidateSelection::LowestIndex);
            for (j, &i) in kept.iter().enumerate() {
                let expected = out.assignments[i].as_ref().map(|a| a.candidate_index as u8);
                prop_assert_eq!(picks[j], expected);
            }
        }

        #[test]
        fn avoid_higher_al_is_lowest_index_when_high_first(seed in any::<u64>(), n in 1usize..40, c in 1u32..100) {
            let ues = random_ues(seed, n, c, None);
            let coreset = CoresetConfig::from_cce_count(c, 0).unwrap();
            let run = |sel| allocate_with(&ues, &coreset, SchedulingStrategy::HighToLowAl, sel, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(run(CandidateSelection::AvoidHigherAl), run(CandidateSelection::LowestIndex));
        }

        #[test]
        fn strategies_agree_under_uniform_al(seed in any::<u64>(), n in 1usize..40, c in 1u32..100, al in 0usize..5) {
            let al = AggregationLevel::ALL[al];
            let ues = random_ues(seed, n, c, Some(al));
            let coreset = CoresetConfig::from_cce_count(c, 0).unwrap();
            let low = allocate(&ues, &coreset, SchedulingStrategy::LowToHighAl, &mut ChaCha8Rng::seed_from_u64(seed));
            let high = allocate(&ues, &coreset, SchedulingStrategy::HighToLowAl, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(low.blocked_count(), high.blocked_count());
        }
    }
}
