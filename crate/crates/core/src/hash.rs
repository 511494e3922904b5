//! Search-space hashing: the per-slot pseudo-random offset `Y` and the CCE
//! positions of every PDCCH candidate of a UE.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coreset::{CceSet, CoresetConfig};
use crate::error::{ConfigError, NoCandidateFits};

/// Modulus of the `Y` recursion.
pub const Y_MODULUS: u64 = 65537;
/// Multipliers `A_p` for `p mod 3 == 0, 1, 2`.
pub const Y_MULTIPLIERS: [u64; 3] = [39827, 39829, 39839];
/// Candidate counts a search space may configure per aggregation level.
pub const ALLOWED_CANDIDATE_COUNTS: [u8; 8] = [0, 1, 2, 3, 4, 5, 6, 8];

/// PDCCH aggregation level, the number of CCEs forming one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum AggregationLevel {
    L1,
    L2,
    L4,
    L8,
    L16,
}

impl AggregationLevel {
    pub const ALL: [AggregationLevel; 5] = [Self::L1, Self::L2, Self::L4, Self::L8, Self::L16];

    pub fn cces(self) -> u32 {
        1 << self.index()
    }

    /// Position in [`AggregationLevel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_cces(cces: u32) -> Result<Self, ConfigError> {
        match cces {
            1 => Ok(Self::L1),
            2 => Ok(Self::L2),
            4 => Ok(Self::L4),
            8 => Ok(Self::L8),
            16 => Ok(Self::L16),
            other => Err(ConfigError::InvalidAggregationLevel(other)),
        }
    }
}

impl TryFrom<u32> for AggregationLevel {
    type Error = ConfigError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::from_cces(value)
    }
}

impl From<AggregationLevel> for u32 {
    fn from(al: AggregationLevel) -> u32 {
        al.cces()
    }
}

impl fmt::Display for AggregationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AL{}", self.cces())
    }
}

/// Common or UE-specific search space.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchSpaceType {
    Css,
    #[default]
    Uss,
}

/// A UE's C-RNTI, nonzero and 16 bits wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UeIdentity(u16);

impl UeIdentity {
    pub fn new(c_rnti: u32) -> Result<Self, ConfigError> {
        match u16::try_from(c_rnti) {
            Ok(v) if v != 0 => Ok(Self(v)),
            _ => Err(ConfigError::InvalidRnti(c_rnti)),
        }
    }

    pub fn c_rnti(self) -> u16 {
        self.0
    }
}

/// Candidate counts `M_L` for ALs 1, 2, 4, 8 and 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CandidateCounts([u8; 5]);

impl CandidateCounts {
    pub fn new(counts: [u8; 5]) -> Result<Self, ConfigError> {
        if let Some(bad) = counts.iter().find(|m| !ALLOWED_CANDIDATE_COUNTS.contains(m)) {
            return Err(ConfigError::InvalidSearchSpace(format!(
                "candidate count {bad} not in {ALLOWED_CANDIDATE_COUNTS:?}"
            )));
        }
        if counts.iter().all(|&m| m == 0) {
            return Err(ConfigError::InvalidSearchSpace(
                "at least one aggregation level needs candidates".into(),
            ));
        }
        Ok(Self(counts))
    }

    pub fn get(&self, al: AggregationLevel) -> u8 {
        self.0[al.index()]
    }

    pub fn as_array(&self) -> [u8; 5] {
        self.0
    }

    /// Total candidates across all ALs.
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&m| u32::from(m)).sum()
    }

    /// Copy with the count for one AL replaced.
    pub fn with(&self, al: AggregationLevel, count: u8) -> Result<Self, ConfigError> {
        let mut counts = self.0;
        counts[al.index()] = count;
        Self::new(counts)
    }
}

/// Search space configuration monitored by every simulated UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchSpaceConfig {
    pub candidates: CandidateCounts,
    pub space_type: SearchSpaceType,
    pub slot_index: u32,
}

impl SearchSpaceConfig {
    pub fn uss(candidates: CandidateCounts) -> Self {
        Self { candidates, space_type: SearchSpaceType::Uss, slot_index: 0 }
    }
}

/// One PDCCH candidate: `L` contiguous CCEs starting at a multiple of `L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub aggregation_level: AggregationLevel,
    pub candidate_index: u32,
    pub cces: CceSet,
}

impl Candidate {
    pub fn first_cce(&self) -> u32 {
        self.cces.first().expect("candidate holds at least one CCE")
    }
}

/// `Y_{p,t}`: zero for a CSS; for a USS the recursion
/// `Y_{p,s} = A_p * Y_{p,s-1} mod 65537` seeded with `Y_{p,-1} = c_rnti`,
/// iterated up to `s = slot_index`.
pub fn y_value(ue: UeIdentity, coreset_index: u32, slot_index: u32, space_type: SearchSpaceType) -> u32 {
    if space_type == SearchSpaceType::Css {
        return 0;
    }
    let a = Y_MULTIPLIERS[(coreset_index % 3) as usize];
    let mut y = u64::from(ue.c_rnti());
    for _ in 0..=slot_index {
        y = a * y % Y_MODULUS;
    }
    y as u32
}

/// First CCE of candidate `k`: `L * ((Y + floor(k*C / (L*M))) mod floor(C/L))`.
pub fn candidate_start(
    level: AggregationLevel,
    k: u32,
    cce_count: u32,
    num_candidates: u32,
    y: u32,
) -> Result<u32, NoCandidateFits> {
    let l = u64::from(level.cces());
    let c = u64::from(cce_count);
    let slots = c / l;
    if slots == 0 {
        return Err(NoCandidateFits { level: level.cces(), cce_count });
    }
    assert!(num_candidates > 0 && k < num_candidates, "candidate index {k} out of 0..{num_candidates}");
    let offset = u64::from(k) * c / (l * u64::from(num_candidates));
    Ok((l * ((u64::from(y) + offset) % slots)) as u32)
}

/// CCEs `l_{k,0} .. l_{k,L-1}` of candidate `k`.
pub fn candidate_cces(
    level: AggregationLevel,
    k: u32,
    cce_count: u32,
    num_candidates: u32,
    y: u32,
) -> Result<CceSet, NoCandidateFits> {
    let start = candidate_start(level, k, cce_count, num_candidates, y)?;
    Ok(CceSet::contiguous(start, level.cces()))
}

/// All `M_L` candidates of `ue` at aggregation level `level`, in increasing `k`.
///
/// One `Y` is shared across every AL of the UE in a slot. Returns an empty
/// list when `M_L == 0`.
pub fn ue_candidate_set(
    ue: UeIdentity,
    cfg: &SearchSpaceConfig,
    coreset: &CoresetConfig,
    level: AggregationLevel,
) -> Result<Vec<Candidate>, NoCandidateFits> {
    let y = y_value(ue, coreset.coreset_index(), cfg.slot_index, cfg.space_type);
    candidates_for_y(y, cfg.candidates.get(level), coreset.cce_count(), level)
}

pub(crate) fn candidates_for_y(
    y: u32,
    num_candidates: u8,
    cce_count: u32,
    level: AggregationLevel,
) -> Result<Vec<Candidate>, NoCandidateFits> {
    let m = u32::from(num_candidates);
    (0..m)
        .map(|k| {
            Ok(Candidate {
                aggregation_level: level,
                candidate_index: k,
                cces: candidate_cces(level, k, cce_count, m, y)?,
            })
        })
        .collect()
}
