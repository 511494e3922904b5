//! CORESET geometry and the CCE index space.

use std::fmt;

use crate::error::ConfigError;

/// Resource blocks per CCE-carrying frequency chunk.
pub const RBS_PER_CHUNK: u32 = 6;
/// REGs per CCE; one REG spans one RB in one symbol.
pub const REGS_PER_CCE: u32 = 6;

/// A control resource set of `rb_count` RBs over `symbol_duration` OFDM symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoresetConfig {
    rb_count: u32,
    symbol_duration: u32,
    coreset_index: u32,
}

impl CoresetConfig {
    pub fn new(rb_count: u32, symbol_duration: u32, coreset_index: u32) -> Result<Self, ConfigError> {
        if rb_count == 0 || !rb_count.is_multiple_of(RBS_PER_CHUNK) {
            return Err(ConfigError::InvalidGeometry(format!(
                "rb_count {rb_count} is not a positive multiple of {RBS_PER_CHUNK}"
            )));
        }
        if !(1..=3).contains(&symbol_duration) {
            return Err(ConfigError::InvalidGeometry(format!(
                "symbol_duration {symbol_duration} is not 1, 2 or 3"
            )));
        }
        Ok(Self { rb_count, symbol_duration, coreset_index })
    }

    /// Builds a one-symbol CORESET holding exactly `cce_count` CCEs.
    pub fn from_cce_count(cce_count: u32, coreset_index: u32) -> Result<Self, ConfigError> {
        if cce_count == 0 {
            return Err(ConfigError::InvalidGeometry("cce_count must be at least 1".into()));
        }
        let rb_count = cce_count
            .checked_mul(RBS_PER_CHUNK)
            .ok_or_else(|| ConfigError::InvalidGeometry(format!("cce_count {cce_count} too large")))?;
        Self::new(rb_count, 1, coreset_index)
    }

    pub fn rb_count(&self) -> u32 {
        self.rb_count
    }

    pub fn symbol_duration(&self) -> u32 {
        self.symbol_duration
    }

    pub fn coreset_index(&self) -> u32 {
        self.coreset_index
    }

    /// Number of CCEs, `rb_count * symbol_duration / 6`.
    pub fn cce_count(&self) -> u32 {
        self.rb_count * self.symbol_duration / REGS_PER_CCE
    }
}

/// Validating form of [`CoresetConfig::cce_count`] for raw geometry.
pub fn cce_count(rb_count: u32, symbol_duration: u32) -> Result<u32, ConfigError> {
    CoresetConfig::new(rb_count, symbol_duration, 0).map(|c| c.cce_count())
}

/// A sorted set of distinct CCE indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CceSet {
    indices: Vec<u32>,
}

impl CceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Contiguous run `start..start + len`.
    pub fn contiguous(start: u32, len: u32) -> Self {
        Self { indices: (start..start + len).collect() }
    }

    /// Builds a set from arbitrary indices, checking each against `cce_count`.
    pub fn from_indices<I>(indices: I, cce_count: u32) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = u32>,
    {
        let mut set = Self::new();
        for idx in indices {
            if idx >= cce_count {
                return Err(ConfigError::InvalidGeometry(format!(
                    "CCE index {idx} outside 0..{cce_count}"
                )));
            }
            set.insert(idx);
        }
        Ok(set)
    }

    pub fn insert(&mut self, idx: u32) -> bool {
        match self.indices.binary_search(&idx) {
            Ok(_) => false,
            Err(pos) => {
                self.indices.insert(pos, idx);
                true
            }
        }
    }

    pub fn extend(&mut self, other: &CceSet) {
        for &idx in &other.indices {
            self.insert(idx);
        }
    }

    pub fn contains(&self, idx: u32) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }

    pub fn is_disjoint(&self, other: &CceSet) -> bool {
        let (mut a, mut b) = (self.indices.iter().peekable(), other.indices.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn first(&self) -> Option<u32> {
        self.indices.first().copied()
    }

    pub fn last(&self) -> Option<u32> {
        self.indices.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.indices
    }
}

impl fmt::Display for CceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.first(), self.last()) {
            (Some(a), Some(b)) if (b - a) as usize + 1 == self.len() && a != b => write!(f, "{{{a}..{b}}}"),
            _ => {
                write!(f, "{{")?;
                for (i, idx) in self.indices.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{idx}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// Fixed-size occupancy bitmap over the CCEs of one CORESET.
#[derive(Debug, Clone)]
pub(crate) struct CceMask {
    words: Vec<u64>,
    len: u32,
}

impl CceMask {
    pub(crate) fn new(len: u32) -> Self {
        Self { words: vec![0; (len as usize).div_ceil(64)], len }
    }

    pub(crate) fn is_free(&self, start: u32, len: u32) -> bool {
        debug_assert!(start + len <= self.len);
        (start..start + len).all(|i| self.words[(i / 64) as usize] & (1 << (i % 64)) == 0)
    }

    pub(crate) fn occupy(&mut self, start: u32, len: u32) {
        for i in start..start + len {
            self.words[(i / 64) as usize] |= 1 << (i % 64);
        }
    }
}
