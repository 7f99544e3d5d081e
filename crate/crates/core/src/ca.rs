//! Bit-level engine for 2-state, radius-2 (5-neighborhood) finite cellular
//! automata under the null boundary condition: rule tables, one-step
//! evolution, reversibility testing and cycle decomposition.
//!
//! Conventions: cell 0 is the leftmost cell and the most significant bit of
//! a configuration's decimal value, so the 5-cell configuration `01000`
//! has decimal value 8. A rule's decimal value has bit `r` equal to the
//! next state of RMT `r`; rendering the table from RMT 31 down to RMT 0
//! gives the big-endian binary string of the decimal.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Largest supported cell count for exhaustive operations. The visited
/// bitmap for 2^24 configurations is 2 MiB.
pub const MAX_CELLS: usize = 24;

/// Hard upper bound on configuration length (decimal view fits in a u64).
pub const MAX_CONFIG_BITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaError {
    #[error("cell count {n} out of range (1..={max})")]
    CellCountOutOfRange { n: usize, max: usize },
    #[error("cell count {n} exceeds the exhaustive-enumeration limit {limit}")]
    CapacityExceeded { n: usize, limit: usize },
    #[error("value {value} does not fit in {n} cells")]
    ValueOutOfRange { value: u64, n: usize },
    #[error("rule {rule} is not reversible over {n} cells (merging orbit detected)")]
    NotReversible { rule: u32, n: usize },
    #[error("seed configuration has {got} cells, expected {expected}")]
    SeedLengthMismatch { expected: usize, got: usize },
    #[error("empty bit string")]
    EmptyBitString,
    #[error("invalid bit character {0:?}")]
    InvalidBitChar(char),
}

/// A Rule Min Term: one of the 32 neighborhood combinations
/// `x_{i-2} x_{i-1} x_i x_{i+1} x_{i+2}`, addressed by its decimal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rmt(u8);

impl Rmt {
    pub fn new(value: u8) -> Option<Self> {
        (value < 32).then_some(Rmt(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// State of the cell itself: bit position 2 (weight 4) of the RMT.
    pub fn middle_bit(self) -> u8 {
        (self.0 >> 2) & 1
    }

    pub fn all() -> impl Iterator<Item = Rmt> {
        (0u8..32).map(Rmt)
    }
}

impl fmt::Display for Rmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A local rule: 32 next-state bits indexed by RMT, stored as the u32
/// decimal whose bit `r` is the next state for RMT `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    decimal: u32,
}

impl Rule {
    pub fn from_decimal(decimal: u32) -> Self {
        Rule { decimal }
    }

    pub fn decimal(self) -> u32 {
        self.decimal
    }

    pub fn next_state(self, rmt: Rmt) -> u8 {
        ((self.decimal >> rmt.value()) & 1) as u8
    }

    /// The table rendered from RMT 31 down to RMT 0.
    pub fn table_string(self) -> String {
        format!("{:032b}", self.decimal)
    }

    /// Evolve one configuration a single step under the null boundary.
    pub fn step(self, config: &Configuration) -> Configuration {
        Configuration {
            bits: self.step_value(config.bits, config.len),
            len: config.len,
        }
    }

    /// One-step successor of a raw n-bit value (cell 0 = MSB).
    ///
    /// With the value left-padded by two zero bits, the 5-bit window ending
    /// at bit `n-1-i` of the padded value is exactly the neighborhood of
    /// cell i, out-of-range neighbors reading 0.
    pub fn step_value(self, value: u64, n: usize) -> u64 {
        debug_assert!((1..=MAX_CONFIG_BITS).contains(&n));
        let padded = (value as u128) << 2;
        let mut out: u64 = 0;
        for i in 0..n {
            let rmt = ((padded >> (n - 1 - i)) & 31) as u8;
            out = (out << 1) | ((self.decimal >> rmt) & 1) as u64;
        }
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.decimal)
    }
}

/// A fixed-length bit vector holding the joint state of all cells.
/// Cell 0 is the leftmost bit; the decimal view reads left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    bits: u64,
    len: usize,
}

impl Configuration {
    pub fn from_decimal(value: u64, n: usize) -> Result<Self, CaError> {
        if n == 0 || n > MAX_CONFIG_BITS {
            return Err(CaError::CellCountOutOfRange {
                n,
                max: MAX_CONFIG_BITS,
            });
        }
        if n < 64 && value >> n != 0 {
            return Err(CaError::ValueOutOfRange { value, n });
        }
        Ok(Configuration {
            bits: value,
            len: n,
        })
    }

    pub fn from_bit_str(s: &str) -> Result<Self, CaError> {
        if s.is_empty() {
            return Err(CaError::EmptyBitString);
        }
        let mut bits = 0u64;
        for c in s.chars() {
            match c {
                '0' => bits <<= 1,
                '1' => bits = (bits << 1) | 1,
                other => return Err(CaError::InvalidBitChar(other)),
            }
        }
        Configuration::from_decimal(bits, s.len())
    }

    pub fn decimal(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// State of cell i (0 = leftmost).
    pub fn bit(&self, cell: usize) -> u8 {
        assert!(cell < self.len);
        ((self.bits >> (self.len - 1 - cell)) & 1) as u8
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.bit(i) == 1 { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.to_bit_string(), self.bits)
    }
}

/// Whether a partition covers the whole configuration space or only the
/// orbits of a seed set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    Full,
    Partial,
}

#[derive(Debug, Clone)]
enum Membership {
    /// Indexed directly by configuration value.
    Full(Vec<u32>),
    Partial(HashMap<u64, u32>),
}

/// Decomposition of a configuration space (or the orbits of a seed set)
/// into disjoint cycles under a reversible rule.
///
/// Each cycle is stored in orbit order starting from its minimum element,
/// and cycles are sorted by that minimum, so the partition is a canonical
/// value independent of traversal order.
#[derive(Debug, Clone)]
pub struct CyclePartition {
    rule: Rule,
    n: usize,
    coverage: Coverage,
    cycles: Vec<Vec<u64>>,
    membership: Membership,
}

impl CyclePartition {
    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn cell_count(&self) -> usize {
        self.n
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    pub fn cycles(&self) -> &[Vec<u64>] {
        &self.cycles
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    /// Cycle index containing `value`, if the partition covers it.
    pub fn cycle_of(&self, value: u64) -> Option<usize> {
        match &self.membership {
            Membership::Full(v) => v.get(value as usize).map(|&i| i as usize),
            Membership::Partial(m) => m.get(&value).map(|&i| i as usize),
        }
    }

    /// Debug text dump: one line per cycle, decimal elements space-separated.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for cycle in &self.cycles {
            let line: Vec<String> = cycle.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn check_capacity(n: usize) -> Result<(), CaError> {
    if n == 0 {
        return Err(CaError::CellCountOutOfRange { n, max: MAX_CELLS });
    }
    if n > MAX_CELLS {
        return Err(CaError::CapacityExceeded {
            n,
            limit: MAX_CELLS,
        });
    }
    Ok(())
}

/// True iff the step map is injective over all 2^n configurations, checked
/// by exhaustive successor enumeration with a duplicate bitmap.
pub fn is_reversible(rule: Rule, n: usize) -> Result<bool, CaError> {
    check_capacity(n)?;
    let mut seen = vec![0u64; (1usize << n).div_ceil(64)];
    let size: u64 = 1 << n;
    let mut v = 0u64;
    while v < size {
        let s = rule.step_value(v, n);
        let (word, bit) = ((s >> 6) as usize, s & 63);
        if (seen[word] >> bit) & 1 == 1 {
            return Ok(false);
        }
        seen[word] |= 1 << bit;
        v += 1;
    }
    Ok(true)
}

/// Full-coverage cycle decomposition of the 2^n configuration space.
///
/// Scanning values in ascending order guarantees each orbit is first
/// entered at its minimum element, which yields the canonical form
/// directly. An orbit that re-enters an already visited configuration
/// other than its own start means two configurations share a successor,
/// so the rule is rejected as irreversible at this n.
pub fn decompose_cycles(rule: Rule, n: usize) -> Result<CyclePartition, CaError> {
    check_capacity(n)?;
    let size: usize = 1 << n;
    let mut visited = vec![0u64; size.div_ceil(64)];
    let mut membership = vec![0u32; size];
    let mut cycles: Vec<Vec<u64>> = Vec::new();

    let is_set = |map: &[u64], v: u64| (map[(v >> 6) as usize] >> (v & 63)) & 1 == 1;

    for start in 0..size as u64 {
        if is_set(&visited, start) {
            continue;
        }
        let index = cycles.len() as u32;
        let mut orbit = vec![start];
        visited[(start >> 6) as usize] |= 1 << (start & 63);
        membership[start as usize] = index;
        let mut cur = rule.step_value(start, n);
        while cur != start {
            if is_set(&visited, cur) {
                return Err(CaError::NotReversible {
                    rule: rule.decimal(),
                    n,
                });
            }
            visited[(cur >> 6) as usize] |= 1 << (cur & 63);
            membership[cur as usize] = index;
            orbit.push(cur);
            cur = rule.step_value(cur, n);
        }
        cycles.push(orbit);
    }

    Ok(CyclePartition {
        rule,
        n,
        coverage: Coverage::Full,
        cycles,
        membership: Membership::Full(membership),
    })
}

/// Partial-coverage decomposition: only the cycles containing at least one
/// seed, without touching the rest of the configuration space.
///
/// Irreversibility shows up lazily: an orbit that runs into a previously
/// completed cycle (or into itself anywhere but its start) has merged with
/// another orbit, which a bijective map cannot do.
pub fn orbit_membership(
    rule: Rule,
    n: usize,
    seeds: &[Configuration],
) -> Result<CyclePartition, CaError> {
    check_capacity(n)?;
    for seed in seeds {
        if seed.len() != n {
            return Err(CaError::SeedLengthMismatch {
                expected: n,
                got: seed.len(),
            });
        }
    }
    let mut values: Vec<u64> = seeds.iter().map(|c| c.decimal()).collect();
    values.sort_unstable();
    values.dedup();
    orbit_membership_values(rule, n, &values)
}

/// As [`orbit_membership`], over raw decimal values.
pub fn orbit_membership_values(
    rule: Rule,
    n: usize,
    seeds: &[u64],
) -> Result<CyclePartition, CaError> {
    check_capacity(n)?;
    let size: u64 = 1 << n;
    let mut assigned: HashMap<u64, u32> = HashMap::new();
    let mut raw_cycles: Vec<Vec<u64>> = Vec::new();

    let mut sorted: Vec<u64> = seeds.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    for &seed in &sorted {
        if seed >= size {
            return Err(CaError::ValueOutOfRange { value: seed, n });
        }
        if assigned.contains_key(&seed) {
            continue;
        }
        let index = raw_cycles.len() as u32;
        let mut orbit = vec![seed];
        assigned.insert(seed, index);
        let mut cur = rule.step_value(seed, n);
        while cur != seed {
            if assigned.contains_key(&cur) || orbit.len() as u64 > size {
                return Err(CaError::NotReversible {
                    rule: rule.decimal(),
                    n,
                });
            }
            assigned.insert(cur, index);
            orbit.push(cur);
            cur = rule.step_value(cur, n);
        }
        raw_cycles.push(orbit);
    }

    // Canonicalize: rotate each orbit to start at its minimum element and
    // sort cycles by that minimum, then rebuild membership.
    let mut cycles: Vec<Vec<u64>> = raw_cycles
        .into_iter()
        .map(|orbit| {
            let min_pos = orbit
                .iter()
                .enumerate()
                .min_by_key(|(_, v)| **v)
                .map(|(i, _)| i)
                .unwrap();
            let mut rotated = Vec::with_capacity(orbit.len());
            rotated.extend_from_slice(&orbit[min_pos..]);
            rotated.extend_from_slice(&orbit[..min_pos]);
            rotated
        })
        .collect();
    cycles.sort_by_key(|c| c[0]);

    let mut membership = HashMap::with_capacity(assigned.len());
    for (i, cycle) in cycles.iter().enumerate() {
        for &v in cycle {
            membership.insert(v, i as u32);
        }
    }

    Ok(CyclePartition {
        rule,
        n,
        coverage: Coverage::Partial,
        cycles,
        membership: Membership::Partial(membership),
    })
}
