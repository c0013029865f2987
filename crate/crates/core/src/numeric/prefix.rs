use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use bitvec::prelude::*;

use super::NumericError;

/// A finite initial segment of a characteristic function on the naturals.
///
/// Bit `i` is `true` iff `i` is a member. Positions at or beyond
/// [`len`](SetPrefix::len) are unknown, not absent.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct SetPrefix {
    bits: BitVec<u64, Lsb0>,
}

impl SetPrefix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: u64) -> Self {
        Self { bits: bitvec![u64, Lsb0; 0; len as usize] }
    }

    pub fn from_fn(len: u64, mut member: impl FnMut(u64) -> bool) -> Self {
        let mut bits = BitVec::with_capacity(len as usize);
        bits.extend((0..len).map(&mut member));
        Self { bits }
    }

    pub fn from_bools(bools: &[bool]) -> Self {
        Self { bits: bools.iter().copied().collect() }
    }

    pub fn len(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Membership of `x`, or `None` past the end of the prefix.
    pub fn get(&self, x: u64) -> Option<bool> {
        self.bits.get(x as usize).map(|b| *b)
    }

    /// Membership of `x`. Panics past the end of the prefix.
    pub fn contains(&self, x: u64) -> bool {
        self.bits[x as usize]
    }

    pub fn set(&mut self, x: u64, value: bool) {
        self.bits.set(x as usize, value);
    }

    pub fn flip(&mut self, x: u64) {
        let v = self.bits[x as usize];
        self.bits.set(x as usize, !v);
    }

    pub fn push(&mut self, value: bool) {
        self.bits.push(value);
    }

    pub fn extend_zeros(&mut self, count: u64) {
        self.bits.resize(self.bits.len() + count as usize, false);
    }

    pub fn extend_from(&mut self, other: &SetPrefix) {
        self.bits.extend_from_bitslice(&other.bits);
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.count_ones() as u64
    }

    /// `|self ∩ [0, n)|`. Panics if `n > len`.
    pub fn count_ones_below(&self, n: u64) -> u64 {
        self.bits[..n as usize].count_ones() as u64
    }

    /// `|self ∩ range|`. Panics if the range runs past `len`.
    pub fn count_ones_in(&self, range: Range<u64>) -> u64 {
        self.bits[range.start as usize..range.end as usize].count_ones() as u64
    }

    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter_ones().map(|i| i as u64)
    }

    pub fn complement(&self) -> SetPrefix {
        Self { bits: !self.bits.clone() }
    }

    pub fn truncated(&self, len: u64) -> Result<SetPrefix, NumericError> {
        if len > self.len() {
            return Err(NumericError::OutOfRange { n: len, len: self.len() });
        }
        Ok(Self { bits: self.bits[..len as usize].to_bitvec() })
    }

    /// Lengths of maximal constant runs, alternating and starting with a run
    /// of zeros (which is empty when the prefix starts with a one).
    pub fn runs(&self) -> Vec<u64> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u64;
        for b in self.bits.iter().by_vals() {
            if b == current {
                count += 1;
            } else {
                runs.push(count);
                current = b;
                count = 1;
            }
        }
        if count > 0 || runs.is_empty() {
            runs.push(count);
        }
        runs
    }

    pub fn from_runs(runs: &[u64]) -> Self {
        let total: u64 = runs.iter().sum();
        let mut bits = BitVec::with_capacity(total as usize);
        for (i, &run) in runs.iter().enumerate() {
            bits.resize(bits.len() + run as usize, i % 2 == 1);
        }
        Self { bits }
    }

    /// `'0'`/`'1'` characters, position 0 first.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }
}

impl FromStr for SetPrefix {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = BitVec::with_capacity(s.len());
        for c in s.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(NumericError::BadRational(format!("bit string {s:?}"))),
            }
        }
        Ok(Self { bits })
    }
}

impl fmt::Debug for SetPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            write!(f, "SetPrefix({})", self.to_bit_string())
        } else {
            write!(f, "SetPrefix(len={}, ones={})", self.len(), self.count_ones())
        }
    }
}
