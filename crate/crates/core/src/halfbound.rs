//! Amplification over factorial intervals and majority decoding.
//!
//! A source set `A` is spread out as `B = ⋃_{n ∈ A} I_n` with
//! `I_n = [n!, (n+1)!)`. Any `R` that agrees with `B` on more than half of
//! each `I_n` recovers `A(n)` by majority vote over `I_n`. Position 0 lies in
//! no interval; it is encoded as 0 and ignored when decoding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergeom::SeededRng;
use crate::intervals::{factorial, interval_bounds, IntervalScheme};
use crate::numeric::SetPrefix;

/// Default cap on `n_max`: `9! = 362880` encoded positions.
pub const DEFAULT_MAX_INDEX: u64 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HalfboundError {
    #[error("n_max must be at least 1")]
    ZeroIndex,
    #[error("n_max = {n_max} exceeds the cap {cap} ({positions} positions)")]
    TooLarge { n_max: u64, cap: u64, positions: String },
    #[error("source covers indices below {len}, need index {n_max}")]
    SourceTooShort { n_max: u64, len: u64 },
    #[error("decoding I_{n} needs a prefix of length {required}, have {len}")]
    InsufficientPrefix { n: u64, required: u64, len: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplifiedSet {
    /// Indices `0..=n_max`.
    pub source: SetPrefix,
    /// Positions `0..(n_max + 1)!`.
    pub encoded: SetPrefix,
}

impl AmplifiedSet {
    pub fn n_max(&self) -> u64 {
        self.source.len() - 1
    }
}

fn range(n: u64) -> std::ops::Range<u64> {
    interval_bounds(IntervalScheme::Factorial, n).expect("index within u64 range")
}

/// [`encode_with_cap`] with the default cap.
pub fn encode(a: &SetPrefix, n_max: u64) -> Result<AmplifiedSet, HalfboundError> {
    encode_with_cap(a, n_max, DEFAULT_MAX_INDEX)
}

pub fn encode_with_cap(a: &SetPrefix, n_max: u64, cap: u64) -> Result<AmplifiedSet, HalfboundError> {
    if n_max == 0 {
        return Err(HalfboundError::ZeroIndex);
    }
    if n_max > cap {
        let positions = factorial(n_max + 1).map_or("more than 2^64".into(), |v| v.to_string());
        return Err(HalfboundError::TooLarge { n_max, cap, positions });
    }
    if a.len() <= n_max {
        return Err(HalfboundError::SourceTooShort { n_max, len: a.len() });
    }
    let source = a.truncated(n_max + 1).expect("length checked");
    let mut encoded = SetPrefix::zeros(1);
    for n in 1..=n_max {
        let r = range(n);
        let bit = source.contains(n);
        for _ in r {
            encoded.push(bit);
        }
    }
    Ok(AmplifiedSet { source, encoded })
}

/// 1 iff strictly more than half of `I_n` lies in `r`.
pub fn decode_bit(r: &SetPrefix, n: u64) -> Result<bool, HalfboundError> {
    if n == 0 {
        return Err(HalfboundError::ZeroIndex);
    }
    let iv = range(n);
    if r.len() < iv.end {
        return Err(HalfboundError::InsufficientPrefix { n, required: iv.end, len: r.len() });
    }
    let size = iv.end - iv.start;
    Ok(2 * r.count_ones_in(iv) > size)
}

/// Decoded bits for `n_from..=n_to`, returned as a prefix of length
/// `n_to + 1` whose entries below `n_from` are 0.
pub fn decode_range(r: &SetPrefix, n_from: u64, n_to: u64) -> Result<SetPrefix, HalfboundError> {
    let mut out = SetPrefix::zeros(n_to + 1);
    for n in n_from.max(1)..=n_to {
        out.set(n, decode_bit(r, n)?);
    }
    Ok(out)
}

/// Strictly-below-majority corruption budget `⌊(|I_n| - 1)/2⌋`.
pub fn safe_budget(n: u64) -> u64 {
    let iv = range(n);
    (iv.end - iv.start - 1) / 2
}

/// Smallest flip count that forces a misdecode of `I_n`: `⌊|I_n|/2⌋ + 1`.
///
/// With a source bit of 0 and an even `|I_n|`, `|I_n|/2` flips leave an
/// exact tie, which decodes to 0 and is still correct.
pub fn breaking_flips(n: u64) -> u64 {
    let iv = range(n);
    (iv.end - iv.start) / 2 + 1
}

/// Flips `count` uniformly chosen positions of `I_n`.
pub fn flip_in_interval(r: &mut SetPrefix, n: u64, count: u64, rng: &mut SeededRng) {
    let iv = range(n);
    let picks = rng.subset(iv.end - iv.start, count).expect("count <= |I_n|");
    for off in picks {
        r.flip(iv.start + off);
    }
}

/// Per interval, flips a uniform number in `0..=safe_budget(n)` of positions.
pub fn corrupt_below_threshold(encoded: &SetPrefix, n_max: u64, rng: &mut SeededRng) -> SetPrefix {
    let mut r = encoded.clone();
    for n in 1..=n_max {
        let k = rng.below(safe_budget(n) + 1);
        flip_in_interval(&mut r, n, k, rng);
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Misdecode {
    pub trial: u64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub n_max: u64,
    pub trials: u64,
    pub seed: u64,
    /// Trials whose below-threshold corruption decoded back to the source.
    pub recovered: u64,
    pub failures: Vec<Misdecode>,
    /// Per trial: the interval given a breaking corruption, and every index
    /// that then misdecoded.
    pub targeted: Vec<TargetedOutcome>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetedOutcome {
    pub trial: u64,
    pub target: u64,
    pub flagged: Vec<u64>,
}

fn mismatches(source: &SetPrefix, decoded: &SetPrefix, n_max: u64) -> Vec<u64> {
    (1..=n_max).filter(|&n| source.contains(n) != decoded.contains(n)).collect()
}

/// Encode, corrupt, decode cycle over `trials` random sources.
///
/// Each trial draws a source on `0..=n_max`, applies a below-threshold
/// corruption and checks exact recovery, then breaks one random interval
/// and checks that exactly that index misdecodes.
pub fn run_fuzzer(n_max: u64, trials: u64, seed: u64, cap: u64) -> Result<FuzzReport, HalfboundError> {
    let mut rng = SeededRng::new(seed);
    let mut recovered = 0;
    let mut failures = Vec::new();
    let mut targeted = Vec::new();
    for trial in 0..trials {
        let source = SetPrefix::from_fn(n_max + 1, |n| n > 0 && rng.below(2) == 1);
        let amp = encode_with_cap(&source, n_max, cap)?;
        let noisy = corrupt_below_threshold(&amp.encoded, n_max, &mut rng);
        let bad = mismatches(&amp.source, &decode_range(&noisy, 1, n_max)?, n_max);
        if bad.is_empty() {
            recovered += 1;
        }
        failures.extend(bad.into_iter().map(|n| Misdecode { trial, n }));

        let target = 1 + rng.below(n_max);
        let mut broken = amp.encoded.clone();
        flip_in_interval(&mut broken, target, breaking_flips(target), &mut rng);
        let flagged = mismatches(&amp.source, &decode_range(&broken, 1, n_max)?, n_max);
        targeted.push(TargetedOutcome { trial, target, flagged });
    }
    let passed = recovered == trials && targeted.iter().all(|t| t.flagged == [t.target]);
    Ok(FuzzReport { n_max, trials, seed, recovered, failures, targeted, passed })
}
