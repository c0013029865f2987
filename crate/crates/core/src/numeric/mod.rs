//! Exact densities over finite prefixes of characteristic functions.
//!
//! Every quantity here is an exact rational. Lower density is a limit
//! inferior and cannot be observed on finite data, so the module works with
//! [`DensityProfile`]s: the density quotient sampled at declared checkpoints,
//! with [`tail_min_density`] as the finite stand-in for the liminf.

mod claim;
mod prefix;
mod profile;

pub use claim::{claim1_check, per_interval_agreement, Claim1Outcome};
pub use prefix::SetPrefix;
pub use profile::DensityProfile;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type ExactRational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("position {n} exceeds prefix length {len}")]
    OutOfRange { n: u64, len: u64 },
    #[error("density quotient undefined at n = 0")]
    ZeroLength,
    #[error("profile tail starting at index {from} is empty ({len} checkpoints)")]
    EmptyTail { from: usize, len: usize },
    #[error("checkpoints must be strictly increasing (index {index})")]
    NonIncreasingCheckpoints { index: usize },
    #[error("profile value {value} at index {index} lies outside [0, 1]")]
    ValueOutOfUnit { index: usize, value: String },
    #[error("checkpoint and value counts differ ({checkpoints} vs {values})")]
    LengthMismatch { checkpoints: usize, values: usize },
    #[error("interval hypothesis fails at n = {n}: agreement {agreement} < {required}")]
    HypothesisFailure { n: u64, agreement: String, required: String },
    #[error("claim check needs x in I_(N+1) with N >= 2, got x = {x}")]
    PositionTooSmall { x: u64 },
    #[error("no gamma supplied for interval {n}")]
    MissingGamma { n: u64 },
    #[error("malformed rational {0:?}")]
    BadRational(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// `num / den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_count(n: u64) -> ExactRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `"a/b"`, `"a"`, or a finite decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<ExactRational, NumericError> {
    let t = text.trim();
    let bad = || NumericError::BadRational(text.to_string());
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let whole: BigInt =
            if int.is_empty() || int == "-" { BigInt::zero() } else { int.parse().map_err(|_| bad())? };
        let digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = whole.abs() * &scale + digits;
        let signed = if negative { -mag } else { mag };
        return Ok(BigRational::new(signed, scale));
    }
    let r: BigRational = t.parse().map_err(|_| bad())?;
    Ok(r)
}

/// Renders as `"a/b"`, or `"a"` for integers.
pub fn format_rational(r: &ExactRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn floor_to_u64(r: &ExactRational) -> Option<u64> {
    use num_traits::ToPrimitive;
    r.floor().to_integer().to_u64()
}

pub fn ceil_to_u64(r: &ExactRational) -> Option<u64> {
    use num_traits::ToPrimitive;
    r.ceil().to_integer().to_u64()
}

/// `(A <-> R) ∩ [0, n)` as a position set of length `n`.
pub fn agreement_positions(a: &SetPrefix, r: &SetPrefix, n: u64) -> Result<SetPrefix, NumericError> {
    for s in [a, r] {
        if n > s.len() {
            return Err(NumericError::OutOfRange { n, len: s.len() });
        }
    }
    Ok(SetPrefix::from_fn(n, |x| a.contains(x) == r.contains(x)))
}

/// `|s ∩ [0, n)| / n`.
pub fn prefix_density(s: &SetPrefix, n: u64) -> Result<ExactRational, NumericError> {
    if n == 0 {
        return Err(NumericError::ZeroLength);
    }
    if n > s.len() {
        return Err(NumericError::OutOfRange { n, len: s.len() });
    }
    Ok(BigRational::new(BigInt::from(s.count_ones_below(n)), BigInt::from(n)))
}

/// Minimum profile value over checkpoints with index `>= from_index`.
pub fn tail_min_density(profile: &DensityProfile, from_index: usize) -> Result<ExactRational, NumericError> {
    profile
        .values()
        .get(from_index..)
        .and_then(|tail| tail.iter().min())
        .cloned()
        .ok_or(NumericError::EmptyTail { from: from_index, len: profile.len() })
}

/// Serde adapter storing rationals as `"a/b"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, ExactRational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &ExactRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
