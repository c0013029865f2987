//! Triangular intervals `I_n = [n(n-1)/2, n(n+1)/2)` of length `n`, and
//! factorial intervals `I_n = [n!, (n+1)!)`.
//!
//! Both schemes are indexed from `n = 1`. Triangular intervals tile the whole
//! of the naturals. Factorial intervals tile `[1, ∞)`: `[0!, 1!)` is empty, so
//! position 0 lies in no factorial interval.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalScheme {
    Triangular,
    Factorial,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("interval indices start at 1")]
    ZeroIndex,
    #[error("position 0 lies in no factorial interval")]
    NoContainingInterval,
    #[error("interval {0} does not fit in 64-bit positions")]
    Overflow(u64),
}

/// Largest factorial index whose interval end `(n+1)!` fits in a `u64`.
pub const MAX_FACTORIAL_INDEX: u64 = 19;

pub fn factorial(n: u64) -> Option<u64> {
    (1..=n).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

pub fn triangular_start(n: u64) -> Option<u64> {
    n.checked_mul(n.checked_sub(1)?).map(|v| v / 2)
}

/// Half-open range of `I_n`.
pub fn interval_bounds(scheme: IntervalScheme, n: u64) -> Result<Range<u64>, IntervalError> {
    if n == 0 {
        return Err(IntervalError::ZeroIndex);
    }
    let overflow = IntervalError::Overflow(n);
    match scheme {
        IntervalScheme::Triangular => {
            let start = triangular_start(n).ok_or(overflow.clone())?;
            let end = start.checked_add(n).ok_or(overflow)?;
            Ok(start..end)
        }
        IntervalScheme::Factorial => {
            let start = factorial(n).ok_or(overflow.clone())?;
            let end = start.checked_mul(n + 1).ok_or(overflow)?;
            Ok(start..end)
        }
    }
}

/// The unique `n` with `x ∈ I_n`.
pub fn interval_index(scheme: IntervalScheme, x: u64) -> Result<u64, IntervalError> {
    match scheme {
        IntervalScheme::Triangular => Ok(triangular_index(x)),
        IntervalScheme::Factorial => {
            if x == 0 {
                return Err(IntervalError::NoContainingInterval);
            }
            // Incremental scan: there are at most 20 factorial intervals below 2^64.
            let mut n = 1u64;
            let mut end = 2u64;
            while x >= end {
                n += 1;
                end = match end.checked_mul(n + 1) {
                    Some(e) => e,
                    None => return Ok(n),
                };
            }
            Ok(n)
        }
    }
}

fn triangular_index(x: u64) -> u64 {
    // n = floor((1 + sqrt(8x + 1)) / 2), corrected for isqrt boundary effects.
    let disc = 8u128 * x as u128 + 1;
    let mut n = disc.isqrt().div_ceil(2) as u64;
    let start = |n: u64| (n as u128 * (n as u128 - 1)) / 2;
    while start(n) > x as u128 {
        n -= 1;
    }
    while start(n + 1) <= x as u128 {
        n += 1;
    }
    n
}

/// All `n <= n_max` whose interval intersects `window`, ascending.
pub fn intervals_meeting(scheme: IntervalScheme, window: Range<u64>, n_max: u64) -> Vec<u64> {
    if window.is_empty() || n_max == 0 {
        return Vec::new();
    }
    let first = match scheme {
        IntervalScheme::Triangular => triangular_index(window.start),
        IntervalScheme::Factorial => interval_index(scheme, window.start.max(1)).unwrap_or(1),
    };
    let last = match interval_index(scheme, window.end - 1) {
        Ok(n) => n,
        // Window is exactly {0} under the factorial scheme.
        Err(_) => return Vec::new(),
    };
    (first..=last.min(n_max)).collect()
}
