//! Finite check of the step from per-interval agreement to prefix agreement.
//!
//! If an agreement set meets `p - γ_n` on every triangular interval `I_n`,
//! then at a position `x ∈ I_{N+1}` its prefix density is at least
//! `((N-1)/(N+1)) · (p - γ_m)` for any `m` whose cumulative threshold `K_m`
//! is at most `N`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{format_rational, ExactRational, NumericError, SetPrefix};
use crate::intervals::{interval_bounds, interval_index, IntervalScheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim1Outcome {
    /// `N`, where `x ∈ I_{N+1}`.
    pub interval: u64,
    /// Chosen `m`; `None` when no `K_m <= N` exists and only the trivial bound applies.
    pub m: Option<u64>,
    pub k_m: Option<u64>,
    pub bound: ExactRational,
    /// `|agreement ∩ [0, x]| / (x + 1)`.
    pub actual: ExactRational,
    pub holds: bool,
}

/// `|agreement ∩ I_n| / n` for `n = 1..=n_max`.
pub fn per_interval_agreement(agreement: &SetPrefix, n_max: u64) -> Result<Vec<ExactRational>, NumericError> {
    (1..=n_max)
        .map(|n| {
            let r = interval_bounds(IntervalScheme::Triangular, n).expect("small index");
            if r.end > agreement.len() {
                return Err(NumericError::OutOfRange { n: r.end, len: agreement.len() });
            }
            Ok(BigRational::new(BigInt::from(agreement.count_ones_in(r)), BigInt::from(n)))
        })
        .collect()
}

/// Checks the interval hypothesis on `start..=N` and evaluates the prefix bound at `x`.
///
/// `gammas[i]` is `γ_{i+1}` and must be non-increasing. `K_m` is the first
/// interval index from which the running minimum of cumulative agreement
/// (over `I_1 ∪ … ∪ I_K`) stays at or above `p - γ_m` up to `N`; the largest
/// `m` with `K_m <= N` is used.
pub fn claim1_check(
    agreement: &SetPrefix,
    gammas: &[ExactRational],
    p: &ExactRational,
    x: u64,
    start: u64,
) -> Result<Claim1Outcome, NumericError> {
    let next = interval_index(IntervalScheme::Triangular, x).expect("triangular covers all x");
    if next < 3 {
        return Err(NumericError::PositionTooSmall { x });
    }
    let big_n = next - 1;
    if x >= agreement.len() {
        return Err(NumericError::OutOfRange { n: x + 1, len: agreement.len() });
    }
    if let Some(i) = gammas.windows(2).position(|w| w[1] > w[0]) {
        return Err(NumericError::HypothesisFailure {
            n: i as u64 + 2,
            agreement: "gamma sequence".into(),
            required: "non-increasing".into(),
        });
    }

    let per_interval = per_interval_agreement(agreement, big_n)?;
    for n in start.max(1)..=big_n {
        let gamma = gammas.get(n as usize - 1).ok_or(NumericError::MissingGamma { n })?;
        let required = p - gamma;
        let got = &per_interval[n as usize - 1];
        if *got < required {
            return Err(NumericError::HypothesisFailure {
                n,
                agreement: format_rational(got),
                required: format_rational(&required),
            });
        }
    }

    // cumulative[k] = |agreement ∩ ⋃_{n<=k+1} I_n| / Σ_{n<=k+1} n
    let mut cumulative = Vec::with_capacity(big_n as usize);
    let mut count = 0u64;
    for n in 1..=big_n {
        let r = interval_bounds(IntervalScheme::Triangular, n).expect("small index");
        count += agreement.count_ones_in(r.clone());
        cumulative.push(BigRational::new(BigInt::from(count), BigInt::from(r.end)));
    }
    let mut suffix_min = cumulative.clone();
    for k in (0..suffix_min.len().saturating_sub(1)).rev() {
        if suffix_min[k + 1] < suffix_min[k] {
            suffix_min[k] = suffix_min[k + 1].clone();
        }
    }

    let mut chosen = None;
    for (i, gamma) in gammas.iter().enumerate() {
        let threshold = p - gamma;
        if let Some(k) = suffix_min.iter().position(|v| *v >= threshold) {
            chosen = Some((i as u64 + 1, k as u64 + 1, threshold));
        }
    }

    let actual = BigRational::new(BigInt::from(agreement.count_ones_below(x + 1)), BigInt::from(x + 1));
    let (m, k_m, bound) = match chosen {
        Some((m, k, threshold)) => {
            let factor = BigRational::new(BigInt::from(big_n - 1), BigInt::from(big_n + 1));
            (Some(m), Some(k), factor * threshold)
        }
        None => (None, None, BigRational::zero()),
    };
    let holds = actual >= bound;
    Ok(Claim1Outcome { interval: big_n, m, k_m, bound, actual, holds })
}
