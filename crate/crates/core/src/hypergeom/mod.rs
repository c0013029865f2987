//! Exact hypergeometric probabilities and the Hoeffding tail bound for
//! sampling without replacement.
//!
//! `H(K, N, n)` is the number of marked items in a uniform `K`-subset of a
//! population of `N` items, `n` of which are marked:
//!
//! ```text
//! Pr(X = x) = C(n, x) · C(N - n, K - x) / C(N, K)
//! ```
//!
//! With `p = K / N > q` and `t = p - q`, `Pr(X <= q·n) <= exp(-2 t² n)`,
//! independently of `N`. [`hoeffding_bound`] evaluates the right-hand side
//! rounded upward so exact comparisons against it are sound.

mod dyadic;
mod sample;

pub use dyadic::{exp_neg_upper, Dyadic, SIGNIFICAND_BITS};
pub use sample::{sample_without_replacement, stage_seed, SeededRng};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{floor_to_u64, ExactRational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergeomError {
    #[error("draws {draws} exceed population {population}")]
    TooManyDraws { draws: u64, population: u64 },
    #[error("successes {successes} exceed population {population}")]
    TooManySuccesses { successes: u64, population: u64 },
    #[error("cannot draw {r} of {universe} without replacement")]
    SampleTooLarge { r: u64, universe: u64 },
    #[error("tail bound needs p > q (t = {0} is not positive)")]
    NonPositiveGap(String),
}

/// Parameters of `H(K, N, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HypergeomParams {
    draws: u64,
    population: u64,
    successes: u64,
}

impl HypergeomParams {
    pub fn new(draws: u64, population: u64, successes: u64) -> Result<Self, HypergeomError> {
        if draws > population {
            return Err(HypergeomError::TooManyDraws { draws, population });
        }
        if successes > population {
            return Err(HypergeomError::TooManySuccesses { successes, population });
        }
        Ok(Self { draws, population, successes })
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    /// `K / N`; zero for an empty population.
    pub fn draw_fraction(&self) -> ExactRational {
        if self.population == 0 {
            return BigRational::zero();
        }
        BigRational::new(BigInt::from(self.draws), BigInt::from(self.population))
    }

    fn support_max(&self) -> u64 {
        self.draws.min(self.successes)
    }

    /// `C(n, x) · C(N - n, K - x)`, the pmf numerator over `C(N, K)`.
    pub fn weight(&self, x: u64) -> BigUint {
        if x > self.support_max() {
            return BigUint::zero();
        }
        binomial(self.successes, x) * binomial(self.population - self.successes, self.draws - x)
    }

    /// `Σ_{x <= upto} weight(x)`.
    pub fn cumulative_weight(&self, upto: u64) -> BigUint {
        let top = upto.min(self.support_max());
        // Iterate the two binomials incrementally instead of recomputing each.
        let fail = self.population - self.successes;
        let mut total = BigUint::zero();
        let mut c_succ = BigUint::one(); // C(n, x)
        for x in 0..=top {
            if x > 0 {
                c_succ = c_succ * BigUint::from(self.successes - x + 1) / BigUint::from(x);
            }
            let need = self.draws - x;
            if need <= fail {
                total += &c_succ * binomial(fail, need);
            }
        }
        total
    }

    pub fn total_weight(&self) -> BigUint {
        binomial(self.population, self.draws)
    }
}

/// `a` choose `b`; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc = acc * BigUint::from(a - i) / BigUint::from(i + 1);
    }
    acc
}

/// Exact `Pr(X = x)`.
pub fn pmf(h: &HypergeomParams, x: u64) -> ExactRational {
    BigRational::new(BigInt::from(h.weight(x)), BigInt::from(h.total_weight()))
}

/// Exact `Pr(X <= threshold)` for a rational threshold (summed up to its floor).
pub fn tail_leq(h: &HypergeomParams, threshold: &ExactRational) -> ExactRational {
    if threshold.is_negative() {
        return BigRational::zero();
    }
    let upto = floor_to_u64(threshold).unwrap_or(u64::MAX);
    BigRational::new(BigInt::from(h.cumulative_weight(upto)), BigInt::from(h.total_weight()))
}

/// `exp(-2 t² n)` rounded upward.
pub fn hoeffding_bound(t: &ExactRational, n: u64) -> Result<Dyadic, HypergeomError> {
    if !t.is_positive() {
        return Err(HypergeomError::NonPositiveGap(crate::numeric::format_rational(t)));
    }
    let y = BigRational::from_integer(BigInt::from(2u64) * BigInt::from(n)) * t * t;
    Ok(exp_neg_upper(&y))
}

/// The tail inequality instance `Pr(X <= q·n) <= exp(-2 t² n)` with `t = K/N - q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailBoundInput {
    pub p: ExactRational,
    pub q: ExactRational,
    pub n: u64,
    pub t: ExactRational,
}

/// One certified comparison between an exact tail and its Hoeffding bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailCertificate {
    pub params: HypergeomParams,
    pub q: ExactRational,
    pub exact_tail: ExactRational,
    pub upper: Dyadic,
    pub holds: bool,
}

impl TailBoundInput {
    pub fn new(h: &HypergeomParams, q: ExactRational) -> Result<Self, HypergeomError> {
        let p = h.draw_fraction();
        let t = &p - &q;
        if !t.is_positive() {
            return Err(HypergeomError::NonPositiveGap(crate::numeric::format_rational(&t)));
        }
        Ok(Self { p, q, n: h.successes(), t })
    }

    pub fn certify(&self, h: &HypergeomParams) -> TailCertificate {
        let threshold = &self.q * BigRational::from_integer(BigInt::from(self.n));
        let exact_tail = tail_leq(h, &threshold);
        let upper = hoeffding_bound(&self.t, self.n).expect("t > 0 by construction");
        let holds = exact_tail <= upper.to_rational();
        TailCertificate { params: *h, q: self.q.clone(), exact_tail, upper, holds }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn h(k: u64, n_pop: u64, n: u64) -> HypergeomParams {
        HypergeomParams::new(k, n_pop, n).unwrap()
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(4, 2), BigUint::from(6u8));
        assert_eq!(binomial(9, 0), BigUint::one());
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(60, 30), "118264581564861424".parse::<BigUint>().unwrap());
    }

    #[test]
    fn pmf_examples() {
        // draws {a,b},{a,c},{a,d},{b,c},{b,d},{c,d} with a,b marked: 4 of 6 hit once
        assert_eq!(pmf(&h(2, 4, 2), 1), ratio(2, 3));
        assert_eq!(pmf(&h(3, 9, 4), 4), ratio(0, 1));
        assert_eq!(pmf(&h(7, 7, 3), 3), ratio(1, 1));
    }

    #[test]
    fn tail_examples() {
        assert_eq!(tail_leq(&h(1, 2, 1), &ratio(1, 2)), ratio(1, 2));
        assert_eq!(tail_leq(&h(3, 8, 4), &ratio(-1, 3)), ratio(0, 1));
        assert_eq!(tail_leq(&h(3, 8, 4), &ratio(3, 1)), ratio(1, 1));
        assert_eq!(tail_leq(&h(3, 8, 4), &ratio(7, 2)), ratio(1, 1));
    }

    #[test]
    fn parameter_validation() {
        assert!(HypergeomParams::new(5, 4, 1).is_err());
        assert!(HypergeomParams::new(2, 4, 5).is_err());
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_bound(&ratio(3, 7), 0).unwrap(), Dyadic::one());
        let e1 = hoeffding_bound(&ratio(1, 2), 2).unwrap();
        assert!(e1.to_rational() >= ratio(367_879_441, 1_000_000_000));
        assert!(e1.to_rational() <= ratio(367_879_442, 1_000_000_000));
        let t = ratio(1, 5);
        for n in 0..40 {
            assert!(hoeffding_bound(&t, n + 1).unwrap() < hoeffding_bound(&t, n).unwrap());
        }
        assert!(hoeffding_bound(&ratio(0, 1), 3).is_err());
    }

    #[test]
    fn certify_small_instance() {
        let params = h(6, 10, 5);
        let input = TailBoundInput::new(&params, ratio(1, 4)).unwrap();
        assert_eq!(input.t, ratio(7, 20));
        let cert = input.certify(&params);
        assert!(cert.holds);
        assert!(TailBoundInput::new(&params, ratio(3, 5)).is_err());
    }
}
