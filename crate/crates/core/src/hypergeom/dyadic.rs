use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Significand width of every [`Dyadic`] produced by upward rounding.
pub const SIGNIFICAND_BITS: u64 = 128;

/// A non-negative binary float `mantissa · 2^exponent`, used as a certified
/// upper estimate of a real quantity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigUint,
    exponent: i64,
}

impl Dyadic {
    pub fn one() -> Self {
        Self { mantissa: BigUint::one(), exponent: 0 }
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn to_rational(&self) -> BigRational {
        let m = BigInt::from(self.mantissa.clone());
        if self.exponent >= 0 {
            BigRational::from_integer(m << self.exponent as usize)
        } else {
            BigRational::new(m, BigInt::one() << (-self.exponent) as usize)
        }
    }

    /// Smallest value with a [`SIGNIFICAND_BITS`]-bit mantissa that is `>= r`.
    /// Panics on negative input.
    pub fn round_up(r: &BigRational) -> Self {
        assert!(!r.is_negative(), "round_up of a negative value");
        if r.is_zero() {
            return Self { mantissa: BigUint::zero(), exponent: 0 };
        }
        let num = r.numer().magnitude().clone();
        let den = r.denom().magnitude().clone();
        let mut exponent = num.bits() as i64 - den.bits() as i64 - SIGNIFICAND_BITS as i64;
        let (n, d) = if exponent >= 0 { (num, den << exponent as usize) } else { (num << (-exponent) as usize, den) };
        let mut mantissa = n.div_ceil(&d);
        while mantissa.bits() > SIGNIFICAND_BITS {
            mantissa = mantissa.div_ceil(&BigUint::from(2u8));
            exponent += 1;
        }
        Self { mantissa, exponent }
    }

    /// Nearest `f64`, for display only.
    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits() as i64;
        let shift = (bits - 60).max(0);
        let top = (&self.mantissa >> shift as usize).to_f64().unwrap_or(f64::INFINITY);
        top * 2f64.powi((self.exponent + shift) as i32)
    }

    /// Decimal scientific notation with `digits` significant digits, rounded up.
    pub fn to_decimal_upper(&self, digits: u32) -> String {
        let v = self.to_rational();
        if v.is_zero() {
            return "0".into();
        }
        let ten = BigRational::from_integer(BigInt::from(10));
        // find d with 10^d <= v < 10^(d+1)
        let mut d: i64 = (self.mantissa.bits() as f64 * std::f64::consts::LOG10_2
            + self.exponent as f64 * std::f64::consts::LOG10_2)
            .floor() as i64;
        let pow = |k: i64| -> BigRational {
            if k >= 0 {
                num_traits::pow(ten.clone(), k as usize)
            } else {
                num_traits::pow(ten.clone(), (-k) as usize).recip()
            }
        };
        while pow(d) > v {
            d -= 1;
        }
        while pow(d + 1) <= v {
            d += 1;
        }
        let scaled = &v * pow(digits as i64 - 1 - d);
        let mut int = scaled.ceil().to_integer();
        if int == num_traits::pow(BigInt::from(10), digits as usize) {
            int /= 10;
            d += 1;
        }
        let s = int.to_string();
        let (head, tail) = s.split_at(1);
        if tail.is_empty() {
            format!("{head}e{d}")
        } else {
            format!("{head}.{tail}e{d}")
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_rational().cmp(&other.to_rational())
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({}·2^{} ≈ {:e})", self.mantissa, self.exponent, self.to_f64())
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_upper(25))
    }
}

/// Certified upper bound on `exp(-y)` for rational `y >= 0`.
///
/// Computes a lower bound on `exp(y)` in fixed point, rounding every step
/// down: argument halving until `y / 2^k <= 1/2`, a truncated Taylor sum
/// (all terms positive, so truncation only lowers it), then `k` squarings.
/// The reciprocal is rounded up to [`SIGNIFICAND_BITS`] bits.
pub fn exp_neg_upper(y: &BigRational) -> Dyadic {
    assert!(!y.is_negative(), "exp_neg_upper needs y >= 0");
    if y.is_zero() {
        return Dyadic::one();
    }
    let num = y.numer().magnitude();
    let den = y.denom().magnitude();
    // k with y / 2^k <= 1/2
    let k = (num.bits() as i64 - den.bits() as i64 + 2).max(0) as usize;
    let precision = SIGNIFICAND_BITS as usize + 64 + 2 * k;
    let scale = BigUint::one() << precision;

    // z = floor(y · 2^precision / 2^k), a lower bound on the reduced argument
    let z = (num << precision) / (den << k);

    let mut sum = scale.clone();
    let mut term = scale.clone();
    let mut i = 1u32;
    loop {
        term = (&term * &z) / (&scale * BigUint::from(i));
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    for _ in 0..k {
        sum = (&sum * &sum) >> precision;
    }
    // exp(y) >= sum / 2^precision, so exp(-y) <= 2^precision / sum
    let upper = BigRational::new(BigInt::from(scale), BigInt::from(sum));
    Dyadic::round_up(&upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    #[test]
    fn round_up_is_upper_and_tight() {
        for (n, d) in [(1, 3), (2, 7), (22, 7), (1, 1), (5, 1024), (10_000_001, 3)] {
            let r = ratio(n, d);
            let up = Dyadic::round_up(&r);
            assert!(up.to_rational() >= r);
            assert!(up.mantissa().bits() <= SIGNIFICAND_BITS);
            let slack = (up.to_rational() - &r) / &r;
            assert!(slack < BigRational::new(BigInt::one(), BigInt::one() << 126));
        }
        assert_eq!(Dyadic::round_up(&ratio(3, 4)).to_rational(), ratio(3, 4));
    }

    #[test]
    fn exp_matches_float_closely() {
        for (n, d) in [(1, 1), (1, 2), (27, 1000), (7, 3), (125, 1), (3645, 1)] {
            let y = ratio(n, d);
            let up = exp_neg_upper(&y).to_f64();
            let want = (-(n as f64) / d as f64).exp();
            assert!((up - want).abs() <= want * 1e-12, "y = {n}/{d}: {up} vs {want}");
        }
    }

    #[test]
    fn decimal_rendering_rounds_up() {
        assert_eq!(Dyadic::round_up(&ratio(1, 4)).to_decimal_upper(3), "2.50e-1");
        assert_eq!(Dyadic::round_up(&ratio(1, 3)).to_decimal_upper(4), "3.334e-1");
        assert_eq!(Dyadic::one().to_decimal_upper(1), "1e0");
        assert_eq!(Dyadic::round_up(&ratio(999, 1)).to_decimal_upper(2), "1.0e3");
    }
}
