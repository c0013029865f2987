//! Test-side oracles. Everything here is counted directly and shares no code
//! with the library beyond evaluating a reduction.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;

use mgamma::hypergeom::SeededRng;
use mgamma::numeric::SetPrefix;
use mgamma::reductions::ReductionSpec;

pub fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn tri(n: u64) -> Range<u64> {
    n * (n - 1) / 2..n * (n + 1) / 2
}

/// `Pr(X = x)` for `X = |D ∩ {0..n}|`, `D` a uniform `k`-subset of `0..pop`,
/// by listing every subset. `pop <= 16`.
pub fn enumerated_pmf(k: u64, pop: u64, n: u64) -> Vec<BigRational> {
    let mut counts = vec![0u64; n as usize + 1];
    let low = (1u32 << n) - 1;
    let mut total = 0;
    for mask in 0u32..1 << pop {
        if u64::from(mask.count_ones()) == k {
            counts[(mask & low).count_ones() as usize] += 1;
            total += 1;
        }
    }
    counts.into_iter().map(|c| rat(c, total)).collect()
}

/// `(J*, J**)` as value → multiplicity maps.
pub fn split_counts(values: &[u64]) -> (Vec<u64>, BTreeMap<u64, u64>) {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let star = counts.iter().filter(|(_, m)| *m % 2 == 1).map(|(v, _)| *v).collect();
    let starstar = counts.iter().filter(|(_, m)| **m >= 2).map(|(v, m)| (*v, m / 2)).collect();
    (star, starstar)
}

/// Random reduction spec text over a small menu of shapes.
pub fn random_reduction(rng: &mut SeededRng) -> ReductionSpec {
    let a = 1 + rng.below(4);
    let b = rng.below(7);
    let m = 2 + rng.below(9);
    let text = match rng.below(8) {
        0 => "x".to_string(),
        1 => format!("x / {a}"),
        2 => format!("x % {m}"),
        3 => format!("(x * {a} + {b}) % {m}"),
        4 => format!("{b}"),
        5 => format!("min(x, {})", b * 5),
        6 => format!("x / {m} + x % {a}"),
        _ => format!("[{b}, {a}, {m}] then x / {a}"),
    };
    ReductionSpec::parse(&text).unwrap()
}

/// `|{x ∈ xs : A(f(x)) = in_bstar(x)}|`.
pub fn agreement_on(f: &ReductionSpec, a: &SetPrefix, xs: &[u64], in_bstar: impl Fn(u64) -> bool) -> u64 {
    xs.iter().filter(|&&x| a.get(f.eval(x)).unwrap() == in_bstar(x)).count() as u64
}

/// Prefix of length `len` with each bit an independent coin.
pub fn random_prefix(rng: &mut SeededRng, len: u64) -> SetPrefix {
    SetPrefix::from_fn(len, |_| rng.below(2) == 1)
}
