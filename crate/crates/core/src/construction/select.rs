//! The constraint list and the rejection-sampled forcing set `S`.

use std::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergeom::{hoeffding_bound, Dyadic, HypergeomParams, SeededRng};
use crate::numeric::{ceil_to_u64, format_rational, from_count, ExactRational};
use crate::reductions::{PartitionCache, ReductionSpec};

/// One constrained pair `(n, e)`: `S` must satisfy
/// `|S ∩ J*| + outside_count >= p·|J*|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub n: u64,
    pub e: usize,
    pub j_star: Vec<u64>,
    /// `|J* \ window|`.
    pub outside_count: u64,
}

impl Constraint {
    pub fn inside_count(&self) -> u64 {
        self.j_star.len() as u64 - self.outside_count
    }

    /// `p·|J*| - outside_count`, the number of `S`-hits still required.
    pub fn required_hits(&self, p: &ExactRational) -> ExactRational {
        p * from_count(self.j_star.len() as u64) - from_count(self.outside_count)
    }

    /// `|S ∩ J*|` for ascending `s`.
    pub fn hits(&self, s: &[u64]) -> u64 {
        self.j_star.iter().filter(|y| s.binary_search(y).is_ok()).count() as u64
    }

    pub fn satisfied_by(&self, s: &[u64], p: &ExactRational) -> bool {
        from_count(self.hits(s)) >= self.required_hits(p)
    }
}

/// A constraint left unsatisfied by the last sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u64,
    pub e: usize,
    pub hits: u64,
    pub outside_count: u64,
    pub required: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectError {
    #[error("no admissible S after {attempts} samples; last sample violated {} constraint(s)", .violations.len())]
    Exhausted { attempts: u64, violations: Vec<Violation> },
    #[error("cannot draw {r} positions from a window of {size}")]
    WindowTooSmall { r: u64, size: u64 },
}

/// All `(n, e)` with `e <= ℓ`, `M <= n <= horizon`, `|J*| > 2εn`, and `J*`
/// meeting the window. Ordered by `e`, then `n`.
pub fn collect_constraints(
    stage: u64,
    m: u64,
    window: Range<u64>,
    reductions: &[ReductionSpec],
    eps: &ExactRational,
    horizon: u64,
    cache: &PartitionCache,
) -> Vec<Constraint> {
    let active = (stage as usize + 1).min(reductions.len());
    let two_eps = eps * from_count(2);
    let pairs: Vec<(usize, u64)> = (0..active).flat_map(|e| (m..=horizon).map(move |n| (e, n))).collect();
    pairs
        .into_par_iter()
        .filter_map(|(e, n)| {
            let split = cache.get(e, &reductions[e], n);
            let size = split.j_star.len() as u64;
            if from_count(size) <= &two_eps * from_count(n) {
                return None;
            }
            let lo = split.j_star.partition_point(|&y| y < window.start);
            let hi = split.j_star.partition_point(|&y| y < window.end);
            if lo == hi {
                return None;
            }
            Some(Constraint { n, e, j_star: split.j_star.clone(), outside_count: size - (hi - lo) as u64 })
        })
        .collect()
}

/// `Σ Pr(|S ∩ J*| < p|J*| - outside)` over the constraints, exactly, for a
/// uniform `r`-subset `S` of a window of `size` positions.
pub fn exact_failure_bound(constraints: &[Constraint], r: u64, size: u64, p: &ExactRational) -> ExactRational {
    let total: BigUint = constraints
        .par_iter()
        .map(|c| {
            let need = c.required_hits(p);
            if !need.is_positive() {
                return BigUint::zero();
            }
            // X < need  ⇔  X <= ⌈need⌉ - 1
            let upto = ceil_to_u64(&need).expect("hit count fits in u64") - 1;
            HypergeomParams::new(r, size, c.inside_count())
                .expect("window contains J* ∩ window")
                .cumulative_weight(upto)
        })
        .sum();
    let denom = HypergeomParams::new(r, size, 0).expect("r <= size").total_weight();
    BigRational::new(BigInt::from(total), BigInt::from(denom))
}

/// Hoeffding counterpart of [`exact_failure_bound`]: each term is
/// `exp(-2t²m)` with `m = |J* ∩ window|`, `q = need/m`, `t = r/size - q`.
pub fn hoeffding_failure_bound(constraints: &[Constraint], r: u64, size: u64, p: &ExactRational) -> Dyadic {
    let drawn = BigRational::new(BigInt::from(r), BigInt::from(size));
    let sum: ExactRational = constraints
        .iter()
        .map(|c| {
            let need = c.required_hits(p);
            if !need.is_positive() {
                return BigRational::zero();
            }
            let inside = c.inside_count();
            let t = &drawn - need / from_count(inside);
            match hoeffding_bound(&t, inside) {
                Ok(b) => b.to_rational(),
                Err(_) => BigRational::from_integer(1.into()),
            }
        })
        .sum();
    Dyadic::round_up(&sum)
}

/// Rejection-samples `S ⊆ window` with `|S| = r` until every constraint holds.
///
/// Returns `S` ascending and the number of rejected samples. At most
/// `max_retries + 1` samples are drawn.
pub fn choose_s(
    window: Range<u64>,
    r: u64,
    constraints: &[Constraint],
    p: &ExactRational,
    seed: u64,
    max_retries: u64,
) -> Result<(Vec<u64>, u64), SelectError> {
    let size = window.end - window.start;
    if r > size {
        return Err(SelectError::WindowTooSmall { r, size });
    }
    let mut rng = SeededRng::new(seed);
    let mut last = Vec::new();
    for attempt in 0..=max_retries {
        let s: Vec<u64> = rng.subset(size, r).expect("r <= size").into_iter().map(|i| window.start + i).collect();
        if constraints.iter().all(|c| c.satisfied_by(&s, p)) {
            return Ok((s, attempt));
        }
        last = s;
    }
    let violations = constraints
        .iter()
        .filter(|c| !c.satisfied_by(&last, p))
        .map(|c| Violation {
            n: c.n,
            e: c.e,
            hits: c.hits(&last),
            outside_count: c.outside_count,
            required: format_rational(&c.required_hits(p)),
        })
        .collect();
    Err(SelectError::Exhausted { attempts: max_retries + 1, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn id() -> Vec<ReductionSpec> {
        vec![ReductionSpec::identity()]
    }

    #[test]
    fn identity_constraints_cover_meeting_intervals() {
        let cache = PartitionCache::new();
        let cs = collect_constraints(0, 3, 10..20, &id(), &ratio(1, 10), 30, &cache);
        // I_5 = [10,15), I_6 = [15,21)
        assert_eq!(cs.iter().map(|c| c.n).collect::<Vec<_>>(), vec![5, 6]);
        assert_eq!(cs[0].j_star, (10..15).collect::<Vec<_>>());
        assert_eq!(cs[0].outside_count, 0);
        assert_eq!(cs[1].outside_count, 1);
    }

    #[test]
    fn even_multiplicities_give_no_constraints() {
        let cache = PartitionCache::new();
        let pairs = vec![ReductionSpec::parse("0").unwrap()];
        // |I_n| even ⇒ J* empty; odd ⇒ |J*| = 1, never above 2εn for n >= 4 at ε = 1/8
        let cs = collect_constraints(0, 4, 0..5, &pairs, &ratio(1, 8), 40, &cache);
        assert!(cs.is_empty());
    }

    #[test]
    fn intervals_below_window_are_excluded() {
        let cache = PartitionCache::new();
        let cs = collect_constraints(0, 1, 100..120, &id(), &ratio(1, 10), 12, &cache);
        assert!(cs.is_empty());
    }

    #[test]
    fn inactive_reductions_are_ignored() {
        let cache = PartitionCache::new();
        let fs = vec![ReductionSpec::constant(0), ReductionSpec::identity()];
        assert!(collect_constraints(0, 3, 10..20, &fs, &ratio(1, 10), 30, &cache).is_empty());
        assert_eq!(collect_constraints(1, 3, 10..20, &fs, &ratio(1, 10), 30, &cache).len(), 2);
    }

    #[test]
    fn no_constraints_accepts_first_sample() {
        let (s, retries) = choose_s(5..15, 4, &[], &ratio(1, 4), 1, 10).unwrap();
        assert_eq!(retries, 0);
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|x| (5..15).contains(x)));
    }

    #[test]
    fn covering_constraint_always_holds() {
        let c = Constraint { n: 4, e: 0, j_star: (0..12).collect(), outside_count: 2 };
        // window 2..12, r = 3 >= p·12 - 2 = 1
        for seed in 0..20 {
            let (_, retries) = choose_s(2..12, 3, std::slice::from_ref(&c), &ratio(1, 4), seed, 0).unwrap();
            assert_eq!(retries, 0);
        }
    }

    #[test]
    fn p_zero_is_degenerate() {
        let c = Constraint { n: 4, e: 0, j_star: vec![1, 2, 3], outside_count: 0 };
        let (_, retries) = choose_s(0..10, 0, std::slice::from_ref(&c), &ratio(0, 1), 3, 0).unwrap();
        assert_eq!(retries, 0);
        assert_eq!(exact_failure_bound(&[c], 0, 10, &ratio(0, 1)), ratio(0, 1));
    }

    #[test]
    fn exhaustion_reports_violations() {
        let c = Constraint { n: 4, e: 0, j_star: vec![0, 1, 2, 3], outside_count: 0 };
        let err = choose_s(0..100, 1, std::slice::from_ref(&c), &ratio(1, 2), 9, 5).unwrap_err();
        match err {
            SelectError::Exhausted { attempts, violations } => {
                assert_eq!(attempts, 6);
                assert_eq!(violations.len(), 1);
                assert_eq!(violations[0].required, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_bound_matches_enumeration() {
        // window 0..6, r = 3, J* = {0, 1, 2, 9}: one outside, need p·4 - 1 = 1 hit at p = 1/2
        let c = Constraint { n: 4, e: 0, j_star: vec![0, 1, 2, 9], outside_count: 1 };
        let mut fails = 0u64;
        let mut total = 0u64;
        for mask in 0u32..64 {
            if mask.count_ones() != 3 {
                continue;
            }
            total += 1;
            if mask & 0b111 == 0 {
                fails += 1;
            }
        }
        let exact = exact_failure_bound(std::slice::from_ref(&c), 3, 6, &ratio(1, 2));
        assert_eq!(exact, ratio(fails as i64, total as i64));
        assert_eq!(exact, ratio(1, 20));
        let h = hoeffding_failure_bound(&[c], 3, 6, &ratio(1, 2));
        assert!(h.to_rational() >= exact);
    }

    #[test]
    fn retries_track_failure_probability() {
        // fixed instance: window 0..20, r = 8, constraint J* = 0..10 needing 4 hits
        let c = Constraint { n: 10, e: 0, j_star: (0..10).collect(), outside_count: 0 };
        let p = ratio(2, 5);
        let bound = exact_failure_bound(std::slice::from_ref(&c), 8, 20, &p);
        assert!(bound < ratio(1, 1));
        let expected = 1.0 / (1.0 - crate::hypergeom::Dyadic::round_up(&bound).to_f64());
        let total: u64 =
            (0..100).map(|seed| choose_s(0..20, 8, std::slice::from_ref(&c), &p, seed, 1000).unwrap().1 + 1).sum();
        let mean = total as f64 / 100.0;
        assert!(mean <= 3.0 * expected, "mean samples {mean}, expected {expected}");
    }
}
