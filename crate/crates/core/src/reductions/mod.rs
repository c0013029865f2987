//! Many-one reductions on triangular intervals.
//!
//! For a reduction `f` and an interval `I_n`, the multiset image
//! `J = f(I_n)` splits as `J* ⊎ 2·J**`, where `J*` holds the elements of odd
//! multiplicity once and `J**` holds half of every multiplicity. The split
//! induces a partition of `I_n` into `I*` (mapped onto `J*`) and two twin
//! halves `I**,1`, `I**,2` (each mapped onto `J**`). The set
//! `B* = ⋃_n I**,1` is computable from `f` alone and agrees with
//! `B = f⁻¹(A)` on exactly one element of every twin pair, whatever `A` is.

mod spec;

pub use spec::{Expr, ReductionSpec, SetSpec, SpecError};

use std::collections::BTreeMap;
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::{interval_bounds, interval_index, IntervalScheme};
use crate::numeric::SetPrefix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("f({x}) = {image} lies beyond the prefix; need length {required}")]
    InsufficientPrefix { x: u64, image: u64, required: u64 },
}

/// Element → multiplicity, with every multiplicity at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Multiset {
    counts: BTreeMap<u64, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, value: u64, times: u64) {
        if times > 0 {
            *self.counts.entry(value).or_default() += times;
        }
    }

    pub fn multiplicity(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    /// Σ multiplicities.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(v, c)| (*v, *c))
    }

    /// `self ⊎ k·other`.
    pub fn plus_scaled(&self, other: &Multiset, k: u64) -> Multiset {
        let mut out = self.clone();
        for (v, c) in other.iter() {
            out.insert(v, c * k);
        }
        out
    }
}

impl FromIterator<u64> for Multiset {
    fn from_iter<T: IntoIterator<Item = u64>>(iter: T) -> Self {
        let mut m = Multiset::new();
        for v in iter {
            m.insert(v, 1);
        }
        m
    }
}

/// The split of `f(I_n)` and the induced partition of `I_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarSplit {
    pub n: u64,
    /// Ascending, multiplicity one each.
    pub j_star: Vec<u64>,
    pub j_starstar: Multiset,
    pub i_star: Vec<u64>,
    pub i_ss1: Vec<u64>,
    pub i_ss2: Vec<u64>,
    /// Largest element of `f(I_n)`.
    pub max_image: u64,
}

impl StarSplit {
    /// `|J**|` counting multiplicity, which equals `|I**,1|`.
    pub fn starstar_size(&self) -> u64 {
        self.i_ss1.len() as u64
    }

    pub fn is_ss1(&self, x: u64) -> bool {
        self.i_ss1.binary_search(&x).is_ok()
    }
}

pub fn eval_reduction(f: &ReductionSpec, x: u64) -> u64 {
    f.eval(x)
}

/// `f(I_n)` counting multiplicity (triangular `I_n`).
pub fn multiset_image(f: &ReductionSpec, n: u64) -> Multiset {
    triangular(n).map(|x| f.eval(x)).collect()
}

/// `(J*, J**)` with `J = J* ⊎ 2·J**`.
pub fn star_split_multiset(j: &Multiset) -> (Vec<u64>, Multiset) {
    let mut star = Vec::new();
    let mut starstar = Multiset::new();
    for (v, m) in j.iter() {
        if m % 2 == 1 {
            star.push(v);
        }
        starstar.insert(v, m / 2);
    }
    (star, starstar)
}

/// Canonical partition of `I_n`: group by image, sort each group ascending,
/// pair consecutive members; the first of each pair goes to `I**,1`, the
/// second to `I**,2`, and an odd leftover (the largest member) to `I*`.
pub fn partition_interval(f: &ReductionSpec, n: u64) -> StarSplit {
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for x in triangular(n) {
        groups.entry(f.eval(x)).or_default().push(x);
    }
    let mut split = StarSplit {
        n,
        j_star: Vec::new(),
        j_starstar: Multiset::new(),
        i_star: Vec::new(),
        i_ss1: Vec::new(),
        i_ss2: Vec::new(),
        max_image: groups.keys().next_back().copied().unwrap_or(0),
    };
    for (image, members) in &groups {
        // members are already ascending: I_n is walked in order
        let pairs = members.chunks_exact(2);
        if let [last] = pairs.remainder() {
            split.i_star.push(*last);
            split.j_star.push(*image);
        }
        split.j_starstar.insert(*image, (members.len() / 2) as u64);
        for pair in pairs {
            split.i_ss1.push(pair[0]);
            split.i_ss2.push(pair[1]);
        }
    }
    split.i_star.sort_unstable();
    split.i_ss1.sort_unstable();
    split.i_ss2.sort_unstable();
    split
}

/// Membership in the computable approximation `B* = ⋃_n I**,1`.
pub fn bstar_membership(f: &ReductionSpec, x: u64) -> bool {
    let n = interval_index(IntervalScheme::Triangular, x).expect("triangular covers all x");
    partition_interval(f, n).is_ss1(x)
}

/// Membership in `B = f⁻¹(A)`, read off the prefix of `A`.
pub fn be_membership(f: &ReductionSpec, a: &SetPrefix, x: u64) -> Result<bool, ReductionError> {
    let image = f.eval(x);
    a.get(image).ok_or(ReductionError::InsufficientPrefix { x, image, required: image.saturating_add(1) })
}

/// Memo of [`partition_interval`] keyed by (reduction index, `n`).
///
/// Safe for concurrent use. Racing inserts of the same key store identical
/// values, so whichever lands last is correct.
#[derive(Debug, Default)]
pub struct PartitionCache {
    splits: DashMap<(usize, u64), Arc<StarSplit>>,
}

impl PartitionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, e: usize, f: &ReductionSpec, n: u64) -> Arc<StarSplit> {
        if let Some(s) = self.splits.get(&(e, n)) {
            return Arc::clone(&s);
        }
        let split = Arc::new(partition_interval(f, n));
        self.splits.insert((e, n), Arc::clone(&split));
        split
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }
}

fn triangular(n: u64) -> std::ops::Range<u64> {
    interval_bounds(IntervalScheme::Triangular, n).expect("interval index in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> ReductionSpec {
        ReductionSpec::parse(s).unwrap()
    }

    /// 3 ↦ 0, 4 ↦ 0, 5 ↦ 1, identity elsewhere.
    fn worked_example() -> ReductionSpec {
        f("[0, 1, 2, 0, 0, 1] then x")
    }

    #[test]
    fn image_examples() {
        assert_eq!(multiset_image(&worked_example(), 3), [0, 0, 1].into_iter().collect());
        assert_eq!(multiset_image(&f("x"), 3), [3, 4, 5].into_iter().collect());
        let c = multiset_image(&f("7"), 4);
        assert_eq!(c.multiplicity(7), 4);
        assert_eq!(c.total(), 4);
    }

    #[test]
    fn split_examples() {
        let j: Multiset = [0, 0, 0, 0, 0, 1, 1, 2].into_iter().collect();
        let (star, ss) = star_split_multiset(&j);
        assert_eq!(star, vec![0, 2]);
        assert_eq!(ss, [0, 0, 1].into_iter().collect());
        assert_eq!(star_split_multiset(&[9].into_iter().collect()), (vec![9], Multiset::new()));
        assert_eq!(star_split_multiset(&[9, 9].into_iter().collect()), (vec![], [9].into_iter().collect()));
    }

    #[test]
    fn partition_examples() {
        let s = partition_interval(&worked_example(), 3);
        assert_eq!((s.i_ss1.clone(), s.i_ss2.clone(), s.i_star.clone()), (vec![3], vec![4], vec![5]));
        assert_eq!(s.j_star, vec![1]);

        let id = partition_interval(&f("x"), 6);
        assert!(id.i_ss1.is_empty() && id.i_ss2.is_empty());
        assert_eq!(id.i_star, (15..21).collect::<Vec<_>>());

        let c = partition_interval(&f("0"), 4);
        assert_eq!((c.i_ss1, c.i_ss2, c.i_star), (vec![6, 8], vec![7, 9], vec![]));
    }

    #[test]
    fn bstar_examples() {
        assert!((0..100).all(|x| !bstar_membership(&f("x"), x)));
        let w = worked_example();
        assert!(bstar_membership(&w, 3));
        assert!(!bstar_membership(&w, 4));
        assert!(!bstar_membership(&w, 5));
        assert!(bstar_membership(&f("0"), 6));
    }

    #[test]
    fn be_examples() {
        let a: SetPrefix = "1001101".parse().unwrap();
        for x in 0..7 {
            assert_eq!(be_membership(&f("x"), &a, x).unwrap(), a.contains(x));
        }
        assert!((0..50).all(|x| be_membership(&f("0"), &a, x).unwrap()));
        let short: SetPrefix = "10".parse().unwrap();
        let w = worked_example();
        assert!(be_membership(&w, &short, 3).unwrap());
        assert!(be_membership(&w, &short, 4).unwrap());
        assert!(!be_membership(&w, &short, 5).unwrap());
        assert_eq!(
            be_membership(&w, &short, 9),
            Err(ReductionError::InsufficientPrefix { x: 9, image: 9, required: 10 })
        );
    }

    #[test]
    fn cache_returns_same_split() {
        let cache = PartitionCache::new();
        let g = f("x / 3");
        let a = cache.get(0, &g, 12);
        let b = cache.get(0, &g, 12);
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(*a, partition_interval(&g, 12));
    }
}
