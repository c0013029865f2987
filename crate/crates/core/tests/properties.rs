mod common;

use num_traits::{One, Zero};
use proptest::prelude::*;

use common::{agreement_on, enumerated_pmf, random_prefix, random_reduction, rat, split_counts, tri};
use mgamma::hypergeom::{hoeffding_bound, pmf, tail_leq, HypergeomParams, SeededRng};
use mgamma::numeric::{claim1_check, SetPrefix};
use mgamma::reductions::{bstar_membership, partition_interval, star_split_multiset, Multiset};

#[test]
fn pmf_matches_enumeration_up_to_ten() {
    for pop in 0..=10 {
        for k in 0..=pop {
            for n in 0..=pop {
                let h = HypergeomParams::new(k, pop, n).unwrap();
                for (x, p) in enumerated_pmf(k, pop, n).into_iter().enumerate() {
                    assert_eq!(pmf(&h, x as u64), p, "K={k} N={pop} n={n} x={x}");
                }
            }
        }
    }
}

#[test]
fn worked_star_split() {
    let j: Multiset = [0, 0, 0, 0, 0, 1, 1, 2].into_iter().collect();
    let (star, starstar) = star_split_multiset(&j);
    assert_eq!(star, [0, 2]);
    assert_eq!(starstar.iter().collect::<Vec<_>>(), [(0, 2), (1, 1)]);
}

fn hoeffding_case() -> impl Strategy<Value = (u64, u64, u64, u64)> {
    (1u64..40).prop_flat_map(|pop| (0..=pop, Just(pop), 0..=pop, 0u64..10))
}

proptest! {
    #[test]
    fn star_split_reassembles(values in prop::collection::vec(0u64..12, 0..60)) {
        let j: Multiset = values.iter().copied().collect();
        let (star, starstar) = star_split_multiset(&j);
        let (want_star, want_ss) = split_counts(&values);
        prop_assert_eq!(&star, &want_star);
        prop_assert_eq!(starstar.iter().collect::<Vec<_>>(), want_ss.into_iter().collect::<Vec<_>>());
        let back = Multiset::new().plus_scaled(&starstar, 2).plus_scaled(&star.iter().copied().collect(), 1);
        prop_assert_eq!(back, j);
    }

    #[test]
    fn pairing_agreement_is_independent_of_a(seed in any::<u64>(), n in 1u64..=40) {
        let mut rng = SeededRng::new(seed);
        let f = random_reduction(&mut rng);
        let split = partition_interval(&f, n);
        let images: Vec<u64> = tri(n).map(|x| f.eval(x)).collect();
        let (star, ss) = split_counts(&images);
        prop_assert_eq!(&split.j_star, &star);
        prop_assert_eq!(split.i_ss1.len() as u64, ss.values().sum::<u64>());
        for &x in &split.i_ss1 {
            prop_assert!(bstar_membership(&f, x));
        }
        let len = split.max_image + 1;
        let twins: Vec<u64> = split.i_ss1.iter().chain(&split.i_ss2).copied().collect();
        for _ in 0..3 {
            let a = random_prefix(&mut rng, len);
            let agree = agreement_on(&f, &a, &twins, |x| bstar_membership(&f, x));
            prop_assert_eq!(agree, split.i_ss1.len() as u64);
        }
    }

    #[test]
    fn partition_covers_the_interval(seed in any::<u64>(), n in 1u64..=40) {
        let f = random_reduction(&mut SeededRng::new(seed));
        let s = partition_interval(&f, n);
        let mut all: Vec<u64> = s.i_star.iter().chain(&s.i_ss1).chain(&s.i_ss2).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, tri(n).collect::<Vec<_>>());
        let star_images: Vec<u64> = s.i_star.iter().map(|&x| f.eval(x)).collect();
        let mut sorted = star_images.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), star_images.len());
    }

    #[test]
    fn exact_tail_below_hoeffding((k, pop, n, j) in hoeffding_case()) {
        let h = HypergeomParams::new(k, pop, n).unwrap();
        let q = rat(j, 10);
        let drawn = rat(k, pop);
        prop_assume!(drawn > q);
        let tail = tail_leq(&h, &(&q * rat(n, 1)));
        let bound = hoeffding_bound(&(drawn - &q), n).unwrap().to_rational();
        prop_assert!(tail <= bound);
    }

    #[test]
    fn pmf_sums_to_one((k, pop, n, _j) in hoeffding_case()) {
        let h = HypergeomParams::new(k, pop, n).unwrap();
        let total = (0..=n).fold(num_rational::BigRational::zero(), |acc, x| acc + pmf(&h, x));
        prop_assert!(total.is_one());
    }

    #[test]
    fn claim_bound_holds_on_synthetic_profiles(seed in any::<u64>(), big_n in 2u64..=20) {
        let mut rng = SeededRng::new(seed);
        let a = synthetic_profile(&mut rng, big_n + 1);
        let gammas: Vec<_> = (1..=big_n + 1).map(|n| rat(1, n + 4)).collect();
        for x in tri(big_n + 1) {
            let out = claim1_check(&a, &gammas, &rat(1, 4), x, 1).unwrap();
            prop_assert_eq!(&out.actual, &rat(a.count_ones_below(x + 1), x + 1));
            prop_assert!(out.holds && out.actual >= out.bound);
        }
    }
}

/// Agreement set with at least `⌈(1/4 - 1/(n+4))·n⌉` members in each `I_n`.
fn synthetic_profile(rng: &mut SeededRng, last: u64) -> SetPrefix {
    let mut a = SetPrefix::zeros(last * (last + 1) / 2);
    for n in 1..=last {
        // (1/4 - 1/(n+4))·n = n·n / (4(n+4)), rounded up
        let need = (n * n).div_ceil(4 * (n + 4));
        let count = (need + rng.below(2)).min(n);
        let start = n * (n - 1) / 2;
        for i in rng.subset(n, count).unwrap() {
            a.set(start + i, true);
        }
    }
    a
}
