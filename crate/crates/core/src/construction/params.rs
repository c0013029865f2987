//! Stage parameters `M` (small/medium cutoff), `K` (length of `α`) and
//! `N` (length of `β`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::hypergeom::exp_neg_upper;
use crate::intervals::triangular_start;
use crate::numeric::{ceil_to_u64, floor_to_u64, from_count, ExactRational};
use crate::reductions::ReductionSpec;

/// `max(prev_M + 1, ⌈L/ε⌉)`: monotonicity plus the length condition.
pub fn m_floor(prior_len: u64, eps: &ExactRational, prev_m: u64) -> u64 {
    let by_length = ceil_to_u64(&(from_count(prior_len) / eps)).expect("L/ε fits in u64");
    by_length.max(prev_m + 1)
}

/// Whether `ℓ · r^M / (1 - r) < 1` for `r = exp(-ε³)`, with both
/// exponentials rounded up.
pub fn tail_condition_holds(stage: u64, eps: &ExactRational, m: u64) -> bool {
    if stage == 0 {
        return true;
    }
    let cube = eps * eps * eps;
    let r = exp_neg_upper(&cube).to_rational();
    let rm = exp_neg_upper(&(&cube * from_count(m))).to_rational();
    let slack = BigRational::one() - r;
    slack.is_positive() && from_count(stage) * rm < slack
}

/// Minimal `M > prev_M` with `M >= ⌈L/ε⌉` and the geometric tail condition.
pub fn choose_m(stage: u64, prior_len: u64, eps: &ExactRational, prev_m: u64) -> u64 {
    assert!(eps.is_positive(), "ε must be positive");
    let lo = m_floor(prior_len, eps, prev_m);
    if tail_condition_holds(stage, eps, lo) {
        return lo;
    }
    let mut bad = lo;
    let mut step = 1u64;
    let mut good = loop {
        let probe = lo.saturating_add(step);
        if tail_condition_holds(stage, eps, probe) {
            break probe;
        }
        bad = probe;
        step = step.saturating_mul(2);
    };
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if tail_condition_holds(stage, eps, mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Running maxima of `f_e` over `I_1 ∪ … ∪ I_i`, extended on demand.
#[derive(Debug, Default, Clone)]
pub struct ImageMaxima {
    /// `per_reduction[e][i - 1] = max f_e(I_1 ∪ … ∪ I_i)`.
    per_reduction: Vec<Vec<u64>>,
}

impl ImageMaxima {
    pub fn new() -> Self {
        Self::default()
    }

    /// `max f_e([0, |I_1| + … + |I_{m-1}|))`, or `None` when `m <= 1`.
    pub fn below_interval(&mut self, e: usize, f: &ReductionSpec, m: u64) -> Option<u64> {
        if m <= 1 {
            return None;
        }
        if self.per_reduction.len() <= e {
            self.per_reduction.resize(e + 1, Vec::new());
        }
        let maxima = &mut self.per_reduction[e];
        while (maxima.len() as u64) < m - 1 {
            let i = maxima.len() as u64 + 1;
            let start = triangular_start(i).expect("interval index in range");
            let local = (start..start + i).map(|x| f.eval(x)).max().expect("I_i is non-empty");
            let prev = maxima.last().copied().unwrap_or(0);
            maxima.push(prev.max(local));
        }
        Some(maxima[(m - 2) as usize])
    }
}

/// Minimal `K >= 1` with every image of `I_i` (`i < M`, `e <= ℓ`) below `L + K`.
pub fn choose_k(stage: u64, m: u64, prior_len: u64, reductions: &[ReductionSpec]) -> u64 {
    choose_k_with(stage, m, prior_len, reductions, &mut ImageMaxima::new())
}

pub fn choose_k_with(
    stage: u64,
    m: u64,
    prior_len: u64,
    reductions: &[ReductionSpec],
    maxima: &mut ImageMaxima,
) -> u64 {
    assert!(m >= 1, "M must be at least 1");
    let active = (stage as usize + 1).min(reductions.len());
    let top = (0..active).filter_map(|e| maxima.below_interval(e, &reductions[e], m)).max();
    match top {
        Some(y) => (y + 1).saturating_sub(prior_len).max(1),
        None => 1,
    }
}

fn checkpoint_ok(base: u64, p: &ExactRational, eps: &ExactRational, n: u64) -> bool {
    let lhs_num = from_count(base) + (p + eps) * from_count(n);
    let bound = p + eps * from_count(2);
    lhs_num <= bound * from_count(base + n)
}

fn draw_gap_ok(p: &ExactRational, eps: &ExactRational, n: u64) -> bool {
    let r = ((p + eps) * from_count(n)).floor();
    r / from_count(n) - p >= eps / from_count(2)
}

/// `⌊(p + ε)N⌋`.
pub fn draw_count(p: &ExactRational, eps: &ExactRational, n: u64) -> u64 {
    floor_to_u64(&((p + eps) * from_count(n))).expect("draw count fits in u64")
}

/// Minimal `N >= 1` with `(L+K + pN + εN)/(L+K+N) <= p + 2ε` and
/// `⌊(p+ε)N⌋/N - p >= ε/2`.
pub fn choose_n(prior_len: u64, k: u64, p: &ExactRational, eps: &ExactRational) -> u64 {
    assert!(eps.is_positive(), "ε must be positive");
    let pe = p + eps;
    assert!(pe.is_positive() && pe < BigRational::one(), "need 0 < p + ε < 1");
    let base = prior_len + k;
    // First inequality rearranges to (L+K)(1 - p - 2ε) <= εN.
    let slack = BigRational::one() - p - eps * BigRational::from_integer(BigInt::from(2));
    let mut n = if slack <= BigRational::zero() {
        1
    } else {
        ceil_to_u64(&(from_count(base) * slack / eps)).expect("N fits in u64").max(1)
    };
    debug_assert!(checkpoint_ok(base, p, eps, n));
    // The second inequality holds for every N >= 2/ε.
    while !draw_gap_ok(p, eps, n) {
        n += 1;
    }
    n
}
