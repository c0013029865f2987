//! Independent re-check of a built prefix against its ledger.
//!
//! Nothing here trusts the construction beyond the ledger's recorded
//! choices: every check is recomputed from the bits of `A`, the
//! configuration, and fresh partitions of the intervals.

use std::fmt::Write as _;
use std::ops::Range;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::draw_count;
use super::{ConstructionConfig, StageRecord};
use crate::numeric::{format_rational, from_count, ExactRational, SetPrefix};
use crate::reductions::{PartitionCache, ReductionSpec, StarSplit};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub p: String,
    pub stages: u64,
    pub prefix_length: u64,
    pub n_horizon: u64,
    /// Endpoint `p` outside the open range covered by the proof.
    pub extension: bool,
    pub notes: Vec<String>,
    pub stage_reports: Vec<StageReport>,
    pub failures: Vec<Failure>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: u64,
    pub epsilon: String,
    pub set: String,
    pub structure: StructureCheck,
    pub checkpoint: CheckpointCheck,
    pub medium: MediumCheck,
    pub draw: DrawCheck,
    pub forcing: ForcingCheck,
}

/// Ledger bookkeeping and the bit-level shape of the stage's blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub bookkeeping: bool,
    pub alpha_zeros: bool,
    pub s_zeros: bool,
    pub anti_agreement: bool,
    pub constraints_met: bool,
    pub holds: bool,
}

/// Checkpoint agreement at position `L + K + N`, with the chain
/// `agreement <= (L+K+|S|)/(L+K+N) <= (L+K+pN+εN)/(L+K+N) <= p + 2ε`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointCheck {
    pub position: u64,
    pub agreement: String,
    pub chain: [String; 3],
    pub bound: String,
    pub holds: bool,
}

/// Agreement on the stage's medium intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediumCheck {
    /// Interval indices examined, `[M_ℓ, min(M_{ℓ+1}, horizon + 1))`.
    pub range: Range<u64>,
    /// Medium indices above the horizon, or `None` for the open-ended last stage.
    pub beyond_horizon: Option<u64>,
    pub checked: u64,
    /// Images not yet inside the built prefix.
    pub deferred: u64,
    pub min_ratio: Option<String>,
    pub min_at: Option<IntervalRef>,
    pub bound: String,
    pub vacuous: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalRef {
    pub e: usize,
    pub n: u64,
}

/// `|S|/N <= p + ε`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawCheck {
    pub ratio: String,
    pub bound: String,
    pub holds: bool,
}

/// Per constrained medium interval: `S` hits on `I*` reach `p·|I*|`, and
/// every `I**` pair agrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcingCheck {
    pub checked: u64,
    /// Constrained intervals that are large at this stage or undetermined.
    pub skipped: u64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: u64,
    pub clause: String,
    pub e: Option<usize>,
    pub n: Option<u64>,
    pub lhs: String,
    pub rhs: String,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text rendering, one block per stage.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "verification {verdict}: p = {}, {} stage(s), prefix length {}, horizon {}",
            self.p, self.stages, self.prefix_length, self.n_horizon
        );
        if self.extension {
            let _ = writeln!(out, "  extension run (endpoint p)");
        }
        for note in &self.notes {
            let _ = writeln!(out, "  note: {note}");
        }
        for s in &self.stage_reports {
            let _ = writeln!(out, "stage {} (ε = {}, C = {})", s.stage, s.epsilon, s.set);
            let _ = writeln!(out, "  structure      {}", mark(s.structure.holds));
            let _ = writeln!(
                out,
                "  checkpoint     {}  agreement {} <= {} at {}",
                mark(s.checkpoint.holds),
                s.checkpoint.agreement,
                s.checkpoint.bound,
                s.checkpoint.position
            );
            let m = &s.medium;
            let extra = match m.beyond_horizon {
                Some(0) | None => String::new(),
                Some(k) => format!(", {k} beyond horizon"),
            };
            let _ = writeln!(
                out,
                "  medium         {}  n in [{}, {}): {} checked, {} deferred{extra}; min {} >= {}{}",
                mark(m.holds),
                m.range.start,
                m.range.end,
                m.checked,
                m.deferred,
                m.min_ratio.as_deref().unwrap_or("-"),
                m.bound,
                if m.vacuous { " (vacuous)" } else { "" }
            );
            let _ =
                writeln!(out, "  draw           {}  |S|/N = {} <= {}", mark(s.draw.holds), s.draw.ratio, s.draw.bound);
            let _ = writeln!(
                out,
                "  forcing        {}  {} checked, {} skipped",
                mark(s.forcing.holds),
                s.forcing.checked,
                s.forcing.skipped
            );
        }
        for f in &self.failures {
            let at = match (f.e, f.n) {
                (Some(e), Some(n)) => format!(" e = {e}, n = {n}:"),
                _ => ":".into(),
            };
            let _ = writeln!(out, "FAILED stage {} {}{at} {} vs {}", f.stage, f.clause, f.lhs, f.rhs);
        }
        out
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn frac(num: u64, den: u64) -> ExactRational {
    BigRational::new(num.into(), den.into())
}

/// `|(B_e ↔ B*_e) ∩ xs|` given the split of the containing interval, or
/// `None` if some image lies beyond the prefix.
fn agreement_on(a: &SetPrefix, f: &ReductionSpec, split: &StarSplit, xs: &[u64]) -> Option<u64> {
    let mut count = 0;
    for &x in xs {
        let b = a.get(f.eval(x))?;
        if b == split.is_ss1(x) {
            count += 1;
        }
    }
    Some(count)
}

fn interval_agreement(a: &SetPrefix, f: &ReductionSpec, split: &StarSplit) -> Option<u64> {
    if split.max_image >= a.len() {
        return None;
    }
    let xs: Vec<u64> = split.i_star.iter().chain(&split.i_ss1).chain(&split.i_ss2).copied().collect();
    agreement_on(a, f, split, &xs)
}

struct Ctx<'a> {
    a: &'a SetPrefix,
    config: &'a ConstructionConfig,
    cache: PartitionCache,
    failures: Vec<Failure>,
}

impl Ctx<'_> {
    fn fail(&mut self, stage: u64, clause: &str, at: Option<IntervalRef>, lhs: String, rhs: String) {
        self.failures.push(Failure { stage, clause: clause.into(), e: at.map(|r| r.e), n: at.map(|r| r.n), lhs, rhs });
    }
}

/// Re-checks `A` against `ledger` and `config`; see the module docs.
pub fn verify_construction(a: &SetPrefix, ledger: &[StageRecord], config: &ConstructionConfig) -> VerificationReport {
    let mut notes = match config.validate() {
        Ok(notes) => notes,
        Err(e) => vec![format!("configuration invalid: {e}")],
    };
    if config.p.is_zero() {
        notes.push("p = 0: medium and forcing checks hold vacuously".into());
    }
    let mut ctx = Ctx { a, config, cache: PartitionCache::new(), failures: Vec::new() };
    if ledger.len() as u64 != config.stages {
        ctx.fail(0, "ledger length", None, ledger.len().to_string(), config.stages.to_string());
    }
    let expected_len = ledger.last().map_or(0, StageRecord::end);
    if a.len() != expected_len {
        ctx.fail(0, "prefix length", None, a.len().to_string(), expected_len.to_string());
    }
    let stage_reports = (0..ledger.len()).map(|i| verify_stage(&mut ctx, ledger, i)).collect();
    let passed = ctx.failures.is_empty();
    VerificationReport {
        p: format_rational(&config.p),
        stages: ledger.len() as u64,
        prefix_length: a.len(),
        n_horizon: config.n_horizon,
        extension: config.is_endpoint(),
        notes,
        stage_reports,
        failures: ctx.failures,
        passed,
    }
}

fn verify_stage(ctx: &mut Ctx<'_>, ledger: &[StageRecord], i: usize) -> StageReport {
    let rec = &ledger[i];
    let stage = rec.stage;
    let structure = check_structure(ctx, ledger, i);
    let checkpoint = check_checkpoint(ctx, rec);
    let medium = check_medium(ctx, ledger, i);
    let draw = check_draw(ctx, rec);
    let forcing = check_forcing(ctx, ledger, i);
    StageReport {
        stage,
        epsilon: format_rational(&rec.epsilon),
        set: rec.set.to_string(),
        structure,
        checkpoint,
        medium,
        draw,
        forcing,
    }
}

fn check_structure(ctx: &mut Ctx<'_>, ledger: &[StageRecord], i: usize) -> StructureCheck {
    let rec = &ledger[i];
    let config = ctx.config;
    let a = ctx.a;
    let prev_end = if i == 0 { 0 } else { ledger[i - 1].end() };
    let mut problems = Vec::new();
    if rec.stage != i as u64 {
        problems.push(format!("stage index {} at position {i}", rec.stage));
    }
    if rec.prior_length != prev_end {
        problems.push(format!("L = {} but previous stage ends at {prev_end}", rec.prior_length));
    }
    if rec.window != (rec.prior_length + rec.k..rec.prior_length + rec.k + rec.n) {
        problems.push("window is not [L+K, L+K+N)".into());
    }
    if i > 0 && rec.m <= ledger[i - 1].m {
        problems.push(format!("M = {} not above previous {}", rec.m, ledger[i - 1].m));
    }
    if let Some(eps) = config.epsilons.epsilon(rec.stage) {
        if eps != rec.epsilon {
            problems.push("ε differs from the configured schedule".into());
        }
        if rec.r != draw_count(&config.p, &eps, rec.n) {
            problems.push(format!("r = {} is not ⌊(p+ε)N⌋", rec.r));
        }
    } else {
        problems.push("no ε configured for this stage".into());
    }
    if *config.set_for_stage(rec.stage) != rec.set {
        problems.push("C_ℓ differs from the cycled family".into());
    }
    if rec.s.len() as u64 != rec.r {
        problems.push(format!("|S| = {} but r = {}", rec.s.len(), rec.r));
    }
    if !rec.s.windows(2).all(|w| w[0] < w[1]) || !rec.s.iter().all(|x| rec.window.contains(x)) {
        problems.push("S is not an ascending subset of the window".into());
    }
    let bookkeeping = problems.is_empty();
    for msg in problems {
        ctx.fail(rec.stage, "bookkeeping", None, msg, "ledger consistency".into());
    }

    let in_prefix = rec.end() <= a.len();
    let alpha_zeros = in_prefix && a.count_ones_in(rec.alpha_zone()) == 0;
    let s_zeros = in_prefix && rec.s.iter().all(|&x| !a.contains(x));
    let anti_agreement = in_prefix
        && rec.window.clone().filter(|x| rec.s.binary_search(x).is_err()).all(|x| a.contains(x) != rec.set.contains(x));
    let constraints_met = rec.constraints.iter().all(|c| c.satisfied_by(&rec.s, &config.p));
    for (ok, what) in [
        (alpha_zeros, "α block not all zero"),
        (s_zeros, "S position not zero"),
        (anti_agreement, "window bit off S agrees with C_ℓ"),
        (constraints_met, "S misses a constraint"),
    ] {
        if !ok {
            ctx.fail(rec.stage, "structure", None, what.into(), "required".into());
        }
    }
    StructureCheck {
        bookkeeping,
        alpha_zeros,
        s_zeros,
        anti_agreement,
        constraints_met,
        holds: bookkeeping && alpha_zeros && s_zeros && anti_agreement && constraints_met,
    }
}

fn check_checkpoint(ctx: &mut Ctx<'_>, rec: &StageRecord) -> CheckpointCheck {
    let p = &ctx.config.p;
    let eps = &rec.epsilon;
    let x = rec.end();
    let agree = if x <= ctx.a.len() {
        (0..x).filter(|&y| ctx.a.contains(y) == rec.set.contains(y)).count() as u64
    } else {
        x + 1
    };
    let agreement = frac(agree, x.max(1));
    let base = rec.prior_length + rec.k;
    let first = frac(base + rec.s.len() as u64, x.max(1));
    let second = (from_count(base) + (p + eps) * from_count(rec.n)) / from_count(x.max(1));
    let bound = p + eps * from_count(2);
    let holds = agreement <= first && first <= second && second <= bound;
    if !holds {
        ctx.fail(rec.stage, "checkpoint agreement", None, format_rational(&agreement), format_rational(&bound));
    }
    CheckpointCheck {
        position: x,
        agreement: format_rational(&agreement),
        chain: [format_rational(&first), format_rational(&second), format_rational(&bound)],
        bound: format_rational(&bound),
        holds,
    }
}

fn medium_range(ctx: &Ctx<'_>, ledger: &[StageRecord], i: usize) -> (Range<u64>, Option<u64>) {
    let horizon = ctx.config.n_horizon;
    let start = ledger[i].m;
    match ledger.get(i + 1) {
        Some(next) => {
            let end = next.m.min(horizon + 1).max(start);
            let beyond = next.m.saturating_sub(start.max(horizon + 1));
            (start..end, Some(beyond))
        }
        None => (start..(horizon + 1).max(start), None),
    }
}

fn check_medium(ctx: &mut Ctx<'_>, ledger: &[StageRecord], i: usize) -> MediumCheck {
    let rec = &ledger[i];
    let (range, beyond_horizon) = medium_range(ctx, ledger, i);
    let bound = &ctx.config.p - &rec.epsilon;
    let active = ctx.config.active_reductions(rec.stage);
    let pairs: Vec<IntervalRef> = (0..active).flat_map(|e| range.clone().map(move |n| IntervalRef { e, n })).collect();
    let (a, reductions, cache) = (ctx.a, &ctx.config.reductions, &ctx.cache);
    let outcomes: Vec<Option<u64>> = pairs
        .par_iter()
        .map(|r| {
            let f = &reductions[r.e];
            interval_agreement(a, f, &cache.get(r.e, f, r.n))
        })
        .collect();

    let mut checked = 0;
    let mut deferred = 0;
    let mut min: Option<(ExactRational, IntervalRef)> = None;
    let mut bad = Vec::new();
    for (r, out) in pairs.iter().zip(outcomes) {
        let Some(agree) = out else {
            deferred += 1;
            continue;
        };
        checked += 1;
        let ratio = frac(agree, r.n);
        if ratio < bound {
            bad.push((*r, ratio.clone()));
        }
        if min.as_ref().is_none_or(|(m, _)| ratio < *m) {
            min = Some((ratio, *r));
        }
    }
    for (r, ratio) in &bad {
        ctx.fail(rec.stage, "medium interval agreement", Some(*r), format_rational(ratio), format_rational(&bound));
    }
    MediumCheck {
        range,
        beyond_horizon,
        checked,
        deferred,
        min_ratio: min.as_ref().map(|(m, _)| format_rational(m)),
        min_at: min.map(|(_, r)| r),
        vacuous: !bound.is_positive(),
        bound: format_rational(&bound),
        holds: bad.is_empty(),
    }
}

fn check_draw(ctx: &mut Ctx<'_>, rec: &StageRecord) -> DrawCheck {
    let ratio = frac(rec.s.len() as u64, rec.n.max(1));
    let bound = &ctx.config.p + &rec.epsilon;
    let holds = ratio <= bound;
    if !holds {
        ctx.fail(rec.stage, "draw ratio |S|/N", None, format_rational(&ratio), format_rational(&bound));
    }
    DrawCheck { ratio: format_rational(&ratio), bound: format_rational(&bound), holds }
}

fn check_forcing(ctx: &mut Ctx<'_>, ledger: &[StageRecord], i: usize) -> ForcingCheck {
    let rec = &ledger[i];
    let next_m = ledger.get(i + 1).map_or(u64::MAX, |r| r.m);
    let p = ctx.config.p.clone();
    let mut checked = 0;
    let mut skipped = 0;
    let mut holds = true;
    for c in &rec.constraints {
        let f = &ctx.config.reductions[c.e];
        let split = ctx.cache.get(c.e, f, c.n);
        let at = Some(IntervalRef { e: c.e, n: c.n });
        if c.n >= next_m || split.max_image >= ctx.a.len() {
            skipped += 1;
            continue;
        }
        checked += 1;
        let star = agreement_on(ctx.a, f, &split, &split.i_star).expect("determined");
        let lhs = from_count(star + rec.prior_length);
        let rhs = &p * from_count(split.i_star.len() as u64);
        if lhs < rhs {
            holds = false;
            ctx.fail(rec.stage, "forcing star agreement", at, format_rational(&lhs), format_rational(&rhs));
        }
        let twins: Vec<u64> = split.i_ss1.iter().chain(&split.i_ss2).copied().collect();
        let pairs = agreement_on(ctx.a, f, &split, &twins).expect("determined");
        if pairs != split.starstar_size() {
            holds = false;
            ctx.fail(rec.stage, "forcing pair agreement", at, pairs.to_string(), split.starstar_size().to_string());
        }
    }
    ForcingCheck { checked, skipped, holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::build_prefix;
    use crate::construction::tests::small_config;

    #[test]
    fn small_run_passes() {
        let c = small_config();
        let (a, ledger) = build_prefix(&c).unwrap();
        let report = verify_construction(&a, &ledger, &c);
        assert!(report.passed, "{}", report.summary());
        assert!(report.stage_reports[1].medium.checked > 0);
    }

    #[test]
    fn flipped_s_bit_is_caught() {
        let c = small_config();
        let (mut a, ledger) = build_prefix(&c).unwrap();
        let x = ledger[1].s[0];
        a.flip(x);
        let report = verify_construction(&a, &ledger, &c);
        assert!(!report.passed);
        assert!(!report.stage_reports[1].structure.s_zeros);
    }

    #[test]
    fn truncated_prefix_is_caught() {
        let c = small_config();
        let (a, ledger) = build_prefix(&c).unwrap();
        let short = a.truncated(a.len() - 1).unwrap();
        assert!(!verify_construction(&short, &ledger, &c).passed);
    }

    #[test]
    fn identity_medium_is_zero_density() {
        let c = small_config();
        let (a, ledger) = build_prefix(&c).unwrap();
        let report = verify_construction(&a, &ledger, &c);
        let m = &report.stage_reports[1].medium;
        // B* = ∅ for the identity, so agreement on I_n is the count of zeros of A
        let n = m.range.start;
        let start = n * (n - 1) / 2;
        let zeros = (start..start + n).filter(|&x| !a.contains(x)).count() as u64;
        let f = ReductionSpec::identity();
        let split = crate::reductions::partition_interval(&f, n);
        assert_eq!(interval_agreement(&a, &f, &split), Some(zeros));
    }
}
