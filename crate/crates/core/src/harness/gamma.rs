//! Finite evidence for `γ` and `Γ_m`.
//!
//! For each approximator `R` the agreement `A ↔ R` is sampled at declared
//! checkpoints; the tail minimum of that profile is the evidence that `A` is
//! coarsely approximable at that density. `γ` evidence is the best such
//! value over the approximators. For each reduction `f_e`, the same is done
//! for `B_e = f_e⁻¹(A)`, adding `B*_e` to the approximators; `Γ_m` evidence
//! is the minimum over `e`.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::intervals::{interval_bounds, IntervalScheme};
use crate::numeric::{
    agreement_positions, format_rational, tail_min_density, DensityProfile, ExactRational, SetPrefix,
};
use crate::reductions::{PartitionCache, ReductionSpec, SetSpec};

fn default_length() -> u64 {
    1024
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// A set given by a spec; omitted means the constructed prefix.
    pub target: Option<SetSpec>,
    /// Bit file holding the constructed prefix. Without it the prefix is
    /// built from the `[construction]` section.
    pub prefix: Option<PathBuf>,
    pub approximators: Vec<SetSpec>,
    /// Defaults to the stage ends of a constructed target, otherwise to
    /// powers of two up to `length`.
    pub checkpoints: Option<Vec<u64>>,
    /// Prefix length for a spec target.
    #[serde(default = "default_length")]
    pub length: u64,
    /// Checkpoint index from which tail minima are taken.
    #[serde(default)]
    pub tail_from: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub checkpoints: Vec<u64>,
    pub values: Vec<String>,
    pub min: Option<String>,
    pub max: Option<String>,
    pub tail_min: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionEvidence {
    pub e: usize,
    pub reduction: String,
    /// `B_e` is known on `[0, determined_length)`.
    pub determined_length: u64,
    pub against_bstar: Series,
    pub against_approximators: Vec<Series>,
    pub evidence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub target: String,
    pub length: u64,
    pub checkpoints: Vec<u64>,
    pub approximators: Vec<Series>,
    /// Max over approximators of the tail-min agreement.
    pub gamma_lower_evidence: Option<String>,
    pub reductions: Vec<ReductionEvidence>,
    /// Min over reductions of their evidence.
    pub gamma_m_evidence: Option<String>,
    pub notes: Vec<String>,
}

fn powers_of_two(upto: u64) -> Vec<u64> {
    let mut out: Vec<u64> =
        std::iter::successors(Some(1u64), |&c| c.checked_mul(2)).take_while(|&c| c <= upto).collect();
    if out.last() != Some(&upto) && upto > 0 {
        out.push(upto);
    }
    out
}

struct ProfileOutcome {
    series: Series,
    tail_min: Option<ExactRational>,
}

fn profile(label: String, a: &SetPrefix, r: &SetPrefix, checkpoints: &[u64], tail_from: usize) -> ProfileOutcome {
    let usable: Vec<u64> = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= a.len()).collect();
    let agree = agreement_positions(a, r, a.len()).expect("equal lengths");
    let prof = DensityProfile::of_set(&agree, &usable).expect("checkpoints within prefix");
    let values = prof.values();
    let tail_min = tail_min_density(&prof, tail_from).ok();
    ProfileOutcome {
        series: Series {
            label,
            checkpoints: usable,
            values: values.iter().map(format_rational).collect(),
            min: values.iter().min().map(format_rational),
            max: values.iter().max().map(format_rational),
            tail_min: tail_min.as_ref().map(format_rational),
        },
        tail_min,
    }
}

fn set_prefix(s: &SetSpec, len: u64) -> SetPrefix {
    SetPrefix::from_fn(len, |x| s.contains(x))
}

/// `B*_f` on `[0, len)`.
fn bstar_prefix(e: usize, f: &ReductionSpec, len: u64, cache: &PartitionCache) -> SetPrefix {
    let mut out = SetPrefix::zeros(len);
    let mut n = 1;
    loop {
        let iv = interval_bounds(IntervalScheme::Triangular, n).expect("interval in range");
        if iv.start >= len {
            break;
        }
        for x in cache.get(e, f, n).i_ss1.iter().filter(|&&x| x < len) {
            out.set(*x, true);
        }
        n += 1;
    }
    out
}

/// The target prefix plus the reductions whose preimages are examined.
pub struct GammaTarget<'a> {
    pub label: String,
    pub prefix: SetPrefix,
    pub reductions: &'a [ReductionSpec],
    pub default_checkpoints: Option<Vec<u64>>,
}

pub fn estimate(config: &GammaConfig, target: &GammaTarget<'_>) -> GammaEstimate {
    let a = &target.prefix;
    let mut notes = vec!["densities are sampled at finite checkpoints; no limit is asserted".to_string()];
    let requested = config
        .checkpoints
        .clone()
        .or_else(|| target.default_checkpoints.clone())
        .unwrap_or_else(|| powers_of_two(a.len()));
    let mut checkpoints: Vec<u64> = requested.iter().copied().filter(|&c| c >= 1).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let beyond: Vec<u64> = checkpoints.iter().copied().filter(|&c| c > a.len()).collect();
    if !beyond.is_empty() {
        notes.push(format!("truncated: checkpoints {beyond:?} exceed the available prefix length {}", a.len()));
        checkpoints.retain(|&c| c <= a.len());
    }

    let approx_prefixes: Vec<SetPrefix> = config.approximators.iter().map(|r| set_prefix(r, a.len())).collect();
    let outcomes: Vec<ProfileOutcome> = config
        .approximators
        .iter()
        .zip(&approx_prefixes)
        .map(|(spec, r)| profile(spec.to_string(), a, r, &checkpoints, config.tail_from))
        .collect();
    let gamma = outcomes.iter().filter_map(|o| o.tail_min.clone()).max();

    let cache = PartitionCache::new();
    let cap = checkpoints.last().copied().unwrap_or(0);
    let mut reductions = Vec::new();
    let mut gamma_m: Option<ExactRational> = None;
    for (e, f) in target.reductions.iter().enumerate() {
        let determined = (0..cap).find(|&x| f.eval(x) >= a.len()).unwrap_or(cap);
        let b = SetPrefix::from_fn(determined, |x| a.contains(f.eval(x)));
        let own: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= determined).collect();
        if own.len() < checkpoints.len() {
            notes.push(format!(
                "truncated: B_{e} is determined only below {determined}; {} checkpoint(s) dropped",
                checkpoints.len() - own.len()
            ));
        }
        let bstar = bstar_prefix(e, f, determined, &cache);
        let star = profile(format!("B*_{e}"), &b, &bstar, &own, config.tail_from);
        let against: Vec<ProfileOutcome> = config
            .approximators
            .iter()
            .map(|spec| {
                let r = set_prefix(spec, determined);
                profile(spec.to_string(), &b, &r, &own, config.tail_from)
            })
            .collect();
        let evidence = std::iter::once(&star).chain(&against).filter_map(|o| o.tail_min.clone()).max();
        if let Some(ev) = &evidence {
            gamma_m = Some(gamma_m.map_or(ev.clone(), |g| g.min(ev.clone())));
        }
        reductions.push(ReductionEvidence {
            e,
            reduction: f.to_string(),
            determined_length: determined,
            against_bstar: star.series,
            against_approximators: against.into_iter().map(|o| o.series).collect(),
            evidence: evidence.as_ref().map(format_rational),
        });
    }

    GammaEstimate {
        target: target.label.clone(),
        length: a.len(),
        checkpoints,
        approximators: outcomes.into_iter().map(|o| o.series).collect(),
        gamma_lower_evidence: gamma.as_ref().map(format_rational),
        reductions,
        gamma_m_evidence: gamma_m.as_ref().map(format_rational),
        notes,
    }
}

impl GammaEstimate {
    /// Long-format CSV: `series,checkpoint,numerator,denominator`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| HarnessError::Resource(e.to_string());
        w.write_record(["series", "checkpoint", "numerator", "denominator"]).map_err(csv_err)?;
        let mut emit = |name: String, s: &Series| -> Result<(), HarnessError> {
            for (c, v) in s.checkpoints.iter().zip(&s.values) {
                let (num, den) = v.split_once('/').unwrap_or((v, "1"));
                w.write_record([name.as_str(), &c.to_string(), num, den]).map_err(csv_err)?;
            }
            Ok(())
        };
        for s in &self.approximators {
            emit(format!("A~{}", s.label), s)?;
        }
        for r in &self.reductions {
            emit(format!("B_{}~{}", r.e, r.against_bstar.label), &r.against_bstar)?;
            for s in &r.against_approximators {
                emit(format!("B_{}~{}", r.e, s.label), s)?;
            }
        }
        w.flush().map_err(|e| HarnessError::Resource(e.to_string()))?;
        Ok(())
    }
}
