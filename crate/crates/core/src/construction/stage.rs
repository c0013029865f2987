use std::ops::Range;

use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::{choose_k_with, choose_m, choose_n, draw_count, m_floor, ImageMaxima};
use super::select::{
    choose_s, collect_constraints, exact_failure_bound, hoeffding_failure_bound, Constraint, SelectError,
};
use super::{BoundMode, ConfigError, ConstructionConfig};
use crate::hypergeom::{stage_seed, Dyadic};
use crate::numeric::{format_rational, serde_rational, ExactRational, SetPrefix};
use crate::reductions::{PartitionCache, SetSpec};

/// Everything decided at one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u64,
    #[serde(with = "serde_rational")]
    pub epsilon: ExactRational,
    /// `C_ℓ`.
    pub set: SetSpec,
    #[serde(rename = "L")]
    pub prior_length: u64,
    #[serde(rename = "M")]
    pub m: u64,
    /// `M` before any raise forced by the failure bound.
    pub base_m: u64,
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub window: Range<u64>,
    /// `⌊(p + ε)N⌋`.
    pub r: u64,
    #[serde(rename = "S")]
    pub s: Vec<u64>,
    pub constraints: Vec<Constraint>,
    pub retries: u64,
    pub seed: u64,
    pub bound_mode: BoundMode,
    /// Exact rational in exact-finite mode, a rounded-up decimal in
    /// Hoeffding mode.
    pub failure_bound: String,
}

impl StageRecord {
    pub fn alpha_zone(&self) -> Range<u64> {
        self.prior_length..self.window.start
    }

    pub fn end(&self) -> u64 {
        self.window.end
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("stage {stage}: {source}")]
    Stage { stage: u64, source: SelectError },
}

/// A failed build: the error and everything committed before it.
#[derive(Debug, Clone)]
pub struct BuildFailure {
    pub prefix: SetPrefix,
    pub ledger: Vec<StageRecord>,
    pub error: ConstructionError,
}

/// Prefix built so far, its ledger, and memoized reduction data.
#[derive(Debug, Default)]
pub struct BuildState {
    pub prefix: SetPrefix,
    pub ledger: Vec<StageRecord>,
    pub cache: PartitionCache,
    maxima: ImageMaxima,
}

/// Output of one stage before it is appended.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub alpha: SetPrefix,
    pub beta: SetPrefix,
    pub record: StageRecord,
}

impl BuildState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn commit(&mut self, out: StageOutput) {
        debug_assert_eq!(out.record.prior_length, self.prefix.len());
        self.prefix.extend_from(&out.alpha);
        self.prefix.extend_from(&out.beta);
        self.ledger.push(out.record);
    }
}

struct Sizing {
    m: u64,
    k: u64,
    n: u64,
    r: u64,
    constraints: Vec<Constraint>,
    failure_bound: String,
}

fn size_stage(state: &mut BuildState, config: &ConstructionConfig, stage: u64) -> (u64, Sizing) {
    let eps = config.epsilon(stage);
    let prior = state.prefix.len();
    let prev_m = state.ledger.last().map_or(0, |r| r.m);
    let base_m = match config.bound_mode {
        BoundMode::Hoeffding => choose_m(stage, prior, &eps, prev_m),
        BoundMode::ExactFinite => m_floor(prior, &eps, prev_m),
    };
    let mut m = base_m;
    loop {
        let k = choose_k_with(stage, m, prior, &config.reductions, &mut state.maxima);
        let n = choose_n(prior, k, &config.p, &eps);
        let r = draw_count(&config.p, &eps, n);
        let window = prior + k..prior + k + n;
        let constraints =
            collect_constraints(stage, m, window, &config.reductions, &eps, config.n_horizon, &state.cache);
        let (ok, failure_bound) = match config.bound_mode {
            BoundMode::ExactFinite => {
                let b = exact_failure_bound(&constraints, r, n, &config.p);
                (b < ExactRational::one(), format_rational(&b))
            }
            BoundMode::Hoeffding => {
                let b = hoeffding_failure_bound(&constraints, r, n, &config.p);
                (b < Dyadic::one(), b.to_decimal_upper(12))
            }
        };
        if ok {
            return (base_m, Sizing { m, k, n, r, constraints, failure_bound });
        }
        m += 1;
    }
}

/// Computes stage `ℓ` against the current prefix without appending it.
pub fn run_stage(
    state: &mut BuildState,
    config: &ConstructionConfig,
    stage: u64,
) -> Result<StageOutput, ConstructionError> {
    let prior = state.prefix.len();
    let (base_m, sz) = size_stage(state, config, stage);
    let window = prior + sz.k..prior + sz.k + sz.n;
    let seed = stage_seed(config.seed, stage);
    let (s, retries) = choose_s(window.clone(), sz.r, &sz.constraints, &config.p, seed, config.max_retries)
        .map_err(|source| ConstructionError::Stage { stage, source })?;

    let set = config.set_for_stage(stage).clone();
    let mut forced = s.iter().peekable();
    let beta = SetPrefix::from_fn(sz.n, |i| {
        let x = window.start + i;
        if forced.next_if_eq(&&x).is_some() {
            false
        } else {
            !set.contains(x)
        }
    });
    let record = StageRecord {
        stage,
        epsilon: config.epsilon(stage),
        set,
        prior_length: prior,
        m: sz.m,
        base_m,
        k: sz.k,
        n: sz.n,
        window,
        r: sz.r,
        s,
        constraints: sz.constraints,
        retries,
        seed,
        bound_mode: config.bound_mode,
        failure_bound: sz.failure_bound,
    };
    Ok(StageOutput { alpha: SetPrefix::zeros(sz.k), beta, record })
}

/// Runs `config.stages` stages from the empty prefix.
pub fn build_prefix(config: &ConstructionConfig) -> Result<(SetPrefix, Vec<StageRecord>), BuildFailure> {
    let mut state = BuildState::new();
    build_into(&mut state, config)?;
    Ok((state.prefix, state.ledger))
}

/// As [`build_prefix`], reusing a caller-owned state (and its caches).
pub fn build_into(state: &mut BuildState, config: &ConstructionConfig) -> Result<(), BuildFailure> {
    let fail =
        |state: &BuildState, error| BuildFailure { prefix: state.prefix.clone(), ledger: state.ledger.clone(), error };
    if let Err(e) = config.validate() {
        return Err(fail(state, e.into()));
    }
    for stage in state.ledger.len() as u64..config.stages {
        match run_stage(state, config, stage) {
            Ok(out) => state.commit(out),
            Err(e) => return Err(fail(state, e)),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::tests::small_config;

    #[test]
    fn zero_stages() {
        let mut c = small_config();
        c.stages = 0;
        let (a, ledger) = build_prefix(&c).unwrap();
        assert!(a.is_empty() && ledger.is_empty());
    }

    #[test]
    fn lengths_concatenate() {
        let (a, ledger) = build_prefix(&small_config()).unwrap();
        let mut len = 0;
        for r in &ledger {
            assert_eq!(r.prior_length, len);
            assert_eq!(r.window, r.prior_length + r.k..r.prior_length + r.k + r.n);
            len = r.end();
        }
        assert_eq!(a.len(), len);
    }

    #[test]
    fn empty_set_beta_has_off_s_ones() {
        let (a, ledger) = build_prefix(&small_config()).unwrap();
        let r0 = &ledger[0];
        assert!(!r0.set.contains(0));
        assert_eq!(a.count_ones_in(r0.window.clone()), r0.n - r0.s.len() as u64);
        let r1 = &ledger[1];
        assert_eq!(a.count_ones_in(r1.window.clone()), 0);
    }

    #[test]
    fn deterministic() {
        let c = small_config();
        assert_eq!(build_prefix(&c).unwrap(), build_prefix(&c).unwrap());
    }

    #[test]
    fn invalid_config_fails_before_any_stage() {
        let mut c = small_config();
        c.reductions.remove(0);
        let err = build_prefix(&c).unwrap_err();
        assert!(err.ledger.is_empty());
        assert!(matches!(err.error, ConstructionError::Config(ConfigError::MissingIdentity)));
    }

    #[test]
    fn exhausted_retries_keep_partial_ledger() {
        let mut c = small_config();
        c.max_retries = 0;
        c.n_horizon = 2000;
        // Hoeffding-free sizing with zero retries: either every stage succeeds
        // first time or the error carries the committed stages.
        match build_prefix(&c) {
            Ok((_, ledger)) => assert!(ledger.iter().all(|r| r.retries == 0)),
            Err(f) => {
                let ConstructionError::Stage { stage, .. } = f.error else { panic!() };
                assert_eq!(f.ledger.len() as u64, stage);
            }
        }
    }
}
