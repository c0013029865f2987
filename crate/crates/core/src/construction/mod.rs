//! Stage-wise construction of the witness set `A = α₁⌢β₁⌢α₂⌢β₂⌢…`.
//!
//! Stage `ℓ` appends an all-zero block `α` of length `K` and a block `β` of
//! length `N`. Inside `β` a forcing set `S` is pinned to zero; everywhere
//! else `β` disagrees with the stage's set `C_ℓ`. The parameters are chosen
//! so that `A` agrees with `C_ℓ` on at most a `p + 2ε_ℓ` fraction of the
//! prefix, while every reduction `f_e` with `e <= ℓ` still finds enough zeros
//! in its image for `B_e = f_e⁻¹(A)` to agree with the computable
//! approximation `B*_e` on a `p - ε_ℓ` fraction of each medium interval.
//!
//! See [`params`] for `M`, `K`, `N`; [`select`] for the constraint list and
//! the choice of `S`; [`verify`] for the independent checks.

pub mod params;
pub mod select;
mod stage;
pub mod verify;

pub use select::{
    choose_s, collect_constraints, exact_failure_bound, hoeffding_failure_bound, Constraint, SelectError, Violation,
};
pub use stage::{
    build_into, build_prefix, run_stage, BuildFailure, BuildState, ConstructionError, StageOutput, StageRecord,
};
pub use verify::{verify_construction, VerificationReport};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{format_rational, serde_rational, ExactRational};
use crate::reductions::{ReductionSpec, SetSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    /// Size `M` by the geometric Hoeffding tail condition.
    Hoeffding,
    /// Require the exact hypergeometric union bound over the actual
    /// constraints to be below 1.
    #[default]
    ExactFinite,
}

impl std::str::FromStr for BoundMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hoeffding" => Ok(Self::Hoeffding),
            "exact-finite" => Ok(Self::ExactFinite),
            _ => Err(format!("unknown bound mode {s:?} (expected hoeffding or exact-finite)")),
        }
    }
}

/// The sequence `ε_0 > ε_1 > … > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSchedule {
    Explicit(#[serde(with = "serde_rational_seq")] Vec<ExactRational>),
    /// `ε_ℓ = first · ratio^ℓ`.
    Geometric {
        #[serde(with = "serde_rational")]
        first: ExactRational,
        #[serde(with = "serde_rational")]
        ratio: ExactRational,
    },
}

impl EpsilonSchedule {
    pub fn epsilon(&self, stage: u64) -> Option<ExactRational> {
        match self {
            Self::Explicit(list) => list.get(stage as usize).cloned(),
            Self::Geometric { first, ratio } => Some(first * num_traits::pow(ratio.clone(), stage as usize)),
        }
    }
}

mod serde_rational_seq {
    use crate::numeric::{format_rational, parse_rational, ExactRational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[ExactRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ExactRational>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|t| parse_rational(t).map_err(serde::de::Error::custom)).collect()
    }
}

fn default_retries() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionConfig {
    #[serde(with = "serde_rational")]
    pub p: ExactRational,
    pub epsilons: EpsilonSchedule,
    /// Cycled: stage `ℓ` diagonalizes against `family[ℓ mod len]`.
    pub set_family: Vec<SetSpec>,
    pub reductions: Vec<ReductionSpec>,
    pub stages: u64,
    /// Largest interval index considered by constraints and verification.
    pub n_horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u64,
    #[serde(default)]
    pub bound_mode: BoundMode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("p = {0} lies outside [0, 1/2]")]
    POutOfRange(String),
    #[error("epsilon schedule: {0}")]
    Epsilon(String),
    #[error("the reduction list must contain the identity `x`")]
    MissingIdentity,
    #[error("the set family is empty")]
    EmptyFamily,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
}

impl ConstructionConfig {
    pub fn epsilon(&self, stage: u64) -> ExactRational {
        self.epsilons.epsilon(stage).expect("validated schedule covers every stage")
    }

    pub fn set_for_stage(&self, stage: u64) -> &SetSpec {
        &self.set_family[(stage % self.set_family.len() as u64) as usize]
    }

    /// Reductions active at `stage`: indices `e <= stage`.
    pub fn active_reductions(&self, stage: u64) -> usize {
        (stage as usize + 1).min(self.reductions.len())
    }

    /// `p = 0` or `p = 1/2`.
    pub fn is_endpoint(&self) -> bool {
        self.p.is_zero() || self.p == half()
    }

    /// Checks hard invariants; returns advisory notes for the soft ones.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut notes = Vec::new();
        if self.p.is_negative() || self.p > half() {
            return Err(ConfigError::POutOfRange(format_rational(&self.p)));
        }
        if self.set_family.is_empty() {
            return Err(ConfigError::EmptyFamily);
        }
        if !self.reductions.iter().any(ReductionSpec::is_identity) {
            return Err(ConfigError::MissingIdentity);
        }
        if self.n_horizon == 0 {
            return Err(ConfigError::ZeroHorizon);
        }
        match &self.epsilons {
            EpsilonSchedule::Explicit(list) => {
                if (list.len() as u64) < self.stages {
                    return Err(ConfigError::Epsilon(format!("{} values for {} stages", list.len(), self.stages)));
                }
                if let Some(i) = list.windows(2).position(|w| w[1] >= w[0]) {
                    return Err(ConfigError::Epsilon(format!("not strictly decreasing at index {}", i + 1)));
                }
            }
            EpsilonSchedule::Geometric { ratio, .. } => {
                if !ratio.is_positive() || *ratio >= BigRational::one() {
                    return Err(ConfigError::Epsilon("ratio must lie in (0, 1)".into()));
                }
            }
        }
        let eps0 = match self.epsilons.epsilon(0) {
            Some(e) => e,
            None if self.stages == 0 => return Ok(notes),
            None => return Err(ConfigError::Epsilon("empty schedule".into())),
        };
        let last = self.epsilons.epsilon(self.stages.saturating_sub(1)).unwrap_or(eps0.clone());
        if !last.is_positive() {
            return Err(ConfigError::Epsilon("values must be positive".into()));
        }
        if &self.p + &eps0 >= BigRational::one() {
            return Err(ConfigError::Epsilon(format!(
                "p + ε_0 = {} must be below 1",
                format_rational(&(&self.p + &eps0))
            )));
        }
        if self.p.is_positive() && self.p < half() {
            if &self.p - &eps0 <= BigRational::zero() {
                notes.push(format!(
                    "smallness assumption p - ε_0 > 0 not met (p - ε_0 = {}); early stages have vacuous interval bounds",
                    format_rational(&(&self.p - &eps0))
                ));
            }
            if &self.p + &eps0 >= half() {
                notes.push(format!(
                    "smallness assumption p + ε_0 < 1/2 not met (p + ε_0 = {})",
                    format_rational(&(&self.p + &eps0))
                ));
            }
        }
        if self.is_endpoint() {
            notes.push(format!(
                "extension run: endpoint p = {} lies outside the open range (0, 1/2)",
                format_rational(&self.p)
            ));
        }
        if self.reductions.len() as u64 > self.stages {
            notes.push(format!(
                "reductions with index {} or more never become active within {} stage(s)",
                self.stages, self.stages
            ));
        }
        Ok(notes)
    }
}

pub(crate) fn half() -> ExactRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    pub(crate) fn small_config() -> ConstructionConfig {
        ConstructionConfig {
            p: ratio(1, 4),
            epsilons: EpsilonSchedule::Explicit(vec![ratio(3, 10), ratio(3, 20)]),
            set_family: vec![SetSpec::empty(), SetSpec::everything()],
            reductions: vec![ReductionSpec::identity(), ReductionSpec::parse("x / 2").unwrap()],
            stages: 2,
            n_horizon: 200,
            seed: 7,
            max_retries: 1000,
            bound_mode: BoundMode::ExactFinite,
        }
    }

    #[test]
    fn validation() {
        let c = small_config();
        let notes = c.validate().unwrap();
        assert!(notes.iter().any(|n| n.contains("p - ε_0 > 0")));

        let mut bad = small_config();
        bad.epsilons = EpsilonSchedule::Explicit(vec![ratio(1, 10), ratio(1, 10)]);
        assert!(matches!(bad.validate(), Err(ConfigError::Epsilon(_))));

        let mut bad = small_config();
        bad.reductions = vec![ReductionSpec::parse("x / 2").unwrap()];
        assert_eq!(bad.validate(), Err(ConfigError::MissingIdentity));

        let mut bad = small_config();
        bad.p = ratio(3, 5);
        assert!(matches!(bad.validate(), Err(ConfigError::POutOfRange(_))));

        let mut bad = small_config();
        bad.epsilons = EpsilonSchedule::Explicit(vec![ratio(3, 10)]);
        assert!(matches!(bad.validate(), Err(ConfigError::Epsilon(_))));

        let mut endpoint = small_config();
        endpoint.p = ratio(1, 2);
        endpoint.epsilons = EpsilonSchedule::Explicit(vec![ratio(1, 10), ratio(1, 20)]);
        assert!(endpoint.validate().unwrap().iter().any(|n| n.contains("extension")));
    }

    #[test]
    fn schedules() {
        let g = EpsilonSchedule::Geometric { first: ratio(1, 4), ratio: ratio(1, 2) };
        assert_eq!(g.epsilon(3), Some(ratio(1, 32)));
        let e = EpsilonSchedule::Explicit(vec![ratio(1, 3)]);
        assert_eq!(e.epsilon(1), None);
    }

    #[test]
    fn config_serde_round_trip() {
        let c = small_config();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"p\":\"1/4\""));
        assert!(json.contains("\"x / 2\""));
        let back: ConstructionConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let toml_text = r#"
            p = "2/5"
            epsilons = { first = "1/10", ratio = "1/2" }
            set_family = ["0", "1", "(x + 1) % 2"]
            reductions = ["x"]
            stages = 3
            n_horizon = 50
        "#;
        let t: ConstructionConfig = toml::from_str(toml_text).unwrap();
        assert_eq!(t.max_retries, 1000);
        assert_eq!(t.bound_mode, BoundMode::ExactFinite);
        assert_eq!(t.epsilon(2), ratio(1, 40));
    }
}
