//! Command orchestration behind the `mgamma` binary.
//!
//! | command     | reads section    | writes                                          |
//! |-------------|------------------|-------------------------------------------------|
//! | `construct` | `construction`   | `prefix.gma`, `ledger.jsonl`, `report.json`, `report.txt`, `config.json` |
//! | `verify`    | artifacts in out | `verify.txt`                                     |
//! | `gamma`     | `gamma`          | `gamma.json`, `gamma.csv`                        |
//! | `hypergrid` | `hypergrid`      | `hypergrid.csv`                                  |
//! | `halfbound` | `halfbound`      | `halfbound.json`                                 |
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error, 3
//! resource error.

pub mod config;
pub mod gamma;
pub mod hypergrid;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ExperimentConfig, HalfboundConfig, HypergridConfig};
pub use gamma::{GammaConfig, GammaEstimate};

use crate::bitfile;
use crate::construction::{
    build_prefix, verify_construction, BoundMode, ConstructionConfig, ConstructionError, StageRecord,
    VerificationReport,
};
use crate::halfbound::{self, HalfboundError};
use crate::numeric::SetPrefix;

pub const PREFIX_FILE: &str = "prefix.gma";
pub const RAW_FILE: &str = "prefix.bits";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "report.txt";
pub const RESOLVED_CONFIG_FILE: &str = "config.json";
pub const FAILURE_FILE: &str = "failure.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("{0}")]
    Failed(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Failed(_) => 1,
            Self::Config(_) => 2,
            Self::Resource(_) => 3,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Resource(e.to_string())
    }
}

impl From<bitfile::BitFileError> for HarnessError {
    fn from(e: bitfile::BitFileError) -> Self {
        Self::Resource(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Construct,
    Verify,
    Gamma,
    Hypergrid,
    Halfbound,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verbosity {
    Quiet,
    #[default]
    Normal,
    Verbose,
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentManifest {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub stages: Option<u64>,
    pub horizon: Option<u64>,
    pub bound_mode: Option<BoundMode>,
    /// Also write a raw ASCII dump of the prefix.
    pub raw: bool,
    pub verbosity: Verbosity,
}

impl ExperimentManifest {
    pub fn new(command: Command, config: Option<PathBuf>, out: PathBuf) -> Self {
        Self {
            command,
            config,
            out,
            seed: None,
            stages: None,
            horizon: None,
            bound_mode: None,
            raw: false,
            verbosity: Verbosity::Normal,
        }
    }

    fn say(&self, msg: impl AsRef<str>) {
        if self.verbosity >= Verbosity::Normal {
            println!("{}", msg.as_ref());
        }
    }

    fn detail(&self, msg: impl AsRef<str>) {
        if self.verbosity >= Verbosity::Verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn load_config(&self) -> Result<ExperimentConfig, HarnessError> {
        match &self.config {
            Some(path) => ExperimentConfig::load(path),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn construction_config(&self, file: &ExperimentConfig) -> Result<ConstructionConfig, HarnessError> {
        let mut c =
            file.construction.clone().ok_or_else(|| HarnessError::Config("missing [construction] section".into()))?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(s) = self.stages {
            c.stages = s;
        }
        if let Some(h) = self.horizon {
            c.n_horizon = h;
        }
        if let Some(m) = self.bound_mode {
            c.bound_mode = m;
        }
        c.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(c)
    }
}

/// Runs one command; `Ok` means exit status 0.
pub fn run(manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    fs::create_dir_all(&manifest.out)
        .map_err(|e| HarnessError::Resource(format!("{}: {e}", manifest.out.display())))?;
    match manifest.command {
        Command::Construct => cmd_construct(manifest),
        Command::Verify => cmd_verify(manifest),
        Command::Gamma => cmd_gamma(manifest),
        Command::Hypergrid => cmd_hypergrid(manifest),
        Command::Halfbound => cmd_halfbound(manifest),
    }
}

fn write_ledger(path: &Path, ledger: &[StageRecord]) -> Result<(), HarnessError> {
    let mut text = String::new();
    for r in ledger {
        text += &serde_json::to_string(r).expect("record serializes");
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_ledger(path: &Path) -> Result<Vec<StageRecord>, HarnessError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Config(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn write_report(out: &Path, report: &VerificationReport) -> Result<(), HarnessError> {
    fs::write(out.join(REPORT_FILE), report.to_json())?;
    fs::write(out.join(SUMMARY_FILE), report.summary())?;
    Ok(())
}

pub fn cmd_construct(manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    let file = manifest.load_config()?;
    let config = manifest.construction_config(&file)?;
    let out = &manifest.out;
    fs::write(
        out.join(RESOLVED_CONFIG_FILE),
        serde_json::to_string_pretty(&config).expect("config serializes") + "\n",
    )?;
    manifest.detail(format!("building {} stage(s)", config.stages));
    let (a, ledger) = match build_prefix(&config) {
        Ok(built) => built,
        Err(failure) => {
            write_ledger(&out.join(LEDGER_FILE), &failure.ledger)?;
            bitfile::save(&out.join(PREFIX_FILE), &failure.prefix)?;
            let detail = match &failure.error {
                ConstructionError::Stage { stage, source } => serde_json::json!({
                    "stage": stage,
                    "error": source.to_string(),
                    "violations": match source {
                        crate::construction::SelectError::Exhausted { violations, .. } => serde_json::to_value(violations).expect("serializes"),
                        _ => serde_json::Value::Null,
                    },
                }),
                ConstructionError::Config(e) => serde_json::json!({ "error": e.to_string() }),
            };
            fs::write(out.join(FAILURE_FILE), serde_json::to_string_pretty(&detail).expect("json") + "\n")?;
            return Err(match failure.error {
                ConstructionError::Config(e) => HarnessError::Config(e.to_string()),
                e => HarnessError::Failed(format!("{e}; ledger flushed up to the failing stage")),
            });
        }
    };
    for r in &ledger {
        manifest.detail(format!(
            "stage {}: L = {}, M = {}, K = {}, N = {}, |S| = {}, {} constraint(s), {} retries",
            r.stage,
            r.prior_length,
            r.m,
            r.k,
            r.n,
            r.s.len(),
            r.constraints.len(),
            r.retries
        ));
    }
    bitfile::save(&out.join(PREFIX_FILE), &a)?;
    if manifest.raw {
        bitfile::save_raw(&out.join(RAW_FILE), &a)?;
    }
    write_ledger(&out.join(LEDGER_FILE), &ledger)?;
    let report = verify_construction(&a, &ledger, &config);
    write_report(out, &report)?;
    manifest.say(report.summary().trim_end());
    if report.passed {
        Ok(())
    } else {
        Err(HarnessError::Failed("verification failed".into()))
    }
}

/// Loads the artifacts of a `construct` run from `dir`.
pub fn load_artifacts(dir: &Path) -> Result<(ConstructionConfig, SetPrefix, Vec<StageRecord>), HarnessError> {
    let cfg_path = dir.join(RESOLVED_CONFIG_FILE);
    let text =
        fs::read_to_string(&cfg_path).map_err(|e| HarnessError::Resource(format!("{}: {e}", cfg_path.display())))?;
    let config: ConstructionConfig =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", cfg_path.display())))?;
    let a = bitfile::load(&dir.join(PREFIX_FILE))?;
    let ledger = read_ledger(&dir.join(LEDGER_FILE))?;
    Ok((config, a, ledger))
}

pub fn cmd_verify(manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    let out = &manifest.out;
    let (config, a, ledger) = load_artifacts(out)?;
    let report = verify_construction(&a, &ledger, &config);
    let mut text = report.summary();
    let embedded = fs::read_to_string(out.join(REPORT_FILE)).ok();
    let agrees = embedded.as_deref() == Some(report.to_json().as_str());
    text += match (&embedded, agrees) {
        (None, _) => "no embedded report found\n",
        (Some(_), true) => "embedded report: identical\n",
        (Some(_), false) => "embedded report: DIFFERS\n",
    };
    fs::write(out.join("verify.txt"), &text)?;
    manifest.say(text.trim_end());
    match (report.passed, agrees) {
        (true, true) => Ok(()),
        (false, _) => Err(HarnessError::Failed("verification failed".into())),
        (true, false) => Err(HarnessError::Failed("verdict does not match the embedded report".into())),
    }
}

pub fn cmd_gamma(manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    let file = manifest.load_config()?;
    let gc = file.gamma.clone().ok_or_else(|| HarnessError::Config("missing [gamma] section".into()))?;
    let estimate = match &gc.target {
        Some(spec) => {
            let target = gamma::GammaTarget {
                label: spec.to_string(),
                prefix: SetPrefix::from_fn(gc.length, |x| spec.contains(x)),
                reductions: &[],
                default_checkpoints: None,
            };
            gamma::estimate(&gc, &target)
        }
        None => {
            let config = manifest.construction_config(&file)?;
            let (prefix, ledger) = match &gc.prefix {
                Some(path) => (bitfile::load(path)?, None),
                None => {
                    let (a, ledger) = build_prefix(&config).map_err(|f| HarnessError::Failed(f.error.to_string()))?;
                    (a, Some(ledger))
                }
            };
            let target = gamma::GammaTarget {
                label: "constructed".into(),
                prefix,
                reductions: &config.reductions,
                default_checkpoints: ledger.map(|l| l.iter().map(StageRecord::end).collect()),
            };
            gamma::estimate(&gc, &target)
        }
    };
    fs::write(
        manifest.out.join("gamma.json"),
        serde_json::to_string_pretty(&estimate).expect("estimate serializes") + "\n",
    )?;
    let mut csv_file = fs::File::create(manifest.out.join("gamma.csv"))?;
    estimate.write_csv(&mut csv_file)?;
    csv_file.flush()?;
    manifest.say(format!(
        "gamma evidence {} over {} checkpoint(s); Gamma_m evidence {}",
        estimate.gamma_lower_evidence.as_deref().unwrap_or("-"),
        estimate.checkpoints.len(),
        estimate.gamma_m_evidence.as_deref().unwrap_or("-"),
    ));
    for note in &estimate.notes {
        manifest.say(format!("note: {note}"));
    }
    Ok(())
}

pub fn cmd_hypergrid(manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    let file = manifest.load_config()?;
    let gc = file.hypergrid.unwrap_or_default();
    let rows = hypergrid::grid(&gc);
    let violations = rows.iter().filter(|r| !r.holds()).count();
    let f = fs::File::create(manifest.out.join("hypergrid.csv"))?;
    hypergrid::write_csv(&rows, std::io::BufWriter::new(f))?;
    manifest.say(format!("{} grid point(s), {violations} violation(s)", rows.len()));
    if violations == 0 {
        Ok(())
    } else {
        Err(HarnessError::Failed(format!("{violations} tail bound violation(s)")))
    }
}

pub fn cmd_halfbound(manifest: &ExperimentManifest) -> Result<(), HarnessError> {
    let file = manifest.load_config()?;
    let mut hc = file.halfbound.unwrap_or_default();
    if let Some(s) = manifest.seed {
        hc.seed = s;
    }
    let report = halfbound::run_fuzzer(hc.n_max, hc.trials, hc.seed, hc.cap).map_err(|e| match e {
        HalfboundError::TooLarge { .. } => HarnessError::Resource(e.to_string()),
        other => HarnessError::Config(other.to_string()),
    })?;
    fs::write(
        manifest.out.join("halfbound.json"),
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    )?;
    let exact_flags = report.targeted.iter().filter(|t| t.flagged == [t.target]).count();
    manifest.say(format!(
        "halfbound n_max = {}: {}/{} recovered below threshold; {}/{} targeted corruptions flagged exactly",
        report.n_max, report.recovered, report.trials, exact_flags, report.trials
    ));
    if report.passed {
        Ok(())
    } else {
        Err(HarnessError::Failed("decoding check failed".into()))
    }
}
