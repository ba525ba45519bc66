//! Seeded multi-trial scenario runner and JSON report.
//!
//! Each trial draws from its own ChaCha8 stream keyed by
//! `SHA-256("smqs/trial-stream/v1" ‖ master_seed_le ‖ trial_index_le)`, so
//! trials can run in any order (or in parallel) and a rerun with the same
//! seed reproduces every per-trial record exactly.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::{
    eve_decoy_error_probability, run_iqft_attack_original, EveModel, IqftAttackPlan, SumPolicy,
};
use crate::error::{Error, Result};
use crate::protocol::{
    expected_sum, run_original, validate_secrets, Channel, DecoyCheck, ProtocolConfig, SecretString,
};
use crate::qudit::Basis;
use crate::stats::{binomial_pmf, binomial_sigma, within_band, RateEstimate};
use crate::verification::{run_modified, strategy_pass_probability, P1Strategy};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const STREAM_DOMAIN: &[u8] = b"smqs/trial-stream/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Honest,
    IqftAttack,
    ModifiedHonest,
    ModifiedAttack,
    EveDecoy,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Honest,
        Scenario::IqftAttack,
        Scenario::ModifiedHonest,
        Scenario::ModifiedAttack,
        Scenario::EveDecoy,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::Honest => "honest",
            Scenario::IqftAttack => "iqft-attack",
            Scenario::ModifiedHonest => "modified-honest",
            Scenario::ModifiedAttack => "modified-attack",
            Scenario::EveDecoy => "eve-decoy",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Honest => "original protocol, all parties honest, ideal channel",
            Scenario::IqftAttack => {
                "original protocol, P1 ships QFT^-1|r> states and recovers secrets"
            }
            Scenario::ModifiedHonest => {
                "checked protocol with eta checking states, all parties honest"
            }
            Scenario::ModifiedAttack => {
                "checked protocol against the adaptive inverse-QFT attacker"
            }
            Scenario::EveDecoy => {
                "original protocol with an intercept-resend eavesdropper on the channel"
            }
        }
    }

    fn is_modified(self) -> bool {
        matches!(self, Scenario::ModifiedHonest | Scenario::ModifiedAttack)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.tag() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub protocol: ProtocolConfig,
    pub trials: usize,
    pub master_seed: u64,
    /// Fixed secrets for every trial; drawn uniformly per trial when absent.
    pub secrets: Option<Vec<SecretString>>,
    /// Fixed fabrication value; drawn uniformly per round when absent.
    pub fake_r: Option<usize>,
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(
        scenario: Scenario,
        protocol: ProtocolConfig,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        ScenarioConfig {
            scenario,
            protocol,
            trials,
            master_seed,
            secrets: None,
            fake_r: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        self.protocol.validate()?;
        if let Some(secrets) = &self.secrets {
            validate_secrets(&self.protocol, secrets)?;
        }
        if let Some(r) = self.fake_r {
            if r >= self.protocol.level {
                return Err(Error::DigitOutOfRange {
                    digit: r,
                    level: self.protocol.level,
                });
            }
        }
        Ok(())
    }
}

/// Independent, reproducible random stream for one trial.
pub fn derive_trial_stream(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(STREAM_DOMAIN);
    hasher.update(master_seed.to_le_bytes());
    hasher.update(trial_index.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub secrets: Vec<SecretString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fake_r: Option<Vec<usize>>,
    pub decoys_checked: usize,
    pub decoy_errors: usize,
    /// The decoy check aborted the run.
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub announced: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovered: Option<Vec<SecretString>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery_success: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks_executed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks_passed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected: Option<bool>,
}

impl TrialRecord {
    fn new(trial: usize, secrets: Vec<SecretString>, decoys: &[DecoyCheck]) -> Self {
        TrialRecord {
            trial,
            secrets,
            fake_r: None,
            decoys_checked: decoys.iter().map(|c| c.checked).sum(),
            decoy_errors: decoys.iter().map(|c| c.errors).sum(),
            aborted: false,
            sum: None,
            sum_correct: None,
            announced: None,
            recovered: None,
            recovery_success: None,
            checks_executed: None,
            checks_passed: None,
            detected: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_correct_rate: Option<RateEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery_success_rate: Option<RateEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_rate: Option<RateEstimate>,
    /// Pooled over every checked decoy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_decoy_error_rate: Option<RateEstimate>,
    /// Pooled over every executed state check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_pass_rate: Option<RateEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePrediction {
    pub metric: String,
    pub expected: f64,
    pub observed: f64,
    pub samples: u64,
    pub sigma: f64,
    pub within_band: bool,
}

impl OraclePrediction {
    fn new(metric: &str, expected: f64, observed: &RateEstimate) -> Self {
        OraclePrediction {
            metric: metric.to_string(),
            expected,
            observed: observed.rate,
            samples: observed.trials,
            sigma: binomial_sigma(expected, observed.trials),
            within_band: within_band(observed.rate, expected, observed.trials),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub eta: usize,
    pub decoys: usize,
    pub error_threshold: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secrets: Option<Vec<SecretString>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fake_r: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: Scenario,
    pub params: ReportParams,
    pub per_trial: Vec<TrialRecord>,
    pub aggregates: AggregateStats,
    pub oracle_predictions: Vec<OraclePrediction>,
    pub wall_clock_seconds: f64,
}

impl ReportDocument {
    /// Predictions the observed aggregates disagree with.
    pub fn flagged(&self) -> Vec<&OraclePrediction> {
        self.oracle_predictions
            .iter()
            .filter(|p| !p.within_band)
            .collect()
    }
}

fn trial_secrets<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<SecretString> {
    match &cfg.secrets {
        Some(fixed) => fixed.clone(),
        None => (0..cfg.protocol.participants)
            .map(|_| SecretString::random(cfg.protocol.level, cfg.protocol.length, rng))
            .collect(),
    }
}

fn attack_plan<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rounds: usize,
    rng: &mut R,
) -> Result<IqftAttackPlan> {
    match cfg.fake_r {
        Some(r) => IqftAttackPlan::fixed(r, rounds, cfg.protocol.level),
        None => Ok(IqftAttackPlan::random(rounds, cfg.protocol.level, rng)),
    }
}

/// Runs one trial of `cfg.scenario` on `rng`.
pub fn run_trial<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    trial: usize,
    rng: &mut R,
) -> Result<TrialRecord> {
    let pc = &cfg.protocol;
    let secrets = trial_secrets(cfg, rng);
    let expected = expected_sum(&secrets, pc.level);
    match cfg.scenario {
        Scenario::Honest | Scenario::EveDecoy => {
            let channel = if cfg.scenario == Scenario::EveDecoy {
                Channel::InterceptResend(EveModel)
            } else {
                Channel::Ideal
            };
            let run = run_original(pc, &secrets, channel, rng)?;
            let mut rec = TrialRecord::new(trial, secrets, &run.decoy_checks);
            rec.aborted = run.aborted;
            if let Some(log) = run.log {
                rec.sum_correct = Some(log.sum == expected);
                rec.sum = Some(log.sum);
            }
            if cfg.scenario == Scenario::EveDecoy {
                rec.detected = Some(run.aborted);
            }
            Ok(rec)
        }
        Scenario::IqftAttack => {
            let plan = attack_plan(cfg, pc.length, rng)?;
            let report = run_iqft_attack_original(pc, &secrets, &plan, SumPolicy::Consistent, rng)?;
            let mut rec = TrialRecord::new(trial, secrets, &report.decoy_checks);
            rec.fake_r = Some(plan.r_choices().to_vec());
            rec.aborted = report.aborted;
            rec.sum = report.log.map(|l| l.sum);
            rec.announced = Some(report.announced);
            rec.recovered = Some(report.recovered);
            rec.recovery_success = Some(report.success);
            Ok(rec)
        }
        Scenario::ModifiedHonest | Scenario::ModifiedAttack => {
            let strategy = if cfg.scenario == Scenario::ModifiedAttack {
                P1Strategy::IqftAdaptive(attack_plan(cfg, pc.length + pc.checks, rng)?)
            } else {
                P1Strategy::Honest
            };
            let report = run_modified(pc, &secrets, &strategy, rng)?;
            let mut rec = TrialRecord::new(trial, secrets, &report.decoy_checks);
            if let P1Strategy::IqftAdaptive(plan) = &strategy {
                rec.fake_r = Some(plan.r_choices().to_vec());
                rec.recovery_success = Some(report.attack_success.unwrap_or(false));
                rec.recovered = report.recovered.clone();
            }
            rec.aborted = report.aborted_by_decoys;
            rec.checks_executed = Some(report.checks.len());
            rec.checks_passed = Some(report.checks.iter().filter(|c| c.passed).count());
            rec.detected = Some(report.detected);
            if let Some(log) = report.log {
                if cfg.scenario == Scenario::ModifiedHonest {
                    rec.sum_correct = Some(log.sum == expected);
                } else {
                    rec.announced = Some(
                        (1..pc.participants)
                            .filter_map(|i| log.results_of(i).map(<[usize]>::to_vec))
                            .collect(),
                    );
                }
                rec.sum = Some(log.sum);
            } else if cfg.scenario == Scenario::ModifiedHonest {
                rec.sum_correct = Some(false);
            }
            Ok(rec)
        }
    }
}

fn aggregate(cfg: &ScenarioConfig, records: &[TrialRecord]) -> AggregateStats {
    let sc = cfg.scenario;
    let decoys_checked: usize = records.iter().map(|r| r.decoys_checked).sum();
    let decoy_errors: usize = records.iter().map(|r| r.decoy_errors).sum();
    AggregateStats {
        trials: records.len() as u64,
        sum_correct_rate: matches!(sc, Scenario::Honest | Scenario::ModifiedHonest)
            .then(|| RateEstimate::from_flags(records.iter().map(|r| r.sum_correct == Some(true)))),
        recovery_success_rate: matches!(sc, Scenario::IqftAttack | Scenario::ModifiedAttack).then(
            || RateEstimate::from_flags(records.iter().map(|r| r.recovery_success == Some(true))),
        ),
        detection_rate: matches!(sc, Scenario::ModifiedAttack | Scenario::EveDecoy)
            .then(|| RateEstimate::from_flags(records.iter().map(|r| r.detected == Some(true)))),
        mean_decoy_error_rate: (decoys_checked > 0)
            .then(|| RateEstimate::new(decoy_errors as u64, decoys_checked as u64)),
        check_pass_rate: sc.is_modified().then(|| {
            let executed: usize = records.iter().filter_map(|r| r.checks_executed).sum();
            let passed: usize = records.iter().filter_map(|r| r.checks_passed).sum();
            RateEstimate::new(passed as u64, executed as u64)
        }),
    }
}

/// Exact per-check pass probability averaged over basis and fabrication value.
fn mean_check_pass_probability(pc: &ProtocolConfig, strategy: &P1Strategy) -> Result<f64> {
    let values: Vec<usize> = match strategy {
        P1Strategy::Honest => vec![0],
        P1Strategy::IqftAdaptive(_) => (0..pc.level).collect(),
    };
    let mut total = 0.0;
    for &r in &values {
        for basis in Basis::ALL {
            total += strategy_pass_probability(pc, strategy, basis, r)?;
        }
    }
    Ok(total / (2 * values.len()) as f64)
}

/// Probability that one recipient's decoy check passes when each of its
/// decoys fails independently with probability `p`.
fn decoy_pass_probability(decoys: usize, p: f64, threshold: f64) -> f64 {
    (0..=decoys)
        .filter(|&e| {
            DecoyCheck {
                checked: decoys,
                errors: e,
            }
            .error_rate()
                <= threshold
        })
        .map(|e| binomial_pmf(decoys as u64, e as u64, p))
        .sum()
}

fn predictions(cfg: &ScenarioConfig, agg: &AggregateStats) -> Result<Vec<OraclePrediction>> {
    let pc = &cfg.protocol;
    let mut out = Vec::new();
    let mut push = |metric: &str, expected: f64, observed: &Option<RateEstimate>| {
        if let Some(obs) = observed {
            out.push(OraclePrediction::new(metric, expected, obs));
        }
    };
    match cfg.scenario {
        Scenario::Honest => {
            push("sum_correct_rate", 1.0, &agg.sum_correct_rate);
            push("mean_decoy_error_rate", 0.0, &agg.mean_decoy_error_rate);
        }
        Scenario::IqftAttack => {
            push("recovery_success_rate", 1.0, &agg.recovery_success_rate);
            push("mean_decoy_error_rate", 0.0, &agg.mean_decoy_error_rate);
        }
        Scenario::ModifiedHonest => {
            let q = mean_check_pass_probability(pc, &P1Strategy::Honest)?;
            push(
                "sum_correct_rate",
                q.powi(pc.checks as i32),
                &agg.sum_correct_rate,
            );
            push("check_pass_rate", q, &agg.check_pass_rate);
            push("mean_decoy_error_rate", 0.0, &agg.mean_decoy_error_rate);
        }
        Scenario::ModifiedAttack => {
            let plan = IqftAttackPlan::fixed(0, 1, pc.level)?;
            let q = mean_check_pass_probability(pc, &P1Strategy::IqftAdaptive(plan))?;
            let undetected = q.powi(pc.checks as i32);
            push("detection_rate", 1.0 - undetected, &agg.detection_rate);
            push(
                "recovery_success_rate",
                undetected,
                &agg.recovery_success_rate,
            );
            push("check_pass_rate", q, &agg.check_pass_rate);
            push("mean_decoy_error_rate", 0.0, &agg.mean_decoy_error_rate);
        }
        Scenario::EveDecoy => {
            let p = eve_decoy_error_probability(pc.level)?;
            let per_recipient = decoy_pass_probability(pc.decoy_count, p, pc.error_threshold);
            let pass = per_recipient.powi((pc.participants - 1) as i32);
            push("detection_rate", 1.0 - pass, &agg.detection_rate);
            push("mean_decoy_error_rate", p, &agg.mean_decoy_error_rate);
        }
    }
    Ok(out)
}

/// Runs every trial of `cfg` and assembles the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ReportDocument> {
    cfg.validate()?;
    let started = Instant::now();
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_trial_stream(cfg.master_seed, t as u64);
            run_trial(cfg, t, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregates = aggregate(cfg, &per_trial);
    let oracle_predictions = predictions(cfg, &aggregates)?;
    let pc = &cfg.protocol;
    Ok(ReportDocument {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        scenario: cfg.scenario,
        params: ReportParams {
            d: pc.level,
            n: pc.participants,
            m: pc.length,
            eta: pc.checks,
            decoys: pc.decoy_count,
            error_threshold: pc.error_threshold,
            trials: cfg.trials,
            seed: cfg.master_seed,
            secrets: cfg.secrets.clone(),
            fake_r: cfg.fake_r,
        },
        per_trial,
        aggregates,
        oracle_predictions,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `doc` as pretty JSON. The file appears atomically or not at all.
pub fn write_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(io_error(
            path,
            io::Error::new(io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    {
        let mut writer = BufWriter::new(tmp.as_file());
        serde_json::to_writer_pretty(&mut writer, doc)?;
        writer.write_all(b"\n").map_err(|e| io_error(path, e))?;
        writer.flush().map_err(|e| io_error(path, e))?;
    }
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
