//! The modified protocol: `η` extra states are sacrificed to check that the
//! shared states really are `|ω⟩` before anyone encodes a secret.
//!
//! For a checked state every participant applies `QFT` to its particle and
//! measures in the announced basis. Participant 0 announces first. A `V1`
//! check passes when the announced values sum to 0 mod `d`; a `V2` check
//! passes when all announced values are equal.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{attacker_results, fake_particle, recover_all, IqftAttackPlan, SumPolicy};
use crate::error::{Error, Result};
use crate::protocol::{
    decoys_abort, distribute, encode_all, prepare_genuine_rounds, validate_secrets,
    AnnouncementLog, Channel, DecoyCheck, ProtocolConfig, RoundState, SecretString,
};
use crate::qudit::{Basis, QuditRegister};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckAssignment {
    /// Participant (1-based in the protocol, 0-based index here; never 0).
    pub chooser: usize,
    /// State index in `[0, m + η)`.
    pub position: usize,
    pub basis: Basis,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub assignment: CheckAssignment,
    /// Announced values, participant 0 first.
    pub announced: Vec<usize>,
    pub passed: bool,
}

/// How participant 0 behaves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Strategy {
    Honest,
    /// Ships `QFT⁻¹|r⟩` products and announces check values chosen to pass
    /// `V1` checks: `−(n−1)·r mod d` for `V1`, a fixed 0 for `V2`.
    IqftAdaptive(IqftAttackPlan),
}

/// Chooses `η` distinct check positions among `m + η` states.
///
/// Participants `1..n` each own `⌊η/(n−1)⌋` checks; the remainder goes one
/// apiece to the lowest-indexed participants.
pub fn select_checks<R: Rng + ?Sized>(
    participants: usize,
    length: usize,
    eta: usize,
    rng: &mut R,
) -> Result<Vec<CheckAssignment>> {
    if participants < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 participants, got {participants}"
        )));
    }
    let choosers = participants - 1;
    let positions = index::sample(rng, length + eta, eta).into_vec();
    let mut owners = Vec::with_capacity(eta);
    for chooser in 1..participants {
        let share = eta / choosers + usize::from(chooser - 1 < eta % choosers);
        owners.extend(std::iter::repeat_n(chooser, share));
    }
    Ok(owners
        .into_iter()
        .zip(positions)
        .map(|(chooser, position)| CheckAssignment {
            chooser,
            position,
            basis: Basis::random(rng),
        })
        .collect())
}

/// `Σ announced ≡ 0 (mod d)`
pub fn v1_pass(announced: &[usize], level: usize) -> bool {
    announced.iter().fold(0, |acc, &v| (acc + v) % level) == 0
}

/// All announced values equal.
pub fn v2_pass(announced: &[usize]) -> bool {
    announced.windows(2).all(|w| w[0] == w[1])
}

fn passes(announced: &[usize], basis: Basis, level: usize) -> bool {
    match basis {
        Basis::V1 => v1_pass(announced, level),
        Basis::V2 => v2_pass(announced),
    }
}

/// Participant 0's announcement when running the adaptive attack.
fn adaptive_announcement(r: usize, participants: usize, basis: Basis, level: usize) -> usize {
    match basis {
        Basis::V1 => ((participants - 1) * (level - r % level)) % level,
        Basis::V2 => 0,
    }
}

/// Consumes `round` as a checking state.
pub fn execute_check<R: Rng + ?Sized>(
    round: &mut RoundState,
    assignment: &CheckAssignment,
    strategy: &P1Strategy,
    rng: &mut R,
) -> Result<CheckOutcome> {
    if !round.is_untouched() {
        return Err(Error::CheckPositionReused(assignment.position));
    }
    let (level, participants) = (round.level(), round.participants());
    let basis = assignment.basis;
    let first = match strategy {
        P1Strategy::Honest => round.check_measure(0, basis, rng)?,
        P1Strategy::IqftAdaptive(plan) => {
            let r = plan.r_for(round.index()).ok_or(Error::LengthMismatch {
                expected: round.index() + 1,
                actual: plan.len(),
            })?;
            round.discard(0)?;
            adaptive_announcement(r, participants, basis, level)
        }
    };
    let mut announced = Vec::with_capacity(participants);
    announced.push(first);
    for i in 1..participants {
        announced.push(round.check_measure(i, basis, rng)?);
    }
    let passed = passes(&announced, basis, level);
    Ok(CheckOutcome {
        assignment: *assignment,
        announced,
        passed,
    })
}

/// Exact probability that a check on `register` passes.
///
/// Every qudit is rotated into its measurement frame (`QFT`, then `QFT⁻¹`
/// again for `V2`) and the pass condition is summed over the joint
/// computational distribution. With `p1_announcement` set, participant 0's
/// value is replaced by that fixed announcement.
pub fn exact_check_pass_probability(
    register: &QuditRegister,
    basis: Basis,
    p1_announcement: Option<usize>,
) -> Result<f64> {
    let mut frame = register.clone();
    for q in 0..frame.qudits() {
        frame.apply_qft(q)?;
        if basis == Basis::V2 {
            frame.apply_iqft(q)?;
        }
    }
    let level = frame.level();
    let mut pass = 0.0;
    for (index, p) in frame.probabilities().into_iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut digits = frame.digits_of(index);
        if let Some(v) = p1_announcement {
            digits[0] = v;
        }
        if passes(&digits, basis, level) {
            pass += p;
        }
    }
    Ok(pass)
}

/// Exact per-check pass probability for `strategy` in `basis` at round `r`
/// (ignored for the honest strategy).
pub fn strategy_pass_probability(
    cfg: &ProtocolConfig,
    strategy: &P1Strategy,
    basis: Basis,
    r: usize,
) -> Result<f64> {
    match strategy {
        P1Strategy::Honest => {
            let omega = QuditRegister::omega_state_with_cap(
                cfg.level,
                cfg.participants,
                cfg.max_amplitudes,
            )?;
            exact_check_pass_probability(&omega, basis, None)
        }
        P1Strategy::IqftAdaptive(_) => {
            let particle = fake_particle(cfg.level, r)?;
            let register = QuditRegister::product(&vec![particle; cfg.participants])?;
            let announcement = adaptive_announcement(r, cfg.participants, basis, cfg.level);
            exact_check_pass_probability(&register, basis, Some(announcement))
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModifiedRunReport {
    pub decoy_checks: Vec<DecoyCheck>,
    pub aborted_by_decoys: bool,
    pub checks: Vec<CheckOutcome>,
    /// A state check failed; the run aborted before encoding.
    pub detected: bool,
    pub log: Option<AnnouncementLog>,
    /// Secrets recovered by an adaptive attacker that went undetected.
    pub recovered: Option<Vec<SecretString>>,
    pub attack_success: Option<bool>,
}

impl ModifiedRunReport {
    pub fn completed(&self) -> bool {
        self.log.is_some()
    }
}

/// Runs the modified protocol with `cfg.checks` checking states.
pub fn run_modified<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    secrets: &[SecretString],
    strategy: &P1Strategy,
    rng: &mut R,
) -> Result<ModifiedRunReport> {
    cfg.validate()?;
    validate_secrets(cfg, secrets)?;
    let total = cfg.length + cfg.checks;
    let mut rounds = match strategy {
        P1Strategy::Honest => prepare_genuine_rounds(cfg, total)?,
        P1Strategy::IqftAdaptive(plan) => {
            if plan.len() < total {
                return Err(Error::LengthMismatch {
                    expected: total,
                    actual: plan.len(),
                });
            }
            plan.fabricate_rounds(cfg)?
                .into_iter()
                .take(total)
                .collect()
        }
    };

    let decoy_checks = distribute(cfg, &mut rounds, Channel::Ideal, rng)?;
    let mut report = ModifiedRunReport {
        decoy_checks,
        aborted_by_decoys: false,
        checks: Vec::new(),
        detected: false,
        log: None,
        recovered: None,
        attack_success: None,
    };
    if decoys_abort(cfg, &report.decoy_checks) {
        report.aborted_by_decoys = true;
        return Ok(report);
    }

    let assignments = select_checks(cfg.participants, cfg.length, cfg.checks, rng)?;
    for assignment in &assignments {
        let outcome = execute_check(&mut rounds[assignment.position], assignment, strategy, rng)?;
        report.checks.push(outcome);
    }
    report.detected = report.checks.iter().any(|c| !c.passed);
    if report.detected {
        return Ok(report);
    }

    let mut surviving: Vec<&mut RoundState> =
        rounds.iter_mut().filter(|r| r.is_untouched()).collect();
    debug_assert_eq!(surviving.len(), cfg.length);
    match strategy {
        P1Strategy::Honest => {
            let mut results = encode_all(&mut surviving, secrets, 0..cfg.participants, rng)?;
            let private = results.remove(0);
            report.log = Some(AnnouncementLog::build(private, &results, cfg.level)?);
        }
        P1Strategy::IqftAdaptive(plan) => {
            let r_used: Vec<usize> = surviving
                .iter()
                .map(|round| plan.r_choices()[round.index()])
                .collect();
            let announced = encode_all(&mut surviving, secrets, 1..cfg.participants, rng)?;
            let recovered = recover_all(&announced, &r_used, cfg.level)?;
            let success = recovered.iter().zip(&secrets[1..]).all(|(a, b)| a == b);
            let own = attacker_results(
                SumPolicy::Consistent,
                &secrets[0],
                &announced,
                &recovered,
                cfg.level,
                rng,
            );
            report.log = Some(AnnouncementLog::build(own, &announced, cfg.level)?);
            report.recovered = Some(recovered);
            report.attack_success = Some(success);
        }
    }
    Ok(report)
}
