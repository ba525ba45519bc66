//! The original summation protocol: shared `|ω⟩` rounds, decoy-protected
//! distribution, per-participant encoding and measurement, and the final sum.
//!
//! Participants are indexed from 0; participant `i` is `P_{i+1}` and holds
//! qudit `i` of every round register. Participant 0 prepares the states and
//! keeps its own particles, so only participants `1..n` receive decoys.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{EveModel, Interception};
use crate::error::{Error, Result};
use crate::qudit::{register_len, Basis, QuditRegister, DEFAULT_MAX_AMPLITUDES};

pub const DEFAULT_DECOY_COUNT: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Qudit dimension `d`.
    pub level: usize,
    /// Number of participants `n`.
    pub participants: usize,
    /// Secret string length `m`.
    pub length: usize,
    /// Extra checking states `η`; only the modified protocol uses them.
    pub checks: usize,
    /// Decoys inserted into each transmitted sequence.
    pub decoy_count: usize,
    /// Abort when a recipient's decoy error rate is strictly above this.
    pub error_threshold: f64,
    pub max_amplitudes: usize,
}

impl ProtocolConfig {
    pub fn new(level: usize, participants: usize, length: usize) -> Self {
        ProtocolConfig {
            level,
            participants,
            length,
            checks: 0,
            decoy_count: DEFAULT_DECOY_COUNT,
            error_threshold: 0.0,
            max_amplitudes: DEFAULT_MAX_AMPLITUDES,
        }
    }

    pub fn with_checks(mut self, checks: usize) -> Self {
        self.checks = checks;
        self
    }

    pub fn with_decoys(mut self, decoy_count: usize) -> Self {
        self.decoy_count = decoy_count;
        self
    }

    pub fn with_error_threshold(mut self, threshold: f64) -> Self {
        self.error_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.level < 2 {
            return Err(Error::InvalidLevel(self.level));
        }
        if self.participants < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 participants, got {}",
                self.participants
            )));
        }
        if self.length == 0 {
            return Err(Error::InvalidConfig(
                "secret length must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.error_threshold) {
            return Err(Error::InvalidConfig(format!(
                "error threshold {} outside [0, 1]",
                self.error_threshold
            )));
        }
        register_len(self.level, self.participants, self.max_amplitudes)?;
        Ok(())
    }
}

/// One participant's private digits `K_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SecretString(Vec<usize>);

impl SecretString {
    pub fn new(digits: Vec<usize>, level: usize) -> Result<Self> {
        if let Some(&digit) = digits.iter().find(|&&k| k >= level) {
            return Err(Error::DigitOutOfRange { digit, level });
        }
        Ok(SecretString(digits))
    }

    pub fn random<R: Rng + ?Sized>(level: usize, length: usize, rng: &mut R) -> Self {
        SecretString((0..length).map(|_| rng.gen_range(0..level)).collect())
    }

    pub fn digits(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Checks that there is one secret per participant, each of length `m` over `[0, d)`.
pub fn validate_secrets(cfg: &ProtocolConfig, secrets: &[SecretString]) -> Result<()> {
    if secrets.len() != cfg.participants {
        return Err(Error::LengthMismatch {
            expected: cfg.participants,
            actual: secrets.len(),
        });
    }
    for secret in secrets {
        if secret.len() != cfg.length {
            return Err(Error::LengthMismatch {
                expected: cfg.length,
                actual: secret.len(),
            });
        }
        if let Some(&digit) = secret.digits().iter().find(|&&k| k >= cfg.level) {
            return Err(Error::DigitOutOfRange {
                digit,
                level: cfg.level,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyRecord {
    /// Index within the interleaved sequence.
    pub position: usize,
    pub basis: Basis,
    pub value: usize,
}

/// The decoys inserted into one recipient's sequence.
#[derive(Clone, Debug)]
pub struct DecoySequence {
    pub recipient: usize,
    /// Length of the interleaved sequence (payload plus decoys).
    pub sequence_len: usize,
    pub records: Vec<DecoyRecord>,
    pub particles: Vec<QuditRegister>,
}

/// Outcome of one recipient's decoy check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyCheck {
    pub checked: usize,
    pub errors: usize,
}

impl DecoyCheck {
    pub fn error_rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.errors as f64 / self.checked as f64
        }
    }
}

/// Prepares `decoy_count` decoys per recipient and interleaves them among
/// `payload_len` payload particles.
pub fn insert_decoys<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    payload_len: usize,
    rng: &mut R,
) -> Result<Vec<DecoySequence>> {
    let sequence_len = payload_len + cfg.decoy_count;
    (1..cfg.participants)
        .map(|recipient| {
            let mut positions = index::sample(rng, sequence_len, cfg.decoy_count).into_vec();
            positions.sort_unstable();
            let mut records = Vec::with_capacity(cfg.decoy_count);
            let mut particles = Vec::with_capacity(cfg.decoy_count);
            for position in positions {
                let basis = Basis::random(rng);
                let value = rng.gen_range(0..cfg.level);
                let mut particle = QuditRegister::basis_state(cfg.level, &[value])?;
                if basis == Basis::V2 {
                    particle.apply_qft(0)?;
                }
                records.push(DecoyRecord {
                    position,
                    basis,
                    value,
                });
                particles.push(particle);
            }
            Ok(DecoySequence {
                recipient,
                sequence_len,
                records,
                particles,
            })
        })
        .collect()
}

/// Measures every received decoy in its preparation basis and counts mismatches.
pub fn check_decoys<R: Rng + ?Sized>(
    records: &[DecoyRecord],
    received: &[QuditRegister],
    rng: &mut R,
) -> Result<DecoyCheck> {
    if records.len() != received.len() {
        return Err(Error::LengthMismatch {
            expected: records.len(),
            actual: received.len(),
        });
    }
    let mut errors = 0;
    for (record, particle) in records.iter().zip(received) {
        if particle.measure(0, record.basis, rng)?.value != record.value {
            errors += 1;
        }
    }
    Ok(DecoyCheck {
        checked: records.len(),
        errors,
    })
}

/// The joint state of round `j`, one qudit per participant.
///
/// The state is kept as a list of independent tensor factors: a genuine
/// `|ω⟩` round is one `n`-qudit factor, a fabricated product round is `n`
/// single-qudit factors. A measured qudit is left in a basis state in product
/// with everything else, so it is removed from its factor once read.
#[derive(Clone, Debug)]
pub struct RoundState {
    index: usize,
    factors: Vec<QuditRegister>,
    /// `(factor, position within factor)` per participant; `None` once measured out.
    locations: Vec<Option<(usize, usize)>>,
    measured: Vec<bool>,
}

impl RoundState {
    pub fn new(index: usize, register: QuditRegister) -> Self {
        Self::from_factors(index, vec![register])
    }

    /// Participants are assigned to factor qudits in order.
    pub fn from_factors(index: usize, factors: Vec<QuditRegister>) -> Self {
        let locations: Vec<_> = factors
            .iter()
            .enumerate()
            .flat_map(|(f, reg)| (0..reg.qudits()).map(move |q| Some((f, q))))
            .collect();
        RoundState {
            index,
            measured: vec![false; locations.len()],
            factors,
            locations,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn participants(&self) -> usize {
        self.measured.len()
    }

    pub fn level(&self) -> usize {
        self.factors.first().map_or(0, QuditRegister::level)
    }

    /// Joint state of every qudit still held, in participant order; `None`
    /// when all have been measured out.
    pub fn joint_state(&self) -> Option<QuditRegister> {
        QuditRegister::product(&self.factors).ok()
    }

    pub fn is_measured(&self, participant: usize) -> bool {
        self.measured.get(participant).copied().unwrap_or(false)
    }

    pub fn is_untouched(&self) -> bool {
        self.measured.iter().all(|m| !m)
    }

    /// Applies `U_digit · QFT` to the participant's qudit and measures it in `V1`.
    pub fn encode_and_measure<R: Rng + ?Sized>(
        &mut self,
        participant: usize,
        digit: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let (f, q) = self.locate(participant)?;
        let level = self.level();
        if digit >= level {
            return Err(Error::DigitOutOfRange { digit, level });
        }
        self.factors[f].apply_qft(q)?;
        self.factors[f].apply_shift(q, digit)?;
        self.measure_out(participant, Basis::V1, rng)
    }

    /// Applies `QFT` to the participant's qudit and measures it in `basis`.
    pub fn check_measure<R: Rng + ?Sized>(
        &mut self,
        participant: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<usize> {
        let (f, q) = self.locate(participant)?;
        self.factors[f].apply_qft(q)?;
        self.measure_out(participant, basis, rng)
    }

    /// An intercept-resend attack on the participant's qudit in transit.
    pub fn intercept<R: Rng + ?Sized>(
        &mut self,
        eve: &EveModel,
        participant: usize,
        rng: &mut R,
    ) -> Result<Interception> {
        let (f, q) = self.locate(participant)?;
        eve.intercept(&mut self.factors[f], q, rng)
    }

    /// Marks a qudit as used without measuring it.
    pub(crate) fn discard(&mut self, participant: usize) -> Result<()> {
        self.locate(participant)?;
        self.measured[participant] = true;
        Ok(())
    }

    fn measure_out<R: Rng + ?Sized>(
        &mut self,
        participant: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<usize> {
        let (f, q) = self.locate(participant)?;
        let factor = self.factors[f].clone();
        let (value, rest) = factor.measure_out(q, basis, rng)?;
        self.measured[participant] = true;
        self.locations[participant] = None;
        match rest {
            Some(reduced) => {
                self.factors[f] = reduced;
                for (g, p) in self.locations.iter_mut().flatten() {
                    if *g == f && *p > q {
                        *p -= 1;
                    }
                }
            }
            None => {
                self.factors.remove(f);
                for (g, _) in self.locations.iter_mut().flatten() {
                    if *g > f {
                        *g -= 1;
                    }
                }
            }
        }
        Ok(value)
    }

    fn locate(&self, participant: usize) -> Result<(usize, usize)> {
        if participant >= self.participants() {
            return Err(Error::TargetOutOfRange {
                target: participant,
                qudits: self.participants(),
            });
        }
        match self.locations[participant] {
            Some(loc) if !self.measured[participant] => Ok(loc),
            _ => Err(Error::AlreadyMeasured {
                round: self.index,
                qudit: participant,
            }),
        }
    }
}

/// `m` fresh copies of the `|ω⟩` state.
pub fn prepare_rounds(cfg: &ProtocolConfig) -> Result<Vec<RoundState>> {
    prepare_genuine_rounds(cfg, cfg.length)
}

pub(crate) fn prepare_genuine_rounds(
    cfg: &ProtocolConfig,
    count: usize,
) -> Result<Vec<RoundState>> {
    cfg.validate()?;
    let omega =
        QuditRegister::omega_state_with_cap(cfg.level, cfg.participants, cfg.max_amplitudes)?;
    Ok((0..count)
        .map(|j| RoundState::new(j, omega.clone()))
        .collect())
}

/// Element-wise sum of the announced result strings modulo `level`.
pub fn compute_sum(results: &[Vec<usize>], level: usize) -> Result<Vec<usize>> {
    let length = results.first().map_or(0, Vec::len);
    let mut sum = vec![0; length];
    for row in results {
        if row.len() != length {
            return Err(Error::LengthMismatch {
                expected: length,
                actual: row.len(),
            });
        }
        for (acc, &value) in sum.iter_mut().zip(row) {
            if value >= level {
                return Err(Error::DigitOutOfRange {
                    digit: value,
                    level,
                });
            }
            *acc = (*acc + value) % level;
        }
    }
    Ok(sum)
}

/// A classical message on the authenticated channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Announcement {
    /// `P_i` sends its measurement results to participant 0.
    Results { from: usize, values: Vec<usize> },
    /// Participant 0 broadcasts the sum.
    Sum { values: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnouncementLog {
    /// Messages in the order they were sent.
    pub messages: Vec<Announcement>,
    /// Participant 0's own results, never announced.
    pub private_results: Vec<usize>,
    pub sum: Vec<usize>,
}

impl AnnouncementLog {
    /// Builds the log: results from participants `1..n` in order, then the sum.
    pub fn build(
        private_results: Vec<usize>,
        announced: &[Vec<usize>],
        level: usize,
    ) -> Result<Self> {
        let mut all = Vec::with_capacity(announced.len() + 1);
        all.push(private_results.clone());
        all.extend(announced.iter().cloned());
        let sum = compute_sum(&all, level)?;
        let mut messages: Vec<Announcement> = announced
            .iter()
            .enumerate()
            .map(|(i, values)| Announcement::Results {
                from: i + 1,
                values: values.clone(),
            })
            .collect();
        messages.push(Announcement::Sum {
            values: sum.clone(),
        });
        Ok(AnnouncementLog {
            messages,
            private_results,
            sum,
        })
    }

    pub fn results_of(&self, participant: usize) -> Option<&[usize]> {
        if participant == 0 {
            return Some(&self.private_results);
        }
        self.messages.iter().find_map(|m| match m {
            Announcement::Results { from, values } if *from == participant => {
                Some(values.as_slice())
            }
            _ => None,
        })
    }
}

/// The quantum channel from participant 0 to the others.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Channel {
    #[default]
    Ideal,
    /// Every transmitted particle is intercepted and resent.
    InterceptResend(EveModel),
}

/// Inserts decoys, sends every recipient its qudit of each round plus the
/// decoys, and runs each recipient's decoy check.
pub(crate) fn distribute<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    rounds: &mut [RoundState],
    channel: Channel,
    rng: &mut R,
) -> Result<Vec<DecoyCheck>> {
    let mut sequences = insert_decoys(cfg, rounds.len(), rng)?;
    if let Channel::InterceptResend(eve) = channel {
        for seq in &mut sequences {
            eve.intercept_resend(&mut seq.particles, rng)?;
            for round in rounds.iter_mut() {
                round.intercept(&eve, seq.recipient, rng)?;
            }
        }
    }
    sequences
        .iter()
        .map(|seq| check_decoys(&seq.records, &seq.particles, rng))
        .collect()
}

pub(crate) fn decoys_abort(cfg: &ProtocolConfig, checks: &[DecoyCheck]) -> bool {
    checks.iter().any(|c| c.error_rate() > cfg.error_threshold)
}

/// Every participant encodes digit `j` of its secret on `rounds[j]`.
pub(crate) fn encode_all<R: Rng + ?Sized>(
    rounds: &mut [&mut RoundState],
    secrets: &[SecretString],
    participants: impl Iterator<Item = usize> + Clone,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    participants
        .map(|i| {
            rounds
                .iter_mut()
                .zip(secrets[i].digits())
                .map(|(round, &digit)| round.encode_and_measure(i, digit, rng))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct OriginalRun {
    pub decoy_checks: Vec<DecoyCheck>,
    pub aborted: bool,
    /// Absent when the decoy check aborted the run.
    pub log: Option<AnnouncementLog>,
}

/// Runs the original protocol end to end over `channel`.
pub fn run_original<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    secrets: &[SecretString],
    channel: Channel,
    rng: &mut R,
) -> Result<OriginalRun> {
    cfg.validate()?;
    validate_secrets(cfg, secrets)?;
    let mut rounds = prepare_rounds(cfg)?;
    let decoy_checks = distribute(cfg, &mut rounds, channel, rng)?;
    if decoys_abort(cfg, &decoy_checks) {
        return Ok(OriginalRun {
            decoy_checks,
            aborted: true,
            log: None,
        });
    }
    let mut refs: Vec<&mut RoundState> = rounds.iter_mut().collect();
    let mut results = encode_all(&mut refs, secrets, 0..cfg.participants, rng)?;
    let private = results.remove(0);
    let log = AnnouncementLog::build(private, &results, cfg.level)?;
    Ok(OriginalRun {
        decoy_checks,
        aborted: false,
        log: Some(log),
    })
}

/// Honest execution over an ideal channel; an abort surfaces as an error.
pub fn run_original_honest<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    secrets: &[SecretString],
    rng: &mut R,
) -> Result<AnnouncementLog> {
    let run = run_original(cfg, secrets, Channel::Ideal, rng)?;
    match run.log {
        Some(log) => Ok(log),
        None => {
            let worst = run
                .decoy_checks
                .iter()
                .map(DecoyCheck::error_rate)
                .fold(0.0, f64::max);
            Err(Error::Aborted {
                rate: worst,
                threshold: cfg.error_threshold,
            })
        }
    }
}

/// Element-wise `Σ K_i mod d`, computed classically.
pub fn expected_sum(secrets: &[SecretString], level: usize) -> Vec<usize> {
    let length = secrets.first().map_or(0, SecretString::len);
    (0..length)
        .map(|j| secrets.iter().map(|s| s.digits()[j]).sum::<usize>() % level)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn secrets(level: usize, rows: &[&[usize]]) -> Vec<SecretString> {
        rows.iter()
            .map(|r| SecretString::new(r.to_vec(), level).unwrap())
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(10, 3, 1).validate().is_ok());
        assert!(ProtocolConfig::new(1, 3, 1).validate().is_err());
        assert!(ProtocolConfig::new(3, 1, 1).validate().is_err());
        assert!(ProtocolConfig::new(3, 2, 0).validate().is_err());
        assert!(ProtocolConfig::new(3, 2, 1)
            .with_error_threshold(1.5)
            .validate()
            .is_err());
        assert!(matches!(
            ProtocolConfig::new(10, 7, 1).validate(),
            Err(Error::DimensionCap {
                level: 10,
                qudits: 7,
                ..
            })
        ));
    }

    #[test]
    fn prepare_rounds_examples() {
        let rounds = prepare_rounds(&ProtocolConfig::new(2, 2, 3)).unwrap();
        assert_eq!(rounds.len(), 3);
        let bell = QuditRegister::omega_state(2, 2).unwrap();
        for (j, round) in rounds.iter().enumerate() {
            assert_eq!(round.index(), j);
            assert!(round
                .joint_state()
                .unwrap()
                .approx_equal(&bell, 1e-9)
                .unwrap());
        }
        let rounds = prepare_rounds(&ProtocolConfig::new(10, 3, 1)).unwrap();
        let joint = rounds[0].joint_state().unwrap();
        let nonzero: Vec<_> = joint
            .amplitudes()
            .iter()
            .filter(|a| a.norm() > 0.0)
            .collect();
        assert_eq!(nonzero.len(), 10);
        for a in nonzero {
            assert!((a.re - 1.0 / 10f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn decoys_are_interleaved_and_transparent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ProtocolConfig::new(5, 4, 6).with_decoys(9);
        let seqs = insert_decoys(&cfg, 6, &mut rng).unwrap();
        assert_eq!(seqs.len(), 3);
        for (i, seq) in seqs.iter().enumerate() {
            assert_eq!(seq.recipient, i + 1);
            assert_eq!(seq.sequence_len, 15);
            assert_eq!(seq.records.len(), 9);
            assert!(seq
                .records
                .windows(2)
                .all(|w| w[0].position < w[1].position));
            assert!(seq.records.iter().all(|r| r.position < 15 && r.value < 5));
            let check = check_decoys(&seq.records, &seq.particles, &mut rng).unwrap();
            assert_eq!(check.errors, 0);
            assert_eq!(check.error_rate(), 0.0);
        }

        let none = insert_decoys(&cfg.clone().with_decoys(0), 6, &mut rng).unwrap();
        assert!(none
            .iter()
            .all(|s| s.records.is_empty() && s.particles.is_empty()));
        assert_eq!(DecoyCheck::default().error_rate(), 0.0);
    }

    #[test]
    fn v2_decoy_reads_back_after_inverse_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = ProtocolConfig::new(7, 2, 1).with_decoys(64);
        let seq = insert_decoys(&cfg, 1, &mut rng).unwrap().remove(0);
        for (record, particle) in seq.records.iter().zip(&seq.particles) {
            let mut p = particle.clone();
            if record.basis == Basis::V2 {
                p.apply_iqft(0).unwrap();
            }
            let probs = p.outcome_distribution(0, Basis::V1).unwrap();
            assert!((probs[record.value] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn check_decoys_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let record = DecoyRecord {
            position: 0,
            basis: Basis::V1,
            value: 0,
        };
        assert!(matches!(
            check_decoys(&[record], &[], &mut rng),
            Err(Error::LengthMismatch {
                expected: 1,
                actual: 0
            })
        ));
    }

    #[test]
    fn compute_sum_examples() {
        assert_eq!(
            compute_sum(&[vec![4], vec![5], vec![6]], 10).unwrap(),
            vec![5]
        );
        assert_eq!(
            compute_sum(&[vec![0, 0], vec![0, 0]], 7).unwrap(),
            vec![0, 0]
        );
        assert_eq!(
            compute_sum(&[vec![1, 2], vec![2, 2]], 3).unwrap(),
            vec![0, 1]
        );
        assert!(compute_sum(&[vec![1, 2], vec![2]], 3).is_err());
        assert!(compute_sum(&[vec![3]], 3).is_err());
    }

    #[test]
    fn encoding_sums_to_secret_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut round = prepare_rounds(&ProtocolConfig::new(5, 3, 1))
                .unwrap()
                .remove(0);
            let digits = [3, 4, 1];
            let total: usize = (0..3)
                .map(|i| round.encode_and_measure(i, digits[i], &mut rng).unwrap())
                .sum();
            assert_eq!(total % 5, 8 % 5);
        }
    }

    #[test]
    fn zero_digits_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let mut round = prepare_rounds(&ProtocolConfig::new(4, 4, 1))
                .unwrap()
                .remove(0);
            let total: usize = (0..4)
                .map(|i| round.encode_and_measure(i, 0, &mut rng).unwrap())
                .sum();
            assert_eq!(total % 4, 0);
        }
    }

    #[test]
    fn encoding_fake_particle_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut fake = QuditRegister::basis_state(10, &[2]).unwrap();
        fake.apply_iqft(0).unwrap();
        for _ in 0..20 {
            let mut round = RoundState::new(0, fake.clone());
            assert_eq!(round.encode_and_measure(0, 5, &mut rng).unwrap(), 7);
        }
    }

    #[test]
    fn double_measurement_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut round = prepare_rounds(&ProtocolConfig::new(3, 2, 1))
            .unwrap()
            .remove(0);
        round.encode_and_measure(1, 2, &mut rng).unwrap();
        assert!(round.is_measured(1));
        assert!(matches!(
            round.encode_and_measure(1, 0, &mut rng),
            Err(Error::AlreadyMeasured { round: 0, qudit: 1 })
        ));
        assert!(round.encode_and_measure(0, 3, &mut rng).is_err());
        assert!(round.encode_and_measure(2, 0, &mut rng).is_err());
    }

    #[test]
    fn honest_run_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = ProtocolConfig::new(10, 3, 1);
        let ks = secrets(10, &[&[4], &[5], &[6]]);
        for _ in 0..20 {
            let log = run_original_honest(&cfg, &ks, &mut rng).unwrap();
            assert_eq!(log.sum, vec![5]);
        }

        let cfg = ProtocolConfig::new(3, 2, 4);
        let zeros = secrets(3, &[&[0; 4], &[0; 4]]);
        let log = run_original_honest(&cfg, &zeros, &mut rng).unwrap();
        assert_eq!(log.sum, vec![0; 4]);

        let cfg = ProtocolConfig::new(5, 3, 8);
        for _ in 0..200 {
            let ks: Vec<_> = (0..3)
                .map(|_| SecretString::random(5, 8, &mut rng))
                .collect();
            let log = run_original_honest(&cfg, &ks, &mut rng).unwrap();
            assert_eq!(log.sum, expected_sum(&ks, 5));
        }
    }

    #[test]
    fn announcement_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = ProtocolConfig::new(3, 4, 2);
        let ks = secrets(3, &[&[0, 1], &[1, 2], &[2, 0], &[1, 1]]);
        let log = run_original_honest(&cfg, &ks, &mut rng).unwrap();
        assert_eq!(log.messages.len(), 4);
        for (i, msg) in log.messages[..3].iter().enumerate() {
            assert!(matches!(msg, Announcement::Results { from, .. } if *from == i + 1));
        }
        assert!(matches!(&log.messages[3], Announcement::Sum { values } if *values == log.sum));
        assert_eq!(log.results_of(0), Some(log.private_results.as_slice()));
        assert!(log.results_of(2).is_some());
        assert!(log.results_of(4).is_none());
    }

    #[test]
    fn secrets_are_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ProtocolConfig::new(3, 2, 1);
        assert!(SecretString::new(vec![3], 3).is_err());
        let short = secrets(3, &[&[1]]);
        assert!(run_original_honest(&cfg, &short, &mut rng).is_err());
        let long = secrets(3, &[&[1, 1], &[1, 1]]);
        assert!(run_original_honest(&cfg, &long, &mut rng).is_err());
    }
}
