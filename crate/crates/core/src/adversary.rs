//! Threat models: a malicious preparer who ships `QFT⁻¹|r⟩` product states
//! instead of `|ω⟩`, and an outside intercept-resend eavesdropper.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    decoys_abort, distribute, encode_all, validate_secrets, AnnouncementLog, Channel, DecoyCheck,
    ProtocolConfig, RoundState, SecretString,
};
use crate::qudit::{Basis, QuditRegister};

/// The fabrication value `r` used in each round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IqftAttackPlan {
    r_choices: Vec<usize>,
}

impl IqftAttackPlan {
    pub fn new(r_choices: Vec<usize>, level: usize) -> Result<Self> {
        if let Some(&digit) = r_choices.iter().find(|&&r| r >= level) {
            return Err(Error::DigitOutOfRange { digit, level });
        }
        Ok(IqftAttackPlan { r_choices })
    }

    /// The same `r` in every round.
    pub fn fixed(r: usize, rounds: usize, level: usize) -> Result<Self> {
        Self::new(vec![r; rounds], level)
    }

    /// An independent uniform `r` per round.
    pub fn random<R: Rng + ?Sized>(rounds: usize, level: usize, rng: &mut R) -> Self {
        IqftAttackPlan {
            r_choices: (0..rounds).map(|_| rng.gen_range(0..level)).collect(),
        }
    }

    pub fn r_choices(&self) -> &[usize] {
        &self.r_choices
    }

    pub fn r_for(&self, round: usize) -> Option<usize> {
        self.r_choices.get(round).copied()
    }

    pub fn len(&self) -> usize {
        self.r_choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_choices.is_empty()
    }

    /// One product register `QFT⁻¹|r_j⟩^{⊗n}` per planned round.
    pub fn fabricate_rounds(&self, cfg: &ProtocolConfig) -> Result<Vec<RoundState>> {
        cfg.validate()?;
        self.r_choices
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let particle = fake_particle(cfg.level, r)?;
                Ok(RoundState::from_factors(
                    j,
                    vec![particle; cfg.participants],
                ))
            })
            .collect()
    }
}

/// What the attacker uses for its own result string.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumPolicy {
    /// Pick `R_1` so the published sum is still `Σ K_i mod d`.
    #[default]
    Consistent,
    /// Publish a sum built from a random `R_1`.
    Random,
}

/// `QFT⁻¹|r⟩` as a single-qudit register.
pub fn fake_particle(level: usize, r: usize) -> Result<QuditRegister> {
    let mut particle = QuditRegister::basis_state(level, &[r])?;
    particle.apply_iqft(0)?;
    Ok(particle)
}

/// `(announced − r) mod d`
pub fn recover_secret_digit(announced: usize, r: usize, level: usize) -> usize {
    (announced % level + level - r % level) % level
}

#[derive(Clone, Debug)]
pub struct AttackReport {
    pub decoy_checks: Vec<DecoyCheck>,
    pub aborted: bool,
    /// `R_i` for participants `1..n`.
    pub announced: Vec<Vec<usize>>,
    /// Recovered `K_i` for participants `1..n`.
    pub recovered: Vec<SecretString>,
    pub success: bool,
    pub log: Option<AnnouncementLog>,
}

/// Recovers every honest participant's secret from its announcements.
pub(crate) fn recover_all(
    announced: &[Vec<usize>],
    r_per_digit: &[usize],
    level: usize,
) -> Result<Vec<SecretString>> {
    announced
        .iter()
        .map(|row| {
            let digits = row
                .iter()
                .zip(r_per_digit)
                .map(|(&a, &r)| recover_secret_digit(a, r, level))
                .collect();
            SecretString::new(digits, level)
        })
        .collect()
}

/// The attacker's own result string under `policy`.
pub(crate) fn attacker_results<R: Rng + ?Sized>(
    policy: SumPolicy,
    own_secret: &SecretString,
    announced: &[Vec<usize>],
    recovered: &[SecretString],
    level: usize,
    rng: &mut R,
) -> Vec<usize> {
    match policy {
        SumPolicy::Consistent => (0..own_secret.len())
            .map(|j| {
                let keys: usize = recovered.iter().map(|s| s.digits()[j]).sum();
                let results: usize = announced.iter().map(|row| row[j]).sum();
                // R_1 = K_1 + Σ K_i − Σ R_i (mod d)
                let residue = (results % level) as isize;
                let raw = (own_secret.digits()[j] + keys) as isize - residue;
                raw.rem_euclid(level as isize) as usize
            })
            .collect(),
        SumPolicy::Random => (0..own_secret.len())
            .map(|_| rng.gen_range(0..level))
            .collect(),
    }
}

/// The inverse-QFT attack against the original protocol.
///
/// Decoys are genuine, so the decoy check passes; honest participants encode
/// on fabricated particles and their announcements reveal their secrets.
pub fn run_iqft_attack_original<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    secrets: &[SecretString],
    plan: &IqftAttackPlan,
    policy: SumPolicy,
    rng: &mut R,
) -> Result<AttackReport> {
    cfg.validate()?;
    validate_secrets(cfg, secrets)?;
    if plan.len() < cfg.length {
        return Err(Error::LengthMismatch {
            expected: cfg.length,
            actual: plan.len(),
        });
    }
    let truncated = IqftAttackPlan {
        r_choices: plan.r_choices[..cfg.length].to_vec(),
    };
    let mut rounds = truncated.fabricate_rounds(cfg)?;
    let decoy_checks = distribute(cfg, &mut rounds, Channel::Ideal, rng)?;
    if decoys_abort(cfg, &decoy_checks) {
        return Ok(AttackReport {
            decoy_checks,
            aborted: true,
            announced: Vec::new(),
            recovered: Vec::new(),
            success: false,
            log: None,
        });
    }
    let mut refs: Vec<&mut RoundState> = rounds.iter_mut().collect();
    let announced = encode_all(&mut refs, secrets, 1..cfg.participants, rng)?;
    let recovered = recover_all(&announced, truncated.r_choices(), cfg.level)?;
    let success = recovered.iter().zip(&secrets[1..]).all(|(a, b)| a == b);
    let own = attacker_results(policy, &secrets[0], &announced, &recovered, cfg.level, rng);
    let log = AnnouncementLog::build(own, &announced, cfg.level)?;
    Ok(AttackReport {
        decoy_checks,
        aborted: false,
        announced,
        recovered,
        success,
        log: Some(log),
    })
}

/// Intercept-resend with a uniformly random basis per particle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveModel;

/// What Eve learned from one particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interception {
    pub basis: Basis,
    pub value: usize,
}

impl EveModel {
    /// Measures `target` in a random basis and forwards the collapsed state.
    pub fn intercept<R: Rng + ?Sized>(
        &self,
        register: &mut QuditRegister,
        target: usize,
        rng: &mut R,
    ) -> Result<Interception> {
        let basis = Basis::random(rng);
        self.intercept_in(register, target, basis, rng)
    }

    pub fn intercept_in<R: Rng + ?Sized>(
        &self,
        register: &mut QuditRegister,
        target: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<Interception> {
        let value = register.measure_in_place(target, basis, rng)?;
        Ok(Interception { basis, value })
    }

    /// Intercepts every single-qudit particle in `particles`.
    pub fn intercept_resend<R: Rng + ?Sized>(
        &self,
        particles: &mut [QuditRegister],
        rng: &mut R,
    ) -> Result<Vec<Interception>> {
        particles
            .iter_mut()
            .map(|p| self.intercept(p, 0, rng))
            .collect()
    }
}

/// Convenience form of [`EveModel::intercept_resend`].
pub fn eve_intercept_resend<R: Rng + ?Sized>(
    particles: &mut [QuditRegister],
    rng: &mut R,
) -> Result<Vec<Interception>> {
    EveModel.intercept_resend(particles, rng)
}

/// Exact probability that a decoy prepared in a random basis with a random
/// value fails its check after intercept-resend.
///
/// Averages over preparation basis, value and Eve's basis, composing exact
/// outcome distributions; no sampling.
pub fn eve_decoy_error_probability(level: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut cases = 0usize;
    for prep in Basis::ALL {
        for value in 0..level {
            let mut decoy = QuditRegister::basis_state(level, &[value])?;
            if prep == Basis::V2 {
                decoy.apply_qft(0)?;
            }
            for eve in Basis::ALL {
                let eve_probs = decoy.outcome_distribution(0, eve)?;
                let mut miss = 0.0;
                for (seen, p_seen) in eve_probs.into_iter().enumerate() {
                    if p_seen == 0.0 {
                        continue;
                    }
                    let mut resent = QuditRegister::basis_state(level, &[seen])?;
                    if eve == Basis::V2 {
                        resent.apply_qft(0)?;
                    }
                    let check = resent.outcome_distribution(0, prep)?;
                    miss += p_seen * (1.0 - check[value]);
                }
                total += miss;
                cases += 1;
            }
        }
    }
    Ok(total / cases as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn secrets(level: usize, rows: &[&[usize]]) -> Vec<SecretString> {
        rows.iter()
            .map(|r| SecretString::new(r.to_vec(), level).unwrap())
            .collect()
    }

    #[test]
    fn fake_particle_examples() {
        let h = 1.0 / 2f64.sqrt();
        let p = fake_particle(2, 0).unwrap();
        for a in p.amplitudes() {
            assert!((a - Complex64::new(h, 0.0)).norm() < 1e-12);
        }

        // (1/√10) Σ_x e^{−2πi·2x/10} |x⟩
        let p = fake_particle(10, 2).unwrap();
        for (x, a) in p.amplitudes().iter().enumerate() {
            let expected = Complex64::from_polar(
                1.0 / 10f64.sqrt(),
                -2.0 * std::f64::consts::PI * 2.0 * x as f64 / 10.0,
            );
            assert!((a - expected).norm() < 1e-12);
        }
        assert!(fake_particle(4, 4).is_err());
    }

    #[test]
    fn encoded_fake_particle_is_point_mass() {
        for level in 2..=16 {
            for r in 0..level {
                for k in 0..level {
                    let mut p = fake_particle(level, r).unwrap();
                    p.apply_qft(0).unwrap();
                    p.apply_shift(0, k).unwrap();
                    let probs = p.outcome_distribution(0, Basis::V1).unwrap();
                    assert!((probs[(r + k) % level] - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn recover_digit_examples() {
        assert_eq!(recover_secret_digit(7, 2, 10), 5);
        assert_eq!(recover_secret_digit(8, 2, 10), 6);
        assert_eq!(recover_secret_digit(1, 2, 3), 2);
        assert_eq!(recover_secret_digit(0, 0, 5), 0);
    }

    #[test]
    fn worked_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ProtocolConfig::new(10, 3, 1);
        let ks = secrets(10, &[&[4], &[5], &[6]]);
        let plan = IqftAttackPlan::fixed(2, 1, 10).unwrap();
        let report =
            run_iqft_attack_original(&cfg, &ks, &plan, SumPolicy::Consistent, &mut rng).unwrap();
        assert_eq!(report.announced, vec![vec![7], vec![8]]);
        assert_eq!(report.recovered, ks[1..].to_vec());
        assert!(report.success);
        assert!(report.decoy_checks.iter().all(|c| c.errors == 0));
        assert_eq!(report.log.unwrap().sum, vec![5]);
    }

    #[test]
    fn zero_secrets_recover_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = ProtocolConfig::new(6, 4, 3);
        let ks = secrets(6, &[&[0; 3], &[0; 3], &[0; 3], &[0; 3]]);
        let plan = IqftAttackPlan::random(3, 6, &mut rng);
        let report =
            run_iqft_attack_original(&cfg, &ks, &plan, SumPolicy::Random, &mut rng).unwrap();
        assert!(report.recovered.iter().all(|s| s.digits() == [0, 0, 0]));
    }

    #[test]
    fn attack_always_succeeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ProtocolConfig::new(7, 4, 6);
        for _ in 0..100 {
            let ks: Vec<_> = (0..4)
                .map(|_| SecretString::random(7, 6, &mut rng))
                .collect();
            let plan = IqftAttackPlan::random(6, 7, &mut rng);
            let report =
                run_iqft_attack_original(&cfg, &ks, &plan, SumPolicy::Consistent, &mut rng)
                    .unwrap();
            assert!(report.success);
            assert!(!report.aborted);
            assert_eq!(
                report.log.unwrap().sum,
                crate::protocol::expected_sum(&ks, 7)
            );
        }
    }

    #[test]
    fn short_plan_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ProtocolConfig::new(3, 2, 2);
        let ks = secrets(3, &[&[0, 0], &[0, 0]]);
        let plan = IqftAttackPlan::fixed(1, 1, 3).unwrap();
        assert!(
            run_iqft_attack_original(&cfg, &ks, &plan, SumPolicy::Consistent, &mut rng).is_err()
        );
        assert!(IqftAttackPlan::new(vec![0, 3], 3).is_err());
    }

    #[test]
    fn eve_correct_basis_leaves_decoy_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for r in 0..5 {
            let mut decoy = QuditRegister::basis_state(5, &[r]).unwrap();
            let seen = EveModel
                .intercept_in(&mut decoy, 0, Basis::V1, &mut rng)
                .unwrap();
            assert_eq!(seen.value, r);
            assert_eq!(decoy.measure(0, Basis::V1, &mut rng).unwrap().value, r);
        }
    }

    #[test]
    fn eve_wrong_basis_match_probability() {
        // |r⟩ measured by Eve in V2, checker in V1: matches with probability 1/d.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for level in [2, 3, 7] {
            let decoy = QuditRegister::basis_state(level, &[1]).unwrap();
            let mut eve_copy = decoy.clone();
            EveModel
                .intercept_in(&mut eve_copy, 0, Basis::V2, &mut rng)
                .unwrap();
            let probs = eve_copy.outcome_distribution(0, Basis::V1).unwrap();
            assert!((probs[1] - 1.0 / level as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn eve_error_probability_matches_closed_form() {
        for level in [2, 3, 5, 10, 16] {
            let exact = eve_decoy_error_probability(level).unwrap();
            let closed = 0.5 * (1.0 - 1.0 / level as f64);
            assert!(
                (exact - closed).abs() < 1e-9,
                "d={level}: {exact} vs {closed}"
            );
        }
        assert!((eve_decoy_error_probability(2).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn eve_is_caught_by_decoys() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = ProtocolConfig::new(2, 2, 1).with_decoys(32);
        let ks = secrets(2, &[&[1], &[0]]);
        let run =
            crate::protocol::run_original(&cfg, &ks, Channel::InterceptResend(EveModel), &mut rng)
                .unwrap();
        // 32 decoys at 1/4 error each: clean pass has probability (3/4)^32 ≈ 1e-4
        assert!(run.aborted);
        assert!(run.log.is_none());
    }
}
