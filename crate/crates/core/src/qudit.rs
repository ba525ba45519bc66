//! Dense state-vector simulation of `d`-level quantum registers.
//!
//! A register of `k` qudits stores `d^k` complex amplitudes. Basis index
//! `(l_0, l_1, ..., l_{k-1})` is encoded in base `d` with qudit 0 as the most
//! significant digit, so `|2⟩|1⟩` at `d = 3` lives at index `2·3 + 1 = 7`.
//!
//! Only the gates the summation protocol needs are provided: the Fourier
//! transform, its inverse, and the cyclic shift `|r⟩ → |r + s mod d⟩`.
//! Measurements are projective, either in the computational basis (`V1`) or
//! in its Fourier image (`V2`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest amplitude vector a register may hold unless a caller asks otherwise.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 22;

/// Tolerance on the squared norm of a register.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Squared magnitudes below this after a gate are Fourier cancellation
/// residue (amplitudes near 1e-16) and are flushed to exact zero.
const CANCELLATION_FLOOR: f64 = 1e-28;

/// Branch probabilities below this are rounding residue from Fourier
/// cancellations and are treated as exactly zero.
const PROBABILITY_FLOOR: f64 = 1e-20;

/// Measurement and preparation bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Computational basis `{|r⟩}`.
    V1,
    /// Fourier basis `{QFT|r⟩}`.
    V2,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::V1, Basis::V2];

    /// Uniform choice between the two bases.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Basis {
        if rng.gen::<bool>() {
            Basis::V1
        } else {
            Basis::V2
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::V1 => f.write_str("V1"),
            Basis::V2 => f.write_str("V2"),
        }
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V1" | "v1" => Ok(Basis::V1),
            "V2" | "v2" => Ok(Basis::V2),
            _ => Err(Error::InvalidConfig(format!("unknown basis '{s}'"))),
        }
    }
}

/// Number of amplitudes for `qudits` qudits of `level`, or an error past `cap`.
pub fn register_len(level: usize, qudits: usize, cap: usize) -> Result<usize> {
    if level < 2 {
        return Err(Error::InvalidLevel(level));
    }
    let cap_err = Error::DimensionCap { level, qudits, cap };
    let exp = u32::try_from(qudits).map_err(|_| Error::DimensionCap { level, qudits, cap })?;
    match level.checked_pow(exp) {
        Some(len) if len <= cap => Ok(len),
        _ => Err(cap_err),
    }
}

/// Row-major `d × d` Fourier matrix, entry `(l, r) = e^{sign·2πi·l·r/d} / √d`.
///
/// The phase index `l·r` is reduced mod `d` before scaling so every entry is
/// computed directly rather than by repeated multiplication.
fn fourier_matrix(level: usize, sign: f64) -> Vec<Complex64> {
    let scale = 1.0 / (level as f64).sqrt();
    let mut matrix = Vec::with_capacity(level * level);
    for l in 0..level {
        for r in 0..level {
            let phase = sign * 2.0 * PI * ((l * r) % level) as f64 / level as f64;
            matrix.push(Complex64::from_polar(scale, phase));
        }
    }
    matrix
}

/// The state of `qudits` qudits of dimension `level`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditRegister {
    level: usize,
    qudits: usize,
    amplitudes: Vec<Complex64>,
}

/// Result of a projective measurement on one qudit.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub value: usize,
    /// Collapsed, renormalised state.
    pub posterior: QuditRegister,
}

impl QuditRegister {
    /// The product state `|digits[0]⟩|digits[1]⟩…`.
    pub fn basis_state(level: usize, digits: &[usize]) -> Result<Self> {
        Self::basis_state_with_cap(level, digits, DEFAULT_MAX_AMPLITUDES)
    }

    pub fn basis_state_with_cap(level: usize, digits: &[usize], cap: usize) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidConfig(
                "a register needs at least one qudit".into(),
            ));
        }
        let len = register_len(level, digits.len(), cap)?;
        let mut index = 0;
        for &digit in digits {
            if digit >= level {
                return Err(Error::DigitOutOfRange { digit, level });
            }
            index = index * level + digit;
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(QuditRegister {
            level,
            qudits: digits.len(),
            amplitudes,
        })
    }

    /// `(1/√d) Σ_r |r⟩^{⊗n}`, the GHZ-like state shared out by the first participant.
    pub fn omega_state(level: usize, qudits: usize) -> Result<Self> {
        Self::omega_state_with_cap(level, qudits, DEFAULT_MAX_AMPLITUDES)
    }

    pub fn omega_state_with_cap(level: usize, qudits: usize, cap: usize) -> Result<Self> {
        if qudits < 2 {
            return Err(Error::InvalidConfig(format!(
                "omega state needs at least 2 qudits, got {qudits}"
            )));
        }
        let len = register_len(level, qudits, cap)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
        // (r, r, ..., r) sits at r·(1 + d + d² + ... + d^{n-1})
        let diagonal_step = (len - 1) / (level - 1);
        let amp = Complex64::new(1.0 / (level as f64).sqrt(), 0.0);
        for r in 0..level {
            amplitudes[r * diagonal_step] = amp;
        }
        Ok(QuditRegister {
            level,
            qudits,
            amplitudes,
        })
    }

    /// Wraps a caller-supplied amplitude vector after checking shape and norm.
    pub fn from_amplitudes(
        level: usize,
        qudits: usize,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        if qudits == 0 {
            return Err(Error::InvalidConfig(
                "a register needs at least one qudit".into(),
            ));
        }
        let len = register_len(level, qudits, DEFAULT_MAX_AMPLITUDES)?;
        if amplitudes.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: amplitudes.len(),
            });
        }
        let reg = QuditRegister {
            level,
            qudits,
            amplitudes,
        };
        let norm = reg.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(reg)
    }

    /// Tensor product `self ⊗ other`; `self` supplies the leading qudits.
    pub fn tensor(&self, other: &QuditRegister) -> Result<Self> {
        if self.level != other.level {
            return Err(Error::ShapeMismatch(
                self.level,
                self.qudits,
                other.level,
                other.qudits,
            ));
        }
        let qudits = self.qudits + other.qudits;
        register_len(self.level, qudits, DEFAULT_MAX_AMPLITUDES)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(QuditRegister {
            level: self.level,
            qudits,
            amplitudes,
        })
    }

    /// Tensor product of single- or multi-qudit factors in order.
    pub fn product(factors: &[QuditRegister]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("product of zero factors".into()))?;
        rest.iter().try_fold(first.clone(), |acc, f| acc.tensor(f))
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn qudits(&self) -> usize {
        self.qudits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Squared magnitudes over the full computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Base-`d` digits of a basis index, qudit 0 first.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.qudits];
        for slot in digits.iter_mut().rev() {
            *slot = index % self.level;
            index /= self.level;
        }
        digits
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &QuditRegister) -> Result<Complex64> {
        self.check_shape(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Equality up to global phase: `|⟨a|b⟩| ≥ 1 − tol`.
    pub fn approx_equal(&self, other: &QuditRegister, tol: f64) -> Result<bool> {
        Ok(self.inner(other)?.norm() >= 1.0 - tol)
    }

    pub fn apply_qft(&mut self, target: usize) -> Result<()> {
        self.check_target(target)?;
        let matrix = fourier_matrix(self.level, 1.0);
        self.apply_single(target, &matrix);
        Ok(())
    }

    pub fn apply_iqft(&mut self, target: usize) -> Result<()> {
        self.check_target(target)?;
        let matrix = fourier_matrix(self.level, -1.0);
        self.apply_single(target, &matrix);
        Ok(())
    }

    /// `U_s`: moves the amplitude of digit `l` on `target` to digit `(l + s) mod d`.
    pub fn apply_shift(&mut self, target: usize, shift: usize) -> Result<()> {
        self.check_target(target)?;
        if shift >= self.level {
            return Err(Error::DigitOutOfRange {
                digit: shift,
                level: self.level,
            });
        }
        if shift == 0 {
            return Ok(());
        }
        let zero = Complex64::new(0.0, 0.0);
        self.for_each_fiber(target, |fiber| {
            if fiber.iter().any(|a| *a != zero) {
                fiber.rotate_right(shift);
            }
        });
        Ok(())
    }

    /// Measures `target` in `basis` and removes it, returning the value and
    /// the state of the remaining qudits (`None` for a single-qudit register).
    pub fn measure_out<R: Rng + ?Sized>(
        mut self,
        target: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(usize, Option<QuditRegister>)> {
        self.check_target(target)?;
        if basis == Basis::V2 {
            self.apply_iqft(target)?;
        }
        let probs = self.computational_distribution(target);
        let value = sample_index(&probs, rng);
        if self.qudits == 1 {
            return Ok((value, None));
        }
        self.collapse(target, value, probs[value]);
        let stride = self.stride(target);
        let amplitudes: Vec<Complex64> = self
            .amplitudes
            .chunks_exact(stride * self.level)
            .flat_map(|block| block[value * stride..(value + 1) * stride].iter().copied())
            .collect();
        let rest = QuditRegister::from_amplitudes(self.level, self.qudits - 1, amplitudes)?;
        Ok((value, Some(rest)))
    }

    /// Exact probability of each outcome of measuring `target` in `basis`.
    pub fn outcome_distribution(&self, target: usize, basis: Basis) -> Result<Vec<f64>> {
        self.check_target(target)?;
        match basis {
            Basis::V1 => Ok(self.computational_distribution(target)),
            Basis::V2 => {
                let mut rotated = self.clone();
                rotated.apply_iqft(target)?;
                Ok(rotated.computational_distribution(target))
            }
        }
    }

    /// Projective measurement of `target` in `basis`.
    ///
    /// A `V2` measurement rotates into the computational frame with the inverse
    /// transform, measures, and rotates back, so the posterior factor on
    /// `target` is `QFT|value⟩`.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        target: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        let mut posterior = self.clone();
        let value = posterior.measure_in_place(target, basis, rng)?;
        Ok(MeasurementOutcome { value, posterior })
    }

    /// [`measure`](Self::measure) without copying; `self` becomes the posterior.
    pub fn measure_in_place<R: Rng + ?Sized>(
        &mut self,
        target: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<usize> {
        self.check_target(target)?;
        if basis == Basis::V2 {
            self.apply_iqft(target)?;
        }
        let probs = self.computational_distribution(target);
        let value = sample_index(&probs, rng);
        self.collapse(target, value, probs[value]);
        if basis == Basis::V2 {
            self.apply_qft(target)?;
        }
        Ok(value)
    }

    fn computational_distribution(&self, target: usize) -> Vec<f64> {
        let stride = self.stride(target);
        let mut probs = vec![0.0; self.level];
        for block in self.amplitudes.chunks_exact(stride * self.level) {
            for (prob, run) in probs.iter_mut().zip(block.chunks_exact(stride)) {
                *prob += run.iter().map(|a| a.norm_sqr()).sum::<f64>();
            }
        }
        probs
    }

    fn collapse(&mut self, target: usize, value: usize, prob: f64) {
        let stride = self.stride(target);
        let scale = 1.0 / prob.sqrt();
        let zero = Complex64::new(0.0, 0.0);
        let mut norm = 0.0;
        for block in self.amplitudes.chunks_exact_mut(stride * self.level) {
            for (l, run) in block.chunks_exact_mut(stride).enumerate() {
                if l == value {
                    for amp in run {
                        *amp *= scale;
                        norm += amp.norm_sqr();
                    }
                } else {
                    run.fill(zero);
                }
            }
        }
        // re-normalise against accumulated rounding
        let norm = norm.sqrt();
        if (norm - 1.0).abs() > f64::EPSILON {
            for amp in &mut self.amplitudes {
                *amp /= norm;
            }
        }
    }

    fn apply_single(&mut self, target: usize, matrix: &[Complex64]) {
        let d = self.level;
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        let zero = Complex64::new(0.0, 0.0);
        self.for_each_fiber(target, |fiber| {
            // collapsed and |ω⟩-like registers are mostly exact zeros
            if fiber.iter().all(|a| *a == zero) {
                return;
            }
            for (l, slot) in out.iter_mut().enumerate() {
                let row = &matrix[l * d..(l + 1) * d];
                let value: Complex64 = row.iter().zip(fiber.iter()).map(|(m, a)| m * a).sum();
                *slot = if value.norm_sqr() < CANCELLATION_FLOOR {
                    zero
                } else {
                    value
                };
            }
            fiber.copy_from_slice(&out);
        });
    }

    /// Runs `f` over every length-`d` slice of amplitudes that differ only in
    /// the `target` digit.
    fn for_each_fiber(&mut self, target: usize, mut f: impl FnMut(&mut [Complex64])) {
        let d = self.level;
        let stride = self.stride(target);
        let block = stride * d;
        let mut fiber = vec![Complex64::new(0.0, 0.0); d];
        for base in (0..self.amplitudes.len()).step_by(block) {
            for inner in 0..stride {
                for (l, slot) in fiber.iter_mut().enumerate() {
                    *slot = self.amplitudes[base + l * stride + inner];
                }
                f(&mut fiber);
                for (l, value) in fiber.iter().enumerate() {
                    self.amplitudes[base + l * stride + inner] = *value;
                }
            }
        }
    }

    fn stride(&self, target: usize) -> usize {
        self.level.pow((self.qudits - 1 - target) as u32)
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.qudits {
            return Err(Error::TargetOutOfRange {
                target,
                qudits: self.qudits,
            });
        }
        Ok(())
    }

    fn check_shape(&self, other: &QuditRegister) -> Result<()> {
        if self.level != other.level || self.qudits != other.qudits {
            return Err(Error::ShapeMismatch(
                self.level,
                self.qudits,
                other.level,
                other.qudits,
            ));
        }
        Ok(())
    }
}

/// Draws an index with probability proportional to `probs`, never returning
/// an entry below the probability floor.
fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().filter(|&&p| p > PROBABILITY_FLOOR).sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= PROBABILITY_FLOOR {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
