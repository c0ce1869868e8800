//! Atomic line data for the probing transition: Wigner-3j line strengths,
//! Zeeman-shifted detunings, decay branching ratios and the polarisation
//! decomposition of the probe light.
//!
//! The probe couples the |F=2,m⟩ ground states to the |F'=3,m'⟩ excited
//! states. Line strengths are squared Wigner-3j symbols, evaluated with exact
//! integer arithmetic so that ratios such as S₁:S₂:S₃ = 1:5:15 hold to
//! machine precision.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::constants;
use crate::{Error, Result};

/// One optical line: wavelength, damping rate and Zeeman data.
///
/// `gamma` is half the spontaneous decay rate in ordinary frequency (Hz).
/// `f_res` is the zero-field |2,2⟩→|3,3⟩ resonance; it defaults to 0 so all
/// spectra are expressed as detunings from that line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicLine {
    /// Wavelength λ (m).
    pub wavelength: f64,
    /// Damping rate γ (Hz), half the spontaneous decay rate.
    pub gamma: f64,
    /// Absolute frequency reference of the B=0 cycling transition (Hz).
    pub f_res: f64,
    /// Ground-manifold Landé factor.
    pub g_ground: f64,
    /// Excited-manifold Landé factor.
    pub g_excited: f64,
    /// Bohr magneton over Planck constant (Hz/T).
    pub zeeman_hz_per_tesla: f64,
}

impl AtomicLine {
    /// The ⁸⁷Rb D₂ line with standard constants and `f_res = 0`.
    pub fn rb87_d2() -> Self {
        AtomicLine {
            wavelength: constants::RB87_D2_WAVELENGTH,
            gamma: constants::RB87_D2_GAMMA,
            f_res: 0.0,
            g_ground: constants::G_F_GROUND,
            g_excited: constants::G_F_EXCITED,
            zeeman_hz_per_tesla: constants::BOHR_MAGNETON_HZ_PER_TESLA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wavelength must be > 0, got {}",
                self.wavelength
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Zeeman shift of the |2,m⟩→|3,m'⟩ transition frequency (Hz) in a
    /// field B (T): (g_F'·m' − g_F·m)·(μ_B/h)·B.
    pub fn zeeman_shift(&self, m: i32, m_prime: i32, b_field: f64) -> f64 {
        (self.g_excited * m_prime as f64 - self.g_ground * m as f64)
            * self.zeeman_hz_per_tesla
            * b_field
    }

    /// Absolute frequency of the |2,m⟩→|3,m'⟩ transition at field B.
    pub fn transition_frequency(&self, m: i32, m_prime: i32, b_field: f64) -> f64 {
        self.f_res + self.zeeman_shift(m, m_prime, b_field)
    }
}

impl Default for AtomicLine {
    fn default() -> Self {
        Self::rb87_d2()
    }
}

/// Polarisation of the probe relative to the magnetic field axis, expressed
/// as the power fractions driving the |m=2⟩→|m'⟩ transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    /// Linear, perpendicular to B: equal σ⁻/σ⁺ components, no π.
    Perpendicular,
    /// Linear, parallel to B: pure π.
    Parallel,
    /// Explicit power fractions (σ⁻, π, σ⁺) driving m'=1, 2, 3 from m=2.
    Explicit {
        sigma_minus: f64,
        pi: f64,
        sigma_plus: f64,
    },
}

impl Polarization {
    /// Power fractions `[p₁, p₂, p₃]` driving |m=2⟩→|m'=1,2,3⟩, which is the
    /// same thing as the (σ⁻, π, σ⁺) decomposition of the light.
    pub fn power_fractions(&self) -> [f64; 3] {
        match *self {
            Polarization::Perpendicular => [0.5, 0.0, 0.5],
            Polarization::Parallel => [0.0, 1.0, 0.0],
            Polarization::Explicit {
                sigma_minus,
                pi,
                sigma_plus,
            } => [sigma_minus, pi, sigma_plus],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.power_fractions();
        for (i, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "polarisation fraction p{} must be in [0,1], got {}",
                    i + 1,
                    v
                )));
            }
        }
        let total: f64 = p.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "polarisation fractions sum to {} > 1",
                total
            )));
        }
        Ok(())
    }
}

fn factorial_big(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Convert an exact rational to f64. When numerator and denominator both fit
/// the f64 mantissa the division is correctly rounded; otherwise fall back to
/// the big-rational conversion.
fn rational_to_f64(r: &BigRational) -> f64 {
    let limit = BigInt::from(1u64 << 53);
    if r.numer().abs() < limit && r.denom().abs() < limit {
        let n = r.numer().to_f64().unwrap();
        let d = r.denom().to_f64().unwrap();
        n / d
    } else {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

/// Squared Wigner-3j symbol, computed by the Racah sum with exact integer
/// factorial arithmetic; only the final rational-to-float conversion rounds.
///
/// Arguments are **doubled** angular momenta, so half-integer values are
/// representable: `wigner_3j_sq(6, 2, 4, -2, -2, 4)` is the symbol
/// (3 1 2; −1 −1 2) squared.
///
/// Selection-rule violations (triangle rule, m₁+m₂+m₃ ≠ 0, |m| > j) return
/// `Ok(0.0)`; arguments that do not describe valid (j, m) pairs — mismatched
/// integer/half-integer parity — are an error.
pub fn wigner_3j_sq(dj1: u32, dj2: u32, dj3: u32, dm1: i32, dm2: i32, dm3: i32) -> Result<f64> {
    let djs = [dj1 as i64, dj2 as i64, dj3 as i64];
    let dms = [dm1 as i64, dm2 as i64, dm3 as i64];
    for (i, (&dj, &dm)) in djs.iter().zip(dms.iter()).enumerate() {
        if (dj + dm) % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "j{i} and m{i} differ in half-integer parity: 2j={dj}, 2m={dm}",
                i = i + 1
            )));
        }
        if dm.abs() > dj {
            return Ok(0.0);
        }
    }
    if dm1 as i64 + dm2 as i64 + dm3 as i64 != 0 {
        return Ok(0.0);
    }
    let (dj1, dj2, dj3) = (djs[0], djs[1], djs[2]);
    if (dj1 + dj2 + dj3) % 2 != 0 {
        return Ok(0.0);
    }
    if dj3 > dj1 + dj2 || dj3 < (dj1 - dj2).abs() {
        return Ok(0.0);
    }

    let (dm1, dm2) = (dms[0], dms[1]);

    // All of these are integers once the parity and triangle checks pass.
    let beta1 = (dj1 + dj2 - dj3) / 2;
    let beta2 = (dj1 - dm1) / 2;
    let beta3 = (dj2 + dm2) / 2;
    let alpha1 = (dj2 - dj3 - dm1) / 2;
    let alpha2 = (dj1 - dj3 + dm2) / 2;

    let k_lo = 0.max(alpha1).max(alpha2);
    let k_hi = beta1.min(beta2).min(beta3);
    if k_hi < k_lo {
        return Ok(0.0);
    }

    let mut series = BigRational::zero();
    for k in k_lo..=k_hi {
        let denom = factorial_big(k)
            * factorial_big(k - alpha1)
            * factorial_big(k - alpha2)
            * factorial_big(beta1 - k)
            * factorial_big(beta2 - k)
            * factorial_big(beta3 - k);
        let sign = if k % 2 == 0 {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        series += BigRational::new(sign, denom);
    }

    let tri = BigRational::new(
        factorial_big((dj1 + dj2 - dj3) / 2)
            * factorial_big((dj1 - dj2 + dj3) / 2)
            * factorial_big((-dj1 + dj2 + dj3) / 2),
        factorial_big((dj1 + dj2 + dj3) / 2 + 1),
    );
    let pre = BigRational::from(
        factorial_big((dj1 + dm1) / 2)
            * factorial_big((dj1 - dm1) / 2)
            * factorial_big((dj2 + dm2) / 2)
            * factorial_big((dj2 - dm2) / 2)
            * factorial_big((dj3 + dms[2]) / 2)
            * factorial_big((dj3 - dms[2]) / 2),
    );

    let squared = tri * pre * (&series * &series);
    Ok(rational_to_f64(&squared))
}

/// Line strength S_m' of the |2,2⟩→|3,m'⟩ transition: the squared 3j symbol
/// (3 1 2; −m' m'−2 2).
pub fn line_strength(m_prime: i32) -> Result<f64> {
    check_m_prime(m_prime)?;
    wigner_3j_sq(6, 2, 4, -2 * m_prime, 2 * (m_prime - 2), 4)
}

fn check_m_prime(m_prime: i32) -> Result<()> {
    if !(1..=3).contains(&m_prime) {
        return Err(Error::InvalidInput(format!(
            "m' must be 1, 2 or 3, got {m_prime}"
        )));
    }
    Ok(())
}

/// Cached [S₁, S₂, S₃] for the hot paths; identical to `line_strength`.
pub(crate) static LINE_STRENGTHS: Lazy<[f64; 3]> = Lazy::new(|| {
    [
        line_strength(1).expect("S1"),
        line_strength(2).expect("S2"),
        line_strength(3).expect("S3"),
    ]
});

/// Detuning δ_{m',f} of light at frequency `f` from the Zeeman-shifted
/// |2,2⟩→|3,m'⟩ transition in field `b_field` (T).
pub fn zeeman_detuning(f: f64, m_prime: i32, b_field: f64, line: &AtomicLine) -> Result<f64> {
    check_m_prime(m_prime)?;
    if b_field < 0.0 {
        return Err(Error::InvalidInput(format!(
            "magnetic field must be >= 0, got {b_field}"
        )));
    }
    Ok(f - line.transition_frequency(2, m_prime, b_field))
}

/// Branching ratios for spontaneous decay of |3,m'⟩ back to the F=2 ground
/// states, normalised to Σ = 1 over the allowed channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingRatios {
    channels: Vec<(i32, f64)>,
}

impl BranchingRatios {
    /// Decay probability into ground state `m` (0 for closed channels).
    pub fn probability(&self, m: i32) -> f64 {
        self.channels
            .iter()
            .find(|(cm, _)| *cm == m)
            .map(|(_, b)| *b)
            .unwrap_or(0.0)
    }

    /// The open channels as `(m, probability)` pairs, ascending in m.
    pub fn channels(&self) -> &[(i32, f64)] {
        &self.channels
    }
}

/// Branching ratios b_{m'→m} of |3,m'⟩, m' ∈ {1,2,3}, proportional to the
/// squared 3j symbols of the open decay channels to F=2.
pub fn branching_ratios(m_prime: i32) -> Result<BranchingRatios> {
    check_m_prime(m_prime)?;
    let mut channels = Vec::new();
    let mut total = 0.0;
    for m in -2..=2i32 {
        let q = m_prime - m;
        if q.abs() > 1 {
            continue;
        }
        let s = wigner_3j_sq(6, 2, 4, -2 * m_prime, 2 * q, 2 * m)?;
        if s > 0.0 {
            channels.push((m, s));
            total += s;
        }
    }
    for c in &mut channels {
        c.1 /= total;
    }
    Ok(BranchingRatios { channels })
}

/// One |2,2⟩→|3,m'⟩ line with its strength, Zeeman shift and decay
/// branching.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionLine {
    pub m_prime: i32,
    /// Squared 3j strength S_m'.
    pub strength: f64,
    /// Zeeman shift of the transition frequency at the configured field (Hz).
    pub zeeman_shift: f64,
    pub branching: BranchingRatios,
}

/// The σ⁻/π/σ⁺ lines from |F=2,m=2⟩ at a fixed magnetic field.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSet {
    pub lines: [TransitionLine; 3],
}

impl TransitionSet {
    pub fn for_field(line: &AtomicLine, b_field: f64) -> Result<Self> {
        line.validate()?;
        if b_field < 0.0 {
            return Err(Error::InvalidInput(format!(
                "magnetic field must be >= 0, got {b_field}"
            )));
        }
        let mut lines = Vec::with_capacity(3);
        for m_prime in 1..=3 {
            lines.push(TransitionLine {
                m_prime,
                strength: line_strength(m_prime)?,
                zeeman_shift: line.zeeman_shift(2, m_prime, b_field),
                branching: branching_ratios(m_prime)?,
            });
        }
        Ok(TransitionSet {
            lines: lines.try_into().expect("three lines"),
        })
    }
}
