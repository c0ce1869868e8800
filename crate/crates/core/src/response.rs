//! Dispersive and absorptive response of the atoms to the two-frequency
//! probe: phase shift θ(f), fractional field attenuation α(f), the beat
//! observables (φ, ε) and the per-atom quantities φ₁ and ε₁.
//!
//! Both θ and α are linear in the column density and valid in the
//! low-saturation, optically thin regime. α values above
//! [`THIN_SAMPLE_LIMIT`] raise a warning flag on the beat observables.

use crate::atomics::{AtomicLine, Polarization, LINE_STRENGTHS};
use crate::{Error, Result};

/// Fractional attenuation above which the thin-sample linearisation is no
/// longer trusted.
pub const THIN_SAMPLE_LIMIT: f64 = 0.1;

/// Default saturation intensity guard (W/m²) for the ⁸⁷Rb D₂ line. The
/// response formulas assume negligible saturation; callers that know their
/// beam intensity can check it against this threshold.
pub const DEFAULT_SATURATION_INTENSITY: f64 = 25.0;

/// Returns false when the supplied peak intensity (W/m²) is high enough that
/// the negligible-saturation assumption behind the response formulas breaks.
pub fn saturation_ok(peak_intensity: f64, threshold: f64) -> bool {
    peak_intensity <= threshold
}

/// Focused probe beam geometry. The effective area A = ½πw² is the
/// normalisation that converts per-atom response into column density
/// response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGeometry {
    waist: f64,
}

impl ProbeGeometry {
    pub fn new(waist: f64) -> Result<Self> {
        if !(waist > 0.0) {
            return Err(Error::InvalidInput(format!(
                "waist must be > 0, got {waist}"
            )));
        }
        Ok(ProbeGeometry { waist })
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    /// Effective beam area A = ½πw².
    pub fn area(&self) -> f64 {
        0.5 * std::f64::consts::PI * self.waist * self.waist
    }
}

/// The two probe frequency components at f₀ ± δf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatConfig {
    /// Centre frequency f₀ (Hz), on the same reference as `AtomicLine::f_res`.
    pub center: f64,
    /// Half-splitting δf (Hz); the components sit at f₀ ± δf.
    pub half_split: f64,
}

impl BeatConfig {
    pub fn new(center: f64, half_split: f64) -> Result<Self> {
        if half_split == 0.0 {
            return Err(Error::InvalidInput(
                "beat half-splitting must be nonzero".into(),
            ));
        }
        Ok(BeatConfig { center, half_split })
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_split
    }

    pub fn lower(&self) -> f64 {
        self.center - self.half_split
    }

    /// Beat angular frequency Ω = 4πδf (rad/s).
    pub fn beat_omega(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.half_split.abs()
    }
}

fn check_column_density(rho_a: f64) -> Result<()> {
    if rho_a < 0.0 {
        return Err(Error::InvalidInput(format!(
            "column density must be >= 0, got {rho_a}"
        )));
    }
    Ok(())
}

/// Sum over the three lines of p_m'·S_m'·kernel(δ_m', γ).
fn line_sum(
    f: f64,
    b_field: f64,
    pol: Polarization,
    line: &AtomicLine,
    kernel: impl Fn(f64, f64) -> f64,
) -> f64 {
    let p = pol.power_fractions();
    let strengths = *LINE_STRENGTHS;
    let mut acc = 0.0;
    for m_prime in 1..=3usize {
        if p[m_prime - 1] == 0.0 {
            continue;
        }
        let delta = f - line.transition_frequency(2, m_prime as i32, b_field);
        acc += p[m_prime - 1] * strengths[m_prime - 1] * kernel(delta, line.gamma);
    }
    acc
}

fn column_prefactor(rho_a: f64, line: &AtomicLine) -> f64 {
    3.0 * line.wavelength * line.wavelength * rho_a / (2.0 * std::f64::consts::PI)
}

/// Phase shift θ(f) of one optical frequency component (radians):
/// (7/2)·Σ p_m' S_m' γδ/(δ²+γ²) · 3λ²ρ_a/2π.
pub fn phase_shift(
    f: f64,
    rho_a: f64,
    b_field: f64,
    pol: Polarization,
    line: &AtomicLine,
) -> Result<f64> {
    check_column_density(rho_a)?;
    pol.validate()?;
    line.validate()?;
    let dispersive = line_sum(f, b_field, pol, line, |d, g| g * d / (d * d + g * g));
    Ok(3.5 * dispersive * column_prefactor(rho_a, line))
}

/// Fractional attenuation α(f) of one optical frequency component:
/// (7/2)·Σ p_m' S_m' γ²/(δ²+γ²) · 3λ²ρ_a/2π.
///
/// Only valid while α ≪ 1; compare against [`THIN_SAMPLE_LIMIT`].
pub fn attenuation(
    f: f64,
    rho_a: f64,
    b_field: f64,
    pol: Polarization,
    line: &AtomicLine,
) -> Result<f64> {
    check_column_density(rho_a)?;
    pol.validate()?;
    line.validate()?;
    let absorptive = line_sum(f, b_field, pol, line, |d, g| g * g / (d * d + g * g));
    Ok(3.5 * absorptive * column_prefactor(rho_a, line))
}

/// What the detector sees from the atoms: the relative phase φ between the
/// two components and the fractional beat amplitude loss ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatObservables {
    /// φ = θ(f₀+δf) − θ(f₀−δf) (rad).
    pub phase: f64,
    /// ε = α(f₀+δf) + α(f₀−δf).
    pub amplitude_loss: f64,
    /// Fraction of the light power scattered, 2ε.
    pub scattered_fraction: f64,
    /// Set when either component's α exceeds [`THIN_SAMPLE_LIMIT`].
    pub thin_sample_warning: bool,
}

/// Beat observables (φ, ε) for the two-component probe.
pub fn beat_observables(
    beat: &BeatConfig,
    rho_a: f64,
    b_field: f64,
    pol: Polarization,
    line: &AtomicLine,
) -> Result<BeatObservables> {
    let theta_hi = phase_shift(beat.upper(), rho_a, b_field, pol, line)?;
    let theta_lo = phase_shift(beat.lower(), rho_a, b_field, pol, line)?;
    let alpha_hi = attenuation(beat.upper(), rho_a, b_field, pol, line)?;
    let alpha_lo = attenuation(beat.lower(), rho_a, b_field, pol, line)?;
    let eps = alpha_hi + alpha_lo;
    Ok(BeatObservables {
        phase: theta_hi - theta_lo,
        amplitude_loss: eps,
        scattered_fraction: 2.0 * eps,
        thin_sample_warning: alpha_hi > THIN_SAMPLE_LIMIT || alpha_lo > THIN_SAMPLE_LIMIT,
    })
}

/// Total σ⁻ excitation probability per atom per incident photon,
/// ε₁ = λ²/(40πA)·[γ²/(γ²+δ₁₊²) + γ²/(γ²+δ₁₋²)], with δ₁± the σ⁻ detunings
/// of the two components.
pub fn sigma_minus_scatter_prob(
    beat: &BeatConfig,
    area: f64,
    b_field: f64,
    line: &AtomicLine,
) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidInput(format!("area must be > 0, got {area}")));
    }
    line.validate()?;
    let g2 = line.gamma * line.gamma;
    let f_sigma_minus = line.transition_frequency(2, 1, b_field);
    let dp = beat.upper() - f_sigma_minus;
    let dm = beat.lower() - f_sigma_minus;
    let lorentz = g2 / (g2 + dp * dp) + g2 / (g2 + dm * dm);
    // (7/2)·p₁S₁·3/(2π) with p₁ = 1/2, S₁ = 1/105 collapses to 1/(40π).
    let s1 = LINE_STRENGTHS[0];
    Ok(3.5 * 0.5 * s1 * lorentz * 3.0 * line.wavelength * line.wavelength
        / (2.0 * std::f64::consts::PI * area))
}

/// Phase shift per atom in the beam, φ₁: the beat phase evaluated at column
/// density 1/A.
pub fn phase_per_atom(
    beat: &BeatConfig,
    area: f64,
    b_field: f64,
    pol: Polarization,
    line: &AtomicLine,
) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidInput(format!("area must be > 0, got {area}")));
    }
    Ok(beat_observables(beat, 1.0 / area, b_field, pol, line)?.phase)
}
