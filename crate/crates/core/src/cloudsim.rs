//! Trapped thermal-cloud geometry: Gaussian radii from equipartition, the
//! beam-weighted column density seen by an offset probe, the fraction of
//! atoms inside the probe beam, and the centre-of-mass oscillation.
//!
//! The probe axis is perpendicular to the oscillation axis, so a single 1-D
//! offset along the oscillation direction modulates the column density.

use crate::constants::{BOLTZMANN, RB87_MASS};
use crate::{Error, Result};

/// Harmonic magnetic trap parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    /// Radial trap frequency (Hz).
    pub radial_freq: f64,
    /// Axial trap frequency (Hz).
    pub axial_freq: f64,
    /// Magnetic field at the trap minimum (T).
    pub field_minimum: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig {
            radial_freq: 75.0,
            axial_freq: 21.0,
            field_minimum: 0.6e-3,
        }
    }
}

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radial_freq > 0.0) || !(self.axial_freq > 0.0) {
            return Err(Error::InvalidInput(
                "trap frequencies must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Damped centre-of-mass oscillation along the axial direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComTrajectory {
    /// Oscillation amplitude x₀ (m).
    pub amplitude: f64,
    /// Oscillation frequency (Hz).
    pub frequency: f64,
    /// 1/e damping time τ (s); `f64::INFINITY` for an undamped oscillation.
    pub damping_time: f64,
    /// Initial phase ψ (rad).
    pub phase: f64,
}

impl Default for ComTrajectory {
    fn default() -> Self {
        ComTrajectory {
            amplitude: 0.0,
            frequency: 21.0,
            damping_time: f64::INFINITY,
            phase: 0.0,
        }
    }
}

/// A trapped thermal cloud with its Gaussian radii fixed by equipartition,
/// σ_i = √(k_B T/m)/(2π f_i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudState {
    pub atom_count: f64,
    /// Temperature (K).
    pub temperature: f64,
    pub trap: TrapConfig,
    /// Gaussian radius along the radial directions (m).
    pub sigma_radial: f64,
    /// Gaussian radius along the axial direction (m).
    pub sigma_axial: f64,
    pub com: ComTrajectory,
}

impl CloudState {
    /// Thermal cloud in the given trap; the paper's cloud is the default:
    /// 2.4 × 10⁶ atoms at 60 µK.
    pub fn thermal(
        atom_count: f64,
        temperature: f64,
        trap: TrapConfig,
        com: ComTrajectory,
    ) -> Result<Self> {
        trap.validate()?;
        if !(atom_count >= 0.0) || !(temperature > 0.0) {
            return Err(Error::InvalidInput(
                "atom count must be >= 0 and temperature > 0".into(),
            ));
        }
        let thermal_velocity = (BOLTZMANN * temperature / RB87_MASS).sqrt();
        Ok(CloudState {
            atom_count,
            temperature,
            trap,
            sigma_radial: thermal_velocity / (2.0 * std::f64::consts::PI * trap.radial_freq),
            sigma_axial: thermal_velocity / (2.0 * std::f64::consts::PI * trap.axial_freq),
            com,
        })
    }

    pub fn default_cloud() -> Self {
        Self::thermal(2.4e6, 60e-6, TrapConfig::default(), ComTrajectory::default())
            .expect("default cloud")
    }
}

/// Beam-weighted column density at a probe displaced by `offset` along the
/// oscillation (axial) axis:
/// ρ_a = N/(2π σ_ax σ_r) · exp(−offset²/(2σ_ax² + w²/2)).
pub fn column_density(cloud: &CloudState, offset: f64, waist: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::InvalidInput(format!(
            "waist must be > 0, got {waist}"
        )));
    }
    let peak =
        cloud.atom_count / (2.0 * std::f64::consts::PI * cloud.sigma_axial * cloud.sigma_radial);
    let width_sq = 2.0 * cloud.sigma_axial * cloud.sigma_axial + 0.5 * waist * waist;
    Ok(peak * (-offset * offset / width_sq).exp())
}

/// Centre-of-mass displacement x(t) = x₀·e^{−t/τ}·cos(2πft + ψ).
pub fn com_offset(t: f64, cloud: &CloudState) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be >= 0, got {t}")));
    }
    let com = &cloud.com;
    let envelope = if com.damping_time.is_finite() {
        (-t / com.damping_time).exp()
    } else {
        1.0
    };
    Ok(com.amplitude
        * envelope
        * (2.0 * std::f64::consts::PI * com.frequency * t + com.phase).cos())
}

/// Fraction of the cloud's atoms seen by the probe: the intensity-weighted
/// 2-D Gaussian overlap of the beam (peak-normalised, 1/e² radius w) with
/// the cloud's transverse distribution, so that `q · p` is the expected
/// per-pulse loss fraction of the whole cloud.
pub fn fraction_in_probe(cloud: &CloudState, waist: f64, offset: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::InvalidInput(format!(
            "waist must be > 0, got {waist}"
        )));
    }
    let w2_4 = 0.25 * waist * waist;
    let overlap = |sigma: f64| (w2_4 / (sigma * sigma + w2_4)).sqrt();
    let axial = overlap(cloud.sigma_axial)
        * (-offset * offset / (2.0 * (cloud.sigma_axial * cloud.sigma_axial + w2_4))).exp();
    Ok(axial * overlap(cloud.sigma_radial))
}
