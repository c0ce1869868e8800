//! Detection figure of merit: signal-to-noise per atom at 1/e survival,
//! FoM = |φ₁|/(X√(2ε₁s))·√η, its frequency scans and optimisation, and the
//! condensate extrapolation.
//!
//! The FoM depends only on the operating point (frequencies, field, beam
//! area, detector constants) — not on atom or photon numbers.

use crate::atomics::{AtomicLine, Polarization};
use crate::losses::{sigma_minus_loss_coefficient, RetentionRule};
use crate::photodetect::predicted_sigma_phi;
use crate::response::{phase_per_atom, sigma_minus_scatter_prob, BeatConfig, ProbeGeometry};
use crate::{Error, Result};

/// Which loss channel dominates the measurement back-action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regime {
    /// Thermal cloud: only σ⁻ pumping removes atoms.
    #[default]
    Thermal,
    /// Condensate: every spontaneous scatter is a loss, which raises q by
    /// the σ⁺:σ⁻ strength ratio plus one (16 by default).
    Condensate,
}

/// Operating point for the figure of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomConfig {
    /// Beat half-splitting δf (Hz); the components sit at f₀ ± δf.
    pub half_split: f64,
    /// Probe waist (m).
    pub waist: f64,
    /// Magnetic field (T).
    pub b_field: f64,
    /// Must be perpendicular; the FoM formula has no π analogue.
    pub polarization: Polarization,
    /// Avalanche excess noise factor X.
    pub excess_noise: f64,
    /// Detector quantum efficiency η = N/N_γ.
    pub quantum_efficiency: f64,
    pub regime: Regime,
    /// q scale factor applied in the condensate regime.
    pub condensate_q_scale: f64,
    /// Restore the √0.88 loss coefficient that the formula normally rounds
    /// to 1 (thermal regime only).
    pub include_loss_coefficient: bool,
    pub line: AtomicLine,
}

impl FomConfig {
    pub fn new(half_split: f64, waist: f64, b_field: f64) -> Result<Self> {
        let cfg = FomConfig {
            half_split,
            waist,
            b_field,
            polarization: Polarization::Perpendicular,
            excess_noise: 3.3,
            quantum_efficiency: 0.77,
            regime: Regime::Thermal,
            condensate_q_scale: 16.0,
            include_loss_coefficient: false,
            line: AtomicLine::rb87_d2(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.polarization.power_fractions() != [0.5, 0.0, 0.5] {
            return Err(Error::UnsupportedConfiguration(
                "the figure of merit is defined for perpendicular polarisation only".into(),
            ));
        }
        if !(self.waist > 0.0) || self.half_split == 0.0 {
            return Err(Error::InvalidInput(
                "waist must be positive and the beat splitting nonzero".into(),
            ));
        }
        if self.b_field < 0.0 {
            return Err(Error::InvalidInput("field must be >= 0".into()));
        }
        if self.excess_noise < 1.0 || !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::InvalidInput(
                "need X >= 1 and quantum efficiency in [0,1]".into(),
            ));
        }
        if !(self.condensate_q_scale > 0.0) {
            return Err(Error::InvalidInput(
                "condensate q scale must be positive".into(),
            ));
        }
        self.line.validate()
    }

    fn area(&self) -> f64 {
        ProbeGeometry::new(self.waist).expect("validated waist").area()
    }
}

/// Figure of merit at one centre frequency, with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomPoint {
    /// Beat centre frequency f₀ (Hz).
    pub f0: f64,
    /// FoM = |φ₁|/(X√(2ε₁s))·√η.
    pub value: f64,
    /// Phase shift per atom (rad).
    pub phi1: f64,
    /// σ⁻ excitations per atom per photon.
    pub eps1: f64,
    /// Effective q scale (1 thermal, condensate_q_scale otherwise).
    pub q_scale: f64,
    pub quantum_efficiency: f64,
}

/// Evaluate the figure of merit at centre frequency `f0`.
pub fn figure_of_merit(f0: f64, cfg: &FomConfig) -> Result<FomPoint> {
    cfg.validate()?;
    let beat = BeatConfig::new(f0, cfg.half_split)?;
    let area = cfg.area();
    let phi1 = phase_per_atom(&beat, area, cfg.b_field, cfg.polarization, &cfg.line)?;
    let eps1 = sigma_minus_scatter_prob(&beat, area, cfg.b_field, &cfg.line)?;
    let q_scale = match cfg.regime {
        Regime::Thermal => 1.0,
        Regime::Condensate => cfg.condensate_q_scale,
    };
    let loss_coeff = if cfg.include_loss_coefficient && cfg.regime == Regime::Thermal {
        sigma_minus_loss_coefficient(&RetentionRule::default())
    } else {
        1.0
    };
    let value = phi1.abs() / (cfg.excess_noise * (2.0 * eps1 * q_scale * loss_coeff).sqrt())
        * cfg.quantum_efficiency.sqrt();
    Ok(FomPoint {
        f0,
        value,
        phi1,
        eps1,
        q_scale,
        quantum_efficiency: cfg.quantum_efficiency,
    })
}

/// Pointwise [`figure_of_merit`] over a frequency grid.
pub fn fom_scan(f0_grid: &[f64], cfg: &FomConfig) -> Result<Vec<FomPoint>> {
    f0_grid.iter().map(|&f0| figure_of_merit(f0, cfg)).collect()
}

/// Result of a frequency optimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomOptimum {
    pub f0: f64,
    pub point: FomPoint,
    /// False when the maximum sat on a search boundary, i.e. the bounds did
    /// not bracket an interior maximum.
    pub interior_maximum: bool,
}

/// Deterministic maximisation of the FoM over f₀: a coarse grid to bracket
/// the global maximum, then golden-section refinement.
pub fn fom_optimize(cfg: &FomConfig, bounds: (f64, f64)) -> Result<FomOptimum> {
    let (lo, hi) = bounds;
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!(
            "bounds must satisfy lo < hi, got ({lo}, {hi})"
        )));
    }
    const COARSE: usize = 1024;
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=COARSE {
        let f0 = lo + (hi - lo) * i as f64 / COARSE as f64;
        let v = figure_of_merit(f0, cfg)?.value;
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    let interior = best_idx > 0 && best_idx < COARSE;
    let step = (hi - lo) / COARSE as f64;
    let mut a = lo + step * best_idx.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_idx + 1) as f64).min(hi);

    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = figure_of_merit(c, cfg)?.value;
    let mut fd = figure_of_merit(d, cfg)?.value;
    for _ in 0..200 {
        if (b - a).abs() < 1e-3 {
            break; // 1 mHz is far below any physical feature width
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = figure_of_merit(c, cfg)?.value;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = figure_of_merit(d, cfg)?.value;
        }
    }
    let f0 = 0.5 * (a + b);
    Ok(FomOptimum {
        f0,
        point: figure_of_merit(f0, cfg)?,
        interior_maximum: interior,
    })
}

/// Atom-number uncertainty σ_N = σ_φ/|φ₁| of a single pulse with N detected
/// photons. Returns +∞ when φ₁ = 0 (no signal at that operating point).
pub fn atom_number_uncertainty(phi1: f64, n: f64, excess_noise: f64, electronic_noise: f64) -> f64 {
    if phi1 == 0.0 {
        return f64::INFINITY;
    }
    predicted_sigma_phi(n, excess_noise, electronic_noise) / phi1.abs()
}

/// Local phase imprinted on a condensate by a probe pulse: (N_γ/N_a)·φ.
pub fn condensate_phase_imprint(n_gamma: f64, n_atoms: f64, phi: f64) -> Result<f64> {
    if !(n_atoms > 0.0) {
        return Err(Error::InvalidInput(format!(
            "atom number must be > 0, got {n_atoms}"
        )));
    }
    Ok(n_gamma / n_atoms * phi)
}
