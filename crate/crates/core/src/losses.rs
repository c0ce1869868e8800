//! Optical-pumping loss during probing.
//!
//! Atoms start in the strongly trapped |m=2⟩ state. Scattering on the σ⁻ and
//! π transitions pumps population towards weakly trapped and untrapped
//! sublevels; the rate equations here follow the ground-state populations
//! through one probe pulse with the excited states adiabatically eliminated.
//! Multi-pulse survival uses the replacement model (1 − q·p)^k, where q is
//! the per-pulse loss fraction inside the beam and p the fraction of atoms
//! in the beam.

use once_cell::sync::Lazy;

use crate::atomics::{branching_ratios, wigner_3j_sq, AtomicLine, BranchingRatios, Polarization};
use crate::response::{sigma_minus_scatter_prob, BeatConfig};
use crate::{Error, Result};

/// Target per-RK4-step scattering probability for the integrator.
const STEP_PROBABILITY: f64 = 1e-3;
/// Refuse configurations that would need more steps than this.
const MAX_STEPS: usize = 20_000_000;

/// simple_q is flagged as unreliable above this many σ⁻ excitations/atom.
pub const SIMPLE_Q_VALIDITY_LIMIT: f64 = 0.2;

/// Ground- and excited-sublevel occupations. With the excited manifold
/// adiabatically eliminated the `excited` entries stay zero; they are kept
/// so populations always account for the whole level scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublevelPopulations {
    /// Ground |F=2,m⟩ populations, indexed by m + 2 (m = −2..2).
    pub ground: [f64; 5],
    /// Excited |F'=3,m'⟩ populations, indexed by m' − 1 (m' = 1..3).
    pub excited: [f64; 3],
}

impl SublevelPopulations {
    /// Everything in |m=2⟩.
    pub fn pure_stretched() -> Self {
        SublevelPopulations {
            ground: [0.0, 0.0, 0.0, 0.0, 1.0],
            excited: [0.0; 3],
        }
    }

    pub fn ground_population(&self, m: i32) -> f64 {
        self.ground[(m + 2) as usize]
    }

    pub fn total(&self) -> f64 {
        self.ground.iter().sum::<f64>() + self.excited.iter().sum::<f64>()
    }
}

/// Probability that an atom left in ground state m is still trapped when
/// the pulse is over: m=2 is safe, m=1 mostly escapes, m ≤ 0 is untrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionRule {
    /// Retention probability per ground state, indexed by m + 2.
    pub retention: [f64; 5],
}

impl Default for RetentionRule {
    fn default() -> Self {
        RetentionRule {
            retention: [0.0, 0.0, 0.0, 0.1, 1.0],
        }
    }
}

impl RetentionRule {
    pub fn probability(&self, m: i32) -> f64 {
        self.retention[(m + 2) as usize]
    }

    pub fn validate(&self) -> Result<()> {
        if self.retention.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidInput(
                "retention probabilities must be in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

/// One probe pulse as seen by the pumping model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPulse {
    pub beat: BeatConfig,
    pub polarization: Polarization,
    /// Magnetic field (T).
    pub b_field: f64,
    /// Incident photons per pulse, N_γ.
    pub photons: f64,
    /// Pulse duration (s).
    pub duration: f64,
    /// Beam area A = ½πw² (m²).
    pub area: f64,
    pub line: AtomicLine,
}

/// General |2,m⟩→|3,m'⟩ squared 3j strengths, rows m = −2..2, columns
/// m' = 1..3. Closed channels are zero.
static GENERAL_STRENGTHS: Lazy<[[f64; 3]; 5]> = Lazy::new(|| {
    let mut table = [[0.0; 3]; 5];
    for m in -2..=2i32 {
        for m_prime in 1..=3i32 {
            let q = m_prime - m;
            if q.abs() <= 1 {
                table[(m + 2) as usize][(m_prime - 1) as usize] =
                    wigner_3j_sq(6, 2, 4, -2 * m_prime, 2 * q, 2 * m).expect("strength");
            }
        }
    }
    table
});

static BRANCHING: Lazy<[BranchingRatios; 3]> = Lazy::new(|| {
    [
        branching_ratios(1).expect("branching m'=1"),
        branching_ratios(2).expect("branching m'=2"),
        branching_ratios(3).expect("branching m'=3"),
    ]
});

/// 5×5 generator matrix for the ground populations: excitation at the
/// per-channel scattering rate, immediate redistribution by the branching
/// ratios. Entry [to][from], in 1/s.
fn pump_generator(pulse: &PumpPulse) -> Result<[[f64; 5]; 5]> {
    pulse.polarization.validate()?;
    pulse.line.validate()?;
    if pulse.b_field < 0.0 || pulse.photons < 0.0 {
        return Err(Error::InvalidInput(
            "field and photon number must be non-negative".into(),
        ));
    }
    if !(pulse.duration > 0.0) || !(pulse.area > 0.0) {
        return Err(Error::InvalidInput(
            "pulse duration and beam area must be positive".into(),
        ));
    }

    let p = pulse.polarization.power_fractions();
    let lam = pulse.line.wavelength;
    let gamma2 = pulse.line.gamma * pulse.line.gamma;
    let photon_flux_factor = pulse.photons / pulse.duration * 3.5 * 3.0 * lam * lam
        / (2.0 * std::f64::consts::PI * pulse.area);

    let mut gen = [[0.0; 5]; 5];
    for m in -2..=2i32 {
        let from = (m + 2) as usize;
        for m_prime in 1..=3i32 {
            let q = m_prime - m;
            if q.abs() > 1 {
                continue;
            }
            let fraction = p[(q + 1) as usize];
            let strength = GENERAL_STRENGTHS[from][(m_prime - 1) as usize];
            if fraction == 0.0 || strength == 0.0 {
                continue;
            }
            let f_transition = pulse.line.transition_frequency(m, m_prime, pulse.b_field);
            let mut rate = 0.0;
            for f in [pulse.beat.upper(), pulse.beat.lower()] {
                let delta = f - f_transition;
                rate += photon_flux_factor * fraction * strength * gamma2
                    / (delta * delta + gamma2);
            }
            gen[from][from] -= rate;
            for &(m_to, b) in BRANCHING[(m_prime - 1) as usize].channels() {
                gen[(m_to + 2) as usize][from] += rate * b;
            }
        }
    }
    Ok(gen)
}

/// Integrate the pumping rate equations over one pulse starting from a pure
/// |m=2⟩ population. Fixed-step RK4 with the step chosen so the per-step
/// scattering probability stays below 10⁻³.
pub fn pump_rate_equations(pulse: &PumpPulse) -> Result<SublevelPopulations> {
    let gen = pump_generator(pulse)?;

    let max_rate = (0..5)
        .map(|m| -gen[m][m])
        .fold(0.0f64, f64::max);
    let steps = ((max_rate * pulse.duration / STEP_PROBABILITY).ceil() as usize).max(16);
    if steps > MAX_STEPS {
        return Err(Error::Numerical(format!(
            "rate integrator needs {steps} steps (max rate {max_rate:.3e}/s over {:.3e}s); \
             the low-saturation model is not meaningful here",
            pulse.duration
        )));
    }
    let dt = pulse.duration / steps as f64;

    let matvec = |v: &[f64; 5]| -> [f64; 5] {
        let mut out = [0.0; 5];
        for (to, row) in gen.iter().enumerate() {
            out[to] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        out
    };

    let mut pop = [0.0, 0.0, 0.0, 0.0, 1.0f64];
    for _ in 0..steps {
        let k1 = matvec(&pop);
        let mut tmp = pop;
        for i in 0..5 {
            tmp[i] = pop[i] + 0.5 * dt * k1[i];
        }
        let k2 = matvec(&tmp);
        for i in 0..5 {
            tmp[i] = pop[i] + 0.5 * dt * k2[i];
        }
        let k3 = matvec(&tmp);
        for i in 0..5 {
            tmp[i] = pop[i] + dt * k3[i];
        }
        let k4 = matvec(&tmp);
        for i in 0..5 {
            pop[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    let total: f64 = pop.iter().sum();
    if !(0.999999..=1.000001).contains(&total) || pop.iter().any(|&x| x < -1e-9) {
        return Err(Error::Numerical(format!(
            "rate integrator lost population conservation: total {total}, populations {pop:?}"
        )));
    }

    Ok(SublevelPopulations {
        ground: pop,
        excited: [0.0; 3],
    })
}

/// Per-pulse loss fraction q = 1 − Σ_m pop(m) · retention(m).
pub fn pulse_loss_fraction(pop: &SublevelPopulations, rule: &RetentionRule) -> f64 {
    let kept: f64 = pop
        .ground
        .iter()
        .zip(rule.retention.iter())
        .map(|(p, r)| p * r)
        .sum();
    1.0 - kept
}

/// Loss per σ⁻ excitation implied by the branching ratios and a retention
/// rule: Σ_m b_{1→m}(1 − retention(m)). With the default rule this is
/// 0.40 + 0.9·0.53 ≈ 0.88.
pub fn sigma_minus_loss_coefficient(rule: &RetentionRule) -> f64 {
    BRANCHING[0]
        .channels()
        .iter()
        .map(|&(m, b)| b * (1.0 - rule.probability(m)))
        .sum()
}

static DEFAULT_LOSS_COEFFICIENT: Lazy<f64> =
    Lazy::new(|| sigma_minus_loss_coefficient(&RetentionRule::default()));

/// Simplified per-pulse loss fraction for perpendicular polarisation,
/// q = 0.88·ε₁·N_γ.
///
/// Valid while ε₁·N_γ ≪ 1; check [`simple_q_valid`].
pub fn simple_q(eps1: f64, n_gamma: f64) -> f64 {
    *DEFAULT_LOSS_COEFFICIENT * eps1 * n_gamma
}

/// True when the first-order expansion behind `simple_q` is trustworthy.
pub fn simple_q_valid(eps1: f64, n_gamma: f64) -> bool {
    eps1 * n_gamma <= SIMPLE_Q_VALIDITY_LIMIT
}

/// Fraction of trapped atoms surviving k pulses, (1 − q·p)^k. Assumes the
/// probe-region atoms are replaced between pulses.
pub fn survival(pulses: u32, q: f64, p: f64) -> Result<f64> {
    let qp = q * p;
    if !(0.0..=1.0).contains(&qp) {
        return Err(Error::InvalidInput(format!(
            "q*p must be in [0,1], got {qp}"
        )));
    }
    Ok((1.0 - qp).powi(pulses as i32))
}

/// One point of the loss spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossScanPoint {
    /// Beat centre frequency (Hz).
    pub f0: f64,
    /// Rate-equation per-pulse loss fraction.
    pub q_rate: f64,
    /// Surviving fraction after the pulse train, rate-equation q.
    pub survival_rate: f64,
    /// Eq.-(5)-style loss fraction; perpendicular polarisation only.
    pub q_simple: Option<f64>,
    /// Surviving fraction from the simple model.
    pub survival_simple: Option<f64>,
}

/// Survival spectrum over a grid of beat centre frequencies: rate-equation
/// q → (1−qp)^k per point, with the simple-model curve alongside for
/// perpendicular polarisation.
pub fn loss_spectrum(
    f0_grid: &[f64],
    pulse: &PumpPulse,
    pulses: u32,
    probe_fraction: f64,
    rule: &RetentionRule,
) -> Result<Vec<LossScanPoint>> {
    rule.validate()?;
    if !(0.0..=1.0).contains(&probe_fraction) {
        return Err(Error::InvalidInput(format!(
            "probe fraction must be in [0,1], got {probe_fraction}"
        )));
    }
    let emit_simple = pulse.polarization == Polarization::Perpendicular;
    let mut out = Vec::with_capacity(f0_grid.len());
    for &f0 in f0_grid {
        let mut point_pulse = *pulse;
        point_pulse.beat.center = f0;
        let pops = pump_rate_equations(&point_pulse)?;
        let q_rate = pulse_loss_fraction(&pops, rule);
        let survival_rate = survival(pulses, q_rate.clamp(0.0, 1.0), probe_fraction)?;
        let (q_simple, survival_simple) = if emit_simple {
            let eps1 = sigma_minus_scatter_prob(
                &point_pulse.beat,
                point_pulse.area,
                point_pulse.b_field,
                &point_pulse.line,
            )?;
            let q = simple_q(eps1, point_pulse.photons);
            (
                Some(q),
                Some(survival(pulses, q.clamp(0.0, 1.0), probe_fraction)?),
            )
        } else {
            (None, None)
        };
        out.push(LossScanPoint {
            f0,
            q_rate,
            survival_rate,
            q_simple,
            survival_simple,
        });
    }
    Ok(out)
}
