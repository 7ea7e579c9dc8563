//! Stationary noise fields: analytic spectra and harmonic-sum realizations.
//!
//! Spectral densities are one-sided and paired with the autocorrelation by a
//! cosine transform,
//!
//! ```text
//! ⟨Ω_n(t) Ω_n(t′)⟩ = ∫₀^∞ S(ω) cos(ω (t − t′)) dω,
//! ```
//!
//! so `∫₀^∞ S(ω) dω` is the noise variance. A realization is a finite sum of
//! cosines, which keeps every time integral in closed form.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// How the phase of a single-tone field is chosen per realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseMode {
    /// Ω_n(t) = Ω_n0 sin(ω_N t + φ) with this φ.
    Fixed(f64),
    /// φ drawn uniformly from [0, 2π) for every realization.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Ω_n0 sin(ω_N t + φ).
    SingleTone { amplitude: f64, frequency: f64, phase: PhaseMode },
    /// S(ω) ∝ exp(−(ω−ω₀)²/(2σ²)).
    GaussianPsd { center: f64, sigma: f64, rms_amplitude: f64 },
    /// S(ω) ∝ (Γ/2)² / ((ω−ω₀)² + (Γ/2)²).
    LorentzianPsd { center: f64, fwhm: f64, rms_amplitude: f64 },
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {value}")))
    }
}

fn check_amplitude(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be non-negative, got {value}")))
    }
}

impl NoiseModel {
    pub fn single_tone(amplitude: f64, frequency: f64, phase: PhaseMode) -> Result<Self> {
        check_amplitude("amplitude", amplitude)?;
        check_positive("frequency", frequency)?;
        if let PhaseMode::Fixed(phi) = phase {
            if !phi.is_finite() {
                return Err(Error::param("phase", "must be finite"));
            }
        }
        Ok(NoiseModel::SingleTone { amplitude, frequency, phase })
    }

    pub fn gaussian(center: f64, sigma: f64, rms_amplitude: f64) -> Result<Self> {
        check_positive("center", center)?;
        check_positive("sigma", sigma)?;
        check_amplitude("rms_amplitude", rms_amplitude)?;
        Ok(NoiseModel::GaussianPsd { center, sigma, rms_amplitude })
    }

    pub fn lorentzian(center: f64, fwhm: f64, rms_amplitude: f64) -> Result<Self> {
        check_positive("center", center)?;
        check_positive("fwhm", fwhm)?;
        check_amplitude("rms_amplitude", rms_amplitude)?;
        Ok(NoiseModel::LorentzianPsd { center, fwhm, rms_amplitude })
    }

    /// Standard deviation of Ω_n(t) (for a single tone, over the random phase).
    pub fn rms_amplitude(&self) -> f64 {
        match *self {
            NoiseModel::SingleTone { amplitude, .. } => amplitude / 2f64.sqrt(),
            NoiseModel::GaussianPsd { rms_amplitude, .. }
            | NoiseModel::LorentzianPsd { rms_amplitude, .. } => rms_amplitude,
        }
    }

    pub fn is_line_spectrum(&self) -> bool {
        matches!(self, NoiseModel::SingleTone { .. })
    }

    /// Same shape with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = *self;
        match &mut m {
            NoiseModel::SingleTone { amplitude, .. } => *amplitude *= factor,
            NoiseModel::GaussianPsd { rms_amplitude, .. }
            | NoiseModel::LorentzianPsd { rms_amplitude, .. } => *rms_amplitude *= factor,
        }
        m
    }

    // Peak value C of the density, fixed by ∫₀^∞ S = rms².
    fn peak_density(&self) -> f64 {
        match *self {
            NoiseModel::SingleTone { .. } => f64::INFINITY,
            NoiseModel::GaussianPsd { center, sigma, rms_amplitude } => {
                let mass = sigma * (PI / 2.0).sqrt() * (1.0 + libm::erf(center / (sigma * 2f64.sqrt())));
                rms_amplitude * rms_amplitude / mass
            }
            NoiseModel::LorentzianPsd { center, fwhm, rms_amplitude } => {
                let half = 0.5 * fwhm;
                let mass = half * (FRAC_PI_2 + (center / half).atan());
                rms_amplitude * rms_amplitude / mass
            }
        }
    }

    // S(ω) for ω ≥ 0 without argument checks.
    fn density(&self, omega: f64) -> f64 {
        match *self {
            NoiseModel::SingleTone { .. } => 0.0,
            NoiseModel::GaussianPsd { center, sigma, .. } => {
                let z = (omega - center) / sigma;
                self.peak_density() * (-0.5 * z * z).exp()
            }
            NoiseModel::LorentzianPsd { center, fwhm, .. } => {
                let half = 0.5 * fwhm;
                let d = omega - center;
                self.peak_density() * half * half / (d * d + half * half)
            }
        }
    }
}

/// One-sided spectral density S(ω) in (rad/s)² per rad/s.
pub fn psd_value(model: &NoiseModel, omega: f64) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::NegativeFrequency(omega));
    }
    if model.is_line_spectrum() {
        return Err(Error::LineSpectrum);
    }
    Ok(model.density(omega))
}

/// Evaluates S on every point of `omegas`; zeros for a line spectrum.
pub fn psd_on_grid(model: &NoiseModel, omegas: &[f64]) -> Vec<f64> {
    omegas.iter().map(|&w| model.density(w.max(0.0))).collect()
}

/// One component a·cos(ωt + φ) of a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub frequency: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Ω_n(t) = Σ_m a_m cos(ω_m t + φ_m).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    tones: Vec<Tone>,
}

impl NoiseRealization {
    pub fn new(tones: Vec<Tone>) -> Result<Self> {
        if tones.is_empty() {
            return Err(Error::param("tones", "need at least one tone"));
        }
        for t in &tones {
            check_positive("frequency", t.frequency)?;
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::param("tones", "amplitude and phase must be finite"));
            }
        }
        Ok(Self { tones })
    }

    /// A realization that is identically zero.
    pub fn silent() -> Self {
        Self { tones: vec![Tone { frequency: 1.0, amplitude: 0.0, phase: 0.0 }] }
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.tones.iter().map(|m| m.amplitude * (m.frequency * t + m.phase).cos()).sum()
    }

    /// Antiderivative Σ (a/ω) sin(ωt + φ).
    pub fn antiderivative(&self, t: f64) -> f64 {
        self.tones.iter().map(|m| m.amplitude / m.frequency * (m.frequency * t + m.phase).sin()).sum()
    }

    /// Integrals over the N consecutive intervals [(j−1)τ, jτ], j = 1..N.
    pub fn interval_integrals(&self, tau: f64, n: usize) -> Vec<f64> {
        let boundaries: Vec<f64> = (0..=n).map(|j| self.antiderivative(j as f64 * tau)).collect();
        boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// ∫_{t0}^{t1} Ω_n(t) dt in closed form.
pub fn noise_integral(r: &NoiseRealization, t0: f64, t1: f64) -> f64 {
    if t0 == t1 {
        return 0.0;
    }
    r.tones
        .iter()
        .map(|m| {
            m.amplitude / m.frequency
                * ((m.frequency * t1 + m.phase).sin() - (m.frequency * t0 + m.phase).sin())
        })
        .sum()
}

/// Draws one realization; deterministic in `rng_seed`.
///
/// Broadband models put `m_tones` tones at the midpoints of a uniform grid
/// over `band` with amplitudes √(2 S(ω_m) Δω) and independent uniform phases.
/// A single tone ignores `m_tones` and `band`.
pub fn sample_realization(
    model: &NoiseModel,
    m_tones: usize,
    band: (f64, f64),
    rng_seed: u64,
) -> Result<NoiseRealization> {
    let (lo, hi) = band;
    if !(lo < hi) || lo < 0.0 || !hi.is_finite() {
        return Err(Error::EmptyBand { lo, hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match *model {
        NoiseModel::SingleTone { amplitude, frequency, phase } => {
            let phi = match phase {
                PhaseMode::Fixed(phi) => phi,
                PhaseMode::UniformRandom => rng.gen::<f64>() * TAU,
            };
            // sin(x) = cos(x − π/2)
            NoiseRealization::new(vec![Tone { frequency, amplitude, phase: phi - FRAC_PI_2 }])
        }
        _ => {
            if m_tones == 0 {
                return Err(Error::param("m_tones", "must be at least 1"));
            }
            let step = (hi - lo) / m_tones as f64;
            let tones = (0..m_tones)
                .map(|m| {
                    let frequency = lo + (m as f64 + 0.5) * step;
                    Tone {
                        frequency,
                        amplitude: (2.0 * model.density(frequency) * step).sqrt(),
                        phase: rng.gen::<f64>() * TAU,
                    }
                })
                .collect();
            NoiseRealization::new(tones)
        }
    }
}

/// Ensemble autocorrelation ⟨Ω_n(t) Ω_n(t + dt)⟩ of the model.
///
/// Exact for a single tone; broadband models use adaptive quadrature of the
/// cosine transform with relative tolerance 1e-8.
pub fn autocorrelation(model: &NoiseModel, dt: f64) -> Result<f64> {
    let lag = dt.abs();
    match *model {
        NoiseModel::SingleTone { amplitude, frequency, .. } => {
            Ok(0.5 * amplitude * amplitude * (frequency * lag).cos())
        }
        _ if lag == 0.0 || model.rms_amplitude() == 0.0 => Ok(model.rms_amplitude().powi(2)),
        NoiseModel::GaussianPsd { center, sigma, .. } => {
            let lo = (center - 40.0 * sigma).max(0.0);
            let hi = center + 40.0 * sigma;
            cosine_transform(model, lo, hi, lag)
        }
        NoiseModel::LorentzianPsd { center, fwhm, .. } => {
            // Beyond U the monotone tail contributes at most 2 S(U) / dt.
            let scale = model.rms_amplitude().powi(2);
            let half = 0.5 * fwhm;
            let target = 1e-10 * scale;
            let offset = (2.0 * model.peak_density() * half * half / (lag * target)).sqrt();
            let upper = center + offset.clamp(50.0 * fwhm, 1e5 * fwhm);
            cosine_transform(model, 0.0, upper, lag)
        }
    }
}

fn cosine_transform(model: &NoiseModel, lo: f64, hi: f64, lag: f64) -> Result<f64> {
    let scale = model.rms_amplitude().powi(2);
    let tol = Tolerance::relative(1e-8).with_absolute(1e-10 * scale);
    let cycles = ((hi - lo) * lag / TAU).ceil() as usize;
    let panels = (2 * cycles).clamp(16, 400_000);
    let est = integrate(|w| model.density(w) * (w * lag).cos(), lo, hi, panels, tol)?;
    Ok(est.value)
}
