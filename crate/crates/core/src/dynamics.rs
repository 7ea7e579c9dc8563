//! Survival of the probe under N projective measurements.
//!
//! The field couples through σ_x, so the propagators at different times
//! commute and each interval j is a pure rotation by the accumulated phase
//! α_j = ∫ (Ω_c + Ω_n) dt. The interval survives with probability cos²α_j.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::noise::{noise_integral, NoiseRealization};
use crate::protocol::ControlWaveform;

/// Accumulated phases α_1..α_N in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSequence {
    alphas: Vec<f64>,
}

impl AlphaSequence {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("accumulated phase is not finite".into()));
        }
        Ok(Self { alphas })
    }

    pub fn values(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.alphas.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

fn check_length(control: &ControlWaveform, n: usize) -> Result<()> {
    if control.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: control.len() });
    }
    Ok(())
}

/// α_j = Ω_c,j τ + ∫_{(j−1)τ}^{jτ} Ω_n dt for j = 1..n.
///
/// `tau` is the interval length actually simulated; it may differ from the
/// waveform's nominal τ (e.g. to model finite measurement pulses).
pub fn alphas(
    control: &ControlWaveform,
    noise: &NoiseRealization,
    n: usize,
    tau: f64,
) -> Result<AlphaSequence> {
    check_length(control, n)?;
    let noise_part = noise.interval_integrals(tau, n);
    AlphaSequence::new(control.interval_values().iter().zip(noise_part).map(|(c, x)| c * tau + x).collect())
}

/// P = Π cos²α_j.
pub fn survival_probability(a: &AlphaSequence) -> f64 {
    a.alphas.iter().map(|x| x.cos().powi(2)).product()
}

/// The weak-Zeno factors of exp(−Σα²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorized {
    /// exp(−Σ c_j²), control only.
    pub p_c: f64,
    /// exp(−Σ n_j²), noise only.
    pub p_n: f64,
    /// exp(−2 Σ c_j n_j), the cross term; may exceed 1.
    pub p_cn: f64,
}

impl Factorized {
    pub fn product(&self) -> f64 {
        self.p_c * self.p_n * self.p_cn
    }
}

/// P_c, P_n and P_cn from exact per-interval integrals.
pub fn factorized_probabilities(
    control: &ControlWaveform,
    noise: &NoiseRealization,
    n: usize,
    tau: f64,
) -> Result<Factorized> {
    check_length(control, n)?;
    let noise_part = noise.interval_integrals(tau, n);
    let mut sum_cc = 0.0;
    let mut sum_nn = 0.0;
    let mut sum_cn = 0.0;
    for (c, x) in control.interval_values().iter().zip(&noise_part) {
        let c = c * tau;
        sum_cc += c * c;
        sum_nn += x * x;
        sum_cn += c * x;
    }
    Ok(Factorized { p_c: (-sum_cc).exp(), p_n: (-sum_nn).exp(), p_cn: (-2.0 * sum_cn).exp() })
}

/// One simulated run of the protocol at a given τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalRecord {
    pub p: f64,
    pub p_c: f64,
    pub p_n: f64,
    pub p_cn: f64,
    pub tau: f64,
    pub realization_seed: u64,
}

impl SurvivalRecord {
    /// Runs the exact and factorized evaluations for one realization.
    ///
    /// Returns the record and the largest |α_j| seen.
    pub fn simulate(
        control: &ControlWaveform,
        noise: &NoiseRealization,
        tau: f64,
        realization_seed: u64,
    ) -> Result<(Self, f64)> {
        let n = control.len();
        let a = alphas(control, noise, n, tau)?;
        let f = factorized_probabilities(control, noise, n, tau)?;
        let record = SurvivalRecord {
            p: survival_probability(&a),
            p_c: f.p_c,
            p_n: f.p_n,
            p_cn: f.p_cn,
            tau,
            realization_seed,
        };
        Ok((record, a.max_abs()))
    }
}

/// State-vector evolution with a projection onto |0⟩ after every interval.
///
/// Each interval is cut into `substeps` slices and each slice applies the
/// exact rotation exp(−iθσ_x), θ being the phase accumulated in the slice.
/// Because the generators commute the result must not depend on `substeps`.
pub fn unitary_oracle(
    control: &ControlWaveform,
    noise: &NoiseRealization,
    n: usize,
    tau: f64,
    substeps: usize,
) -> Result<f64> {
    check_length(control, n)?;
    if substeps == 0 {
        return Err(Error::param("substeps", "must be at least 1"));
    }
    let h = tau / substeps as f64;
    let mut survival = 1.0;
    for (j, &omega_c) in control.interval_values().iter().enumerate() {
        let start = j as f64 * tau;
        let mut up = Complex::new(1.0, 0.0);
        let mut down = Complex::new(0.0, 0.0);
        for s in 0..substeps {
            let t0 = start + s as f64 * h;
            let t1 = if s + 1 == substeps { start + tau } else { t0 + h };
            let theta = omega_c * (t1 - t0) + noise_integral(noise, t0, t1);
            let (sin, cos) = theta.sin_cos();
            let minus_i_sin = Complex::new(0.0, -sin);
            (up, down) = (up * cos + down * minus_i_sin, up * minus_i_sin + down * cos);
        }
        survival *= up.norm_sqr();
        if survival == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(survival)
}
