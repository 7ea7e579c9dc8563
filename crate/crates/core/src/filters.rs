//! Filter functions of the control and the theoretical second-order statistic.
//!
//! The effective control is the step function whose value on interval j is
//! the phase c_j the control imprints there. Its Fourier weight
//!
//! ```text
//! F(ω) = |Σ_j c_j e^{−iω(j−1)τ}|² · 4 sin²(ωτ/2) / ω²
//! ```
//!
//! is the filter through which the probe sees the noise:
//! χ = ∫₀^∞ S(ω) F(ω) dω with the one-sided cosine-transform convention of
//! [`crate::noise`]. Under that convention no extra constant appears in
//! either F or the single-tone closed form, and χ equals Var(Σ_j c_j n_j),
//! i.e. ¼⟨ln² P_cn⟩.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::protocol::{square_wave_control, ControlWaveform, TauGrid};
use crate::quadrature::{integrate, trapezoid_uniform, Tolerance};

/// Per-interval control phases c_j = ∫ Ω_c over interval j.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveControl {
    values: Vec<f64>,
    tau: f64,
}

impl EffectiveControl {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total duration Nτ.
    pub fn duration(&self) -> f64 {
        self.tau * self.values.len() as f64
    }
}

/// Integrates the piecewise-constant control over each interval.
pub fn effective_control(control: &ControlWaveform) -> EffectiveControl {
    let tau = control.tau();
    EffectiveControl { values: control.interval_values().iter().map(|v| v * tau).collect(), tau }
}

/// F(ω) in rad²·s². Even in ω; ω = 0 gives the limit τ²(Σc_j)².
pub fn filter_function(ec: &EffectiveControl, omega: f64) -> f64 {
    let omega = omega.abs();
    let tau = ec.tau;
    if omega * tau < 1e-8 {
        let sum: f64 = ec.values.iter().sum();
        return tau * tau * sum * sum;
    }
    // Σ c_j e^{−iω(j−1)τ} by rotating a unit phasor
    let (s, c) = (omega * tau).sin_cos();
    let (mut re, mut im) = (0.0, 0.0);
    let (mut pr, mut pi) = (1.0, 0.0);
    for (j, v) in ec.values.iter().enumerate() {
        if j % 64 == 0 {
            // refresh to keep rounding from accumulating on long sequences
            let (ps, pc) = (omega * tau * j as f64).sin_cos();
            pr = pc;
            pi = -ps;
        }
        re += v * pr;
        im += v * pi;
        (pr, pi) = (pr * c + pi * s, pi * c - pr * s);
    }
    let window = 2.0 * (0.5 * omega * tau).sin() / omega;
    (re * re + im * im) * window * window
}

/// Default upper limit for [`chi_theory`]: 2π × 2 MHz.
pub const DEFAULT_OMEGA_CUT: f64 = TAU * 2e6;

/// χ = ∫₀^{ω_cut} S(ω) F(ω) dω, the expected ¼⟨ln² P_cn⟩.
///
/// A single tone has a line spectrum and gives (Ω_n0²/2) F(ω_N) exactly;
/// broadband models use adaptive quadrature to relative tolerance 1e-6.
pub fn chi_theory(model: &NoiseModel, ec: &EffectiveControl, omega_cut: f64) -> Result<f64> {
    if let NoiseModel::SingleTone { amplitude, frequency, .. } = *model {
        return Ok(0.5 * amplitude * amplitude * filter_function(ec, frequency));
    }
    if !(omega_cut > 0.0) {
        return Err(Error::param("omega_cut", format!("must be positive, got {omega_cut}")));
    }
    if model.rms_amplitude() == 0.0 || ec.values.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    // one panel per lobe of the sequence factor, which has width ~2π/(Nτ)
    let lobes = (omega_cut * ec.duration() / TAU).ceil() as usize;
    let panels = (2 * lobes).clamp(16, 100_000);
    let est = integrate(
        |w| crate::noise::psd_on_grid(model, &[w])[0] * filter_function(ec, w),
        0.0,
        omega_cut,
        panels,
        Tolerance::relative(1e-6).with_absolute(1e-300),
    )?;
    Ok(est.value)
}

/// Uniform grid of angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn uniform(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo >= 0.0) || !(lo < hi) || !hi.is_finite() {
            return Err(Error::EmptyBand { lo, hi });
        }
        if points < 2 {
            return Err(Error::param("grid_points", format!("need at least 2, got {points}")));
        }
        let step = (hi - lo) / (points - 1) as f64;
        let mut omegas: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        omegas[points - 1] = hi;
        Ok(Self { omegas })
    }

    /// 2001 points on [2π×100, 2π×300] kHz.
    pub fn default_band() -> Self {
        Self::uniform(TAU * 100e3, TAU * 300e3, 2001).expect("valid default band")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.omegas[0]
    }

    pub fn hi(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    pub fn step(&self) -> f64 {
        (self.hi() - self.lo()) / (self.omegas.len() - 1) as f64
    }

    /// Trapezoid ∫ f g over the grid.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check(f.len())?;
        self.check(g.len())?;
        let prod: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        Ok(trapezoid_uniform(&prod, self.step()))
    }

    pub(crate) fn check(&self, len: usize) -> Result<()> {
        if len != self.omegas.len() {
            return Err(Error::GridMismatch(format!(
                "row has {len} samples, grid has {}",
                self.omegas.len()
            )));
        }
        Ok(())
    }
}

/// Filters F_k sampled on a shared grid, one per τ_k, with their overlaps.
#[derive(Debug, Clone)]
pub struct FilterBank {
    controls: Vec<ControlWaveform>,
    taus: Vec<f64>,
    grid: FrequencyGrid,
    filters: Vec<Vec<f64>>,
    overlap: DMatrix<f64>,
}

impl FilterBank {
    /// Filters of the square-wave control with amplitude Ω_0 and N intervals.
    pub fn square_wave(amplitude: f64, n: usize, taus: &TauGrid, grid: FrequencyGrid) -> Result<Self> {
        let controls: Vec<ControlWaveform> =
            taus.taus().iter().map(|&tau| square_wave_control(amplitude, n, tau)).collect();
        Self::from_controls(controls, grid)
    }

    /// One filter per control waveform, rows evaluated in parallel.
    pub fn from_controls(controls: Vec<ControlWaveform>, grid: FrequencyGrid) -> Result<Self> {
        let filters: Vec<Vec<f64>> = controls
            .par_iter()
            .map(|c| {
                let ec = effective_control(c);
                grid.omegas().iter().map(|&w| filter_function(&ec, w)).collect()
            })
            .collect();
        let overlap = overlap_matrix(&grid, &filters)?;
        let taus = controls.iter().map(|c| c.tau()).collect();
        Ok(Self { controls, taus, grid, filters, overlap })
    }

    /// The same controls rebuilt with every τ_k moved by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let controls =
            self.controls.iter().map(|c| c.with_tau(c.tau() + offset)).collect::<Result<Vec<_>>>()?;
        Self::from_controls(controls, self.grid.clone())
    }

    pub fn controls(&self) -> &[ControlWaveform] {
        &self.controls
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// A_kl = ∫ F_k F_l dω by the trapezoid rule on the grid; exactly symmetric.
pub fn overlap_matrix(grid: &FrequencyGrid, filters: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    for row in filters {
        grid.check(row.len())?;
    }
    let k = filters.len();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = grid.inner(&filters[i], &filters[j])?;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}
