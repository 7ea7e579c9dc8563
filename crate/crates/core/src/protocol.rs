//! Protocol parameters, the τ grid and the control waveform.
//!
//! Times are seconds and frequencies are angular (rad/s) everywhere in this
//! crate. The helpers [`khz_to_rad_s`] and [`us_to_s`] convert from the units
//! used in config files.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Ordinary kHz to angular rad/s.
pub fn khz_to_rad_s(khz: f64) -> f64 {
    TAU * 1e3 * khz
}

/// Angular rad/s to ordinary kHz.
pub fn rad_s_to_khz(omega: f64) -> f64 {
    omega / (TAU * 1e3)
}

pub fn us_to_s(us: f64) -> f64 {
    us * 1e-6
}

pub fn s_to_us(s: f64) -> f64 {
    s * 1e6
}

/// Knobs of one sensing run: N measurements spaced by τ, repeated Q times.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    n_measurements: usize,
    tau: f64,
    repetitions: usize,
    control_amplitude: f64,
    measurement_duration: f64,
    master_seed: u64,
}

impl ProtocolConfig {
    pub fn new(
        n_measurements: usize,
        tau: f64,
        repetitions: usize,
        control_amplitude: f64,
        measurement_duration: f64,
        master_seed: u64,
    ) -> Result<Self> {
        if n_measurements == 0 {
            return Err(Error::param("n_measurements", "must be at least 1"));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        if repetitions == 0 {
            return Err(Error::param("repetitions", "must be at least 1"));
        }
        if !(control_amplitude >= 0.0) || !control_amplitude.is_finite() {
            return Err(Error::param(
                "control_amplitude",
                format!("must be non-negative, got {control_amplitude}"),
            ));
        }
        if !(measurement_duration >= 0.0) {
            return Err(Error::param(
                "measurement_duration",
                format!("must be non-negative, got {measurement_duration}"),
            ));
        }
        if tau <= measurement_duration {
            return Err(Error::param(
                "tau",
                format!("{tau} s does not leave room for a {measurement_duration} s measurement"),
            ));
        }
        Ok(Self { n_measurements, tau, repetitions, control_amplitude, measurement_duration, master_seed })
    }

    pub fn n_measurements(&self) -> usize {
        self.n_measurements
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn control_amplitude(&self) -> f64 {
        self.control_amplitude
    }

    pub fn measurement_duration(&self) -> f64 {
        self.measurement_duration
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The square-wave control this configuration drives the probe with.
    pub fn control(&self) -> ControlWaveform {
        square_wave_control(self.control_amplitude, self.n_measurements, self.tau)
    }
}

/// Strictly increasing measurement spacings τ_k, one per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    taus: Vec<f64>,
}

impl TauGrid {
    /// Builds a grid from an explicit list, e.g. an irregular grid read from config.
    pub fn from_values(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidRange("tau grid is empty".into()));
        }
        if let Some(bad) = taus.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidRange(format!("tau {bad} is not positive")));
        }
        if taus.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRange("tau grid must be strictly increasing".into()));
        }
        Ok(Self { taus })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Every τ shifted by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::from_values(self.taus.iter().map(|t| t + offset).collect())
    }
}

/// Uniform grid of `k` spacings from `tau_min` to `tau_max` inclusive.
pub fn make_tau_grid(tau_min: f64, tau_max: f64, k: usize) -> Result<TauGrid> {
    if !(tau_min > 0.0) || !(tau_min < tau_max) || !tau_max.is_finite() {
        return Err(Error::InvalidRange(format!("need 0 < tau_min < tau_max, got [{tau_min}, {tau_max}]")));
    }
    if k < 2 {
        return Err(Error::InvalidRange(format!("need at least 2 grid points, got {k}")));
    }
    let step = (tau_max - tau_min) / (k - 1) as f64;
    let mut taus: Vec<f64> = (0..k).map(|i| tau_min + step * i as f64).collect();
    // pin the last endpoint exactly
    taus[k - 1] = tau_max;
    TauGrid::from_values(taus)
}

/// Piecewise-constant control Ω_c(t): one value per interval between measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlWaveform {
    interval_values: Vec<f64>,
    tau: f64,
}

impl ControlWaveform {
    pub fn new(interval_values: Vec<f64>, tau: f64) -> Result<Self> {
        if interval_values.is_empty() {
            return Err(Error::param("interval_values", "need at least one interval"));
        }
        if !(tau > 0.0) {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        Ok(Self { interval_values, tau })
    }

    /// Value of Ω_c on interval j = 1..N, stored at index j−1.
    pub fn interval_values(&self) -> &[f64] {
        &self.interval_values
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.interval_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interval_values.is_empty()
    }

    /// Ω_c(t); zero outside [0, Nτ).
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let j = (t / self.tau).floor() as usize;
        self.interval_values.get(j).copied().unwrap_or(0.0)
    }

    /// Same interval values with a different interval length.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.interval_values.clone(), tau)
    }
}

/// Zero-average square wave of period 2τ: interval j carries (−1)^j·Ω_0.
///
/// Intervals are numbered from 1, so the first interval is negative.
pub fn square_wave_control(omega0: f64, n: usize, tau: f64) -> ControlWaveform {
    assert!(omega0 >= 0.0 && n >= 1 && tau > 0.0, "square wave needs Ω0 ≥ 0, n ≥ 1, τ > 0");
    let interval_values = (1..=n).map(|j| if j % 2 == 1 { -omega0 } else { omega0 }).collect();
    ControlWaveform { interval_values, tau }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_grid_endpoints_only() {
        let g = make_tau_grid(1.5e-6, 4.5e-6, 2).unwrap();
        assert_eq!(g.taus(), &[1.5e-6, 4.5e-6]);
    }

    #[test]
    fn tau_grid_uniform_spacing() {
        let g = make_tau_grid(1.5e-6, 4.5e-6, 4).unwrap();
        let expected = [1.5e-6, 2.5e-6, 3.5e-6, 4.5e-6];
        for (a, b) in g.taus().iter().zip(expected) {
            assert!((a - b).abs() <= f64::EPSILON * b * 2.0, "{a} vs {b}");
        }
    }

    #[test]
    fn tau_grid_rejects_degenerate_interval() {
        assert!(matches!(make_tau_grid(1.5e-6, 1.5e-6, 3), Err(Error::InvalidRange(_))));
        assert!(matches!(make_tau_grid(0.0, 1e-6, 3), Err(Error::InvalidRange(_))));
        assert!(matches!(make_tau_grid(2e-6, 1e-6, 3), Err(Error::InvalidRange(_))));
        assert!(matches!(make_tau_grid(1e-6, 2e-6, 1), Err(Error::InvalidRange(_))));
    }

    #[test]
    fn tau_grid_spacing_is_uniform_to_an_ulp() {
        let g = make_tau_grid(1.5e-6, 4.5e-6, 13).unwrap();
        let step = 0.25e-6;
        for w in g.taus().windows(2) {
            let d = w[1] - w[0];
            assert!((d - step).abs() <= 4.0 * f64::EPSILON * w[1], "{d}");
        }
    }

    #[test]
    fn explicit_grid_must_increase() {
        assert!(TauGrid::from_values(vec![1e-6, 3e-6, 2e-6]).is_err());
        assert!(TauGrid::from_values(vec![]).is_err());
        assert!(TauGrid::from_values(vec![1e-6, 1.7e-6, 4e-6]).is_ok());
    }

    #[test]
    fn square_wave_alternates_starting_negative() {
        let w = square_wave_control(2.0, 4, 1e-6);
        assert_eq!(w.interval_values(), &[-2.0, 2.0, -2.0, 2.0]);
    }

    #[test]
    fn square_wave_zero_amplitude() {
        let w = square_wave_control(0.0, 3, 1e-6);
        assert!(w.interval_values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn square_wave_default_parameters() {
        let omega0 = khz_to_rad_s(43.3);
        let w = square_wave_control(omega0, 18, 2e-6);
        assert_eq!(w.len(), 18);
        for (j, v) in w.interval_values().iter().enumerate() {
            assert_eq!(v.abs(), omega0);
            assert_eq!(v.signum(), if j % 2 == 0 { -1.0 } else { 1.0 });
        }
    }

    #[test]
    fn square_wave_integrates_to_zero_over_each_period() {
        let w = square_wave_control(3.0, 10, 0.5);
        let integrals: Vec<f64> = w.interval_values().iter().map(|v| v * w.tau()).collect();
        for (j, x) in integrals.iter().enumerate() {
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(*x, sign * 3.0 * 0.5);
        }
        for pair in integrals.chunks(2) {
            assert_eq!(pair[0] + pair[1], 0.0);
        }
    }

    #[test]
    fn config_invariants() {
        assert!(ProtocolConfig::new(18, 2e-6, 14, 1.0, 0.6e-6, 0).is_ok());
        assert!(ProtocolConfig::new(0, 2e-6, 14, 1.0, 0.0, 0).is_err());
        assert!(ProtocolConfig::new(18, 0.0, 14, 1.0, 0.0, 0).is_err());
        assert!(ProtocolConfig::new(18, 2e-6, 0, 1.0, 0.0, 0).is_err());
        assert!(ProtocolConfig::new(18, 2e-6, 14, -1.0, 0.0, 0).is_err());
        assert!(ProtocolConfig::new(18, 0.5e-6, 14, 1.0, 0.6e-6, 0).is_err());
    }

    #[test]
    fn value_at_follows_intervals() {
        let w = square_wave_control(1.0, 3, 1.0);
        assert_eq!(w.value_at(0.5), -1.0);
        assert_eq!(w.value_at(1.5), 1.0);
        assert_eq!(w.value_at(2.5), -1.0);
        assert_eq!(w.value_at(3.5), 0.0);
        assert_eq!(w.value_at(-0.1), 0.0);
    }

    #[test]
    fn unit_conversions_round_trip() {
        assert!((rad_s_to_khz(khz_to_rad_s(167.0)) - 167.0).abs() < 1e-12);
        assert_eq!(s_to_us(us_to_s(2.5)), 2.5);
    }
}
