//! JSON run configuration in lab units (μs, ordinary kHz) and its
//! resolution into SI quantities.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::ReconstructionOptions;
use crate::filters::{FrequencyGrid, DEFAULT_OMEGA_CUT};
use crate::noise::{NoiseModel, PhaseMode};
use crate::protocol::{khz_to_rad_s, make_tau_grid, us_to_s, ProtocolConfig, TauGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub n_measurements: usize,
    pub tau_min_us: f64,
    pub tau_max_us: f64,
    pub k_taus: usize,
    /// Explicit τ list; overrides the uniform grid when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taus_us: Option<Vec<f64>>,
    pub q_repetitions: usize,
    pub control_amplitude_khz: f64,
    pub measurement_duration_us: f64,
    pub master_seed: u64,
    /// Upper bound on N·τ_max.
    pub max_sequence_us: f64,
    pub survival_model: SurvivalModel,
    pub noise: NoiseSection,
    pub reconstruction: ReconstructionSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_measurements: 18,
            tau_min_us: 1.5,
            tau_max_us: 4.5,
            k_taus: 15,
            taus_us: None,
            q_repetitions: 14,
            control_amplitude_khz: 43.3,
            measurement_duration_us: 0.0,
            master_seed: 0,
            max_sequence_us: 100.0,
            survival_model: SurvivalModel::Exact,
            noise: NoiseSection::default(),
            reconstruction: ReconstructionSection::default(),
        }
    }
}

/// Which survival probability the simulated data records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalModel {
    /// Π cos²α_j.
    Exact,
    /// exp(−Σα_j²) = P_c·P_n·P_cn, linear in the noise after taking the log.
    WeakZeno,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    SingleTone,
    Gaussian,
    Lorentzian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseSetting {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    pub center_khz: f64,
    /// Single-tone amplitude Ω_n0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwhm_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_amplitude_khz: Option<f64>,
    pub m_tones: usize,
    pub band_khz: [f64; 2],
    pub phase: PhaseSetting,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            kind: NoiseKind::SingleTone,
            center_khz: 167.0,
            amplitude_khz: None,
            sigma_khz: None,
            fwhm_khz: None,
            rms_amplitude_khz: None,
            m_tones: 400,
            band_khz: [100.0, 300.0],
            phase: PhaseSetting::Named("random".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceChoice {
    /// exp(−Σ c_j²) from the known control.
    Control,
    /// Mean of the sampled survivals.
    SampleMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionSection {
    pub epsilon: f64,
    pub grid_points: usize,
    pub band_khz: [f64; 2],
    pub clamp_negative: bool,
    pub tau_offset_us: f64,
    pub reference: ReferenceChoice,
    pub omega_cut_khz: f64,
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            grid_points: 2001,
            band_khz: [100.0, 300.0],
            clamp_negative: false,
            tau_offset_us: 0.0,
            reference: ReferenceChoice::Control,
            omega_cut_khz: crate::protocol::rad_s_to_khz(DEFAULT_OMEGA_CUT),
        }
    }
}

pub const DEFAULT_SINGLE_TONE_KHZ: f64 = 12.0;
pub const DEFAULT_RMS_KHZ: f64 = 12.0;
/// Gaussian σ whose shape overlaps the 50 kHz Lorentzian by 97.7 % on the band.
pub const DEFAULT_SIGMA_KHZ: f64 = 35.355;
pub const DEFAULT_FWHM_KHZ: f64 = 50.0;

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let located = |e: serde_json::Error| Error::Config(format!("{}: {e}", path.display()));
        // a manifest carries the config it was produced from
        if let Ok(serde_json::Value::Object(doc)) = serde_json::from_str(&text) {
            if let (Some(config), true) = (doc.get("config"), doc.contains_key("seeds")) {
                return serde_json::from_value(config.clone()).map_err(located);
            }
        }
        serde_json::from_str(&text).map_err(located)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything and converts to SI units.
    pub fn resolve(&self) -> Result<Experiment> {
        let cfg_err = |msg: String| Err(Error::Config(msg));
        if self.q_repetitions < 2 {
            return cfg_err(format!(
                "q_repetitions = {}: the variance estimator needs Q ≥ 2",
                self.q_repetitions
            ));
        }
        let taus = match &self.taus_us {
            Some(list) => TauGrid::from_values(list.iter().map(|t| us_to_s(*t)).collect())?,
            None => make_tau_grid(us_to_s(self.tau_min_us), us_to_s(self.tau_max_us), self.k_taus)?,
        };
        let measurement_duration = us_to_s(self.measurement_duration_us);
        let tau_min = taus.taus()[0];
        let tau_max = taus.taus()[taus.len() - 1];
        if measurement_duration > 0.0 && tau_min <= 2.0 * measurement_duration {
            return cfg_err(format!(
                "smallest τ {} μs must exceed twice the measurement duration {} μs",
                tau_min * 1e6,
                self.measurement_duration_us
            ));
        }
        if self.n_measurements as f64 * tau_max > us_to_s(self.max_sequence_us) * (1.0 + 1e-12) {
            return cfg_err(format!(
                "sequence N·τ_max = {} μs exceeds max_sequence_us = {}",
                self.n_measurements as f64 * tau_max * 1e6,
                self.max_sequence_us
            ));
        }
        let protocol = ProtocolConfig::new(
            self.n_measurements,
            tau_min,
            self.q_repetitions,
            khz_to_rad_s(self.control_amplitude_khz),
            measurement_duration,
            self.master_seed,
        )?;

        let noise = self.noise.model()?;
        let [lo, hi] = self.noise.band_khz;
        let noise_band = (khz_to_rad_s(lo), khz_to_rad_s(hi));
        if !(noise_band.0 < noise_band.1) || noise_band.0 < 0.0 {
            return Err(Error::EmptyBand { lo: noise_band.0, hi: noise_band.1 });
        }

        let r = &self.reconstruction;
        let grid =
            FrequencyGrid::uniform(khz_to_rad_s(r.band_khz[0]), khz_to_rad_s(r.band_khz[1]), r.grid_points)?;
        if !(r.epsilon >= 0.0) {
            return cfg_err(format!("reconstruction.epsilon = {} must be ≥ 0", r.epsilon));
        }
        if !(r.tau_offset_us >= 0.0) {
            return cfg_err(format!("reconstruction.tau_offset_us = {} must be ≥ 0", r.tau_offset_us));
        }
        if !(r.omega_cut_khz > r.band_khz[1]) {
            return cfg_err(format!(
                "reconstruction.omega_cut_khz = {} must lie above the band",
                r.omega_cut_khz
            ));
        }
        Ok(Experiment {
            protocol,
            taus,
            noise,
            m_tones: self.noise.m_tones,
            noise_band,
            grid,
            options: ReconstructionOptions { epsilon: r.epsilon, clamp_negative: r.clamp_negative },
            tau_offset: us_to_s(r.tau_offset_us),
            reference: r.reference,
            omega_cut: khz_to_rad_s(r.omega_cut_khz),
            survival_model: self.survival_model,
        })
    }
}

impl NoiseSection {
    pub fn model(&self) -> Result<NoiseModel> {
        let center = khz_to_rad_s(self.center_khz);
        let model = match self.kind {
            NoiseKind::SingleTone => {
                let phase = match &self.phase {
                    PhaseSetting::Fixed(phi) => PhaseMode::Fixed(*phi),
                    PhaseSetting::Named(s) if s == "random" => PhaseMode::UniformRandom,
                    PhaseSetting::Named(s) => {
                        return Err(Error::Config(format!(
                            "noise.phase must be \"random\" or a number, got {s:?}"
                        )))
                    }
                };
                self.reject("sigma_khz", self.sigma_khz)?;
                self.reject("fwhm_khz", self.fwhm_khz)?;
                self.reject("rms_amplitude_khz", self.rms_amplitude_khz)?;
                let amplitude = self.amplitude_khz.unwrap_or(DEFAULT_SINGLE_TONE_KHZ);
                NoiseModel::single_tone(khz_to_rad_s(amplitude), center, phase)
            }
            NoiseKind::Gaussian => {
                self.broadband_only()?;
                self.reject("fwhm_khz", self.fwhm_khz)?;
                let sigma = self.sigma_khz.unwrap_or(DEFAULT_SIGMA_KHZ);
                let rms = self.rms_amplitude_khz.unwrap_or(DEFAULT_RMS_KHZ);
                NoiseModel::gaussian(center, khz_to_rad_s(sigma), khz_to_rad_s(rms))
            }
            NoiseKind::Lorentzian => {
                self.broadband_only()?;
                self.reject("sigma_khz", self.sigma_khz)?;
                let fwhm = self.fwhm_khz.unwrap_or(DEFAULT_FWHM_KHZ);
                let rms = self.rms_amplitude_khz.unwrap_or(DEFAULT_RMS_KHZ);
                NoiseModel::lorentzian(center, khz_to_rad_s(fwhm), khz_to_rad_s(rms))
            }
        };
        model.map_err(|e| Error::Config(format!("noise: {e}")))
    }

    fn reject(&self, key: &str, value: Option<f64>) -> Result<()> {
        match value {
            Some(_) => Err(Error::Config(format!("noise.{key} does not apply to kind {:?}", self.kind))),
            None => Ok(()),
        }
    }

    fn broadband_only(&self) -> Result<()> {
        self.reject("amplitude_khz", self.amplitude_khz)?;
        if self.phase != PhaseSetting::Named("random".into()) {
            return Err(Error::Config("noise.phase only applies to single_tone".into()));
        }
        if self.m_tones == 0 {
            return Err(Error::Config("noise.m_tones must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fully resolved run in SI units.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub protocol: ProtocolConfig,
    pub taus: TauGrid,
    pub noise: NoiseModel,
    pub m_tones: usize,
    pub noise_band: (f64, f64),
    pub grid: FrequencyGrid,
    pub options: ReconstructionOptions,
    pub tau_offset: f64,
    pub reference: ReferenceChoice,
    pub omega_cut: f64,
    pub survival_model: SurvivalModel,
}
