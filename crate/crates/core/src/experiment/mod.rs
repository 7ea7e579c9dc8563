//! The sensing run end to end: simulate survivals for every (τ_k, q), turn
//! them into χ(τ), reconstruct the spectrum and score it.
//!
//! Every stage reads the previous stage's files from the output directory,
//! so stages can be rerun on their own and `run` is exactly their sequence.

mod config;
pub mod io;
mod seed;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub use config::{
    Config, Experiment, NoiseKind, NoiseSection, PhaseSetting, ReconstructionSection, ReferenceChoice,
    SurvivalModel, DEFAULT_FWHM_KHZ, DEFAULT_RMS_KHZ, DEFAULT_SIGMA_KHZ, DEFAULT_SINGLE_TONE_KHZ,
};
pub use seed::derive_seed;

use crate::dynamics::SurvivalRecord;
use crate::error::{Error, Result};
use crate::estimator::{
    chi_from_survivals, fidelity_chi, fidelity_spectrum, reconstruct_spectrum, tau_offset_correction,
    ChiEntry, ChiEstimate, ReconstructionResult,
};
use crate::filters::{chi_theory, effective_control, FilterBank};
use crate::noise::{psd_on_grid, sample_realization, NoiseModel};
use crate::protocol::{khz_to_rad_s, rad_s_to_khz, s_to_us, square_wave_control, us_to_s, TauGrid};
use io::{ChiRow, EigenRow, SpectrumRow, SurvivalRow, TheoryRow};

/// A realization counts as outside the weak-Zeno regime when some |α_j| > 1.
pub const WEAK_ZENO_LIMIT: f64 = 1.0;

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalSummary {
    pub tau_us: f64,
    pub mean_p: f64,
    pub std_error_p: f64,
    pub p_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub rows: Vec<SurvivalRow>,
    pub weak_zeno_violations: usize,
}

/// Protocol steps (I)–(IV): Q realizations at each τ_k.
///
/// With a finite measurement duration τ_m each interval is simulated as
/// τ_k + τ_m/2 long while rows keep the nominal label τ_k. The `p` column
/// holds the survival of the configured [`SurvivalModel`].
pub fn simulate_survivals(exp: &Experiment) -> Result<SimulationReport> {
    let p = &exp.protocol;
    let q_count = p.repetitions();
    let jobs: Vec<(usize, usize)> =
        (0..exp.taus.len()).flat_map(|k| (0..q_count).map(move |q| (k, q))).collect();
    let results: Vec<Result<(SurvivalRow, bool)>> = jobs
        .par_iter()
        .map(|&(k, q)| {
            let tau = exp.taus.taus()[k];
            let seed = derive_seed(p.master_seed(), k, q);
            let control = square_wave_control(p.control_amplitude(), p.n_measurements(), tau);
            let noise = sample_realization(&exp.noise, exp.m_tones, exp.noise_band, seed)?;
            let simulated = tau + 0.5 * p.measurement_duration();
            let (r, max_alpha) = SurvivalRecord::simulate(&control, &noise, simulated, seed)?;
            let row = SurvivalRow {
                tau_us: s_to_us(tau),
                seed,
                p: match exp.survival_model {
                    SurvivalModel::Exact => r.p,
                    SurvivalModel::WeakZeno => r.p_c * r.p_n * r.p_cn,
                },
                p_c: r.p_c,
                p_n: r.p_n,
                p_cn: r.p_cn,
            };
            Ok((row, max_alpha > WEAK_ZENO_LIMIT))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut weak_zeno_violations = 0;
    for r in results {
        let (row, violated) = r?;
        weak_zeno_violations += usize::from(violated);
        rows.push(row);
    }
    Ok(SimulationReport { rows, weak_zeno_violations })
}

/// Consecutive rows sharing a τ label.
fn group_by_tau(rows: &[SurvivalRow]) -> Vec<&[SurvivalRow]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].tau_us != rows[start].tau_us {
            groups.push(&rows[start..i]);
            start = i;
        }
    }
    groups
}

pub fn survival_summaries(rows: &[SurvivalRow]) -> Vec<SurvivalSummary> {
    group_by_tau(rows)
        .into_iter()
        .map(|g| {
            let q = g.len() as f64;
            let mean = g.iter().map(|r| r.p).sum::<f64>() / q;
            let var = if g.len() > 1 {
                g.iter().map(|r| (r.p - mean).powi(2)).sum::<f64>() / (q - 1.0)
            } else {
                0.0
            };
            SurvivalSummary {
                tau_us: g[0].tau_us,
                mean_p: mean,
                std_error_p: (var / q).sqrt(),
                p_c: g[0].p_c,
            }
        })
        .collect()
}

fn theory_for(exp: &Experiment, tau: f64) -> Result<f64> {
    let p = &exp.protocol;
    let control = square_wave_control(p.control_amplitude(), p.n_measurements(), tau);
    chi_theory(&exp.noise, &effective_control(&control), exp.omega_cut)
}

/// χ and its standard error per τ from survival rows, with the theory value.
pub fn estimate_chi(exp: &Experiment, rows: &[SurvivalRow]) -> Result<Vec<ChiRow>> {
    if rows.is_empty() {
        return Err(Error::MissingData("no survival rows".into()));
    }
    group_by_tau(rows)
        .par_iter()
        .map(|g| {
            let samples: Vec<f64> = g.iter().map(|r| r.p).collect();
            let reference = match exp.reference {
                ReferenceChoice::Control => g[0].p_c,
                ReferenceChoice::SampleMean => samples.iter().sum::<f64>() / samples.len() as f64,
            };
            let entry = chi_from_survivals(&samples, reference)?.to_chi();
            Ok(ChiRow {
                tau_us: g[0].tau_us,
                chi: entry.chi,
                std_error: entry.std_error,
                chi_theory: theory_for(exp, us_to_s(g[0].tau_us))?,
            })
        })
        .collect()
}

/// Spectrum of the configured model on the reconstruction grid; zeros for a line.
pub fn original_spectrum(exp: &Experiment) -> Vec<f64> {
    psd_on_grid(&exp.noise, exp.grid.omegas())
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub result: ReconstructionResult,
    pub bank: FilterBank,
    pub chi: ChiEstimate,
    pub fidelity_chi: Option<f64>,
    pub fidelity_spectrum: Option<f64>,
}

/// Builds the filter bank for the χ rows (shifted by the configured offset),
/// reconstructs and scores against the configured model.
pub fn reconstruct_from_chi(exp: &Experiment, rows: &[ChiRow]) -> Result<Reconstruction> {
    let p = &exp.protocol;
    let taus = TauGrid::from_values(rows.iter().map(|r| us_to_s(r.tau_us)).collect())?;
    let entries = rows
        .iter()
        .map(|r| ChiEntry { chi: r.chi, std_error: r.std_error, q_used: p.repetitions() })
        .collect();
    let data = ChiEstimate::new(taus.taus().to_vec(), entries)?;
    let nominal =
        FilterBank::square_wave(p.control_amplitude(), p.n_measurements(), &taus, exp.grid.clone())?;
    let (chi, bank) = tau_offset_correction(&data, &nominal, exp.tau_offset)?;
    let result = reconstruct_spectrum(&chi, &bank, exp.options)?;

    let theory: Vec<f64> = rows.iter().map(|r| r.chi_theory).collect();
    let fid_chi = fidelity_chi(&chi.chis(), &theory).ok();
    let fid_spec = if exp.noise.is_line_spectrum() || exp.noise.rms_amplitude() == 0.0 {
        None
    } else {
        let band = (exp.grid.lo(), exp.grid.hi());
        fidelity_spectrum(&result.spectrum_for_fidelity(), &original_spectrum(exp), &exp.grid, band).ok()
    };
    Ok(Reconstruction { result, bank, chi, fidelity_chi: fid_chi, fidelity_spectrum: fid_spec })
}

fn noise_echo(model: &NoiseModel) -> serde_json::Value {
    match *model {
        NoiseModel::SingleTone { amplitude, frequency, phase } => json!({
            "kind": "single_tone",
            "amplitude_rad_s": amplitude,
            "frequency_rad_s": frequency,
            "phase": match phase {
                crate::noise::PhaseMode::Fixed(phi) => json!(phi),
                crate::noise::PhaseMode::UniformRandom => json!("random"),
            },
        }),
        NoiseModel::GaussianPsd { center, sigma, rms_amplitude } => json!({
            "kind": "gaussian",
            "center_rad_s": center,
            "sigma_rad_s": sigma,
            "rms_amplitude_rad_s": rms_amplitude,
        }),
        NoiseModel::LorentzianPsd { center, fwhm, rms_amplitude } => json!({
            "kind": "lorentzian",
            "center_rad_s": center,
            "fwhm_rad_s": fwhm,
            "rms_amplitude_rad_s": rms_amplitude,
        }),
    }
}

/// All resolved parameters in SI units.
pub fn si_echo(exp: &Experiment) -> serde_json::Value {
    let p = &exp.protocol;
    json!({
        "n_measurements": p.n_measurements(),
        "taus_s": exp.taus.taus(),
        "q_repetitions": p.repetitions(),
        "control_amplitude_rad_s": p.control_amplitude(),
        "measurement_duration_s": p.measurement_duration(),
        "master_seed": p.master_seed(),
        "noise": noise_echo(&exp.noise),
        "m_tones": exp.m_tones,
        "noise_band_rad_s": [exp.noise_band.0, exp.noise_band.1],
        "grid_rad_s": { "lo": exp.grid.lo(), "hi": exp.grid.hi(), "points": exp.grid.len() },
        "epsilon": exp.options.epsilon,
        "clamp_negative": exp.options.clamp_negative,
        "tau_offset_s": exp.tau_offset,
        "reference": exp.reference,
        "omega_cut_rad_s": exp.omega_cut,
        "survival_model": exp.survival_model,
    })
}

fn path_in(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|source| Error::Io { path: out.to_path_buf(), source })
}

/// `simulate`: writes survivals.csv and manifest.json.
pub fn stage_simulate(config: &Config, out: &Path, workers: Option<usize>) -> Result<SimulationReport> {
    let exp = config.resolve()?;
    ensure_dir(out)?;
    let report = with_workers(workers, || simulate_survivals(&exp))??;
    io::write_rows(&path_in(out, io::SURVIVALS), &report.rows)?;

    let q_count = exp.protocol.repetitions();
    let seeds: Vec<serde_json::Value> = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| json!({ "k": i / q_count, "q": i % q_count, "tau_us": r.tau_us, "seed": r.seed }))
        .collect();
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "config": config,
        "resolved": si_echo(&exp),
        "master_seed": exp.protocol.master_seed(),
        "seeds": seeds,
        "weak_zeno_violations": report.weak_zeno_violations,
        "created_unix": created,
        "outputs": {
            "survivals": io::SURVIVALS,
            "chi": io::CHI,
            "spectrum": io::SPECTRUM,
            "eigen": io::EIGEN,
            "summary": io::SUMMARY,
        },
    });
    io::write_json(&path_in(out, io::MANIFEST), &manifest)?;
    Ok(report)
}

/// `chi`: survivals.csv → chi.csv.
pub fn stage_chi(config: &Config, out: &Path, workers: Option<usize>) -> Result<Vec<ChiRow>> {
    let exp = config.resolve()?;
    let rows: Vec<SurvivalRow> = io::read_rows(&path_in(out, io::SURVIVALS), "simulate")?;
    let chi = with_workers(workers, || estimate_chi(&exp, &rows))??;
    io::write_rows(&path_in(out, io::CHI), &chi)?;
    Ok(chi)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub fidelity_chi: Option<f64>,
    pub fidelity_spectrum: Option<f64>,
    pub kept: usize,
    pub k_taus: usize,
    pub epsilon: f64,
    pub clamp_negative: bool,
    pub tau_offset_us: f64,
    pub weak_zeno_violations: Option<usize>,
    pub survival: Vec<SurvivalSummary>,
    pub parameters: serde_json::Value,
}

/// `reconstruct`: chi.csv → spectrum.csv, eigen.csv, summary.json.
pub fn stage_reconstruct(config: &Config, out: &Path) -> Result<Summary> {
    let exp = config.resolve()?;
    let rows: Vec<ChiRow> = io::read_rows(&path_in(out, io::CHI), "chi")?;
    let rec = reconstruct_from_chi(&exp, &rows)?;

    let s_orig = original_spectrum(&exp);
    let spectrum: Vec<SpectrumRow> = exp
        .grid
        .omegas()
        .iter()
        .zip(&rec.result.s_rec)
        .zip(&s_orig)
        .map(|((&w, &s_rec), &s_orig)| SpectrumRow { omega_khz: rad_s_to_khz(w), s_rec, s_orig })
        .collect();
    io::write_rows(&path_in(out, io::SPECTRUM), &spectrum)?;
    let eigen: Vec<EigenRow> =
        rec.result.eigenvalues.iter().enumerate().map(|(k, &lambda)| EigenRow { k: k + 1, lambda }).collect();
    io::write_rows(&path_in(out, io::EIGEN), &eigen)?;

    // survival statistics and warnings from the simulate stage, when present
    let survival = io::read_rows::<SurvivalRow>(&path_in(out, io::SURVIVALS), "simulate")
        .map(|rows| survival_summaries(&rows))
        .unwrap_or_default();
    let weak_zeno_violations = std::fs::read_to_string(path_in(out, io::MANIFEST))
        .ok()
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .and_then(|m| m.get("weak_zeno_violations").and_then(|v| v.as_u64()))
        .map(|v| v as usize);

    let summary = Summary {
        fidelity_chi: rec.fidelity_chi,
        fidelity_spectrum: rec.fidelity_spectrum,
        kept: rec.result.kept,
        k_taus: rows.len(),
        epsilon: exp.options.epsilon,
        clamp_negative: exp.options.clamp_negative,
        tau_offset_us: s_to_us(exp.tau_offset),
        weak_zeno_violations,
        survival,
        parameters: si_echo(&exp),
    };
    io::write_json(&path_in(out, io::SUMMARY), &summary)?;
    Ok(summary)
}

/// `fidelity`: scores a spectrum.csv against the config's noise model.
pub fn stage_fidelity(config: &Config, spectrum_path: &Path) -> Result<f64> {
    let exp = config.resolve()?;
    if exp.noise.is_line_spectrum() {
        return Err(Error::LineSpectrum);
    }
    let rows: Vec<SpectrumRow> = io::read_rows(spectrum_path, "reconstruct")?;
    exp.grid.check(rows.len())?;
    for (row, &w) in rows.iter().zip(exp.grid.omegas()) {
        if (khz_to_rad_s(row.omega_khz) - w).abs() > 1e-9 * w.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "{} kHz in {} is not on the configured grid",
                row.omega_khz,
                spectrum_path.display()
            )));
        }
    }
    let s_rec: Vec<f64> =
        rows.iter().map(|r| if exp.options.clamp_negative { r.s_rec.max(0.0) } else { r.s_rec }).collect();
    fidelity_spectrum(&s_rec, &original_spectrum(&exp), &exp.grid, (exp.grid.lo(), exp.grid.hi()))
}

/// `theory`: χ_theory per τ, the filter bank and its overlap matrix.
pub fn stage_theory(config: &Config, out: &Path, workers: Option<usize>) -> Result<Vec<TheoryRow>> {
    let exp = config.resolve()?;
    ensure_dir(out)?;
    let (rows, bank) = with_workers(workers, || -> Result<_> {
        let rows = exp
            .taus
            .taus()
            .par_iter()
            .map(|&tau| Ok(TheoryRow { tau_us: s_to_us(tau), chi_theory: theory_for(&exp, tau)? }))
            .collect::<Result<Vec<_>>>()?;
        let p = &exp.protocol;
        let bank =
            FilterBank::square_wave(p.control_amplitude(), p.n_measurements(), &exp.taus, exp.grid.clone())?;
        Ok((rows, bank))
    })??;
    io::write_rows(&path_in(out, io::THEORY_CHI), &rows)?;
    io::write_filters(&path_in(out, io::FILTERS), &bank)?;
    io::write_matrix(&path_in(out, io::OVERLAP), bank.overlap())?;
    Ok(rows)
}

/// simulate → chi → reconstruct.
pub fn stage_run(config: &Config, out: &Path, workers: Option<usize>) -> Result<(SimulationReport, Summary)> {
    let report = stage_simulate(config, out, workers)?;
    stage_chi(config, out, workers)?;
    let summary = stage_reconstruct(config, out)?;
    Ok((report, summary))
}
