//! From survival data to χ(τ), and from χ(τ) back to the noise spectrum.
//!
//! Reconstruction expands the spectrum in the orthonormalized filters: with
//! V A Vᵀ = Λ for the overlap matrix A,
//!
//! ```text
//! F̂_k = λ_k^{-1/2} Σ_l V_kl F_l,   ĉ_k = λ_k^{-1/2} Σ_l V_kl χ_l,   S_rec = Σ_k ĉ_k F̂_k
//! ```
//!
//! keeping only modes with λ_k ≥ ε λ_max.

mod eigen;

pub use eigen::{symmetric_eigendecomposition, SymmetricEigen, MAX_SWEEPS};

use crate::error::{Error, Result};
use crate::filters::{FilterBank, FrequencyGrid};

/// Var[ln P] over realizations is four times χ, because ln P_cn = −2 Σ c_j n_j.
pub const LOG_VARIANCE_PER_CHI: f64 = 4.0;

/// Sample statistics of ln(P/P_ref) at one τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVariance {
    /// Unbiased sample variance.
    pub variance: f64,
    /// Normal-approximation standard error √(2s⁴/(Q−1)).
    pub std_error: f64,
    pub q_used: usize,
}

impl LogVariance {
    pub fn to_chi(self) -> ChiEntry {
        ChiEntry {
            chi: self.variance / LOG_VARIANCE_PER_CHI,
            std_error: self.std_error / LOG_VARIANCE_PER_CHI,
            q_used: self.q_used,
        }
    }
}

/// Variance of ln(p_i / p_reference) over the samples.
pub fn chi_from_survivals(p_samples: &[f64], p_reference: f64) -> Result<LogVariance> {
    let q = p_samples.len();
    if q < 2 {
        return Err(Error::param("repetitions", format!("variance needs Q ≥ 2 samples, got {q}")));
    }
    if !(p_reference > 0.0) {
        return Err(Error::Domain(format!("reference probability {p_reference} is not positive")));
    }
    if let Some(bad) = p_samples.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Domain(format!(
            "survival probability {bad} has no logarithm; the realization left the weak-Zeno regime"
        )));
    }
    let logs: Vec<f64> = p_samples.iter().map(|p| (p / p_reference).ln()).collect();
    let mean = logs.iter().sum::<f64>() / q as f64;
    let variance = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (q - 1) as f64;
    let std_error = (2.0 * variance * variance / (q - 1) as f64).sqrt();
    Ok(LogVariance { variance, std_error, q_used: q })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiEntry {
    pub chi: f64,
    pub std_error: f64,
    pub q_used: usize,
}

/// χ at every τ_k of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiEstimate {
    taus: Vec<f64>,
    entries: Vec<ChiEntry>,
}

impl ChiEstimate {
    pub fn new(taus: Vec<f64>, entries: Vec<ChiEntry>) -> Result<Self> {
        if taus.len() != entries.len() {
            return Err(Error::LengthMismatch { expected: taus.len(), actual: entries.len() });
        }
        if let Some(e) = entries.iter().find(|e| !(e.chi >= 0.0) || !(e.std_error >= 0.0)) {
            return Err(Error::Domain(format!("χ entry {e:?} is negative")));
        }
        Ok(Self { taus, entries })
    }

    /// Noise-free data: zero standard error, `q_used` = 0.
    pub fn exact(taus: Vec<f64>, chis: &[f64]) -> Result<Self> {
        let entries = chis.iter().map(|&chi| ChiEntry { chi, std_error: 0.0, q_used: 0 }).collect();
        Self::new(taus, entries)
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn entries(&self) -> &[ChiEntry] {
        &self.entries
    }

    pub fn chis(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.chi).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    /// Modes with λ < ε·λ_max are dropped.
    pub epsilon: f64,
    /// Zero out negative S_rec before computing fidelities.
    pub clamp_negative: bool,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self { epsilon: 1e-3, clamp_negative: false }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// S_rec on the bank's grid, negative lobes included.
    pub s_rec: Vec<f64>,
    /// All K eigenvalues of A, descending.
    pub eigenvalues: Vec<f64>,
    pub kept: usize,
    /// ĉ_k for the kept modes.
    pub coefficients: Vec<f64>,
    /// F̂_k for the kept modes.
    pub orthonormal_filters: Vec<Vec<f64>>,
    pub clamp_negative: bool,
}

impl ReconstructionResult {
    /// The spectrum fidelities are computed from, clamped if requested.
    pub fn spectrum_for_fidelity(&self) -> Vec<f64> {
        if self.clamp_negative {
            self.s_rec.iter().map(|s| s.max(0.0)).collect()
        } else {
            self.s_rec.clone()
        }
    }
}

fn same_taus(a: &[f64], b: &[f64]) -> Result<()> {
    let matches =
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()));
    if matches {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "χ data has {} τ values, filter bank has {} (or they differ)",
            a.len(),
            b.len()
        )))
    }
}

pub fn reconstruct_spectrum(
    chi_data: &ChiEstimate,
    bank: &FilterBank,
    options: ReconstructionOptions,
) -> Result<ReconstructionResult> {
    same_taus(chi_data.taus(), bank.taus())?;
    if !(options.epsilon >= 0.0) {
        return Err(Error::param("epsilon", format!("must be non-negative, got {}", options.epsilon)));
    }
    let eig = symmetric_eigendecomposition(bank.overlap())?;
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    let chis = chi_data.chis();
    let points = bank.grid().len();

    let mut coefficients = Vec::new();
    let mut orthonormal_filters = Vec::new();
    let mut s_rec = vec![0.0; points];
    for (k, &lambda) in eig.values.iter().enumerate() {
        if !(lambda > 0.0) || lambda < options.epsilon * lambda_max {
            continue;
        }
        let norm = lambda.sqrt().recip();
        let row = eig.vectors.row(k);
        let mut f_hat = vec![0.0; points];
        let mut c_hat = 0.0;
        for (l, filter) in bank.filters().iter().enumerate() {
            let w = norm * row[l];
            c_hat += w * chis[l];
            for (acc, f) in f_hat.iter_mut().zip(filter) {
                *acc += w * f;
            }
        }
        for (s, f) in s_rec.iter_mut().zip(&f_hat) {
            *s += c_hat * f;
        }
        coefficients.push(c_hat);
        orthonormal_filters.push(f_hat);
    }
    if coefficients.is_empty() {
        return Err(Error::AllModesTruncated { count: eig.values.len(), epsilon: options.epsilon });
    }
    Ok(ReconstructionResult {
        s_rec,
        kept: coefficients.len(),
        eigenvalues: eig.values,
        coefficients,
        orthonormal_filters,
        clamp_negative: options.clamp_negative,
    })
}

/// Overlap of the L2-normalized vectors.
pub fn fidelity_chi(chi_data: &[f64], chi_theory: &[f64]) -> Result<f64> {
    if chi_data.len() != chi_theory.len() {
        return Err(Error::LengthMismatch { expected: chi_theory.len(), actual: chi_data.len() });
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (na, nb) = (dot(chi_data, chi_data).sqrt(), dot(chi_theory, chi_theory).sqrt());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(chi_data, chi_theory) / (na * nb))
}

/// ∫ ŝ_rec ŝ_orig dω over `band`, both L2-normalized on the band.
pub fn fidelity_spectrum(
    s_rec: &[f64],
    s_orig: &[f64],
    grid: &FrequencyGrid,
    band: (f64, f64),
) -> Result<f64> {
    grid.check(s_rec.len())?;
    grid.check(s_orig.len())?;
    let slack = 1e-9 * grid.step();
    if band.0 < grid.lo() - slack || band.1 > grid.hi() + slack || !(band.0 < band.1) {
        return Err(Error::GridMismatch(format!(
            "band [{}, {}] is not inside the grid [{}, {}]",
            band.0,
            band.1,
            grid.lo(),
            grid.hi()
        )));
    }
    let inside: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.omegas()[i] >= band.0 - slack && grid.omegas()[i] <= band.1 + slack)
        .collect();
    if inside.len() < 2 {
        return Err(Error::GridMismatch("band holds fewer than two grid points".into()));
    }
    let a: Vec<f64> = inside.iter().map(|&i| s_rec[i]).collect();
    let b: Vec<f64> = inside.iter().map(|&i| s_orig[i]).collect();
    let h = grid.step();
    let inner = |x: &[f64], y: &[f64]| {
        let p: Vec<f64> = x.iter().zip(y).map(|(u, v)| u * v).collect();
        crate::quadrature::trapezoid_uniform(&p, h)
    };
    let (na, nb) = (inner(&a, &a).sqrt(), inner(&b, &b).sqrt());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(inner(&a, &b) / (na * nb))
}

/// Pairs the χ data with filters rebuilt at τ_k + `offset`.
///
/// A finite measurement pulse of length τ_m projects effectively at its
/// center, so data labeled τ was taken with intervals closer to τ + τ_m/2.
pub fn tau_offset_correction(
    chi_data: &ChiEstimate,
    bank: &FilterBank,
    offset: f64,
) -> Result<(ChiEstimate, FilterBank)> {
    if !(offset >= 0.0) || !offset.is_finite() {
        return Err(Error::param("tau_offset", format!("must be non-negative, got {offset}")));
    }
    same_taus(chi_data.taus(), bank.taus())?;
    if offset == 0.0 {
        return Ok((chi_data.clone(), bank.clone()));
    }
    let shifted = bank.shifted(offset)?;
    let data = ChiEstimate::new(shifted.taus().to_vec(), chi_data.entries().to_vec())?;
    Ok((data, shifted))
}
