//! CSV tables exchanged between pipeline stages.

use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::protocol::{rad_s_to_khz, s_to_us};

pub const SURVIVALS: &str = "survivals.csv";
pub const CHI: &str = "chi.csv";
pub const SPECTRUM: &str = "spectrum.csv";
pub const EIGEN: &str = "eigen.csv";
pub const SUMMARY: &str = "summary.json";
pub const MANIFEST: &str = "manifest.json";
pub const THEORY_CHI: &str = "theory_chi.csv";
pub const FILTERS: &str = "filters.csv";
pub const OVERLAP: &str = "overlap.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub tau_us: f64,
    pub seed: u64,
    pub p: f64,
    pub p_c: f64,
    pub p_n: f64,
    pub p_cn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiRow {
    pub tau_us: f64,
    pub chi: f64,
    pub std_error: f64,
    pub chi_theory: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega_khz: f64,
    pub s_rec: f64,
    pub s_orig: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub k: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub tau_us: f64,
    pub chi_theory: f64,
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Reads a stage output; a missing file names the stage that writes it.
pub fn read_rows<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingInput { path: path.to_path_buf(), stage });
    }
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    if rows.is_empty() {
        return Err(Error::MissingData(format!("{} has no data rows", path.display())));
    }
    Ok(rows)
}

/// One row per grid frequency: omega_khz, F_1, …, F_K.
pub fn write_filters(path: &Path, bank: &FilterBank) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["omega_khz".to_string()];
    header.extend(bank.taus().iter().enumerate().map(|(k, _)| format!("F_{}", k + 1)));
    w.write_record(&header)?;
    for (i, &omega) in bank.grid().omegas().iter().enumerate() {
        let mut record = vec![rad_s_to_khz(omega).to_string()];
        record.extend(bank.filters().iter().map(|f| f[i].to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Square matrix, one CSV line per row, no header.
pub fn write_matrix(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    for i in 0..a.nrows() {
        w.write_record(a.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn tau_label(tau: f64) -> f64 {
    s_to_us(tau)
}
