//! PSNR, physical-unit relative error maps, and IQR-trimmed summary
//! statistics over masked regions.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::from_model_space;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::phase::TransitionMask;

pub const PSNR_CAP_DB: f64 = 300.0;
const MSE_FLOOR: f64 = 1e-30;
/// Floor on `|truth|` in the relative-error denominator, in units of g.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;
pub const IQR_FENCE: f64 = 1.5;

pub fn mse(pred: &Grid, truth: &Grid) -> Result<f64> {
    pred.ensure_same_shape(truth)?;
    let n = pred.as_slice().len();
    if n == 0 {
        return Err(Error::Empty("PSNR of an empty grid".into()));
    }
    let sum = compensated_sum(pred.as_slice().iter().zip(truth.as_slice()).map(|(p, g)| (p - g) * (p - g)));
    Ok(sum / n as f64)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `-10 log10(MSE)` for unit-peak data, capped at 300 dB.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse < MSE_FLOOR {
        PSNR_CAP_DB
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

pub fn psnr(pred: &Grid, truth: &Grid) -> Result<f64> {
    Ok(psnr_from_mse(mse(pred, truth)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeErrorMap {
    pub errors: Grid,
    /// Cells where `|truth|` fell below the floor.
    pub floored: usize,
}

/// Elementwise `|p - g| / max(|g|, eps)` after mapping both model-space
/// grids back to physical units.
pub fn relative_error_map(pred: &Grid, truth: &Grid) -> Result<RelativeErrorMap> {
    pred.ensure_same_shape(truth)?;
    let p = pred.try_map(from_model_space)?;
    let g = truth.try_map(from_model_space)?;
    Ok(relative_error_physical(&p, &g))
}

/// Relative error between two grids already in physical units.
pub fn relative_error_physical(pred: &Grid, truth: &Grid) -> RelativeErrorMap {
    let mut floored = 0;
    let data = pred
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(p, g)| {
            if g.abs() < RELATIVE_ERROR_FLOOR {
                floored += 1;
            }
            (p - g).abs() / g.abs().max(RELATIVE_ERROR_FLOOR)
        })
        .collect();
    RelativeErrorMap { errors: Grid::from_vec(pred.rows(), pred.cols(), data).expect("same shape"), floored }
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (`h = (n-1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Whole,
    Transition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ratio", rename_all = "kebab-case")]
pub enum ScenarioTag {
    InRange(usize),
    BeyondRatio(usize),
    UnseenW(usize),
    LargeN(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimmedStats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub max_after_trim: f64,
    pub total: usize,
    pub trimmed: usize,
}

/// Drops values beyond `1.5 IQR` outside the quartiles and summarizes the rest.
pub fn trimmed_stats(values: &[f64]) -> Result<TrimmedStats> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Err(Error::Empty("no finite values to summarize".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - IQR_FENCE * iqr, q3 + IQR_FENCE * iqr);
    let kept: Vec<f64> = sorted.iter().copied().filter(|&v| v >= lo && v <= hi).collect();
    let stats = TrimmedStats {
        mean: kept.iter().sum::<f64>() / kept.len() as f64,
        median: quantile_sorted(&kept, 0.5),
        q1: quantile_sorted(&kept, 0.25),
        q3: quantile_sorted(&kept, 0.75),
        max_after_trim: *kept.last().expect("the quartiles themselves survive"),
        total: sorted.len(),
        trimmed: sorted.len() - kept.len(),
    };
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub region: Region,
    pub scenario: Option<ScenarioTag>,
    pub stats: TrimmedStats,
    pub floored: usize,
}

/// Statistics of the masked entries of an error grid.
pub fn region_stats(errors: &Grid, mask: &TransitionMask, region: Region) -> Result<ErrorReport> {
    if mask.shape() != errors.shape() {
        return Err(Error::ShapeMismatch(format!("mask {:?} vs grid {:?}", mask.shape(), errors.shape())));
    }
    let values: Vec<f64> = errors.as_slice().iter().zip(mask.cells()).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    if values.is_empty() {
        return Err(Error::Empty("mask selects no cells".into()));
    }
    Ok(ErrorReport { region, scenario: None, stats: trimmed_stats(&values)?, floored: 0 })
}

/// Per-point CSV: row, col, T/g, mu/g, relative error, transition flag.
pub fn write_error_csv(
    path: impl AsRef<Path>,
    errors: &Grid,
    t_values: &[f64],
    mu_values: &[f64],
    mask: &TransitionMask,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "t_over_g", "mu_over_g", "relative_error", "transition"])?;
    for i in 0..errors.rows() {
        for j in 0..errors.cols() {
            w.write_record(&[
                i.to_string(),
                j.to_string(),
                t_values[i].to_string(),
                mu_values[j].to_string(),
                errors.get(i, j).to_string(),
                (mask.get(i, j) as u8).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}
