//! Banding-aware score fusion: vmaf_ba = clip(vmaf - alpha * banding_index),
//! with grid-search calibration of alpha by rank-correlation maximization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::DatasetManifest;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub alpha: f64,
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            alpha: 0.85,
            floor: 0.0,
            ceiling: 100.0,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.floor < self.ceiling) {
            return Err(Error::InvalidParams(format!(
                "floor {} must be below ceiling {}",
                self.floor, self.ceiling
            )));
        }
        Ok(())
    }
}

/// Subtracts the weighted banding index from the VMAF score and clips the
/// result into [floor, ceiling].
pub fn fuse(vmaf: f64, banding_index: f64, params: &FusionParams) -> Result<f64> {
    params.validate()?;
    if banding_index < 0.0 {
        return Err(Error::NegativeBandingIndex(banding_index));
    }
    Ok((vmaf - params.alpha * banding_index).clamp(params.floor, params.ceiling))
}

/// Adds a `vmaf_ba` column computed per item from the named VMAF and banding
/// columns. Other columns and row order are untouched.
pub fn fuse_dataset(
    manifest: &DatasetManifest,
    params: &FusionParams,
    vmaf_column: &str,
    banding_column: &str,
) -> Result<DatasetManifest> {
    params.validate()?;
    if manifest.metric_columns.iter().any(|c| c == "vmaf_ba") {
        return Err(Error::Manifest(
            "manifest already has a vmaf_ba column".into(),
        ));
    }
    let vmaf_idx = manifest.metric_index(vmaf_column)?;
    let band_idx = manifest.metric_index(banding_column)?;
    let mut out = manifest.clone();
    out.metric_columns.push("vmaf_ba".to_string());
    for it in &mut out.items {
        let vmaf = it.metrics[vmaf_idx].ok_or_else(|| {
            Error::Manifest(format!("item {:?} has no {vmaf_column} value", it.item_id))
        })?;
        let banding = it.metrics[band_idx].ok_or_else(|| {
            Error::Manifest(format!(
                "item {:?} has no {banding_column} value",
                it.item_id
            ))
        })?;
        it.metrics.push(Some(fuse(vmaf, banding, params)?));
    }
    Ok(out)
}

/// Grid-search calibration outcome. The curve holds every grid point whose
/// rank correlation is defined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub best_alpha: f64,
    pub best_srocc: f64,
    pub curve: Vec<(f64, f64)>,
}

/// Maximizes SROCC(fused, mos) over an alpha grid. SROCC is
/// piecewise-constant in alpha, so a fine grid is exact up to rank-change
/// boundaries; ties break toward the smallest alpha.
pub fn calibrate_alpha(
    manifest: &DatasetManifest,
    grid_lo: f64,
    grid_hi: f64,
    grid_step: f64,
    vmaf_column: &str,
    banding_column: &str,
) -> Result<CalibrationResult> {
    if !(grid_lo < grid_hi) || !(grid_step > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bad grid [{grid_lo}, {grid_hi}] step {grid_step}"
        )));
    }
    if manifest.items.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 items to calibrate, got {}",
            manifest.items.len()
        )));
    }
    let mos: Vec<f64> = manifest.items.iter().map(|it| it.mos).collect();
    if mos.iter().all(|&m| m == mos[0]) {
        return Err(Error::UndefinedCorrelation(
            "mos is degenerate (all equal)".into(),
        ));
    }
    let vmaf_idx = manifest.metric_index(vmaf_column)?;
    let band_idx = manifest.metric_index(banding_column)?;
    let mut vmaf = Vec::with_capacity(manifest.items.len());
    let mut banding = Vec::with_capacity(manifest.items.len());
    for it in &manifest.items {
        vmaf.push(it.metrics[vmaf_idx].ok_or_else(|| {
            Error::Manifest(format!("item {:?} has no {vmaf_column} value", it.item_id))
        })?);
        banding.push(it.metrics[band_idx].ok_or_else(|| {
            Error::Manifest(format!(
                "item {:?} has no {banding_column} value",
                it.item_id
            ))
        })?);
    }

    let n_steps = ((grid_hi - grid_lo) / grid_step).round() as usize;
    let mut curve = Vec::with_capacity(n_steps + 1);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=n_steps {
        let alpha = grid_lo + k as f64 * grid_step;
        if alpha > grid_hi + grid_step * 1e-9 {
            break;
        }
        let params = FusionParams {
            alpha,
            ..FusionParams::default()
        };
        let fused: Vec<f64> = vmaf
            .iter()
            .zip(&banding)
            .map(|(&v, &b)| fuse(v, b, &params))
            .collect::<Result<_>>()?;
        // Clipping can flatten the fused scores at extreme alphas; such grid
        // points have no defined rank correlation and are skipped.
        let s = match stats::srocc(&fused, &mos) {
            Ok(s) => s,
            Err(Error::UndefinedCorrelation(_)) => continue,
            Err(e) => return Err(e),
        };
        curve.push((alpha, s));
        match best {
            Some((_, bs)) if s <= bs => {}
            _ => best = Some((alpha, s)),
        }
    }
    let (best_alpha, best_srocc) = best.ok_or_else(|| {
        Error::UndefinedCorrelation("rank correlation undefined on the whole grid".into())
    })?;
    Ok(CalibrationResult {
        best_alpha,
        best_srocc,
        curve,
    })
}
