//! Contrast-aware multi-scale banding index.
//!
//! The detector looks for value steps inside flat candidate regions of the
//! luma plane. Per scale it builds a texture-exclusion mask, then counts,
//! for every masked-in pixel, how many masked-in window neighbors sit at the
//! pixel's own codeword versus one detectable step away. The per-pixel
//! evidence is the best weighted coincidence count, normalized by half the
//! window population. Scores are averaged over a dyadic downscale pyramid
//! and mapped onto [0, output_gain].
//!
//! `scale_score` is normatively defined by the naive nested-loop formula;
//! the sliding-histogram implementation here must match it bit-exactly.
//! Per pixel every quantity entering the evidence expression is an integer
//! count, and the spatial sum over masked-in pixels is accumulated pairwise
//! (recursive halving, split at len/2) in row-major order.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::media::{FrameSequence, LumaPlane};

/// Detector configuration. Defaults are the shipped operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandingParams {
    /// Number of dyadic pyramid levels scored.
    pub num_scales: usize,
    /// Coincidence window side in pixels, odd.
    pub window: usize,
    /// Texture-mask neighborhood side in pixels, odd.
    pub mask_neighborhood: usize,
    /// A neighbor differing by more than this many codewords votes "texture".
    pub mask_diff_threshold: u16,
    /// Maximum texture votes for a pixel to stay a flat candidate.
    pub mask_count_limit: usize,
    /// Detectable codeword step sizes, ascending.
    pub steps: Vec<u16>,
    /// Contrast weight per step, in (0, 1].
    pub step_weights: BTreeMap<u16, f64>,
    /// Codewords outside [low, high] never participate.
    pub video_range: (u16, u16),
    /// Scale factor mapping the raw [0, 1] score onto the output range.
    pub output_gain: f64,
}

impl Default for BandingParams {
    fn default() -> Self {
        BandingParams {
            num_scales: 4,
            window: 31,
            mask_neighborhood: 3,
            mask_diff_threshold: 2,
            mask_count_limit: 6,
            steps: vec![1, 2, 4, 8],
            step_weights: BTreeMap::from([(1, 0.25), (2, 0.5), (4, 0.75), (8, 1.0)]),
            video_range: (64, 940),
            output_gain: 24.0,
        }
    }
}

impl BandingParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_scales < 1 {
            return Err(Error::InvalidParams("num_scales must be >= 1".into()));
        }
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.mask_neighborhood < 1 || self.mask_neighborhood % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "mask_neighborhood must be odd, got {}",
                self.mask_neighborhood
            )));
        }
        if self.steps.is_empty() {
            return Err(Error::InvalidParams("steps must be non-empty".into()));
        }
        let mut prev = 0u16;
        for &s in &self.steps {
            if s == 0 || s <= prev {
                return Err(Error::InvalidParams(
                    "steps must be positive and strictly ascending".into(),
                ));
            }
            prev = s;
            match self.step_weights.get(&s) {
                Some(&w) if w > 0.0 && w <= 1.0 => {}
                Some(&w) => {
                    return Err(Error::InvalidParams(format!(
                        "weight for step {s} must be in (0, 1], got {w}"
                    )))
                }
                None => return Err(Error::InvalidParams(format!("step {s} has no weight"))),
            }
        }
        if self.video_range.0 >= self.video_range.1 {
            return Err(Error::InvalidParams(format!(
                "video range low {} must be below high {}",
                self.video_range.0, self.video_range.1
            )));
        }
        if !(self.output_gain > 0.0) {
            return Err(Error::InvalidParams("output_gain must be positive".into()));
        }
        Ok(())
    }
}

/// Per-frame and pooled banding index for a sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandingReport {
    pub per_frame: Vec<f64>,
    pub pooled: f64,
    #[serde(rename = "params")]
    pub params_used: BandingParams,
}

/// Boolean flat-candidate plane produced by [`spatial_mask`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Mask {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    pub fn count_in(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }
}

/// Flat-candidate selection: a pixel stays masked-in when at most
/// `mask_count_limit` neighbors in the `mask_neighborhood` window differ
/// from it by more than `mask_diff_threshold` codewords, and its own value
/// lies inside the video range. Borders use the truncated neighborhood.
pub fn spatial_mask(plane: &LumaPlane, params: &BandingParams) -> Result<Mask> {
    params.validate()?;
    let (w, h) = (plane.width, plane.height);
    let r = params.mask_neighborhood / 2;
    let (lo, hi) = params.video_range;
    let thr = params.mask_diff_threshold;
    let mut cells = vec![false; w * h];
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for x in 0..w {
            let v = plane.get(x, y);
            if v < lo || v > hi {
                continue;
            }
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let mut votes = 0usize;
            'scan: for ny in y0..=y1 {
                for &q in &plane.samples[ny * w + x0..=ny * w + x1] {
                    if q.abs_diff(v) > thr {
                        votes += 1;
                        if votes > params.mask_count_limit {
                            break 'scan;
                        }
                    }
                }
            }
            cells[y * w + x] = votes <= params.mask_count_limit;
        }
    }
    Ok(Mask {
        width: w,
        height: h,
        cells,
    })
}

/// Halves each dimension by averaging 2x2 blocks with round-half-up.
/// An odd trailing row or column is dropped.
pub fn downscale(plane: &LumaPlane) -> Result<LumaPlane> {
    let (w, h) = (plane.width, plane.height);
    if w < 2 || h < 2 {
        return Err(Error::PlaneTooSmall(format!(
            "{w}x{h} cannot be downscaled"
        )));
    }
    let (ow, oh) = (w / 2, h / 2);
    let mut samples = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        let top = &plane.samples[(2 * oy) * w..(2 * oy) * w + w];
        let bot = &plane.samples[(2 * oy + 1) * w..(2 * oy + 1) * w + w];
        for ox in 0..ow {
            let sum = u32::from(top[2 * ox])
                + u32::from(top[2 * ox + 1])
                + u32::from(bot[2 * ox])
                + u32::from(bot[2 * ox + 1]);
            samples.push(((sum + 2) / 4) as u16);
        }
    }
    LumaPlane::new(ow, oh, samples)
}

/// Deterministic pairwise accumulation: split at len/2 recursively.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Step-coincidence score for one pyramid level, in [0, 1].
///
/// For each masked-in pixel p with value v, over the window restricted to
/// masked-in pixels: n0 counts value v, n(s,±) counts value v±s. Evidence is
/// max over steps and signs of weight(s) · min(n0, n(s,±)), divided by half
/// the in-frame window population and clipped to [0, 1]. The score is the
/// pairwise sum of evidence over masked-in pixels in row-major order,
/// divided by the total pixel count of the plane.
///
/// Implemented with a sliding window histogram; bit-exact against the naive
/// nested-loop definition because all counts are integers and the evidence
/// expression and summation order are identical.
pub fn scale_score(plane: &LumaPlane, mask: &Mask, params: &BandingParams) -> Result<f64> {
    params.validate()?;
    if mask.width != plane.width || mask.height != plane.height {
        return Err(Error::InvalidDimensions(format!(
            "mask {}x{} does not match plane {}x{}",
            mask.width, mask.height, plane.width, plane.height
        )));
    }
    let (w, h) = (plane.width, plane.height);
    let half = params.window / 2;
    let steps: Vec<(u16, f64)> = params
        .steps
        .iter()
        .map(|&s| (s, params.step_weights[&s]))
        .collect();

    // Masked-out pixels are diverted to a sentinel bin so the sliding
    // updates stay branchless; the sentinel is never queried.
    const SENTINEL: u16 = 1024;
    let coded: Vec<u16> = plane
        .samples
        .iter()
        .zip(&mask.cells)
        .map(|(&s, &m)| if m { s } else { SENTINEL })
        .collect();

    // Evidence buffer in plane layout; only masked-in entries are read back.
    let mut evidence = vec![0.0f64; w * h];
    let mut hist = [0u32; 2048];

    // The histogram slides down each column strip so that row insertions and
    // removals touch contiguous memory.
    for x in 0..w {
        let x0 = x.saturating_sub(half);
        let x1 = (x + half).min(w - 1);
        let cols = x1 - x0 + 1;
        hist.iter_mut().for_each(|c| *c = 0);
        // Seed rows for y = 0.
        let seed_rows = half.min(h - 1);
        for ny in 0..=seed_rows {
            add_row(&mut hist, &coded, ny * w + x0, ny * w + x1);
        }
        for y in 0..h {
            if y > 0 {
                let enter = y + half;
                if enter < h {
                    add_row(&mut hist, &coded, enter * w + x0, enter * w + x1);
                }
                if y > half {
                    let leave = y - half - 1;
                    remove_row(&mut hist, &coded, leave * w + x0, leave * w + x1);
                }
            }
            if !mask.get(x, y) {
                continue;
            }
            let y0 = y.saturating_sub(half);
            let y1 = (y + half).min(h - 1);
            let nwin = cols * (y1 - y0 + 1);
            let v = plane.get(x, y);
            evidence[y * w + x] = pixel_evidence(&hist, v, nwin, &steps);
        }
    }

    let in_order: Vec<f64> = mask
        .cells
        .iter()
        .zip(evidence.iter())
        .filter(|(&m, _)| m)
        .map(|(_, &c)| c)
        .collect();
    Ok(pairwise_sum(&in_order) / (w * h) as f64)
}

#[inline]
fn pixel_evidence(hist: &[u32; 2048], v: u16, nwin: usize, steps: &[(u16, f64)]) -> f64 {
    let n0 = hist[usize::from(v) & 2047];
    let mut best = 0.0f64;
    for &(s, weight) in steps {
        let up = v + s;
        if up <= 1023 {
            let n = hist[usize::from(up) & 2047];
            best = best.max(weight * f64::from(n0.min(n)));
        }
        if let Some(dn) = v.checked_sub(s) {
            let n = hist[usize::from(dn) & 2047];
            best = best.max(weight * f64::from(n0.min(n)));
        }
    }
    (best / (nwin as f64 / 2.0)).clamp(0.0, 1.0)
}

#[inline]
fn add_row(hist: &mut [u32; 2048], coded: &[u16], from: usize, to: usize) {
    for &c in &coded[from..=to] {
        hist[usize::from(c) & 2047] += 1;
    }
}

#[inline]
fn remove_row(hist: &mut [u32; 2048], coded: &[u16], from: usize, to: usize) {
    for &c in &coded[from..=to] {
        hist[usize::from(c) & 2047] -= 1;
    }
}

/// Banding index of one frame: output_gain times the clipped mean of the
/// per-scale scores over the dyadic pyramid. Every scale recomputes its mask.
pub fn frame_banding_index(plane: &LumaPlane, params: &BandingParams) -> Result<f64> {
    params.validate()?;
    let needed = 1usize << (params.num_scales - 1);
    if plane.width < needed || plane.height < needed {
        return Err(Error::PlaneTooSmall(format!(
            "{}x{} cannot host a {}-level pyramid",
            plane.width, plane.height, params.num_scales
        )));
    }
    let mut level = plane.clone();
    let mut scores = Vec::with_capacity(params.num_scales);
    for k in 0..params.num_scales {
        let mask = spatial_mask(&level, params)?;
        scores.push(scale_score(&level, &mask, params)?);
        if k + 1 < params.num_scales {
            level = downscale(&level)?;
        }
    }
    let mean = scores.iter().sum::<f64>() / params.num_scales as f64;
    Ok(params.output_gain * mean.clamp(0.0, 1.0))
}

/// Scores every frame and pools by arithmetic mean. Frames are scored
/// concurrently; results are assembled in frame order.
pub fn sequence_banding_index(
    frames: &FrameSequence,
    params: &BandingParams,
) -> Result<BandingReport> {
    use rayon::prelude::*;
    if frames.frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let per_frame: Vec<f64> = frames
        .frames
        .par_iter()
        .map(|f| frame_banding_index(f, params))
        .collect::<Result<_>>()?;
    let pooled = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok(BandingReport {
        per_frame,
        pooled,
        params_used: params.clone(),
    })
}
