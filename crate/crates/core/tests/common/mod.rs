//! Shared test support: independent naive oracles and fixture builders.
//!
//! The oracles deliberately re-derive every quantity with direct nested
//! loops; they share no code with the library implementations they check.

#![allow(dead_code)]

use bandaware_core::banding::{BandingParams, Mask};
use bandaware_core::media::LumaPlane;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// banding oracles
// ---------------------------------------------------------------------------

/// Naive flat-candidate mask: counts differing neighbors by direct scan.
pub fn oracle_spatial_mask(plane: &LumaPlane, params: &BandingParams) -> Mask {
    let (w, h) = (plane.width, plane.height);
    let r = (params.mask_neighborhood / 2) as isize;
    let mut cells = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let v = plane.get(x as usize, y as usize);
            if v < params.video_range.0 || v > params.video_range.1 {
                continue;
            }
            let mut votes = 0usize;
            for ny in y - r..=y + r {
                for nx in x - r..=x + r {
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let q = plane.get(nx as usize, ny as usize);
                    if q.abs_diff(v) > params.mask_diff_threshold {
                        votes += 1;
                    }
                }
            }
            cells[y as usize * w + x as usize] = votes <= params.mask_count_limit;
        }
    }
    Mask {
        width: w,
        height: h,
        cells,
    }
}

/// Recursive-halving sum, re-stated independently of the library.
pub fn oracle_pairwise_sum(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if values.len() == 1 {
        return values[0];
    }
    let mid = values.len() / 2;
    oracle_pairwise_sum(&values[..mid]) + oracle_pairwise_sum(&values[mid..])
}

/// Naive nested-loop scale score: for each masked-in pixel, scan the whole
/// window counting coincidences at v and v +/- s over masked-in pixels.
pub fn oracle_scale_score(plane: &LumaPlane, mask: &Mask, params: &BandingParams) -> f64 {
    let (w, h) = (plane.width, plane.height);
    let half = (params.window / 2) as isize;
    let mut evidence = Vec::new();
    for y in 0..h as isize {
        for x in 0..w as isize {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            let v = plane.get(x as usize, y as usize);
            let y0 = (y - half).max(0);
            let y1 = (y + half).min(h as isize - 1);
            let x0 = (x - half).max(0);
            let x1 = (x + half).min(w as isize - 1);
            let nwin = ((y1 - y0 + 1) * (x1 - x0 + 1)) as usize;
            let mut n0 = 0u32;
            let mut n_step: Vec<(u32, u32)> = vec![(0, 0); params.steps.len()];
            for ny in y0..=y1 {
                for nx in x0..=x1 {
                    if !mask.get(nx as usize, ny as usize) {
                        continue;
                    }
                    let q = plane.get(nx as usize, ny as usize);
                    if q == v {
                        n0 += 1;
                    }
                    for (k, &s) in params.steps.iter().enumerate() {
                        if q == v + s {
                            n_step[k].0 += 1;
                        }
                        if v >= s && q == v - s {
                            n_step[k].1 += 1;
                        }
                    }
                }
            }
            let mut best = 0.0f64;
            for (k, &s) in params.steps.iter().enumerate() {
                let wgt = params.step_weights[&s];
                best = best.max(wgt * f64::from(n0.min(n_step[k].0)));
                best = best.max(wgt * f64::from(n0.min(n_step[k].1)));
            }
            evidence.push((best / (nwin as f64 / 2.0)).clamp(0.0, 1.0));
        }
    }
    oracle_pairwise_sum(&evidence) / (w * h) as f64
}

/// Naive frame index: mean of naive per-scale scores over the pyramid.
pub fn oracle_frame_index(plane: &LumaPlane, params: &BandingParams) -> f64 {
    let mut level = plane.clone();
    let mut scores = Vec::new();
    for k in 0..params.num_scales {
        let mask = oracle_spatial_mask(&level, params);
        scores.push(oracle_scale_score(&level, &mask, params));
        if k + 1 < params.num_scales {
            level = oracle_downscale(&level);
        }
    }
    let mean = scores.iter().sum::<f64>() / params.num_scales as f64;
    params.output_gain * mean.clamp(0.0, 1.0)
}

pub fn oracle_downscale(plane: &LumaPlane) -> LumaPlane {
    let (ow, oh) = (plane.width / 2, plane.height / 2);
    let mut samples = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        for ox in 0..ow {
            let sum = u32::from(plane.get(2 * ox, 2 * oy))
                + u32::from(plane.get(2 * ox + 1, 2 * oy))
                + u32::from(plane.get(2 * ox, 2 * oy + 1))
                + u32::from(plane.get(2 * ox + 1, 2 * oy + 1));
            samples.push(((sum + 2) / 4) as u16);
        }
    }
    LumaPlane::new(ow, oh, samples).unwrap()
}

// ---------------------------------------------------------------------------
// stats oracles
// ---------------------------------------------------------------------------

/// Pearson correlation via raw-moment sums.
pub fn oracle_plcc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let cov = sxy - sx * sy / n;
    let vx = sxx - sx * sx / n;
    let vy = syy - sy * sy / n;
    cov / (vx * vy).sqrt()
}

/// Average ranks by counting smaller and equal values.
pub fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&o| o < v).count() as f64;
            let equal = x.iter().filter(|&&o| o == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_srocc(x: &[f64], y: &[f64]) -> f64 {
    oracle_plcc(&oracle_ranks(x), &oracle_ranks(y))
}

/// Direct z-test over all unordered pairs.
pub fn oracle_significant_pairs(mos: &[f64], ci95: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..mos.len() {
        for j in i + 1..mos.len() {
            let se_i = ci95[i] / 1.96;
            let se_j = ci95[j] / 1.96;
            let z = (mos[i] - mos[j]).abs() / (se_i * se_i + se_j * se_j).sqrt();
            if z > 1.96 {
                out.push(if mos[i] > mos[j] { (i, j) } else { (j, i) });
            }
        }
    }
    out
}

/// Quadratic-time AUC: P(positive > negative) + 0.5 P(tie) over the
/// doubled +/- difference construction.
pub fn oracle_auc_bw(mos: &[f64], ci95: &[f64], metric: &[f64]) -> Option<f64> {
    let pairs = oracle_significant_pairs(mos, ci95);
    if pairs.is_empty() {
        return None;
    }
    let pos: Vec<f64> = pairs.iter().map(|&(i, j)| metric[i] - metric[j]).collect();
    let neg: Vec<f64> = pos.iter().map(|d| -d).collect();
    let mut score = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                score += 1.0;
            } else if p == q {
                score += 0.5;
            }
        }
    }
    Some(score / (pos.len() * neg.len()) as f64)
}

// ---------------------------------------------------------------------------
// fixtures
// ---------------------------------------------------------------------------

/// Horizontal linear gradient spanning [lo, hi] codewords, quantized to
/// multiples of `q`, constant down each column.
pub fn quantized_gradient(width: usize, height: usize, lo: u16, hi: u16, q: u16) -> LumaPlane {
    let span = f64::from(hi) - f64::from(lo);
    let row: Vec<u16> = (0..width)
        .map(|x| {
            let v = f64::from(lo) + span * x as f64 / (width - 1) as f64;
            let stepped = (v / f64::from(q)).round() * f64::from(q);
            stepped.clamp(0.0, 1023.0) as u16
        })
        .collect();
    let mut samples = Vec::with_capacity(width * height);
    for _ in 0..height {
        samples.extend_from_slice(&row);
    }
    LumaPlane::new(width, height, samples).unwrap()
}

/// Adds independent uniform {-amp..amp} codeword noise.
pub fn dither(plane: &LumaPlane, amp: i32, rng: &mut ChaCha8Rng) -> LumaPlane {
    let samples: Vec<u16> = plane
        .samples
        .iter()
        .map(|&s| {
            let n = rng.random_range(-amp..=amp);
            (i32::from(s) + n).clamp(0, 1023) as u16
        })
        .collect();
    LumaPlane::new(plane.width, plane.height, samples).unwrap()
}

/// Random low-texture plane: flat patches and gentle quantized ramps with a
/// sprinkle of noisy pixels, so masks and step counts are all non-trivial.
pub fn random_structured_plane(width: usize, height: usize, rng: &mut ChaCha8Rng) -> LumaPlane {
    let q = [1u16, 2, 4, 8][rng.random_range(0..4)];
    let base: u16 = rng.random_range(100..800);
    let span: u16 = rng.random_range(16..200);
    let plane = quantized_gradient(width, height, base, base + span, q);
    let mut samples = plane.samples;
    // Patch a few flat rectangles over the ramp.
    for _ in 0..rng.random_range(2..6) {
        let px = rng.random_range(0..width);
        let py = rng.random_range(0..height);
        let pw = rng.random_range(4..width / 2);
        let ph = rng.random_range(4..height / 2);
        let value: u16 = rng.random_range(64..941);
        for y in py..(py + ph).min(height) {
            for x in px..(px + pw).min(width) {
                samples[y * width + x] = value;
            }
        }
    }
    // Sparse impulse noise to exercise the texture mask.
    for _ in 0..(width * height / 50) {
        let idx = rng.random_range(0..width * height);
        samples[idx] = rng.random_range(0..1024);
    }
    LumaPlane::new(width, height, samples).unwrap()
}

/// Serializes frames as an 8-bit 4:2:0 Y4M stream; samples must be
/// multiples of 4 (10-bit codewords holding promoted 8-bit values).
pub fn write_y4m_8bit(frames: &[LumaPlane], rate: (u32, u32)) -> Vec<u8> {
    let (w, h) = (frames[0].width, frames[0].height);
    assert!(w % 2 == 0 && h % 2 == 0);
    let mut out = format!("YUV4MPEG2 W{w} H{h} F{}:{} Ip A1:1 C420\n", rate.0, rate.1).into_bytes();
    for f in frames {
        out.extend_from_slice(b"FRAME\n");
        for &s in &f.samples {
            assert_eq!(s % 4, 0, "sample {s} is not an 8-bit codeword times 4");
            out.push((s / 4) as u8);
        }
        out.extend(std::iter::repeat(128u8).take((w / 2) * (h / 2) * 2));
    }
    out
}
