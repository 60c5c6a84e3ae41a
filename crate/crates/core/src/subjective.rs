//! Recovery of per-item quality, subject bias and subject inconsistency from
//! raw opinion scores, plus reliability comparison between two experiments.
//!
//! The opinion model follows ITU-T Rec. P.910 Annex E:
//! u_es = psi_e + delta_s + v_s * X with X standard normal.
//! The solver alternates exact closed-form coordinate updates:
//! weighted item means for psi, per-subject residual means for delta (with
//! the centering constant absorbed into psi), and residual variances for
//! v_s^2, floored to keep perfectly consistent subjects finite. Each block
//! is a conditional likelihood maximizer, so the log-likelihood is
//! non-decreasing across iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Variance floor for subject inconsistency (on v^2).
pub const VARIANCE_FLOOR: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Items x subjects opinion grid; `None` marks a missing vote.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    pub scores: Vec<Vec<Option<f64>>>,
    pub item_ids: Vec<String>,
    pub subject_ids: Vec<String>,
}

impl ScoreMatrix {
    pub fn validate(&self) -> Result<()> {
        let ni = self.scores.len();
        let ns = self.subject_ids.len();
        if ni < 2 {
            return Err(Error::InvalidScoreMatrix(format!(
                "need >= 2 items, got {ni}"
            )));
        }
        if ns < 2 {
            return Err(Error::InvalidScoreMatrix(format!(
                "need >= 2 subjects, got {ns}"
            )));
        }
        if self.item_ids.len() != ni {
            return Err(Error::InvalidScoreMatrix(format!(
                "{} item ids for {ni} rows",
                self.item_ids.len()
            )));
        }
        let mut per_subject = vec![0usize; ns];
        for (e, row) in self.scores.iter().enumerate() {
            if row.len() != ns {
                return Err(Error::InvalidScoreMatrix(format!(
                    "row {e} has {} cells, expected {ns}",
                    row.len()
                )));
            }
            let mut seen = 0usize;
            for (s, cell) in row.iter().enumerate() {
                if let Some(u) = cell {
                    if !u.is_finite() || *u < 0.0 || *u > 100.0 {
                        return Err(Error::InvalidScoreMatrix(format!(
                            "score {u} for item {e}, subject {s} is outside [0, 100]"
                        )));
                    }
                    seen += 1;
                    per_subject[s] += 1;
                }
            }
            if seen == 0 {
                return Err(Error::InvalidScoreMatrix(format!(
                    "item {:?} has no scores",
                    self.item_ids[e]
                )));
            }
        }
        if let Some(s) = per_subject.iter().position(|&c| c < 2) {
            return Err(Error::InvalidScoreMatrix(format!(
                "subject {:?} has fewer than 2 scores",
                self.subject_ids[s]
            )));
        }
        Ok(())
    }

    /// Parses the raw score CSV: header row of subject ids, first column
    /// item id, cells numeric or empty for missing votes.
    pub fn from_csv(bytes: &[u8]) -> Result<ScoreMatrix> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(bytes);
        let headers = reader.headers()?.clone();
        if headers.len() < 3 {
            return Err(Error::InvalidScoreMatrix(
                "score CSV needs an item column and at least 2 subjects".into(),
            ));
        }
        let subject_ids: Vec<String> = headers
            .iter()
            .skip(1)
            .map(|h| h.trim().to_string())
            .collect();
        let mut item_ids = Vec::new();
        let mut scores = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record?;
            item_ids.push(record.get(0).unwrap_or_default().trim().to_string());
            let mut row = Vec::with_capacity(subject_ids.len());
            for cell in record.iter().skip(1) {
                let t = cell.trim();
                if t.is_empty() {
                    row.push(None);
                } else {
                    row.push(Some(t.parse::<f64>().map_err(|_| {
                        Error::InvalidScoreMatrix(format!(
                            "non-numeric score {t:?} in row {}",
                            row_idx + 2
                        ))
                    })?));
                }
            }
            scores.push(row);
        }
        let m = ScoreMatrix {
            scores,
            item_ids,
            subject_ids,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Recovered model state: per-item quality with confidence intervals and
/// per-subject bias / inconsistency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MosEstimate {
    pub psi: Vec<f64>,
    pub ci95: Vec<f64>,
    pub delta: Vec<f64>,
    /// Subject inconsistency as a standard deviation.
    pub v: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Model log-likelihood after each iteration.
    pub log_likelihood: Vec<f64>,
}

fn log_likelihood(m: &ScoreMatrix, psi: &[f64], delta: &[f64], var: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (e, row) in m.scores.iter().enumerate() {
        for (s, cell) in row.iter().enumerate() {
            if let Some(u) = cell {
                let r = u - psi[e] - delta[s];
                ll += -0.5 * (2.0 * std::f64::consts::PI * var[s]).ln() - r * r / (2.0 * var[s]);
            }
        }
    }
    ll
}

/// Maximum-likelihood recovery by alternating coordinate updates until the
/// largest psi change drops below `tol`. On non-convergence the partial
/// result is returned with `converged = false`.
pub fn solve_mle(m: &ScoreMatrix, tol: f64, max_iter: usize) -> Result<MosEstimate> {
    m.validate()?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParams(format!(
            "tol {tol} and max_iter {max_iter} must be positive"
        )));
    }
    let ns = m.subject_ids.len();

    // psi starts at plain per-item means; delta at zero; v at one.
    let mut psi: Vec<f64> = m
        .scores
        .iter()
        .map(|row| {
            let vals: Vec<f64> = row.iter().flatten().copied().collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    let mut delta = vec![0.0; ns];
    let mut var = vec![1.0; ns];

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let prev_psi = psi.clone();

        for (e, row) in m.scores.iter().enumerate() {
            let mut num = 0.0;
            let mut den = 0.0;
            for (s, cell) in row.iter().enumerate() {
                if let Some(u) = cell {
                    let w = 1.0 / var[s];
                    num += w * (u - delta[s]);
                    den += w;
                }
            }
            psi[e] = num / den;
        }

        for (s, d) in delta.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (e, row) in m.scores.iter().enumerate() {
                if let Some(u) = row[s] {
                    sum += u - psi[e];
                    count += 1;
                }
            }
            *d = sum / count as f64;
        }
        // Identifiability: center delta, absorbing the constant into psi.
        let shift = delta.iter().sum::<f64>() / ns as f64;
        delta.iter_mut().for_each(|d| *d -= shift);
        psi.iter_mut().for_each(|p| *p += shift);

        for (s, v2) in var.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (e, row) in m.scores.iter().enumerate() {
                if let Some(u) = row[s] {
                    let r = u - psi[e] - delta[s];
                    sum += r * r;
                    count += 1;
                }
            }
            *v2 = (sum / count as f64).max(VARIANCE_FLOOR);
        }

        trace.push(log_likelihood(m, &psi, &delta, &var));

        let max_dpsi = psi
            .iter()
            .zip(&prev_psi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        // The first iteration starts from plain means with equal weights, so
        // psi cannot move yet; convergence is only meaningful once the
        // subject weights have fed back into psi.
        if max_dpsi < tol && iterations >= 2 {
            converged = true;
            break;
        }
    }

    let ci95: Vec<f64> = m
        .scores
        .iter()
        .map(|row| {
            let info: f64 = row
                .iter()
                .enumerate()
                .filter_map(|(s, cell)| cell.map(|_| 1.0 / var[s]))
                .sum();
            1.96 / info.sqrt()
        })
        .collect();

    Ok(MosEstimate {
        psi,
        ci95,
        delta,
        v: var.iter().map(|v2| v2.sqrt()).collect(),
        iterations,
        converged,
        log_likelihood: trace,
    })
}

/// Plain per-item mean with a normal-approximation ci95. Items with fewer
/// than two scores get no interval.
#[derive(Debug, Clone)]
pub struct PlainMos {
    pub mean: Vec<f64>,
    pub ci95: Vec<Option<f64>>,
}

pub fn plain_mos(m: &ScoreMatrix) -> Result<PlainMos> {
    m.validate()?;
    let mut mean = Vec::with_capacity(m.scores.len());
    let mut ci = Vec::with_capacity(m.scores.len());
    for row in &m.scores {
        let vals: Vec<f64> = row.iter().flatten().copied().collect();
        let n = vals.len() as f64;
        let mu = vals.iter().sum::<f64>() / n;
        mean.push(mu);
        if vals.len() < 2 {
            ci.push(None);
        } else {
            let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
            ci.push(Some(1.96 * var.sqrt() / n.sqrt()));
        }
    }
    Ok(PlainMos { mean, ci95: ci })
}

/// One experiment's per-item MOS and ci95 half-widths, aligned by item id.
#[derive(Debug, Clone)]
pub struct MosWithCi {
    pub item_ids: Vec<String>,
    pub mos: Vec<f64>,
    pub ci95: Vec<f64>,
}

impl MosWithCi {
    pub fn validate(&self) -> Result<()> {
        if self.item_ids.len() != self.mos.len() || self.mos.len() != self.ci95.len() {
            return Err(Error::MisalignedInputs(format!(
                "{} ids, {} mos, {} ci95",
                self.item_ids.len(),
                self.mos.len(),
                self.ci95.len()
            )));
        }
        if self.mos.len() < 2 {
            return Err(Error::InvalidParams("need at least 2 items".into()));
        }
        Ok(())
    }
}

/// Pairs flipped in rank order between two experiments while statistically
/// significant in both, plus the cross-experiment correlations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankFlipReport {
    pub flipped_significant_pairs: Vec<(String, String)>,
    pub plcc: f64,
    pub srocc: f64,
}

pub fn reliability_compare(a: &MosWithCi, b: &MosWithCi) -> Result<RankFlipReport> {
    a.validate()?;
    b.validate()?;
    if a.item_ids != b.item_ids {
        return Err(Error::MisalignedInputs(
            "experiments do not list the same items in the same order".into(),
        ));
    }
    let sig_a = stats::significant_pairs(&a.mos, &a.ci95)?;
    let sig_b = stats::significant_pairs(&b.mos, &b.ci95)?;
    let set_b: std::collections::BTreeSet<(usize, usize)> = sig_b
        .iter()
        .map(|&(i, j)| if i < j { (i, j) } else { (j, i) })
        .collect();
    let mut flipped = Vec::new();
    for &(i, j) in &sig_a {
        let key = if i < j { (i, j) } else { (j, i) };
        if !set_b.contains(&key) {
            continue;
        }
        // Oriented so a.mos[i] > a.mos[j]; a flip means b disagrees.
        if b.mos[i] < b.mos[j] {
            flipped.push((a.item_ids[i].clone(), a.item_ids[j].clone()));
        }
    }
    Ok(RankFlipReport {
        flipped_significant_pairs: flipped,
        plcc: stats::plcc(&a.mos, &b.mos)?,
        srocc: stats::srocc(&a.mos, &b.mos)?,
    })
}
