//! Correlation and discrimination statistics: PLCC, SROCC, significance-gated
//! pairs and the better/worse AUC.

use crate::error::{Error, Result};

/// Scores aligned per item; ci95 half-widths are required for the AUC.
#[derive(Debug, Clone)]
pub struct ScoredItems {
    pub mos: Vec<f64>,
    pub ci95: Option<Vec<f64>>,
    pub metric: Vec<f64>,
}

impl ScoredItems {
    pub fn validate(&self) -> Result<()> {
        let n = self.mos.len();
        if n < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 items, got {n}"
            )));
        }
        if self.metric.len() != n {
            return Err(Error::MisalignedInputs(format!(
                "mos has {n} items, metric has {}",
                self.metric.len()
            )));
        }
        if let Some(ci) = &self.ci95 {
            if ci.len() != n {
                return Err(Error::MisalignedInputs(format!(
                    "mos has {n} items, ci95 has {}",
                    ci.len()
                )));
            }
            if ci.iter().any(|&c| c < 0.0 || !c.is_finite()) {
                return Err(Error::InvalidParams(
                    "ci95 half-widths must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "{name} contains non-finite values"
        )));
    }
    Ok(())
}

/// Pearson product-moment correlation. No nonlinear mapping is applied.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::MisalignedInputs(format!(
            "lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParams("need at least 2 points".into()));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("x has zero variance".into()));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("y has zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ascending average ranks starting at 1; ties get the mean of their positions.
pub fn ranks(x: &[f64]) -> Result<Vec<f64>> {
    check_finite("x", x)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        // Positions i..=j are tied; each gets the mean 1-based rank.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    Ok(out)
}

/// Spearman rank-order correlation: Pearson correlation of average ranks.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::MisalignedInputs(format!(
            "lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParams("need at least 2 points".into()));
    }
    let rx = ranks(x)?;
    let ry = ranks(y)?;
    plcc(&rx, &ry).map_err(|e| match e {
        Error::UndefinedCorrelation(_) => Error::UndefinedCorrelation("constant input".into()),
        other => other,
    })
}

/// Pairs whose MOS difference clears a two-sided z-test at 1.96, treating
/// ci95 half-widths as 1.96 standard errors. Each unordered pair is emitted
/// once, oriented so that mos[i] > mos[j].
pub fn significant_pairs(mos: &[f64], ci95: &[f64]) -> Result<Vec<(usize, usize)>> {
    if mos.len() != ci95.len() {
        return Err(Error::MisalignedInputs(format!(
            "mos has {} items, ci95 has {}",
            mos.len(),
            ci95.len()
        )));
    }
    check_finite("mos", mos)?;
    let se: Vec<f64> = ci95.iter().map(|c| c / 1.96).collect();
    let mut out = Vec::new();
    for i in 0..mos.len() {
        for j in i + 1..mos.len() {
            let z = (mos[i] - mos[j]).abs() / (se[i] * se[i] + se[j] * se[j]).sqrt();
            if z > 1.96 {
                if mos[i] > mos[j] {
                    out.push((i, j));
                } else {
                    out.push((j, i));
                }
            }
        }
    }
    Ok(out)
}

/// Mann-Whitney AUC over metric differences of significant pairs.
///
/// Each pair oriented better-first contributes its metric difference d as a
/// positive sample and -d as a negative sample; ties count 0.5. A value of
/// 0.5 is chance, 1.0 means the metric orders every significant pair
/// correctly.
pub fn auc_bw(items: &ScoredItems) -> Result<f64> {
    items.validate()?;
    let ci95 = items
        .ci95
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("auc_bw requires ci95 half-widths".into()))?;
    check_finite("metric", &items.metric)?;
    let pairs = significant_pairs(&items.mos, ci95)?;
    if pairs.is_empty() {
        return Err(Error::NoSignificantPairs);
    }
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| items.metric[i] - items.metric[j])
        .collect();
    Ok(rank_sum_auc(&diffs))
}

/// AUC of {d} (positive class) versus {-d} via the rank-sum statistic.
fn rank_sum_auc(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    let mut combined = Vec::with_capacity(2 * n);
    combined.extend(diffs.iter().map(|&d| (d, true)));
    combined.extend(diffs.iter().map(|&d| (-d, false)));
    combined.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Average ranks over tie groups, accumulated for the positive class.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < combined.len() {
        let mut j = i;
        while j + 1 < combined.len() && combined[j + 1].0 == combined[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &(_, is_pos) in &combined[i..=j] {
            if is_pos {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let nf = n as f64;
    let u = rank_sum_pos - nf * (nf + 1.0) / 2.0;
    u / (nf * nf)
}
