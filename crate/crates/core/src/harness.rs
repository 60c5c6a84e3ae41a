//! Dataset manifests and metric-evaluation reports.
//!
//! Metric scores (VMAF, SSIM, ...) are ingested from CSV, never computed
//! here; the banding index column is produced by the `score` pipeline or an
//! external tool.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::{self, ScoredItems};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestItem {
    pub item_id: String,
    pub source_id: String,
    pub mos: f64,
    pub ci95: Option<f64>,
    /// Aligned with `DatasetManifest::metric_columns`; None is an explicit null.
    pub metrics: Vec<Option<f64>>,
}

/// Per-item dataset records with named metric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub has_ci95: bool,
    pub metric_columns: Vec<String>,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn metric_index(&self, name: &str) -> Result<usize> {
        self.metric_columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownMetric(name.to_string()))
    }

    pub fn metric_values(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self.metric_index(name)?;
        Ok(self.items.iter().map(|it| it.metrics[idx]).collect())
    }

    /// Non-null metric values paired with the item's mos and ci95.
    pub fn metric_with_mos(
        &self,
        name: &str,
    ) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>, usize)> {
        let idx = self.metric_index(name)?;
        let mut metric = Vec::new();
        let mut mos = Vec::new();
        let mut ci = Vec::new();
        let mut excluded = 0usize;
        let mut ci_complete = self.has_ci95;
        for it in &self.items {
            match it.metrics[idx] {
                Some(v) => {
                    metric.push(v);
                    mos.push(it.mos);
                    match it.ci95 {
                        Some(c) => ci.push(c),
                        None => ci_complete = false,
                    }
                }
                None => excluded += 1,
            }
        }
        Ok((
            metric,
            mos,
            if ci_complete { Some(ci) } else { None },
            excluded,
        ))
    }
}

fn parse_cell(raw: &str, what: &str, row: usize) -> Result<Option<f64>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    trimmed
        .parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Manifest(format!("non-numeric {what} {trimmed:?} in row {row}")))
}

/// Parses a manifest from CSV bytes. Required headers: item_id, source_id,
/// mos. An optional ci95 column carries 95% half-widths. Every remaining
/// column is a metric.
pub fn parse_manifest(name: &str, bytes: &[u8]) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let id_col =
        find("item_id").ok_or_else(|| Error::Manifest("missing required header item_id".into()))?;
    let source_col = find("source_id")
        .ok_or_else(|| Error::Manifest("missing required header source_id".into()))?;
    let mos_col =
        find("mos").ok_or_else(|| Error::Manifest("missing required header mos".into()))?;
    let ci_col = find("ci95");
    let metric_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != id_col && *i != source_col && *i != mos_col && Some(*i) != ci_col)
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let mut items = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 2;
        let item_id = record.get(id_col).unwrap_or_default().trim().to_string();
        if item_id.is_empty() {
            return Err(Error::Manifest(format!("empty item_id in row {row}")));
        }
        if !seen.insert(item_id.clone()) {
            return Err(Error::Manifest(format!("duplicate item_id {item_id:?}")));
        }
        let mos = parse_cell(record.get(mos_col).unwrap_or_default(), "mos", row)?
            .ok_or_else(|| Error::Manifest(format!("missing mos in row {row}")))?;
        let ci95 = match ci_col {
            Some(c) => parse_cell(record.get(c).unwrap_or_default(), "ci95", row)?,
            None => None,
        };
        let mut metrics = Vec::with_capacity(metric_cols.len());
        for (col, header) in &metric_cols {
            metrics.push(parse_cell(
                record.get(*col).unwrap_or_default(),
                &format!("metric {header:?}"),
                row,
            )?);
        }
        items.push(ManifestItem {
            item_id,
            source_id: record
                .get(source_col)
                .unwrap_or_default()
                .trim()
                .to_string(),
            mos,
            ci95,
            metrics,
        });
    }
    if items.is_empty() {
        return Err(Error::Manifest("manifest has no items".into()));
    }
    Ok(DatasetManifest {
        name: name.to_string(),
        has_ci95: ci_col.is_some(),
        metric_columns: metric_cols.into_iter().map(|(_, h)| h).collect(),
        items,
    })
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let bytes = std::fs::read(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_manifest(&name, &bytes)
}

/// Serializes a manifest back to CSV: item_id, source_id, mos, [ci95],
/// then the metric columns in manifest order.
pub fn manifest_to_csv(manifest: &DatasetManifest) -> String {
    let mut header = vec![
        "item_id".to_string(),
        "source_id".to_string(),
        "mos".to_string(),
    ];
    if manifest.has_ci95 {
        header.push("ci95".to_string());
    }
    header.extend(manifest.metric_columns.iter().cloned());
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = header.join(",");
    out.push('\n');
    for it in &manifest.items {
        let mut cells = vec![it.item_id.clone(), it.source_id.clone(), it.mos.to_string()];
        if manifest.has_ci95 {
            cells.push(fmt(it.ci95));
        }
        cells.extend(it.metrics.iter().map(|&m| fmt(m)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One metric's evaluation against MOS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEval {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plcc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub srocc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc_bw: Option<f64>,
    pub n_items: usize,
    pub n_significant_pairs: usize,
    pub n_excluded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub metrics: Vec<MetricEval>,
}

/// Evaluates the named metrics against MOS. Items with a null value are
/// excluded per metric; AUC is reported only when ci95 is available for the
/// retained items and at least one pair is significant. A metric whose
/// correlation is undefined is reported with an error note while the other
/// metrics still evaluate.
pub fn evaluate(manifest: &DatasetManifest, metric_names: &[String]) -> Result<EvalReport> {
    for name in metric_names {
        manifest.metric_index(name)?;
    }
    let mut metrics = Vec::with_capacity(metric_names.len());
    for name in metric_names {
        let (metric, mos, ci, excluded) = manifest.metric_with_mos(name)?;
        let n_items = metric.len();
        let mut entry = MetricEval {
            name: name.clone(),
            plcc: None,
            srocc: None,
            auc_bw: None,
            n_items,
            n_significant_pairs: 0,
            n_excluded: excluded,
            error: None,
        };
        if n_items < 2 {
            entry.error = Some("fewer than 2 items with values".into());
            metrics.push(entry);
            continue;
        }
        match (stats::plcc(&metric, &mos), stats::srocc(&metric, &mos)) {
            (Ok(p), Ok(s)) => {
                entry.plcc = Some(p);
                entry.srocc = Some(s);
            }
            (Err(e), _) | (_, Err(e)) => {
                entry.error = Some(e.to_string());
                metrics.push(entry);
                continue;
            }
        }
        if let Some(ci) = ci {
            entry.n_significant_pairs = stats::significant_pairs(&mos, &ci)?.len();
            if entry.n_significant_pairs > 0 {
                let items = ScoredItems {
                    mos,
                    ci95: Some(ci),
                    metric,
                };
                entry.auc_bw = Some(stats::auc_bw(&items)?);
            }
        }
        metrics.push(entry);
    }
    Ok(EvalReport {
        dataset: manifest.name.clone(),
        metrics,
    })
}

pub enum ReportFormat {
    Json,
    Csv,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn rounded(report: &EvalReport) -> EvalReport {
    let mut out = report.clone();
    for m in &mut out.metrics {
        m.plcc = m.plcc.map(round6);
        m.srocc = m.srocc.map(round6);
        m.auc_bw = m.auc_bw.map(round6);
    }
    out
}

/// Deterministic serialization: stable key order, values rounded to six
/// decimal places, optional fields omitted rather than null-padded.
pub fn report_to_string(report: &EvalReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rounded(report))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut out = String::from(
                "name,plcc,srocc,auc_bw,n_items,n_significant_pairs,n_excluded,error\n",
            );
            let fmt = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_default();
            for m in &report.metrics {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    m.name,
                    fmt(m.plcc),
                    fmt(m.srocc),
                    fmt(m.auc_bw),
                    m.n_items,
                    m.n_significant_pairs,
                    m.n_excluded,
                    m.error.clone().unwrap_or_default()
                ));
            }
            Ok(out)
        }
    }
}

pub fn write_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<()> {
    let body = report_to_string(report, format)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}
