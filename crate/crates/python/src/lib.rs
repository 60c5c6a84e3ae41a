//! Python bindings for the bandaware toolkit.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bandaware_core::banding;
use bandaware_core::error::Error;
use bandaware_core::fusion;
use bandaware_core::harness;
use bandaware_core::media::{self, ChromaFormat, LumaPlane};
use bandaware_core::stats;
use bandaware_core::subjective;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Banding detector configuration.
#[pyclass(name = "BandingParams", from_py_object)]
#[derive(Clone)]
struct PyBandingParams {
    inner: banding::BandingParams,
}

#[pymethods]
impl PyBandingParams {
    #[new]
    #[pyo3(signature = (num_scales=None, window=None, output_gain=None))]
    fn new(
        num_scales: Option<usize>,
        window: Option<usize>,
        output_gain: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = banding::BandingParams::default();
        if let Some(n) = num_scales {
            inner.num_scales = n;
        }
        if let Some(w) = window {
            inner.window = w;
        }
        if let Some(g) = output_gain {
            inner.output_gain = g;
        }
        inner.validate().map_err(err)?;
        Ok(PyBandingParams { inner })
    }

    #[getter]
    fn num_scales(&self) -> usize {
        self.inner.num_scales
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.window
    }

    #[getter]
    fn output_gain(&self) -> f64 {
        self.inner.output_gain
    }

    #[getter]
    fn steps(&self) -> Vec<u16> {
        self.inner.steps.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "BandingParams(num_scales={}, window={}, output_gain={})",
            self.inner.num_scales, self.inner.window, self.inner.output_gain
        )
    }
}

/// Fusion configuration; alpha defaults to 0.85 on a 0-100 scale.
#[pyclass(name = "FusionParams", from_py_object)]
#[derive(Clone)]
struct PyFusionParams {
    inner: fusion::FusionParams,
}

#[pymethods]
impl PyFusionParams {
    #[new]
    #[pyo3(signature = (alpha=0.85, floor=0.0, ceiling=100.0))]
    fn new(alpha: f64, floor: f64, ceiling: f64) -> PyResult<Self> {
        let inner = fusion::FusionParams {
            alpha,
            floor,
            ceiling,
        };
        inner.validate().map_err(err)?;
        Ok(PyFusionParams { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn floor(&self) -> f64 {
        self.inner.floor
    }

    #[getter]
    fn ceiling(&self) -> f64 {
        self.inner.ceiling
    }

    fn __repr__(&self) -> String {
        format!(
            "FusionParams(alpha={}, floor={}, ceiling={})",
            self.inner.alpha, self.inner.floor, self.inner.ceiling
        )
    }
}

fn report_to_dict<'py>(
    py: Python<'py>,
    report: &banding::BandingReport,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("per_frame", report.per_frame.clone())?;
    d.set_item("pooled", report.pooled)?;
    Ok(d)
}

/// Banding index of a Y4M file: dict with per_frame and pooled values.
#[pyfunction]
#[pyo3(signature = (path, params=None))]
fn score_y4m<'py>(
    py: Python<'py>,
    path: &str,
    params: Option<PyBandingParams>,
) -> PyResult<Bound<'py, PyDict>> {
    let bytes = std::fs::read(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let seq = media::read_y4m(&bytes).map_err(err)?;
    let p = params.map(|p| p.inner).unwrap_or_default();
    let report = banding::sequence_banding_index(&seq, &p).map_err(err)?;
    report_to_dict(py, &report)
}

/// Banding index of a headerless planar YUV file.
#[pyfunction]
#[pyo3(signature = (path, width, height, bit_depth, chroma="420", params=None))]
fn score_raw_yuv<'py>(
    py: Python<'py>,
    path: &str,
    width: usize,
    height: usize,
    bit_depth: u8,
    chroma: &str,
    params: Option<PyBandingParams>,
) -> PyResult<Bound<'py, PyDict>> {
    let chroma = match chroma {
        "420" => ChromaFormat::C420,
        "444" => ChromaFormat::C444,
        "luma" => ChromaFormat::LumaOnly,
        other => {
            return Err(PyValueError::new_err(format!(
                "chroma must be 420, 444 or luma, got {other:?}"
            )))
        }
    };
    let bytes = std::fs::read(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let seq = media::read_raw_yuv(&bytes, width, height, bit_depth, chroma).map_err(err)?;
    let p = params.map(|p| p.inner).unwrap_or_default();
    let report = banding::sequence_banding_index(&seq, &p).map_err(err)?;
    report_to_dict(py, &report)
}

/// Banding index of one frame given as row-major 10-bit samples.
#[pyfunction]
#[pyo3(signature = (samples, width, height, params=None))]
fn frame_banding_index(
    samples: Vec<u16>,
    width: usize,
    height: usize,
    params: Option<PyBandingParams>,
) -> PyResult<f64> {
    let plane = LumaPlane::new(width, height, samples).map_err(err)?;
    let p = params.map(|p| p.inner).unwrap_or_default();
    banding::frame_banding_index(&plane, &p).map_err(err)
}

/// Banding-aware score: clip(vmaf - alpha * banding_index).
#[pyfunction]
#[pyo3(signature = (vmaf, banding_index, params=None))]
fn fuse(vmaf: f64, banding_index: f64, params: Option<PyFusionParams>) -> PyResult<f64> {
    let p = params.map(|p| p.inner).unwrap_or_default();
    fusion::fuse(vmaf, banding_index, &p).map_err(err)
}

/// Grid-search calibration; returns (best_alpha, best_srocc, curve).
#[pyfunction]
#[pyo3(signature = (mos, vmaf, banding, grid_lo=0.0, grid_hi=2.0, grid_step=0.01))]
fn calibrate_alpha(
    mos: Vec<f64>,
    vmaf: Vec<f64>,
    banding: Vec<f64>,
    grid_lo: f64,
    grid_hi: f64,
    grid_step: f64,
) -> PyResult<(f64, f64, Vec<(f64, f64)>)> {
    if mos.len() != vmaf.len() || mos.len() != banding.len() {
        return Err(PyValueError::new_err(
            "mos, vmaf and banding lengths differ",
        ));
    }
    let items: Vec<harness::ManifestItem> = mos
        .iter()
        .enumerate()
        .map(|(i, &m)| harness::ManifestItem {
            item_id: format!("item{i}"),
            source_id: String::new(),
            mos: m,
            ci95: None,
            metrics: vec![Some(vmaf[i]), Some(banding[i])],
        })
        .collect();
    let manifest = harness::DatasetManifest {
        name: "python".into(),
        has_ci95: false,
        metric_columns: vec!["vmaf".into(), "banding".into()],
        items,
    };
    let r = fusion::calibrate_alpha(&manifest, grid_lo, grid_hi, grid_step, "vmaf", "banding")
        .map_err(err)?;
    Ok((r.best_alpha, r.best_srocc, r.curve))
}

/// Pearson linear correlation coefficient.
#[pyfunction]
fn plcc(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::plcc(&x, &y).map_err(err)
}

/// Spearman rank-order correlation coefficient.
#[pyfunction]
fn srocc(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::srocc(&x, &y).map_err(err)
}

/// Ascending average ranks with tie averaging.
#[pyfunction]
fn ranks(x: Vec<f64>) -> PyResult<Vec<f64>> {
    stats::ranks(&x).map_err(err)
}

/// Index pairs (i, j) with mos[i] > mos[j] significantly at 95%.
#[pyfunction]
fn significant_pairs(mos: Vec<f64>, ci95: Vec<f64>) -> PyResult<Vec<(usize, usize)>> {
    stats::significant_pairs(&mos, &ci95).map_err(err)
}

/// Better/worse AUC of a metric over significant MOS pairs.
#[pyfunction]
fn auc_bw(mos: Vec<f64>, ci95: Vec<f64>, metric: Vec<f64>) -> PyResult<f64> {
    stats::auc_bw(&stats::ScoredItems {
        mos,
        ci95: Some(ci95),
        metric,
    })
    .map_err(err)
}

/// Maximum-likelihood MOS recovery; scores is an items x subjects grid with
/// None for missing votes. Returns a dict with psi, ci95, delta, v,
/// iterations and converged.
#[pyfunction]
#[pyo3(signature = (scores, tol=1e-9, max_iter=10_000))]
fn solve_mle<'py>(
    py: Python<'py>,
    scores: Vec<Vec<Option<f64>>>,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let ni = scores.len();
    let ns = scores.first().map(|r| r.len()).unwrap_or(0);
    let matrix = subjective::ScoreMatrix {
        scores,
        item_ids: (0..ni).map(|i| format!("item{i}")).collect(),
        subject_ids: (0..ns).map(|s| format!("subject{s}")).collect(),
    };
    let est = subjective::solve_mle(&matrix, tol, max_iter).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("psi", est.psi)?;
    d.set_item("ci95", est.ci95)?;
    d.set_item("delta", est.delta)?;
    d.set_item("v", est.v)?;
    d.set_item("iterations", est.iterations)?;
    d.set_item("converged", est.converged)?;
    Ok(d)
}

/// Per-item plain means with normal-approximation ci95 (None below 2 votes).
#[pyfunction]
fn plain_mos(scores: Vec<Vec<Option<f64>>>) -> PyResult<(Vec<f64>, Vec<Option<f64>>)> {
    let ni = scores.len();
    let ns = scores.first().map(|r| r.len()).unwrap_or(0);
    let matrix = subjective::ScoreMatrix {
        scores,
        item_ids: (0..ni).map(|i| format!("item{i}")).collect(),
        subject_ids: (0..ns).map(|s| format!("subject{s}")).collect(),
    };
    let plain = subjective::plain_mos(&matrix).map_err(err)?;
    Ok((plain.mean, plain.ci95))
}

/// Rank-flip reliability comparison between two aligned experiments.
#[pyfunction]
fn reliability_compare<'py>(
    py: Python<'py>,
    mos_a: Vec<f64>,
    ci95_a: Vec<f64>,
    mos_b: Vec<f64>,
    ci95_b: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let ids: Vec<String> = (0..mos_a.len()).map(|i| format!("item{i}")).collect();
    let a = subjective::MosWithCi {
        item_ids: ids.clone(),
        mos: mos_a,
        ci95: ci95_a,
    };
    let b = subjective::MosWithCi {
        item_ids: ids,
        mos: mos_b,
        ci95: ci95_b,
    };
    let r = subjective::reliability_compare(&a, &b).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("flipped_significant_pairs", r.flipped_significant_pairs)?;
    d.set_item("plcc", r.plcc)?;
    d.set_item("srocc", r.srocc)?;
    Ok(d)
}

#[pymodule]
fn bandaware(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBandingParams>()?;
    m.add_class::<PyFusionParams>()?;
    m.add_function(wrap_pyfunction!(score_y4m, m)?)?;
    m.add_function(wrap_pyfunction!(score_raw_yuv, m)?)?;
    m.add_function(wrap_pyfunction!(frame_banding_index, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(plcc, m)?)?;
    m.add_function(wrap_pyfunction!(srocc, m)?)?;
    m.add_function(wrap_pyfunction!(ranks, m)?)?;
    m.add_function(wrap_pyfunction!(significant_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(auc_bw, m)?)?;
    m.add_function(wrap_pyfunction!(solve_mle, m)?)?;
    m.add_function(wrap_pyfunction!(plain_mos, m)?)?;
    m.add_function(wrap_pyfunction!(reliability_compare, m)?)?;
    Ok(())
}
