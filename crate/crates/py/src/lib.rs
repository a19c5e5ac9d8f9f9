//! Python bindings. Frames cross the boundary as `bytes`; results come back
//! as plain dicts and tuples.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use tsr_core::image::{load_frame, save_frame, sobel};
use tsr_core::odr::recognize::HEADER_OUTPUTS;
use tsr_core::odr::{load_model, save_model, train, Dataset, MlpParams, RegionMode, TrainConfig};
use tsr_core::pipeline::{
    evaluate as evaluate_rows, frame_rows, read_jsonl, run_sequence, DetectionRow, EvalReport, Pipeline as CorePipeline,
    PipelineConfig, RowKind, Sinks, DEFAULT_MATCH_IOU,
};
use tsr_core::shape::{detect_shapes, DetectorConfig, ShapeKind};
use tsr_core::synth::{generate_digit_corpus, generate_header_corpus, generate_sequence, random_scenario, CorpusConfig, ScenarioParams, SequenceRenderer, TruthSign};
use tsr_core::GrayFrame;

create_exception!(tsr, TsrError, PyException);

fn err(e: tsr_core::Error) -> PyErr {
    TsrError::new_err(e.to_string())
}

fn mode_of(s: &str) -> PyResult<RegionMode> {
    s.parse().map_err(err)
}

/// 8-bit grayscale frame.
#[pyclass(module = "tsr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Frame {
    inner: GrayFrame,
}

#[pymethods]
impl Frame {
    #[new]
    fn new(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        GrayFrame::new(width, height, data.to_vec()).map(|inner| Frame { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_frame(path).map(|inner| Frame { inner }).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_frame(&self.inner, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn index(&self) -> u64 {
        self.inner.frame_index
    }

    /// Row-major pixel bytes.
    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn __repr__(&self) -> String {
        format!("Frame({}x{}, index={})", self.inner.width(), self.inner.height(), self.inner.frame_index)
    }
}

/// Trained feed-forward network.
#[pyclass(module = "tsr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Model {
    inner: MlpParams,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| err(tsr_core::Error::io(&path, e)))?;
        load_model(&bytes).map(|inner| Model { inner }).map_err(|e| err(e.in_file(&path)))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, save_model(&self.inner)).map_err(|e| err(tsr_core::Error::io(&path, e)))
    }

    #[getter]
    fn layer_sizes(&self) -> Vec<usize> {
        self.inner.layer_sizes().to_vec()
    }

    fn forward(&self, input: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&input).map_err(err)
    }
}

fn row_dict<'py>(py: Python<'py>, r: &DetectionRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let kind = match r.kind {
        RowKind::Candidate => "candidate",
        RowKind::Hypothesis => "hypothesis",
        RowKind::Validated => "validated",
    };
    let shape = match r.shape {
        ShapeKind::Circle => "circle",
        ShapeKind::Rectangle => "rect",
    };
    d.set_item("frame", r.frame)?;
    d.set_item("kind", kind)?;
    d.set_item("shape", shape)?;
    d.set_item("bbox", (r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h))?;
    d.set_item("value", r.value)?;
    d.set_item("confidence", r.confidence)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("total", r.total)?;
    d.set_item("correct", r.correct)?;
    d.set_item("missed", r.missed)?;
    d.set_item("misclassified", r.misclassified)?;
    d.set_item("false_alarms", r.false_alarms)?;
    d.set_item("scdr", r.scdr)?;
    d.set_item("misclassification_rate", r.misclassification_rate)?;
    d.set_item("empty_truth", r.empty_truth)?;
    Ok(d)
}

/// Detection, recognition and temporal validation over a frame stream.
#[pyclass(module = "tsr")]
struct Pipeline {
    inner: CorePipeline,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (mode, digit_model, header_model=None))]
    fn new(mode: &str, digit_model: &Model, header_model: Option<&Model>) -> PyResult<Self> {
        let cfg = PipelineConfig::new(mode_of(mode)?);
        CorePipeline::new(cfg, digit_model.inner.clone(), header_model.map(|m| m.inner.clone()))
            .map(|inner| Pipeline { inner })
            .map_err(err)
    }

    /// Build from a key=value config file naming the model files.
    #[staticmethod]
    #[pyo3(signature = (path, mode="eu"))]
    fn from_config(path: PathBuf, mode: &str) -> PyResult<Self> {
        let cfg = PipelineConfig::load(&path, mode_of(mode)?).map_err(err)?;
        CorePipeline::from_config(cfg).map(|inner| Pipeline { inner }).map_err(err)
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.config().mode.to_string()
    }

    /// Rows for one frame: candidates, hypotheses, then validation events.
    fn process<'py>(&mut self, py: Python<'py>, frame: &Frame) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let out = self.inner.process_frame(&frame.inner).map_err(err)?;
        frame_rows(&out).iter().map(|r| row_dict(py, r)).collect()
    }

    /// Run over a directory of PGM frames, optionally writing JSONL rows.
    #[pyo3(signature = (input, out=None, annotate=None))]
    fn run_directory<'py>(
        &mut self,
        py: Python<'py>,
        input: PathBuf,
        out: Option<PathBuf>,
        annotate: Option<PathBuf>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut file = match &out {
            Some(p) => Some(File::create(p).map_err(|e| err(tsr_core::Error::io(p, e)))?),
            None => None,
        };
        let sinks = Sinks {
            detections: file.as_mut().map(|f| f as &mut dyn std::io::Write),
            annotate_dir: annotate,
        };
        let s = run_sequence(&input, &mut self.inner, sinks).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("frames", s.frames)?;
        d.set_item("candidates", s.candidates)?;
        d.set_item("hypotheses", s.hypotheses)?;
        d.set_item("events", s.events)?;
        d.set_item("processing_s", s.processing_s)?;
        d.set_item("fps", s.fps)?;
        Ok(d)
    }
}

/// Shape candidates in a single frame with default detector settings.
#[pyfunction]
#[pyo3(signature = (frame, shape="circle"))]
fn detect<'py>(py: Python<'py>, frame: &Frame, shape: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let kind = match shape {
        "circle" => ShapeKind::Circle,
        "rect" => ShapeKind::Rectangle,
        other => return Err(TsrError::new_err(format!("unknown shape {other:?}"))),
    };
    let grad = sobel(&frame.inner).map_err(err)?;
    detect_shapes(&grad, kind, &DetectorConfig::default())
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("bbox", (c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h))?;
            d.set_item("score", c.score)?;
            Ok(d)
        })
        .collect()
}

/// Generate a labelled corpus (`digit` or `header`) and write it to `path`.
#[pyfunction]
#[pyo3(signature = (path, seed, kind="digit", n_per_class=250))]
fn synth_corpus(path: PathBuf, seed: u64, kind: &str, n_per_class: usize) -> PyResult<usize> {
    let cfg = CorpusConfig { n_per_class, seed, ..CorpusConfig::default() };
    let data = match kind {
        "digit" => generate_digit_corpus(&cfg),
        "header" => generate_header_corpus(&cfg),
        other => return Err(TsrError::new_err(format!("unknown corpus kind {other:?}"))),
    }
    .map_err(err)?;
    let f = File::create(&path).map_err(|e| err(tsr_core::Error::io(&path, e)))?;
    data.write_to(std::io::BufWriter::new(f)).map_err(|e| err(tsr_core::Error::io(&path, e)))?;
    Ok(data.len())
}

/// Train on a corpus file. Returns the model and final (train, validation) accuracy.
#[pyfunction]
#[pyo3(signature = (corpus, kind="digit", hidden=48, epochs=40, seed=1))]
fn train_model(corpus: PathBuf, kind: &str, hidden: usize, epochs: usize, seed: u64) -> PyResult<(Model, f64, Option<f64>)> {
    let outputs = match kind {
        "digit" => 10,
        "header" => HEADER_OUTPUTS,
        other => return Err(TsrError::new_err(format!("unknown model kind {other:?}"))),
    };
    let f = File::open(&corpus).map_err(|e| err(tsr_core::Error::io(&corpus, e)))?;
    let data = Dataset::read_from(BufReader::new(f)).map_err(|e| err(e.in_file(&corpus)))?;
    let cfg = TrainConfig { hidden_size: hidden, epochs, seed, ..TrainConfig::default() };
    let (inner, report) = train(&data, outputs, &cfg).map_err(err)?;
    let last = report.last();
    Ok((Model { inner }, last.train_accuracy, last.validation_accuracy))
}

fn scenario(mode: &str, frames: u64, noise: f64, sign_free: bool, truck_decoy: bool) -> PyResult<ScenarioParams> {
    let mut p = ScenarioParams::new(mode_of(mode)?);
    p.frames = frames;
    p.noise_sigma = noise;
    p.sign_free = sign_free;
    p.truck_decoy = truck_decoy;
    Ok(p)
}

/// Render an approach sequence in memory. Returns the frames and the
/// truth as (value, first_frame, last_frame) tuples.
#[pyfunction]
#[pyo3(signature = (mode, seed, frames=14, noise=6.0, sign_free=false, truck_decoy=false))]
#[allow(clippy::type_complexity)]
fn synth_sequence(
    mode: &str,
    seed: u64,
    frames: u64,
    noise: f64,
    sign_free: bool,
    truck_decoy: bool,
) -> PyResult<(Vec<Frame>, Vec<(u32, Option<u64>, Option<u64>)>)> {
    let p = scenario(mode, frames, noise, sign_free, truck_decoy)?;
    let spec = random_scenario(&p, seed).map_err(err)?;
    let truth = spec.ground_truth().iter().map(|t| (t.value, t.first_frame(), t.last_frame())).collect();
    let renderer = SequenceRenderer::new(spec).map_err(err)?;
    Ok((renderer.frames().map(|inner| Frame { inner }).collect(), truth))
}

/// Write an approach sequence (PGM frames plus truth.jsonl) into `out`.
#[pyfunction]
#[pyo3(signature = (out, mode, seed, frames=14, noise=6.0, sign_free=false, truck_decoy=false))]
fn write_sequence(out: PathBuf, mode: &str, seed: u64, frames: u64, noise: f64, sign_free: bool, truck_decoy: bool) -> PyResult<usize> {
    let p = scenario(mode, frames, noise, sign_free, truck_decoy)?;
    let spec = random_scenario(&p, seed).map_err(err)?;
    generate_sequence(&spec, &out).map(|t| t.len()).map_err(err)
}

/// Score a detections JSONL file against a truth JSONL file.
#[pyfunction]
#[pyo3(signature = (detections, truth, min_iou=DEFAULT_MATCH_IOU))]
fn evaluate<'py>(py: Python<'py>, detections: PathBuf, truth: PathBuf, min_iou: f64) -> PyResult<Bound<'py, PyDict>> {
    let open = |p: &PathBuf| File::open(p).map(BufReader::new).map_err(|e| err(tsr_core::Error::io(p, e)));
    let rows: Vec<DetectionRow> = read_jsonl(open(&detections)?).map_err(|e| err(e.in_file(&detections)))?;
    let signs: Vec<TruthSign> = read_jsonl(open(&truth)?).map_err(|e| err(e.in_file(&truth)))?;
    report_dict(py, &evaluate_rows(&rows, &signs, min_iou).0)
}

#[pymodule]
fn tsr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TsrError", m.py().get_type::<TsrError>())?;
    m.add_class::<Frame>()?;
    m.add_class::<Model>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train_model, m)?)?;
    m.add_function(wrap_pyfunction!(synth_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(write_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
