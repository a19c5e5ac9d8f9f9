use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsr_core::odr::recognize::HEADER_OUTPUTS;
use tsr_core::odr::{save_model, train, Dataset, RegionMode, TrainConfig};
use tsr_core::pipeline::{evaluate, read_jsonl, run_sequence, DetectionRow, Pipeline, PipelineConfig, Sinks};
use tsr_core::synth::{generate_digit_corpus, generate_header_corpus, generate_sequence, random_scenario, CorpusConfig, ScenarioParams};
use tsr_core::{Error, Result};

#[derive(Parser)]
#[command(name = "tsr", version, about = "Speed-limit sign detection, recognition and validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a directory of PGM frames.
    Detect(DetectArgs),
    /// Train a digit or header network from a corpus file.
    TrainOdr(TrainArgs),
    /// Generate synthetic data.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Score detection rows against ground truth.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Eu,
    Us,
}

impl From<Mode> for RegionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Eu => RegionMode::Eu,
            Mode::Us => RegionMode::Us,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NetKind {
    Digit,
    Header,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    input: PathBuf,
    /// key=value settings; model paths in it are relative to the file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    digit_model: Option<PathBuf>,
    #[arg(long)]
    header_model: Option<PathBuf>,
    /// Detection rows, one JSON object per line.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    annotate: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "digit")]
    kind: NetKind,
    #[arg(long, default_value_t = 48)]
    hidden: usize,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Labelled glyph corpus for train-odr.
    Corpus(CorpusArgs),
    /// Approach sequence: PGM frames plus truth.jsonl.
    Sequence(SequenceArgs),
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "digit")]
    kind: NetKind,
    /// Restrict to one sign family; both by default.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 250)]
    n_per_class: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SequenceArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "eu")]
    mode: Mode,
    /// Speed value on the sign; random valid value when absent.
    #[arg(long)]
    value: Option<u32>,
    #[arg(long, default_value_t = 14)]
    frames: u64,
    #[arg(long, default_value_t = 6.0)]
    noise: f64,
    #[arg(long, default_value_t = 3)]
    distractors: usize,
    #[arg(long)]
    sign_free: bool,
    #[arg(long)]
    truck_decoy: bool,
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 480)]
    height: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = tsr_core::pipeline::DEFAULT_MATCH_IOU)]
    min_iou: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(f)).map_err(|e| e.in_file(path))
}

fn detect(a: DetectArgs) -> Result<()> {
    let mode = a.mode.into();
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p, mode)?,
        None => PipelineConfig::new(mode),
    };
    cfg.mode = mode;
    if a.digit_model.is_some() {
        cfg.digit_model = a.digit_model;
    }
    if a.header_model.is_some() {
        cfg.header_model = a.header_model;
    }
    let mut pipeline = Pipeline::from_config(cfg)?;
    let mut out = create(&a.out)?;
    let summary = run_sequence(&a.input, &mut pipeline, Sinks { detections: Some(&mut out), annotate_dir: a.annotate })?;
    out.flush().map_err(|e| Error::io(&a.out, e))?;
    eprintln!(
        "{} frames, {} candidates, {} hypotheses, {} validated, {:.1} fps",
        summary.frames, summary.candidates, summary.hypotheses, summary.events, summary.fps
    );
    Ok(())
}

fn train_odr(a: TrainArgs) -> Result<()> {
    let f = File::open(&a.corpus).map_err(|e| Error::io(&a.corpus, e))?;
    let data = Dataset::read_from(BufReader::new(f)).map_err(|e| e.in_file(&a.corpus))?;
    let outputs = match a.kind {
        NetKind::Digit => 10,
        NetKind::Header => HEADER_OUTPUTS,
    };
    let cfg = TrainConfig {
        hidden_size: a.hidden,
        epochs: a.epochs,
        seed: a.seed,
        learning_rate: a.learning_rate,
        ..TrainConfig::default()
    };
    let (params, report) = train(&data, outputs, &cfg)?;
    fs::write(&a.out, save_model(&params)).map_err(|e| Error::io(&a.out, e))?;
    let last = report.last();
    print!("examples {} train_accuracy {:.4}", report.train_examples, last.train_accuracy);
    if let Some(v) = last.validation_accuracy {
        print!(" validation_accuracy {v:.4}");
    }
    println!();
    Ok(())
}

fn synth(c: SynthCommand) -> Result<()> {
    match c {
        SynthCommand::Corpus(a) => {
            let cfg = CorpusConfig {
                n_per_class: a.n_per_class,
                mode: a.mode.map(Into::into),
                seed: a.seed,
                ..CorpusConfig::default()
            };
            let data = match a.kind {
                NetKind::Digit => generate_digit_corpus(&cfg)?,
                NetKind::Header => generate_header_corpus(&cfg)?,
            };
            let mut out = create(&a.out)?;
            data.write_to(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(&a.out, e))?;
            println!("{} examples", data.len());
        }
        SynthCommand::Sequence(a) => {
            let mut p = ScenarioParams::new(a.mode.into());
            p.value = a.value;
            p.frames = a.frames;
            p.noise_sigma = a.noise;
            p.distractors = a.distractors;
            p.sign_free = a.sign_free;
            p.truck_decoy = a.truck_decoy;
            p.width = a.width;
            p.height = a.height;
            let spec = random_scenario(&p, a.seed)?;
            let truth = generate_sequence(&spec, &a.out)?;
            println!("{} frames, {} truth signs", spec.frames, truth.len());
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let rows: Vec<DetectionRow> = read_rows(&a.detections)?;
    let truth = read_rows(&a.truth)?;
    let (report, _) = evaluate(&rows, &truth, a.min_iou);
    print!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::TrainOdr(a) => train_odr(a),
        Command::Synth(c) => synth(c),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tsr: {e}");
            ExitCode::from(2)
        }
    }
}
