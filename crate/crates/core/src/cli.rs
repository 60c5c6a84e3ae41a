//! Batch command-line surface tying the modules into pipelines.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/parse error,
//! 3 computation error. Failures emit one diagnostic line on stderr and
//! write nothing else.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::banding::{self, BandingParams};
use crate::error::{Error, Result};
use crate::fusion::{self, FusionParams};
use crate::harness::{self, ReportFormat};
use crate::media::{self, ChromaFormat};
use crate::subjective::{self, MosWithCi, ScoreMatrix};

#[derive(Debug, Parser)]
#[command(
    name = "bandaware",
    version,
    about = "Banding-aware video quality toolkit",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the banding index of a video stream
    Score(ScoreArgs),
    /// Add a vmaf_ba column to a dataset manifest
    Fuse(FuseArgs),
    /// Calibrate the fusion weight by rank-correlation maximization
    Calibrate(CalibrateArgs),
    /// Evaluate metric columns against MOS
    Evaluate(EvaluateArgs),
    /// Recover per-item MOS from raw opinion scores
    Mos(MosArgs),
    /// Compare two experiments for flipped significant pairs
    Reliability(ReliabilityArgs),
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Input video: Y4M by default, headerless planar YUV with --raw
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as headerless planar YUV
    #[arg(long)]
    raw: bool,
    #[arg(long, requires = "raw")]
    width: Option<usize>,
    #[arg(long, requires = "raw")]
    height: Option<usize>,
    #[arg(long, requires = "raw")]
    bitdepth: Option<u8>,
    /// Chroma layout of raw input: 420, 444 or luma
    #[arg(long, default_value = "420")]
    chroma: String,
    /// Write the report here instead of stdout
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = BandingParams::default().num_scales)]
    num_scales: usize,
    #[arg(long, default_value_t = BandingParams::default().window)]
    window: usize,
    #[arg(long, default_value_t = BandingParams::default().output_gain)]
    gain: f64,
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = FusionParams::default().alpha)]
    alpha: f64,
    #[arg(long, default_value = "vmaf")]
    vmaf_column: String,
    #[arg(long, default_value = "cambi")]
    banding_column: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 2.0)]
    hi: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value = "vmaf")]
    vmaf_column: String,
    #[arg(long, default_value = "cambi")]
    banding_column: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated metric column names
    #[arg(long)]
    metrics: String,
    #[arg(long)]
    out: PathBuf,
    /// Report format: json or csv
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Debug, Args)]
struct MosArgs {
    /// Raw score CSV: header of subject ids, first column item id
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Recovery method: mle or plain
    #[arg(long, default_value = "mle")]
    method: String,
    /// Optional CSV with per-subject bias and inconsistency (mle only)
    #[arg(long)]
    subjects: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReliabilityArgs {
    /// First experiment: CSV with item_id, mos, ci95
    #[arg(long)]
    a: PathBuf,
    /// Second experiment, same item order
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the CLI against an explicit argv and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprintln!("error: {e}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Mos(args) => cmd_mos(args),
        Command::Reliability(args) => cmd_reliability(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::UnknownMetric(_) => 1,
        Error::MalformedHeader(_)
        | Error::UnsupportedColorspace(_)
        | Error::NoFrames
        | Error::TruncatedFrame(_)
        | Error::InvalidDimensions(_)
        | Error::SampleOutOfRange(_)
        | Error::Manifest(_)
        | Error::InvalidScoreMatrix(_)
        | Error::MisalignedInputs(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
        Error::PlaneTooSmall(_)
        | Error::NegativeBandingIndex(_)
        | Error::UndefinedCorrelation(_)
        | Error::NoSignificantPairs => 3,
    }
}

fn parse_chroma(s: &str) -> Result<ChromaFormat> {
    match s {
        "420" => Ok(ChromaFormat::C420),
        "444" => Ok(ChromaFormat::C444),
        "luma" => Ok(ChromaFormat::LumaOnly),
        other => Err(Error::InvalidParams(format!(
            "chroma must be 420, 444 or luma, got {other:?}"
        ))),
    }
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let params = BandingParams {
        num_scales: args.num_scales,
        window: args.window,
        output_gain: args.gain,
        ..BandingParams::default()
    };
    params.validate()?;
    if args.raw {
        let missing = [
            ("--width", args.width.is_none()),
            ("--height", args.height.is_none()),
            ("--bitdepth", args.bitdepth.is_none()),
        ]
        .iter()
        .filter(|(_, m)| *m)
        .map(|(n, _)| *n)
        .collect::<Vec<_>>();
        if !missing.is_empty() {
            return Err(Error::InvalidParams(format!(
                "--raw requires {}",
                missing.join(", ")
            )));
        }
    }
    let chroma = parse_chroma(&args.chroma)?;
    let bytes = std::fs::read(&args.input)?;
    let seq = if args.raw {
        media::read_raw_yuv(
            &bytes,
            args.width.unwrap(),
            args.height.unwrap(),
            args.bitdepth.unwrap(),
            chroma,
        )?
    } else {
        media::read_y4m(&bytes)?
    };
    let report = banding::sequence_banding_index(&seq, &params)?;
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    match &args.json {
        Some(path) => write_text(path, &body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    let manifest = harness::load_manifest(&args.manifest)?;
    let params = FusionParams {
        alpha: args.alpha,
        ..FusionParams::default()
    };
    let fused = fusion::fuse_dataset(&manifest, &params, &args.vmaf_column, &args.banding_column)?;
    write_text(&args.out, &harness::manifest_to_csv(&fused))
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let manifest = harness::load_manifest(&args.manifest)?;
    let result = fusion::calibrate_alpha(
        &manifest,
        args.lo,
        args.hi,
        args.step,
        &args.vmaf_column,
        &args.banding_column,
    )?;
    let mut body = serde_json::to_string_pretty(&result)?;
    body.push('\n');
    write_text(&args.out, &body)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let format = match args.format.as_str() {
        "json" => ReportFormat::Json,
        "csv" => ReportFormat::Csv,
        other => {
            return Err(Error::InvalidParams(format!(
                "format must be json or csv, got {other:?}"
            )))
        }
    };
    let names: Vec<String> = args
        .metrics
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(Error::InvalidParams(
            "--metrics lists no metric names".into(),
        ));
    }
    let manifest = harness::load_manifest(&args.manifest)?;
    let report = harness::evaluate(&manifest, &names)?;
    harness::write_report(&report, &args.out, format)
}

fn cmd_mos(args: MosArgs) -> Result<()> {
    let bytes = std::fs::read(&args.scores)?;
    let matrix = ScoreMatrix::from_csv(&bytes)?;
    match args.method.as_str() {
        "mle" => {
            let est = subjective::solve_mle(
                &matrix,
                subjective::DEFAULT_TOL,
                subjective::DEFAULT_MAX_ITER,
            )?;
            if !est.converged {
                eprintln!(
                    "warning: solver did not converge within {} iterations",
                    est.iterations
                );
            }
            let mut body = String::from("item_id,mos,ci95\n");
            for (i, id) in matrix.item_ids.iter().enumerate() {
                body.push_str(&format!("{id},{:.6},{:.6}\n", est.psi[i], est.ci95[i]));
            }
            write_text(&args.out, &body)?;
            if let Some(path) = &args.subjects {
                let mut body = String::from("subject_id,delta,v\n");
                for (s, id) in matrix.subject_ids.iter().enumerate() {
                    body.push_str(&format!("{id},{:.6},{:.6}\n", est.delta[s], est.v[s]));
                }
                write_text(path, &body)?;
            }
        }
        "plain" => {
            let plain = subjective::plain_mos(&matrix)?;
            let mut body = String::from("item_id,mos,ci95\n");
            for (i, id) in matrix.item_ids.iter().enumerate() {
                let ci = plain.ci95[i].map(|c| format!("{c:.6}")).unwrap_or_default();
                body.push_str(&format!("{id},{:.6},{ci}\n", plain.mean[i]));
            }
            write_text(&args.out, &body)?;
            if args.subjects.is_some() {
                return Err(Error::InvalidParams(
                    "--subjects requires --method mle".into(),
                ));
            }
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "method must be mle or plain, got {other:?}"
            )))
        }
    }
    Ok(())
}

fn read_mos_csv(path: &Path) -> Result<MosWithCi> {
    let bytes = std::fs::read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Manifest(format!("{path:?} is missing column {name}")))
    };
    let (id_col, mos_col, ci_col) = (col("item_id")?, col("mos")?, col("ci95")?);
    let mut out = MosWithCi {
        item_ids: Vec::new(),
        mos: Vec::new(),
        ci95: Vec::new(),
    };
    for record in reader.records() {
        let record = record?;
        out.item_ids
            .push(record.get(id_col).unwrap_or_default().trim().to_string());
        let parse = |i: usize, what: &str| -> Result<f64> {
            record
                .get(i)
                .unwrap_or_default()
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Manifest(format!("non-numeric {what} in {path:?}")))
        };
        out.mos.push(parse(mos_col, "mos")?);
        out.ci95.push(parse(ci_col, "ci95")?);
    }
    Ok(out)
}

fn cmd_reliability(args: ReliabilityArgs) -> Result<()> {
    let a = read_mos_csv(&args.a)?;
    let b = read_mos_csv(&args.b)?;
    let report = subjective::reliability_compare(&a, &b)?;
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    write_text(&args.out, &body)
}
