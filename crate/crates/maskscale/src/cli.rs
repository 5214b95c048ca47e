//! Command-line surface: seven subcommands tying the library into
//! reproducible dataset-preparation and evaluation runs.
//!
//! Contract for scripting:
//! - exit 0 = success, 1 = validation/audit failure, 2 = usage error;
//! - commands that write files also write a `RunManifest` JSON recording the
//!   resolved flags, seeds, and per-file outcomes, so a run can be replayed
//!   bit-exactly from its manifest;
//! - report-only commands (`audit`, `eval`, `quant-compare`) embed the same
//!   header in their JSON report instead;
//! - all output files are written atomically (temp file + rename).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::dataset::{self, augment, scan_pairs, split, AugmentSpec, SplitSpec};
use crate::imgio::{self, read_gray, write_gray, RasterFormat};
use crate::maskfilter::{audit, mask_resize, FilterStrategy};
use crate::metrics::{evaluate_corpus, MetricsError};
use crate::quantcompare::{
    build_reports, read_records_csv, tally, OptionThresholds, PredicateMode, QuantError,
};
use crate::raster::{LabelMask, TRI_CLASS_LABELS};
use crate::resample::{resize_image, KernelKind, ResizeSpec};

const TOOL: &str = "maskscale";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors surfaced to the shell; the variant decides the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad data: unreadable files, failed audits, mismatched corpora.
    #[error("{0}")]
    Validation(String),
    /// Bad invocation: unsupported flag combinations, empty input sets.
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "maskscale",
    version,
    about = "Resample grayscale images and label masks, clean up interpolation \
             artifacts, and score segmentation and quantification outputs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resize a grayscale image, or every raster in a directory.
    Resize(ResizeArgs),
    /// Resize a label mask (or directory of masks), filtering interpolation
    /// artifacts.
    MaskResize(MaskResizeArgs),
    /// Check masks for labels outside the expected set.
    Audit(AuditArgs),
    /// Score predicted masks against ground truth.
    Eval(EvalArgs),
    /// Compare automated quantification records against a manual reference.
    QuantCompare(QuantCompareArgs),
    /// Split a paired corpus into train/val/test file lists.
    Split(SplitArgs),
    /// Write augmented copies of a paired corpus.
    Augment(AugmentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Nearest,
    Bicubic,
    #[value(name = "lanczos3")]
    Lanczos3,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Nearest => KernelKind::Nearest,
            KernelArg::Bicubic => KernelKind::Bicubic,
            KernelArg::Lanczos3 => KernelKind::Lanczos3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    None,
    Eq1,
    #[value(name = "five-step")]
    FiveStep,
}

impl From<FilterArg> for FilterStrategy {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::None => FilterStrategy::None,
            FilterArg::Eq1 => FilterStrategy::Eq1,
            FilterArg::FiveStep => FilterStrategy::FiveStep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "value-below")]
    ValueBelow,
    #[value(name = "abs-diff-below")]
    AbsDiffBelow,
}

impl From<ModeArg> for PredicateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ValueBelow => PredicateMode::ValueBelow,
            ModeArg::AbsDiffBelow => PredicateMode::AbsDiffBelow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Png,
    Pgm,
}

impl From<FormatArg> for RasterFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Png => RasterFormat::Png,
            FormatArg::Pgm => RasterFormat::Pgm,
        }
    }
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let dim = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|e| format!("bad dimension {t:?}: {e}"))
    };
    let (w, h) = (dim(w)?, dim(h)?);
    if w == 0 || h == 0 {
        return Err("dimensions must be positive".to_string());
    }
    Ok((w, h))
}

fn parse_thresholds(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated thresholds (scar_ml,scar_pct,mo_pct), got {s:?}"
        ));
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad threshold {t:?}: {e}"))
    };
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

#[derive(Debug, Args)]
pub struct ResizeArgs {
    /// Input image, or a directory of PNG/PGM rasters.
    pub input: PathBuf,
    /// Output file (file input) or directory (directory input).
    pub output: PathBuf,
    /// Destination size as WIDTHxHEIGHT, e.g. 256x256.
    #[arg(long, value_parser = parse_size)]
    pub size: (u32, u32),
    #[arg(long, value_enum)]
    pub kernel: KernelArg,
}

#[derive(Debug, Args)]
pub struct MaskResizeArgs {
    /// Input mask, or a directory of PNG/PGM masks.
    pub input: PathBuf,
    /// Output file (file input) or directory (directory input).
    pub output: PathBuf,
    /// Destination size as WIDTHxHEIGHT, e.g. 256x256.
    #[arg(long, value_parser = parse_size)]
    pub size: (u32, u32),
    #[arg(long, value_enum)]
    pub kernel: KernelArg,
    /// Spurious-label cleanup applied after kernel interpolation.
    #[arg(long, value_enum)]
    pub filter: FilterArg,
    /// Label set the masks are declared against.
    #[arg(long, value_delimiter = ',', default_value = "0,128,255")]
    pub labels: Vec<u8>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Mask file, or a directory of masks.
    pub input: PathBuf,
    /// Expected label set.
    #[arg(long, value_delimiter = ',', default_value = "0,128,255")]
    pub expect: Vec<u8>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of ground-truth masks.
    pub gt_dir: PathBuf,
    /// Directory of predicted masks, paired with ground truth by file stem.
    pub pred_dir: PathBuf,
    /// Boundary-match tolerance in pixels (default: 0.75% of each image's
    /// diagonal, at least 1).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write the per-region table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Label set shared by both directories.
    #[arg(long, value_delimiter = ',', default_value = "0,128,255")]
    pub labels: Vec<u8>,
}

#[derive(Debug, Args)]
pub struct QuantCompareArgs {
    /// CSV with header stack_id,method,scar_ml,scar_pct,mo_pct; exactly one
    /// method must be named "manual".
    pub records: PathBuf,
    /// Option-1 hit thresholds for scar_ml,scar_pct,mo_pct.
    #[arg(long, value_parser = parse_thresholds, default_value = "25,15,0.35")]
    pub thresholds: (f64, f64, f64),
    /// Option-1 hit predicate.
    #[arg(long, value_enum, default_value_t = ModeArg::ValueBelow)]
    pub mode: ModeArg,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Directory of intensity images.
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of label masks, paired with images by file stem.
    #[arg(long)]
    pub masks: PathBuf,
    /// Directory receiving train.txt, val.txt, test.txt, and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    pub train: f64,
    #[arg(long, default_value_t = 0.2)]
    pub val: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test: f64,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Proceed when an image or mask has no counterpart instead of aborting.
    #[arg(long)]
    pub allow_unpaired: bool,
    /// Label set the masks are declared against.
    #[arg(long, value_delimiter = ',', default_value = "0,128,255")]
    pub labels: Vec<u8>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Directory of intensity images.
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of label masks, paired with images by file stem.
    #[arg(long)]
    pub masks: PathBuf,
    /// Directory receiving images/, masks/, and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Augmented copies per input pair.
    #[arg(long, default_value_t = 1)]
    pub count: u32,
    /// Probability of a left-right reflection.
    #[arg(long, default_value_t = 0.5)]
    pub reflect_prob: f64,
    /// Lower translation bound in pixels (both axes).
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    pub translate_min: i32,
    /// Upper translation bound in pixels (both axes).
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    pub translate_max: i32,
    /// Fill for vacated image pixels (masks fill with their lowest label).
    #[arg(long, default_value_t = 0)]
    pub fill: u8,
    /// Seed for the reflection/translation draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Proceed when an image or mask has no counterpart instead of aborting.
    #[arg(long)]
    pub allow_unpaired: bool,
    /// Label set the masks are declared against.
    #[arg(long, value_delimiter = ',', default_value = "0,128,255")]
    pub labels: Vec<u8>,
    /// Output raster format.
    #[arg(long, value_enum, default_value_t = FormatArg::Png)]
    pub format: FormatArg,
}

/// What a file-producing run did: flags as resolved, seeds, and one outcome
/// per processed file. Re-running the same tool version with these flags
/// reproduces the outputs bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub flags: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub files: Vec<FileOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileOutcome {
    pub input: String,
    pub output: Option<String>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn new_manifest(command: &str, flags: BTreeMap<String, String>, seed: Option<u64>) -> RunManifest {
    RunManifest {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        command: command.to_string(),
        flags,
        inputs: Vec::new(),
        outputs: Vec::new(),
        seed,
        files: Vec::new(),
    }
}

/// Dispatches a parsed invocation; `Ok` carries the process exit code for
/// outcomes that are results rather than errors (a failed audit exits 1
/// after printing its report).
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Resize(a) => cmd_resize(a),
        Command::MaskResize(a) => cmd_mask_resize(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::QuantCompare(a) => cmd_quant_compare(a),
        Command::Split(a) => cmd_split(a),
        Command::Augment(a) => cmd_augment(a),
    }
}

// ---- shared plumbing -------------------------------------------------------

/// Expands the input argument: a directory yields its rasters (usage error
/// when empty), anything else is taken as a single file.
fn gather_inputs(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    if input.is_dir() {
        let files = imgio::list_rasters(input).map_err(validation)?;
        if files.is_empty() {
            return Err(CliError::Usage(format!(
                "{}: no PNG or PGM rasters found",
                input.display()
            )));
        }
        Ok(files)
    } else {
        Ok(vec![input.to_path_buf()])
    }
}

/// Sorted, deduplicated label set from a repeatable flag; usage error when
/// fewer than two distinct labels remain.
fn normalize_labels(labels: &[u8]) -> Result<Vec<u8>, CliError> {
    let mut labels = labels.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(CliError::Usage(format!(
            "need at least two distinct labels, got {labels:?}"
        )));
    }
    Ok(labels)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| validation(format!("{}: {e}", dir.display())))
}

/// Creates the directory that will hold `output` (the path itself in
/// directory mode, its parent otherwise).
fn ensure_output_dir(output: &Path, dir_mode: bool) -> Result<(), CliError> {
    if dir_mode {
        ensure_dir(output)
    } else {
        match output.parent() {
            Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
            _ => Ok(()),
        }
    }
}

fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(parent)
        .map_err(|e| validation(format!("{}: {e}", parent.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent)
        .map_err(|e| validation(format!("{}: {e}", parent.display())))?;
    tmp.write_all(text.as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_text_atomic(path, &format!("{text}\n"))
}

/// Pretty-prints a JSON report to the given path, or to stdout.
fn emit_json(path: Option<&Path>, value: &serde_json::Value) -> Result<(), CliError> {
    match path {
        Some(p) => write_text_atomic(p, &format!("{value:#}\n")),
        None => {
            println!("{value:#}");
            Ok(())
        }
    }
}

/// Report header shared by the report-only commands: tool identity plus the
/// resolved flags, merged with the report body into one JSON object.
fn report_envelope<T: Serialize>(
    command: &str,
    flags: BTreeMap<String, String>,
    body: &T,
) -> serde_json::Value {
    let mut value = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "flags": flags,
    });
    let body = serde_json::to_value(body).expect("reports serialize");
    value
        .as_object_mut()
        .expect("envelope is an object")
        .extend(body.as_object().expect("report is an object").clone());
    value
}

fn labels_flag(labels: &[u8]) -> String {
    labels
        .iter()
        .map(u8::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Output path rule for file/directory inputs: directory mode keeps the
/// input file name (and thus its format); file mode uses the output path
/// as given, unless it is an existing directory.
fn output_path_for(input: &Path, output: &Path, dir_mode: bool) -> PathBuf {
    if dir_mode || output.is_dir() {
        output.join(input.file_name().expect("inputs are files"))
    } else {
        output.to_path_buf()
    }
}

fn manifest_path_for(output: &Path, dir_mode: bool) -> PathBuf {
    if dir_mode {
        output.join("manifest.json")
    } else {
        output.with_extension("manifest.json")
    }
}

/// Turns per-file failures into the final validation error, naming every
/// file that failed.
fn finish_batch(manifest: &RunManifest) -> Result<i32, CliError> {
    let failures: Vec<String> = manifest
        .files
        .iter()
        .filter(|f| !f.ok)
        .map(|f| match f.detail.as_deref() {
            // I/O errors already lead with the path; don't repeat it.
            Some(d) if d.starts_with(&f.input) => d.to_string(),
            Some(d) => format!("{}: {d}", f.input),
            None => format!("{}: failed", f.input),
        })
        .collect();
    if failures.is_empty() {
        Ok(0)
    } else {
        Err(CliError::Validation(failures.join("\n")))
    }
}

// ---- resize / mask-resize --------------------------------------------------

fn cmd_resize(a: ResizeArgs) -> Result<i32, CliError> {
    let dir_mode = a.input.is_dir();
    let inputs = gather_inputs(&a.input)?;
    let (width, height) = a.size;
    let kernel = KernelKind::from(a.kernel);

    let mut manifest = new_manifest(
        "resize",
        BTreeMap::from([
            ("size".to_string(), format!("{width}x{height}")),
            ("kernel".to_string(), kernel.to_string()),
        ]),
        None,
    );
    manifest.inputs.push(a.input.display().to_string());
    manifest.outputs.push(a.output.display().to_string());
    ensure_output_dir(&a.output, dir_mode)?;

    for path in &inputs {
        let out_path = output_path_for(path, &a.output, dir_mode);
        let result = read_gray(path)
            .map_err(dataset::DatasetError::from)
            .and_then(|img| {
                let spec = ResizeSpec::for_image(&img, width, height, kernel)?;
                let resized = resize_image(&img, &spec)?;
                write_gray(&out_path, &resized)?;
                Ok(())
            });
        manifest.files.push(FileOutcome {
            input: path.display().to_string(),
            output: result.is_ok().then(|| out_path.display().to_string()),
            ok: result.is_ok(),
            detail: result.err().map(|e| e.to_string()),
        });
    }

    write_manifest(&manifest, &manifest_path_for(&a.output, dir_mode))?;
    let exit = finish_batch(&manifest)?;
    println!(
        "resized {} file(s) to {width}x{height} ({kernel})",
        manifest.files.len()
    );
    Ok(exit)
}

fn cmd_mask_resize(a: MaskResizeArgs) -> Result<i32, CliError> {
    let labels = normalize_labels(&a.labels)?;
    let strategy = FilterStrategy::from(a.filter);
    // The cleanup filters are defined only for the canonical tri-class set;
    // requesting them with any other declared label set is a configuration
    // error, caught before any file is touched.
    if strategy != FilterStrategy::None && labels != TRI_CLASS_LABELS {
        return Err(CliError::Usage(format!(
            "--filter {strategy} supports only the 0,128,255 label set; \
             got --labels {}",
            labels_flag(&labels)
        )));
    }

    let dir_mode = a.input.is_dir();
    let inputs = gather_inputs(&a.input)?;
    let (width, height) = a.size;
    let kernel = KernelKind::from(a.kernel);

    let mut manifest = new_manifest(
        "mask-resize",
        BTreeMap::from([
            ("size".to_string(), format!("{width}x{height}")),
            ("kernel".to_string(), kernel.to_string()),
            ("filter".to_string(), strategy.to_string()),
            ("labels".to_string(), labels_flag(&labels)),
        ]),
        None,
    );
    manifest.inputs.push(a.input.display().to_string());
    manifest.outputs.push(a.output.display().to_string());
    ensure_output_dir(&a.output, dir_mode)?;

    for path in &inputs {
        let out_path = output_path_for(path, &a.output, dir_mode);
        let result = read_gray(path)
            .map_err(dataset::DatasetError::from)
            .and_then(|img| {
                let mask = LabelMask::new(img, &labels)?;
                let spec = ResizeSpec::for_image(mask.image(), width, height, kernel)?;
                let out = mask_resize(&mask, &spec, strategy)?;
                write_gray(&out_path, out.image())?;
                Ok(audit(out.image(), &labels))
            });
        let (ok, detail) = match &result {
            Ok(report) if report.is_canonical => (true, None),
            Ok(report) => {
                let extras: Vec<u8> = report.extra.iter().map(|e| e.label).collect();
                (true, Some(format!("kept extra labels {extras:?}")))
            }
            Err(e) => (false, Some(e.to_string())),
        };
        manifest.files.push(FileOutcome {
            input: path.display().to_string(),
            output: ok.then(|| out_path.display().to_string()),
            ok,
            detail,
        });
    }

    write_manifest(&manifest, &manifest_path_for(&a.output, dir_mode))?;
    let exit = finish_batch(&manifest)?;
    println!(
        "resized {} mask(s) to {width}x{height} ({kernel}, filter {strategy})",
        manifest.files.len()
    );
    Ok(exit)
}

// ---- audit -----------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AuditBody {
    all_canonical: bool,
    files: Vec<AuditFile>,
}

#[derive(Debug, Serialize)]
struct AuditFile {
    path: String,
    #[serde(flatten)]
    report: crate::maskfilter::AuditReport,
}

fn cmd_audit(a: AuditArgs) -> Result<i32, CliError> {
    let expect = normalize_labels(&a.expect)?;
    let inputs = gather_inputs(&a.input)?;

    let mut files = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let img = read_gray(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        files.push(AuditFile {
            path: path.display().to_string(),
            report: audit(&img, &expect),
        });
    }
    let all_canonical = files.iter().all(|f| f.report.is_canonical);
    let body = AuditBody {
        all_canonical,
        files,
    };

    let flags = BTreeMap::from([("expect".to_string(), labels_flag(&expect))]);
    emit_json(a.json.as_deref(), &report_envelope("audit", flags, &body))?;
    if all_canonical {
        Ok(0)
    } else {
        let bad = body.files.iter().filter(|f| !f.report.is_canonical).count();
        eprintln!("{bad} of {} mask(s) carry extra labels", body.files.len());
        Ok(1)
    }
}

// ---- eval ------------------------------------------------------------------

fn stem_map(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut map = BTreeMap::new();
    for path in imgio::list_rasters(dir).map_err(validation)? {
        let stem = path
            .file_stem()
            .expect("listed files have names")
            .to_string_lossy()
            .to_string();
        if let Some(first) = map.insert(stem.clone(), path.clone()) {
            return Err(CliError::Validation(format!(
                "stem {stem} is ambiguous: {} and {}",
                first.display(),
                path.display()
            )));
        }
    }
    Ok(map)
}

fn read_mask(path: &Path, labels: &[u8]) -> Result<LabelMask, CliError> {
    let img =
        read_gray(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mask = LabelMask::new(img, labels).map_err(validation)?;
    if !mask.is_canonical() {
        return Err(CliError::Validation(format!(
            "{}: mask contains labels outside {:?}",
            path.display(),
            labels
        )));
    }
    Ok(mask)
}

fn cmd_eval(a: EvalArgs) -> Result<i32, CliError> {
    let labels = normalize_labels(&a.labels)?;
    let gt = stem_map(&a.gt_dir)?;
    let pred = stem_map(&a.pred_dir)?;

    let missing_pred: Vec<&String> = gt.keys().filter(|s| !pred.contains_key(*s)).collect();
    let missing_gt: Vec<&String> = pred.keys().filter(|s| !gt.contains_key(*s)).collect();
    if !missing_pred.is_empty() || !missing_gt.is_empty() {
        return Err(CliError::Validation(format!(
            "unpaired files — missing predictions for {missing_pred:?}, \
             missing ground truth for {missing_gt:?}"
        )));
    }
    if gt.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no PNG or PGM rasters found",
            a.gt_dir.display()
        )));
    }

    let mut pairs = Vec::with_capacity(gt.len());
    for (stem, gt_path) in &gt {
        let gt_mask = read_mask(gt_path, &labels)?;
        let pred_mask = read_mask(&pred[stem], &labels)?;
        if !gt_mask.image().same_dimensions(pred_mask.image()) {
            return Err(CliError::Validation(format!(
                "{stem}: ground truth and prediction sizes differ"
            )));
        }
        pairs.push((gt_mask, pred_mask));
    }

    let report = evaluate_corpus(&pairs, a.theta).map_err(|e| match e {
        MetricsError::InvalidTheta(_) => CliError::Usage(e.to_string()),
        other => validation(other),
    })?;

    let mut flags = BTreeMap::from([("labels".to_string(), labels_flag(&labels))]);
    if let Some(t) = a.theta {
        flags.insert("theta".to_string(), t.to_string());
    }
    emit_json(a.json.as_deref(), &report_envelope("eval", flags, &report))?;

    if let Some(csv_path) = &a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &report.per_class {
            w.serialize(row).map_err(validation)?;
        }
        let data =
            String::from_utf8(w.into_inner().map_err(validation)?).expect("CSV output is UTF-8");
        write_text_atomic(csv_path, &data)?;
    }
    Ok(0)
}

// ---- quant-compare ---------------------------------------------------------

#[derive(Debug, Serialize)]
struct QuantBody<'a> {
    thresholds: &'a OptionThresholds,
    options: &'a [crate::quantcompare::OptionReport],
    tally: &'a crate::quantcompare::TallyReport,
}

fn quant_error(e: QuantError) -> CliError {
    match e {
        QuantError::Empty
        | QuantError::MissingManual
        | QuantError::NoNetworks
        | QuantError::InvalidThresholds(..) => CliError::Usage(e.to_string()),
        other => validation(other),
    }
}

fn cmd_quant_compare(a: QuantCompareArgs) -> Result<i32, CliError> {
    let (scar_ml_tau, scar_pct_tau, mo_pct_tau) = a.thresholds;
    let thresholds = OptionThresholds {
        scar_ml_tau,
        scar_pct_tau,
        mo_pct_tau,
        predicate_mode: a.mode.into(),
    };
    thresholds.validate().map_err(quant_error)?;

    let file = File::open(&a.records)
        .map_err(|e| CliError::Validation(format!("{}: {e}", a.records.display())))?;
    let records = read_records_csv(file).map_err(quant_error)?;
    let reports = build_reports(&records, &thresholds).map_err(quant_error)?;
    let tally = tally(&[&reports[0], &reports[1], &reports[2]]).map_err(quant_error)?;

    let flags = BTreeMap::from([
        (
            "thresholds".to_string(),
            format!("{scar_ml_tau},{scar_pct_tau},{mo_pct_tau}"),
        ),
        (
            "mode".to_string(),
            match a.mode {
                ModeArg::ValueBelow => "value-below".to_string(),
                ModeArg::AbsDiffBelow => "abs-diff-below".to_string(),
            },
        ),
    ]);
    let body = QuantBody {
        thresholds: &thresholds,
        options: &reports,
        tally: &tally,
    };
    emit_json(
        a.json.as_deref(),
        &report_envelope("quant-compare", flags, &body),
    )?;
    Ok(0)
}

// ---- split / augment -------------------------------------------------------

/// Scans the paired corpus shared by `split` and `augment`, enforcing the
/// pairing policy.
fn scan_corpus(
    images: &Path,
    masks: &Path,
    labels: &[u8],
    allow_unpaired: bool,
) -> Result<dataset::ScanReport, CliError> {
    let report = scan_pairs(images, masks, labels).map_err(validation)?;
    if !allow_unpaired && !(report.unpaired_images.is_empty() && report.unpaired_masks.is_empty()) {
        return Err(CliError::Validation(format!(
            "unpaired files — images without masks {:?}, masks without images {:?} \
             (pass --allow-unpaired to proceed with the matched pairs)",
            report.unpaired_images, report.unpaired_masks
        )));
    }
    if report.pairs.is_empty() {
        return Err(CliError::Validation(format!(
            "no matched image/mask pairs between {} and {}",
            images.display(),
            masks.display()
        )));
    }
    Ok(report)
}

fn cmd_split(a: SplitArgs) -> Result<i32, CliError> {
    let labels = normalize_labels(&a.labels)?;
    let spec = SplitSpec {
        train_frac: a.train,
        val_frac: a.val,
        test_frac: a.test,
        seed: a.seed,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let report = scan_corpus(&a.images, &a.masks, &labels, a.allow_unpaired)?;
    let stems: Vec<String> = report.pairs.iter().map(|p| p.id.clone()).collect();
    let parts = split(stems, &spec).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut manifest = new_manifest(
        "split",
        BTreeMap::from([
            ("train".to_string(), a.train.to_string()),
            ("val".to_string(), a.val.to_string()),
            ("test".to_string(), a.test.to_string()),
            ("labels".to_string(), labels_flag(&labels)),
            ("allow-unpaired".to_string(), a.allow_unpaired.to_string()),
        ]),
        Some(a.seed),
    );
    manifest.inputs = vec![
        a.images.display().to_string(),
        a.masks.display().to_string(),
    ];

    for (name, stems) in [
        ("train.txt", &parts.train),
        ("val.txt", &parts.val),
        ("test.txt", &parts.test),
    ] {
        let path = a.out.join(name);
        let mut text = stems.join("\n");
        text.push('\n');
        write_text_atomic(&path, &text)?;
        manifest.outputs.push(path.display().to_string());
        for stem in stems {
            manifest.files.push(FileOutcome {
                input: stem.clone(),
                output: Some(name.to_string()),
                ok: true,
                detail: None,
            });
        }
    }

    write_manifest(&manifest, &a.out.join("manifest.json"))?;
    println!(
        "split {} pair(s): train {} / val {} / test {}",
        report.pairs.len(),
        parts.train.len(),
        parts.val.len(),
        parts.test.len()
    );
    Ok(0)
}

fn cmd_augment(a: AugmentArgs) -> Result<i32, CliError> {
    let labels = normalize_labels(&a.labels)?;
    let spec = AugmentSpec {
        reflect_lr_prob: a.reflect_prob,
        translate_min: a.translate_min,
        translate_max: a.translate_max,
        fill_value: a.fill,
        seed: a.seed,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let report = scan_corpus(&a.images, &a.masks, &labels, a.allow_unpaired)?;
    let image_dir = a.out.join("images");
    let mask_dir = a.out.join("masks");
    ensure_dir(&image_dir)?;
    ensure_dir(&mask_dir)?;
    let format = RasterFormat::from(a.format);

    let mut manifest = new_manifest(
        "augment",
        BTreeMap::from([
            ("count".to_string(), a.count.to_string()),
            ("reflect-prob".to_string(), a.reflect_prob.to_string()),
            ("translate-min".to_string(), a.translate_min.to_string()),
            ("translate-max".to_string(), a.translate_max.to_string()),
            ("fill".to_string(), a.fill.to_string()),
            ("labels".to_string(), labels_flag(&labels)),
            ("format".to_string(), format.extension().to_string()),
        ]),
        Some(a.seed),
    );
    manifest.inputs = vec![
        a.images.display().to_string(),
        a.masks.display().to_string(),
    ];
    manifest.outputs = vec![
        image_dir.display().to_string(),
        mask_dir.display().to_string(),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for pair in &report.pairs {
        for copy in 0..a.count {
            // Draws happen before any I/O so the sequence of augmentations
            // for a given seed does not depend on write failures.
            let sample = augment(pair, &spec, &mut rng).map_err(validation)?;
            let name = format!("{}_aug{}.{}", pair.id, copy, format.extension());
            let result = write_gray(&image_dir.join(&name), &sample.image)
                .and_then(|_| write_gray(&mask_dir.join(&name), sample.mask.image()));
            manifest.files.push(FileOutcome {
                input: pair.id.clone(),
                output: result.is_ok().then(|| name.clone()),
                ok: result.is_ok(),
                detail: result.err().map(|e| e.to_string()),
            });
        }
    }

    write_manifest(&manifest, &a.out.join("manifest.json"))?;
    let exit = finish_batch(&manifest)?;
    println!(
        "augmented {} pair(s) x{} into {}",
        report.pairs.len(),
        a.count,
        a.out.display()
    );
    Ok(exit)
}
