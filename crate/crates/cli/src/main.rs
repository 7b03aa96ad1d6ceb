//! `gridcraft`: grid microarray images, dump profiles, generate synthetic
//! arrays and score grids against ground truth.
//!
//! Exit status: 0 on success, 1 when processing fails (the error is printed
//! to standard error as `{"error": kind, "message": text}`), 2 on usage
//! errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gridcraft::document::{write_cells_csv, GridDocument, MethodDescriptor};
use gridcraft::extract::{count_cell_spots, extract_array_cells, score_array, spot_histogram};
use gridcraft::gridding::{grid_array, Scope, DEFAULT_MIN_SCORE};
use gridcraft::io::{load_image, save_png16, ChannelPolicy};
use gridcraft::profiles::{derivative, smooth, stddev_profile, sum_profile, write_csv};
use gridcraft::synth::{fig3_like_spec, generate, SyntheticSpec};
use gridcraft::{ArrayTemplate, Axis, Error, Image, Method, MethodKind};

#[derive(Parser)]
#[command(name = "gridcraft", version, about = "Automatic gridding of cDNA microarray images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid an image into subarrays and spot cells.
    Grid(GridArgs),
    /// Write a projection profile as CSV.
    Profile(ProfileArgs),
    /// Generate a synthetic array image and its ground truth.
    Synth(SynthArgs),
    /// Score a grid document against a ground-truth document.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method_kind)]
    method: MethodKind,
    /// Range fraction for the threshold methods (sum, stddev). Required by
    /// them and refused by every other method.
    #[arg(long)]
    threshold: Option<f64>,
    /// Odd moving-average window applied to the profile before the
    /// derivative methods look for minima.
    #[arg(long)]
    smooth: Option<usize>,
    /// Template file (or inline `key=value,...`) for the template method.
    #[arg(long)]
    template: Option<String>,
    /// Smallest template correlation accepted.
    #[arg(long)]
    min_score: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write one CSV row per spot cell.
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Also write every spot cell as a 16-bit PNG under this directory.
    #[arg(long)]
    crop_dir: Option<PathBuf>,
    /// Grid the inverted image (dark spots on a bright background).
    #[arg(long)]
    invert: bool,
    #[arg(long, value_enum, default_value_t = ScopeArg::Full)]
    scope: ScopeArg,
    /// Worker threads for the per-subarray stage (default: all processors).
    #[arg(long, env = "GRIDCRAFT_JOBS")]
    jobs: Option<usize>,
    /// Leave the timing block out of the grid document.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = "gray", value_parser = parse_channel)]
    channel: ChannelPolicy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Full,
    Subarray,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Sum,
    Stddev,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Cols,
    Rows,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Differentiate this many times (0, 1 or 2).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    derivative: u8,
    /// Odd moving-average window applied before differentiating.
    #[arg(long)]
    smooth: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "gray", value_parser = parse_channel)]
    channel: ChannelPolicy,
}

#[derive(Args)]
struct SynthArgs {
    /// Spec file of `key=value` lines; absent keys keep the fig3-like values.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// 16-bit grayscale PNG.
    #[arg(long)]
    out_image: PathBuf,
    /// Ground-truth grid document.
    #[arg(long)]
    out_truth: PathBuf,
    #[arg(long)]
    out_centers: Option<PathBuf>,
    /// Template matching the generated lattice, for `grid --template`.
    #[arg(long)]
    out_template: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig3Like,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    found: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Largest distance, in pixels, at which a found cut matches a true one.
    #[arg(long)]
    tol: f64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Image the found grid was computed on; adds a spots-per-cell histogram.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "gray", value_parser = parse_channel)]
    channel: ChannelPolicy,
}

fn parse_method_kind(s: &str) -> Result<MethodKind, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = MethodKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn parse_channel(s: &str) -> Result<ChannelPolicy, String> {
    s.parse().map_err(|e: String| e)
}

enum Failure {
    Usage(String),
    Processing(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Processing(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Processing(Error::Io(e))
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, bytes).map_err(Error::from)
}

/// Builds the method from the flags, enforcing which flags each method
/// accepts before any input is read.
fn method_from_args(a: &GridArgs) -> Result<Method, Failure> {
    let kind = a.method;
    if a.threshold.is_some() && !kind.is_threshold() {
        return Err(usage(format!("--threshold is not accepted by method '{kind}'")));
    }
    if a.smooth.is_some() && !kind.is_derivative() {
        return Err(usage(format!("--smooth is not accepted by method '{kind}'")));
    }
    if (a.template.is_some() || a.min_score.is_some()) && kind != MethodKind::TemplateMatch {
        return Err(usage(format!("--template/--min-score are not accepted by method '{kind}'")));
    }
    if kind == MethodKind::TemplateMatch {
        let spec = a.template.as_deref().ok_or_else(|| usage("method 'template' requires --template"))?;
        let text = match fs::read_to_string(spec) {
            Ok(t) => t,
            Err(_) if spec.contains('=') => spec.to_string(),
            Err(e) => return Err(usage(format!("cannot read template '{spec}': {e}"))),
        };
        let template = ArrayTemplate::parse_kv(&text).map_err(|e| usage(e.to_string()))?;
        let method = Method::TemplateMatch {
            template,
            min_score: a.min_score.unwrap_or(DEFAULT_MIN_SCORE),
        };
        method.validate().map_err(|e| usage(e.to_string()))?;
        return Ok(method);
    }
    if kind.is_threshold() && a.threshold.is_none() {
        return Err(usage(format!("method '{kind}' requires --threshold")));
    }
    let method = Method::new(kind, a.threshold).map_err(|e| usage(e.to_string()))?;
    match a.smooth {
        Some(w) => method.with_smoothing(w).map_err(|e| usage(e.to_string())),
        None => Ok(method),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn cmd_grid(a: GridArgs) -> CmdResult {
    let method = method_from_args(&a)?;
    if a.jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    let mut timing = BTreeMap::new();
    let t = Instant::now();
    let mut img: Image = load_image(&a.input, a.channel)?;
    if a.invert {
        img = img.inverted();
    }
    timing.insert("load".to_string(), ms(t));

    let scope = match a.scope {
        ScopeArg::Full => Scope::Full,
        ScopeArg::Subarray => Scope::Subarray,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Processing(Error::Io(std::io::Error::other(e))))?;
    let t = Instant::now();
    let grid = pool.install(|| grid_array(&img, &method, scope))?;
    timing.insert("grid".to_string(), ms(t));

    if a.cells.is_some() || a.crop_dir.is_some() {
        let t = Instant::now();
        let cells = extract_array_cells(&img, &grid)?;
        if let Some(path) = &a.cells {
            let counts = pool.install(|| count_cell_spots(&img, &cells))?;
            let mut buf = Vec::new();
            write_cells_csv(&mut buf, &cells, &counts)?;
            write_file(path, buf)?;
        }
        if let Some(dir) = &a.crop_dir {
            for c in &cells {
                let sub = dir.join(format!("sub{}_{}", c.subarray_index.0, c.subarray_index.1));
                fs::create_dir_all(&sub)?;
                let name = format!("spot{}_{}.png", c.cell_index.0, c.cell_index.1);
                save_png16(&img.crop(c.bounds)?, sub.join(name))?;
            }
        }
        timing.insert("extract".to_string(), ms(t));
    }

    let mut doc = GridDocument::new(a.input.display().to_string(), &grid, MethodDescriptor::Method(method));
    if !a.no_timing {
        doc.timing = Some(timing);
    }
    write_file(&a.out, doc.to_json())?;
    Ok(())
}

fn cmd_profile(a: ProfileArgs) -> CmdResult {
    if let Some(w) = a.smooth {
        if w == 0 || w % 2 == 0 {
            return Err(usage("--smooth must be an odd window"));
        }
    }
    let img: Image = load_image(&a.input, a.channel)?;
    let axis = match a.axis {
        AxisArg::Cols => Axis::Columns,
        AxisArg::Rows => Axis::Rows,
    };
    let mut p = match a.kind {
        KindArg::Sum => sum_profile(&img, axis),
        KindArg::Stddev => stddev_profile(&img, axis)?,
    };
    if let Some(w) = a.smooth {
        p = smooth(&p, w)?;
    }
    for _ in 0..a.derivative {
        p = derivative(&p)?;
    }
    let mut buf = Vec::new();
    write_csv(&p, &mut buf)?;
    write_file(&a.out, buf)?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    let mut spec = match (&a.spec, a.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read spec '{}': {e}", path.display())))?;
            SyntheticSpec::parse_kv(&text).map_err(|e| usage(e.to_string()))?
        }
        (None, Some(PresetArg::Fig3Like)) => fig3_like_spec(),
        (None, None) => return Err(usage("one of --spec or --preset is required")),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    for w in spec.warnings() {
        eprintln!("warning: {w}");
    }
    let (img, truth) = generate::<f64>(&spec)?;
    save_png16(&img, &a.out_image)?;
    let doc = GridDocument::new(a.out_image.display().to_string(), &truth.grid, MethodDescriptor::truth());
    write_file(&a.out_truth, doc.to_json())?;
    if let Some(path) = &a.out_centers {
        let mut buf = Vec::new();
        truth.write_centers_csv(&mut buf)?;
        write_file(path, buf)?;
    }
    if let Some(path) = &a.out_template {
        write_file(path, spec.array_template().to_string())?;
    }
    Ok(())
}

fn read_document(path: &Path) -> Result<GridDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read '{}': {e}", path.display())))?;
    GridDocument::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return Err(usage("--tol must be a non-negative number"));
    }
    let found = read_document(&a.found)?.to_grid().map_err(|e| usage(e.to_string()))?;
    let truth = read_document(&a.truth)?.to_grid().map_err(|e| usage(e.to_string()))?;
    let score = score_array(&found, &truth, a.tol).map_err(|e| usage(e.to_string()))?;
    let mut report = json!({
        "tol": a.tol,
        "subarray": { "cols": score.subarray_cols, "rows": score.subarray_rows },
        "spots": { "cols": score.spot_cols, "rows": score.spot_rows },
    });
    if let Some(path) = &a.input {
        let img: Image = load_image(path, a.channel)?;
        let cells = extract_array_cells(&img, &found)?;
        let counts = count_cell_spots(&img, &cells)?;
        let hist: BTreeMap<String, usize> =
            spot_histogram(&counts).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        report["spots_per_cell"] = json!(hist);
    }
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    print!("{text}");
    if let Some(path) = &a.report {
        write_file(path, text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Grid(a) => cmd_grid(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Processing(e)) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
