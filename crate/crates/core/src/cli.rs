//! Command-line front end. `run` parses arguments, dispatches and maps
//! failures to exit codes: 0 success, 1 usage, 2 data, 3 internal.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::synthetic::{write_synthetic_dataset, SyntheticConfig};
use crate::bench::{
    cross_validate, describe_dataset, load_annotations, load_manifest, samples_from_rows, sequence_descriptors, sta_grid,
    sweep, with_jobs, write_report_csv, Action, BenchError, DescribeOptions, DirectorySource,
};
use crate::color::flow_to_color;
use crate::flow::{load_flo, read_flow_text, save_flo, write_flow_text, FarnebackParams, FlowAlgorithm, FlowField, TvL1Params};
use crate::learn::{ClassifierConfig, ForestConfig, SvmConfig};
use crate::raster::load_pgm;
use crate::sta::{read_descriptor_csv, write_descriptor_csv, DescriptorKind, DescriptorRow, DescriptorSet, StaParams};
use crate::synth::translation_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Invariant(_) => CliError::Internal(e.to_string()),
            other => CliError::data(other),
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::data(e)
            }
        }
    )*};
}

data_errors!(
    crate::raster::RasterError,
    crate::flow::FlowError,
    crate::sta::StaError,
    crate::learn::LearnError,
    crate::color::ColorError,
    io::Error,
    serde_json::Error
);

#[derive(Parser, Debug)]
#[command(
    name = "staflow",
    version,
    about = "Dense optical flow, STA descriptors and leave-one-person-out action recognition"
)]
pub struct Cli {
    /// Worker threads for per-sequence and per-fold work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Master seed for every stochastic component.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Suppress tables and summaries on stdout and stderr; warnings and errors still print.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dense flow between two PGM frames.
    Flow(FlowCmd),
    /// STA descriptors of manifest sequences or of one frame directory.
    Describe(DescribeCmd),
    /// Leave-one-person-out cross-validation.
    Cv(CvCmd),
    /// Cartesian sweep over flow, STA and classifier settings.
    Sweep(SweepCmd),
    /// Render a flow file as a color image.
    Colorize(ColorizeCmd),
    /// Write synthetic translation fixtures, or a synthetic action dataset.
    Synth(SynthCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Farneback,
    Tvl1,
}

#[derive(Args, Debug, Clone)]
pub struct FarnebackArgs {
    /// Farneback w: averaging half-width, window 2w+1.
    #[arg(long, default_value_t = 2)]
    pub w: usize,
    /// Farneback s: polynomial-expansion neighborhood size (odd).
    #[arg(long, default_value_t = 5)]
    pub s: usize,
    /// Farneback σ: standard deviation of the Gaussian applicability.
    #[arg(long, default_value_t = 1.1)]
    pub sigma: f64,
    /// Farneback pyramid levels.
    #[arg(long = "fb-levels", default_value_t = 3)]
    pub fb_levels: usize,
    /// Farneback pyramid scale factor.
    #[arg(long = "fb-scale", default_value_t = 0.5)]
    pub fb_scale: f64,
    /// Farneback refinement passes per level.
    #[arg(long = "fb-iterations", default_value_t = 3)]
    pub fb_iterations: usize,
}

impl FarnebackArgs {
    fn params(&self) -> FarnebackParams {
        FarnebackParams {
            w: self.w,
            s: self.s,
            sigma: self.sigma,
            levels: self.fb_levels,
            scale: self.fb_scale,
            iterations: self.fb_iterations,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TvL1Args {
    /// TV-L1 λ: data-term weight.
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// TV-L1 θ: coupling between the flow and the auxiliary field.
    #[arg(long, default_value_t = 0.1)]
    pub theta: f64,
    /// TV-L1 τ: dual time step (stable for τ ≤ 0.25).
    #[arg(long, default_value_t = 0.15)]
    pub tau: f64,
    /// TV-L1 warps per level.
    #[arg(long, default_value_t = 5)]
    pub warps: usize,
    /// TV-L1 pyramid levels.
    #[arg(long = "tvl1-levels", default_value_t = 5)]
    pub tvl1_levels: usize,
    /// TV-L1 pyramid scale factor.
    #[arg(long = "tvl1-scale", default_value_t = 0.5)]
    pub tvl1_scale: f64,
    /// TV-L1 stopping threshold ε on the RMS flow update.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// TV-L1 inner iteration cap per warp.
    #[arg(long = "inner-iterations", default_value_t = 300)]
    pub inner_iterations: usize,
    /// Disable the 5x5 median filter applied after each warp.
    #[arg(long = "no-median")]
    pub no_median: bool,
}

impl TvL1Args {
    fn params(&self) -> TvL1Params {
        TvL1Params {
            lambda: self.lambda,
            theta: self.theta,
            tau: self.tau,
            warps: self.warps,
            levels: self.tvl1_levels,
            scale: self.tvl1_scale,
            epsilon: self.epsilon,
            max_inner_iterations: self.inner_iterations,
            median_filtering: !self.no_median,
            unit_intensities: false,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct FlowChoice {
    /// Flow solver.
    #[arg(long, value_enum, default_value_t = Algorithm::Farneback)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub farneback: FarnebackArgs,
    #[command(flatten)]
    pub tvl1: TvL1Args,
}

impl FlowChoice {
    fn algorithm(&self) -> FlowAlgorithm {
        match self.algorithm {
            Algorithm::Farneback => FlowAlgorithm::Farneback(self.farneback.params()),
            Algorithm::Tvl1 => {
                let p = self.tvl1.params();
                warn_tvl1(&p);
                FlowAlgorithm::Tvl1(p)
            }
        }
    }
}

fn warn_tvl1(p: &TvL1Params) {
    for w in p.warnings() {
        eprintln!("warning: {w}");
    }
}

#[derive(Args, Debug, Clone)]
pub struct StaArgs {
    /// STA m: grid columns.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// STA n: grid rows.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// STA k1: orientation bins per grid histogram.
    #[arg(long, default_value_t = 8)]
    pub k1: usize,
    /// STA k2: bins per STA2 component histogram.
    #[arg(long, default_value_t = 5)]
    pub k2: usize,
    /// Count votes instead of weighting them by flow magnitude.
    #[arg(long)]
    pub unweighted: bool,
    /// Descriptor type.
    #[arg(long, value_enum, default_value_t = Kind::Sta2)]
    pub kind: Kind,
    /// Use only the first fraction of each sequence's frame pairs.
    #[arg(long)]
    pub truncate: Option<f64>,
}

impl StaArgs {
    fn params(&self) -> StaParams {
        StaParams { weighted: !self.unweighted, ..StaParams::new(self.m, self.n, self.k1, self.k2) }
    }

    fn options(&self) -> DescribeOptions {
        DescribeOptions { kind: self.kind.into(), truncate: self.truncate }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Sta1,
    Sta2,
}

impl From<Kind> for DescriptorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Sta1 => DescriptorKind::Sta1,
            Kind::Sta2 => DescriptorKind::Sta2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassifierKind {
    Forest,
    Svm,
}

#[derive(Args, Debug, Clone)]
pub struct ClassifierArgs {
    #[arg(long, value_enum, default_value_t = ClassifierKind::Forest)]
    pub classifier: ClassifierKind,
    /// Random forest: number of trees.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Random forest: maximum tree depth.
    #[arg(long = "max-depth", default_value_t = 15)]
    pub max_depth: usize,
    /// Random forest: candidate features per split (default round(sqrt(d))).
    #[arg(long = "features-per-split")]
    pub features_per_split: Option<usize>,
    /// Linear SVM: cost C.
    #[arg(long = "svm-c", default_value_t = 1.0)]
    pub svm_c: f64,
    /// Linear SVM: maximum passes over the data.
    #[arg(long = "svm-max-iterations", default_value_t = 100_000)]
    pub svm_max_iterations: usize,
    /// Linear SVM: stop when the dual objective changes less than this.
    #[arg(long = "svm-tolerance", default_value_t = 1e-12)]
    pub svm_tolerance: f64,
}

impl ClassifierArgs {
    fn forest(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.trees,
            max_depth: self.max_depth,
            n_features_per_split: self.features_per_split,
            seed: 0,
        }
    }

    fn svm(&self, c: f64) -> SvmConfig {
        SvmConfig { c, max_iterations: self.svm_max_iterations, tolerance: self.svm_tolerance }
    }

    fn config(&self) -> ClassifierConfig {
        match self.classifier {
            ClassifierKind::Forest => ClassifierConfig::Forest(self.forest()),
            ClassifierKind::Svm => ClassifierConfig::Svm(self.svm(self.svm_c)),
        }
    }
}

#[derive(Args, Debug)]
pub struct FlowCmd {
    /// First frame (PGM).
    pub prev: PathBuf,
    /// Second frame (PGM).
    pub next: PathBuf,
    /// Output flow file: `.flo` binary, anything else is the text dump.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write a color rendering (.ppm or .png).
    #[arg(long)]
    pub color: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowChoice,
}

#[derive(Args, Debug)]
pub struct DescribeCmd {
    /// Dataset manifest (JSON).
    #[arg(long, conflicts_with_all = ["frames", "boxes"])]
    pub manifest: Option<PathBuf>,
    /// Restrict to these sequence ids (repeatable).
    #[arg(long, requires = "manifest")]
    pub id: Vec<String>,
    /// Directory of numbered frames (frame_000001.pgm, ...).
    #[arg(long, requires = "boxes")]
    pub frames: Option<PathBuf>,
    /// Box file for `--frames` ("frame x y w h" per line).
    #[arg(long, requires = "frames")]
    pub boxes: Option<PathBuf>,
    /// Output: `.json` descriptor set, otherwise CSV; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowChoice,
    #[command(flatten)]
    pub sta: StaArgs,
}

#[derive(Args, Debug)]
pub struct CvCmd {
    /// Dataset manifest; descriptors are computed first.
    #[arg(long, required_unless_present = "descriptors", conflicts_with = "descriptors")]
    pub manifest: Option<PathBuf>,
    /// Precomputed descriptors (.csv or .json).
    #[arg(long)]
    pub descriptors: Option<PathBuf>,
    /// Write the confusion matrix and accuracy as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowChoice,
    #[command(flatten)]
    pub sta: StaArgs,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
}

#[derive(Args, Debug)]
pub struct SweepCmd {
    /// Dataset manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Report: `.json`, otherwise CSV; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Flow solvers to sweep.
    #[arg(long = "algorithms", value_enum, value_delimiter = ',', default_value = "farneback")]
    pub algorithms: Vec<Algorithm>,
    /// Farneback w values.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub w: Vec<usize>,
    /// Farneback s values.
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub s: Vec<usize>,
    /// Farneback σ values.
    #[arg(long, value_delimiter = ',', default_value = "1.1")]
    pub sigma: Vec<f64>,
    /// TV-L1 λ values.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub lambda: Vec<f64>,
    /// TV-L1 θ values.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub theta: Vec<f64>,
    /// TV-L1 τ values.
    #[arg(long, value_delimiter = ',', default_value = "0.15")]
    pub tau: Vec<f64>,
    /// STA m values (grid columns).
    #[arg(long, value_delimiter = ',', default_value = "3,6")]
    pub m: Vec<usize>,
    /// STA n values (grid rows).
    #[arg(long, value_delimiter = ',', default_value = "6,8")]
    pub n: Vec<usize>,
    /// STA k1 values (orientation bins).
    #[arg(long, value_delimiter = ',', default_value = "4,5,8")]
    pub k1: Vec<usize>,
    /// STA k2 values (STA2 bins).
    #[arg(long, value_delimiter = ',', default_value = "5,8")]
    pub k2: Vec<usize>,
    /// Also sweep every m×n size with columns and rows swapped.
    #[arg(long = "union-grid")]
    pub union_grid: bool,
    /// Classifiers to sweep.
    #[arg(long = "classifiers", value_enum, value_delimiter = ',', default_value = "forest")]
    pub classifiers: Vec<ClassifierKind>,
    /// Linear SVM cost values C.
    #[arg(long = "svm-c", value_delimiter = ',', default_value = "1")]
    pub svm_c: Vec<f64>,
    /// Random forest: number of trees.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Random forest: maximum tree depth.
    #[arg(long = "max-depth", default_value_t = 15)]
    pub max_depth: usize,
    /// Descriptor type.
    #[arg(long, value_enum, default_value_t = Kind::Sta2)]
    pub kind: Kind,
}

#[derive(Args, Debug)]
pub struct ColorizeCmd {
    /// Flow file (.flo or text dump).
    pub input: PathBuf,
    /// Image to write (.ppm or .png).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Magnitude mapped to full saturation (default: the field's maximum).
    #[arg(long)]
    pub max: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Number of translation fixtures.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Write the six-class action dataset instead of translation fixtures.
    #[arg(long)]
    pub dataset: bool,
    /// Action dataset: persons.
    #[arg(long, default_value_t = 10)]
    pub persons: u32,
    /// Action dataset: sequences per person and class.
    #[arg(long = "per-class", default_value_t = 2)]
    pub per_class: u32,
    /// Action dataset: frames per sequence.
    #[arg(long, default_value_t = 6)]
    pub frames: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("{e}");
            e.exit_code()
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            eprintln!("internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Flow(c) => cmd_flow(c),
        Command::Describe(c) => cmd_describe(c, cli.jobs),
        Command::Cv(c) => cmd_cv(c, cli.jobs, cli.seed, cli.quiet),
        Command::Sweep(c) => cmd_sweep(c, cli.jobs, cli.seed, cli.quiet),
        Command::Colorize(c) => cmd_colorize(c),
        Command::Synth(c) => cmd_synth(c, cli.seed, cli.quiet),
    }
}

fn is_ext(path: &Path, ext: &str) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn write_flow(flow: &FlowField, path: &Path) -> Result<(), CliError> {
    if is_ext(path, "flo") {
        save_flo(flow, path)?;
    } else {
        fs::write(path, write_flow_text(flow))?;
    }
    Ok(())
}

fn read_flow(path: &Path) -> Result<FlowField, CliError> {
    if is_ext(path, "flo") {
        Ok(load_flo(path)?)
    } else {
        Ok(read_flow_text(&fs::read_to_string(path)?)?)
    }
}

fn save_color(flow: &FlowField, max: Option<f64>, path: &Path) -> Result<(), CliError> {
    let c = flow_to_color(flow, max);
    if c.non_finite > 0 {
        eprintln!("warning: {} non-finite flow vectors drawn black", c.non_finite);
    }
    c.image.save(path)?;
    Ok(())
}

fn cmd_flow(c: &FlowCmd) -> Result<(), CliError> {
    let prev = load_pgm(&c.prev)?;
    let next = load_pgm(&c.next)?;
    let flow = c.flow.algorithm().compute(&prev, &next)?;
    write_flow(&flow, &c.output)?;
    if let Some(p) = &c.color {
        save_color(&flow, None, p)?;
    }
    Ok(())
}

fn write_rows(rows: &[DescriptorRow], set: impl FnOnce() -> DescriptorSet, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) if is_ext(p, "json") => fs::write(p, serde_json::to_string_pretty(&set())?)?,
        Some(p) => write_descriptor_csv(rows, io::BufWriter::new(fs::File::create(p)?))?,
        None => write_descriptor_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_describe(c: &DescribeCmd, jobs: usize) -> Result<(), CliError> {
    let flow = c.flow.algorithm();
    let params = c.sta.params();
    let options = c.sta.options();
    let rows = if let Some(manifest_path) = &c.manifest {
        let mut manifest = load_manifest(manifest_path)?;
        if !c.id.is_empty() {
            if let Some(missing) = c.id.iter().find(|id| manifest.get(id).is_none()) {
                return Err(CliError::Data(format!("no sequence {missing:?} in the manifest")));
            }
            manifest.sequences.retain(|r| c.id.contains(&r.id));
        }
        let described = describe_dataset(&manifest, &flow, &[params], &options, jobs)?;
        for s in &described.skipped {
            eprintln!("skipped {}: {}", s.id, s.reason);
        }
        described.rows.into_iter().next().unwrap_or_default()
    } else if let (Some(frames), Some(boxes)) = (&c.frames, &c.boxes) {
        let count = (1..).take_while(|&i| crate::bench::frame_path(frames, i).exists()).count();
        let source = DirectorySource { dir: frames.clone(), count };
        let boxes = load_annotations(boxes, count)?;
        let id = frames.file_name().map_or("sequence".into(), |n| n.to_string_lossy().into_owned());
        let d = with_jobs(jobs, || sequence_descriptors(&id, &source, &boxes, &flow, &[params], &options))?;
        vec![DescriptorRow { id, label: String::new(), group: 0, values: d.into_iter().next().map(|d| d.values).unwrap_or_default() }]
    } else {
        return Err(CliError::Usage("give --manifest, or --frames with --boxes".into()));
    };
    let set = || DescriptorSet { kind: options.kind, params, flow: Some(flow.label()), rows: rows.clone() };
    write_rows(&rows, set, c.output.as_deref())
}

fn load_descriptor_rows(path: &Path) -> Result<Vec<DescriptorRow>, CliError> {
    if is_ext(path, "json") {
        let set: DescriptorSet = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok(set.rows)
    } else {
        Ok(read_descriptor_csv(io::BufReader::new(fs::File::open(path)?))?)
    }
}

fn cmd_cv(c: &CvCmd, jobs: usize, seed: u64, quiet: bool) -> Result<(), CliError> {
    let (rows, skipped) = match (&c.manifest, &c.descriptors) {
        (Some(m), _) => {
            let manifest = load_manifest(m)?;
            let described = describe_dataset(&manifest, &c.flow.algorithm(), &[c.sta.params()], &c.sta.options(), jobs)?;
            let skipped: Vec<String> = described.skipped.iter().map(|s| s.id.clone()).collect();
            (described.rows.into_iter().next().unwrap_or_default(), skipped)
        }
        (None, Some(d)) => (load_descriptor_rows(d)?, Vec::new()),
        (None, None) => return Err(CliError::Usage("give --manifest or --descriptors".into())),
    };
    for id in &skipped {
        eprintln!("skipped {id}: no usable frame pair");
    }
    let samples = samples_from_rows(&rows)?;
    let config = c.classifier.config();
    let confusion = cross_validate(&samples, &Action::headings(), &config, seed, jobs)?;
    let accuracy = confusion.accuracy()?;
    if !quiet {
        println!("{confusion}");
    }
    if let Some(path) = &c.report {
        let report = serde_json::json!({
            "classifier": config,
            "seed": seed,
            "accuracy": accuracy,
            "confusion": confusion,
            "skipped": skipped,
        });
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_sweep(c: &SweepCmd, jobs: usize, seed: u64, quiet: bool) -> Result<(), CliError> {
    let manifest = load_manifest(&c.manifest)?;
    let mut flows = Vec::new();
    for algo in &c.algorithms {
        match algo {
            Algorithm::Farneback => {
                for &w in &c.w {
                    for &s in &c.s {
                        for &sigma in &c.sigma {
                            flows.push(FlowAlgorithm::Farneback(FarnebackParams { w, s, sigma, ..Default::default() }));
                        }
                    }
                }
            }
            Algorithm::Tvl1 => {
                for &lambda in &c.lambda {
                    for &theta in &c.theta {
                        for &tau in &c.tau {
                            let p = TvL1Params { lambda, theta, tau, ..Default::default() };
                            warn_tvl1(&p);
                            flows.push(FlowAlgorithm::Tvl1(p));
                        }
                    }
                }
            }
        }
    }
    let stas = if c.union_grid {
        let mut g = sta_grid(&c.m, &c.n, &c.k1, &c.k2);
        for p in sta_grid(&c.n, &c.m, &c.k1, &c.k2) {
            if !g.contains(&p) {
                g.push(p);
            }
        }
        g
    } else {
        sta_grid(&c.m, &c.n, &c.k1, &c.k2)
    };
    let mut classifiers = Vec::new();
    for kind in &c.classifiers {
        match kind {
            ClassifierKind::Forest => classifiers.push(ClassifierConfig::Forest(ForestConfig {
                n_trees: c.trees,
                max_depth: c.max_depth,
                ..Default::default()
            })),
            ClassifierKind::Svm => {
                classifiers.extend(c.svm_c.iter().map(|&cost| ClassifierConfig::Svm(SvmConfig { c: cost, ..Default::default() })))
            }
        }
    }
    let options = DescribeOptions { kind: c.kind.into(), truncate: None };
    let rows = sweep(&manifest, &flows, &stas, &classifiers, &options, seed, jobs)?;
    match &c.output {
        Some(p) if is_ext(p, "json") => fs::write(p, serde_json::to_string_pretty(&rows)?)?,
        Some(p) => write_report_csv(&rows, io::BufWriter::new(fs::File::create(p)?))?,
        None => write_report_csv(&rows, io::stdout().lock())?,
    }
    if let Some(best) = rows.first().filter(|_| !quiet) {
        eprintln!(
            "best: {} m={} n={} k1={} k2={} {} accuracy {:.4}",
            best.flow.label(),
            best.sta.m,
            best.sta.n,
            best.sta.k1,
            best.sta.k2,
            best.classifier.label(),
            best.accuracy
        );
    }
    Ok(())
}

fn cmd_colorize(c: &ColorizeCmd) -> Result<(), CliError> {
    let flow = read_flow(&c.input)?;
    save_color(&flow, c.max, &c.output)
}

fn cmd_synth(c: &SynthCmd, seed: u64, quiet: bool) -> Result<(), CliError> {
    fs::create_dir_all(&c.output)?;
    if c.dataset {
        let config = SyntheticConfig {
            persons: c.persons,
            sequences_per_class: c.per_class,
            frames: c.frames,
            seed,
            ..Default::default()
        };
        let path = write_synthetic_dataset(&c.output, &config)?;
        if !quiet {
            println!("{}", path.display());
        }
        return Ok(());
    }
    for (i, fx) in translation_suite(c.count, seed).iter().enumerate() {
        let stem = c.output.join(format!("scene_{:02}", i + 1));
        crate::raster::save_pgm(&fx.prev, stem.with_extension("prev.pgm"))?;
        crate::raster::save_pgm(&fx.next, stem.with_extension("next.pgm"))?;
        let (w, h) = fx.prev.dimensions();
        save_flo(&FlowField::constant(w, h, fx.truth.0, fx.truth.1), stem.with_extension("truth.flo"))?;
    }
    if !quiet {
        println!("{} fixtures in {}", c.count, c.output.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_names_every_symbol() {
        let mut help = Vec::new();
        for sub in ["flow", "sweep", "cv"] {
            let mut cmd = Cli::command();
            let sc = cmd.find_subcommand_mut(sub).unwrap();
            help.push(sc.render_long_help().to_string());
        }
        let all = help.join("\n");
        for symbol in ["w:", "s:", "σ", "λ", "θ", "τ", "m:", "n:", "k1", "k2"] {
            assert!(all.contains(symbol), "help lacks {symbol}");
        }
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["staflow", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["staflow", "flow"]), EXIT_USAGE);
        assert_eq!(run(["staflow", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_input_exits_2() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("o.flo");
        let code = run([
            "staflow".into(),
            "flow".into(),
            tmp.path().join("nope.pgm").into_os_string(),
            tmp.path().join("nope2.pgm").into_os_string(),
            "-o".into(),
            out.into_os_string(),
        ]);
        assert_eq!(code, EXIT_DATA);
    }

    #[test]
    fn internal_errors_exit_3() {
        assert_eq!(CliError::from(BenchError::Invariant("x".into())).exit_code(), EXIT_INTERNAL);
        assert_eq!(CliError::from(BenchError::SinglePerson).exit_code(), EXIT_DATA);
    }
}
