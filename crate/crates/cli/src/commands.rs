use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use pcb_core::harness::{load_results, run_grid, GridSpec, PreparedDataset, RunSettings, TrainConfig};
use pcb_core::nn::{AdamConfig, STANDARD_FILTER_PAIRS};
use pcb_core::pcb::{load_manifest, load_video, read_annotation, synth_dataset, ClipConfig, SynthSpec};
use pcb_core::stats::{write_reports, TestKind, DEFAULT_ALPHA};
use pcb_core::{Approach, ClassLabel, FilterPair, PcbSegments};

use crate::{io_err, CliError, Result};

fn parse_approach(s: &str) -> std::result::Result<Approach, String> {
    s.parse().map_err(|e: pcb_core::harness::HarnessError| e.to_string())
}

fn parse_pair(s: &str) -> std::result::Result<FilterPair, String> {
    s.parse().map_err(|e: pcb_core::nn::NnError| e.to_string())
}

fn parse_class(s: &str) -> std::result::Result<ClassLabel, String> {
    s.parse().map_err(|e: pcb_core::pcb::PcbError| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Videos generated per class.
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; receives `manifest.json` and `videos/`.
    #[arg(long)]
    pub out: PathBuf,
    /// 0 gives fully class-specific motion, 1 makes every class identical.
    #[arg(long, default_value_t = 0.0)]
    pub similarity: f64,
    /// Classes to generate (default: all five).
    #[arg(long, value_delimiter = ',', value_parser = parse_class)]
    pub classes: Vec<ClassLabel>,
    #[arg(long, default_value_t = 16)]
    pub clip_length: usize,
    #[arg(long, default_value_t = 80)]
    pub width: u16,
    #[arg(long, default_value_t = 60)]
    pub height: u16,
    /// Amplitude of uniform pixel noise.
    #[arg(long, default_value_t = 8.0)]
    pub noise: f64,
}

pub fn synth(args: &SynthArgs) -> Result<PathBuf> {
    let mut spec = SynthSpec {
        per_class: args.per_class,
        seed: args.seed,
        similarity: args.similarity,
        clip_length: args.clip_length,
        width: args.width,
        height: args.height,
        noise: args.noise,
        ..SynthSpec::default()
    };
    if !args.classes.is_empty() {
        spec.classes = args.classes.clone();
    }
    spec.validate()?;
    let out = synth_dataset(&spec, &args.out)?;
    println!("{}", out.manifest_path.display());
    Ok(out.manifest_path)
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// A `.pcv` file or a directory of PNG frames.
    pub video: PathBuf,
    /// Annotation JSON for the video.
    pub annotation: PathBuf,
    /// Output directory (default: next to the video).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Frame counts of the written pre-crime, suspicious and evidence files.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SegmentSummary {
    pub video_id: String,
    pub frame_count: usize,
    pub files: Vec<(PathBuf, usize)>,
}

pub fn segment(args: &SegmentArgs) -> Result<SegmentSummary> {
    let video = load_video(&args.video)?;
    let record = read_annotation(&args.annotation)?;
    let id = args
        .video
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("video")
        .to_string();
    if record.video_id != id {
        log::warn!("annotation names video {:?}, segmenting {id:?}", record.video_id);
    }
    let segments = PcbSegments::new(&record.marks(), video.frame_count())?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.video.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut files = Vec::new();
    for (suffix, range) in ["precrime", "suspicious", "evidence"].into_iter().zip(segments.ranges()) {
        let part = video.slice_frames(range)?;
        let path = dir.join(format!("{id}.{suffix}.pcv"));
        part.save_pcv(&path)?;
        files.push((path, part.frame_count()));
    }
    let summary = SegmentSummary { video_id: id, frame_count: video.frame_count(), files };
    for (path, n) in &summary.files {
        println!("{}\t{n} frames", path.display());
    }
    Ok(summary)
}

/// Experiment description as stored in a JSON spec file. Relative paths
/// resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentFile {
    pub manifest: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub approaches: Vec<String>,
    pub pairs: Vec<String>,
    pub runs: usize,
    pub base_seed: u64,
    pub epochs: usize,
    pub workers: usize,
    pub split_ratio: f64,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub clip_length: usize,
    pub train_stride: usize,
    pub eval_stride: usize,
    pub max_failures: usize,
    pub save_checkpoints: bool,
}

impl Default for ExperimentFile {
    fn default() -> Self {
        let grid = GridSpec::default();
        let clip = ClipConfig::default();
        ExperimentFile {
            manifest: None,
            output: None,
            approaches: Vec::new(),
            pairs: Vec::new(),
            runs: grid.runs,
            base_seed: grid.base_seed,
            epochs: grid.settings.train.epochs,
            workers: grid.workers,
            split_ratio: grid.settings.split_ratio,
            batch_size: grid.settings.train.batch_size,
            learning_rate: grid.settings.train.adam.lr,
            clip_length: clip.length,
            train_stride: clip.train_stride,
            eval_stride: clip.eval_stride,
            max_failures: grid.settings.max_failures,
            save_checkpoints: false,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// JSON experiment spec; flags override its fields.
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_approach)]
    pub approaches: Vec<Approach>,
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pub pairs: Vec<FilterPair>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub split_ratio: Option<f64>,
    #[arg(long)]
    pub clip_length: Option<usize>,
    #[arg(long)]
    pub save_checkpoints: bool,
}

/// Fully resolved experiment: where to read, where to write, what to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub manifest: PathBuf,
    pub output: PathBuf,
    pub clip: ClipConfig,
    pub grid: GridSpec,
}

pub fn plan_experiment(args: &ExperimentArgs) -> Result<ExperimentPlan> {
    let (file, base) = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            let file: ExperimentFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (ExperimentFile::default(), PathBuf::new()),
    };
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let manifest = args
        .manifest
        .clone()
        .or_else(|| file.manifest.as_ref().map(resolve))
        .ok_or_else(|| CliError::Usage("no manifest given (spec field \"manifest\" or --manifest)".into()))?;
    let output = args
        .out
        .clone()
        .or_else(|| file.output.as_ref().map(resolve))
        .ok_or_else(|| CliError::Usage("no output directory given (spec field \"output\" or --out)".into()))?;

    let approaches = if !args.approaches.is_empty() {
        args.approaches.clone()
    } else if file.approaches.is_empty() {
        Approach::ALL.to_vec()
    } else {
        file.approaches.iter().map(|s| parse_approach(s)).collect::<std::result::Result<_, _>>().map_err(CliError::Usage)?
    };
    let pairs = if !args.pairs.is_empty() {
        args.pairs.clone()
    } else if file.pairs.is_empty() {
        STANDARD_FILTER_PAIRS.to_vec()
    } else {
        file.pairs.iter().map(|s| parse_pair(s)).collect::<std::result::Result<_, _>>().map_err(CliError::Usage)?
    };
    let length = args.clip_length.unwrap_or(file.clip_length);
    let clip = ClipConfig { length, train_stride: file.train_stride, eval_stride: file.eval_stride, ..ClipConfig::default() };
    clip.validate()?;
    let grid = GridSpec {
        approaches,
        pairs,
        runs: args.runs.unwrap_or(file.runs),
        base_seed: args.seed.unwrap_or(file.base_seed),
        workers: args.workers.unwrap_or(file.workers),
        save_checkpoints: args.save_checkpoints || file.save_checkpoints,
        settings: RunSettings {
            split_ratio: args.split_ratio.unwrap_or(file.split_ratio),
            train: TrainConfig {
                epochs: args.epochs.unwrap_or(file.epochs),
                batch_size: file.batch_size,
                adam: AdamConfig { lr: file.learning_rate, ..AdamConfig::default() },
                ..TrainConfig::default()
            },
            max_failures: file.max_failures,
        },
    };
    grid.validate()?;
    if grid.settings.train.batch_size == 0 || grid.settings.train.epochs == 0 {
        return Err(CliError::Usage("epochs and batch_size must be at least 1".into()));
    }
    Ok(ExperimentPlan { manifest, output, clip, grid })
}

pub fn experiment(args: &ExperimentArgs) -> Result<()> {
    let plan = plan_experiment(args)?;
    let manifest = load_manifest(&plan.manifest)?;
    let data = PreparedDataset::from_manifest(&manifest, plan.clip)?;
    let start = Instant::now();
    let outcome = run_grid(&data, &plan.grid, &plan.output)?;
    log::info!(
        "{} jobs trained, {} resumed, {:.1?}",
        outcome.executed_jobs,
        outcome.resumed_jobs,
        start.elapsed()
    );
    let reports = write_reports(&outcome.results, &plan.output.join("reports"), DEFAULT_ALPHA, TestKind::Welch)?;
    for s in &reports.skipped {
        eprintln!("skipped: {s}");
    }
    for c in &outcome.summary.cells {
        let mean = c.mean.map_or("-".into(), |m| format!("{:.4}", m));
        let best = c.best.map_or("-".into(), |m| format!("{:.4}", m));
        println!("{:<36} {:>8}  mean {mean}  best {best}  failed {}", c.approach.to_string(), c.pair.to_string(), c.failed);
    }
    println!("{}", plan.output.display());
    if !outcome.failed_cells.is_empty() {
        let cells: Vec<String> =
            outcome.failed_cells.iter().map(|(a, p, n)| format!("{a} {p}: {n} failed runs")).collect();
        return Err(CliError::Failure(format!(
            "failure limit ({}) exceeded in {}",
            plan.grid.settings.max_failures,
            cells.join(", ")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestArg {
    Welch,
    Student,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Results directory written by `experiment`.
    pub results: PathBuf,
    /// Where to write tables (default: `<results>/reports`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = TestArg::Welch)]
    pub test: TestArg,
}

pub fn report(args: &ReportArgs) -> Result<Vec<PathBuf>> {
    let results = load_results(&args.results)?;
    let out = args.out.clone().unwrap_or_else(|| args.results.join("reports"));
    let kind = match args.test {
        TestArg::Welch => TestKind::Welch,
        TestArg::Student => TestKind::Student,
    };
    let files = write_reports(&results, &out, args.alpha, kind)?;
    for s in &files.skipped {
        eprintln!("skipped: {s}");
    }
    for a in Approach::ALL {
        for p in STANDARD_FILTER_PAIRS {
            if !results.iter().any(|r| r.approach == a && r.pair == p && r.mean.is_some()) {
                eprintln!("missing cell: {a} {p}");
            }
        }
    }
    for f in &files.written {
        println!("{}", f.display());
    }
    Ok(files.written)
}
