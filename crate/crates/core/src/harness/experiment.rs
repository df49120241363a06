use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::data::{split_dataset, PreparedDataset};
use super::metrics::{balanced_accuracy, collapse_to_binary, multiclass_balanced_accuracy, ConfusionMatrix};
use super::train::{evaluate, train_model, TrainConfig, SPLIT_STREAM};
use super::{io_err, Approach, HarnessError, LabelScheme, Result};
use crate::nn::{FilterPair, Network, STANDARD_FILTER_PAIRS};
use crate::pcb::write_atomic;
use crate::tensor::RngStream;

/// Substream used to derive the seed of a retried run.
const RETRY_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One trained-and-evaluated network scored under one approach.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunResult {
    pub approach: Approach,
    pub pair: FilterPair,
    pub run_index: usize,
    /// Seed of the attempt that produced this record.
    pub seed: u64,
    pub attempts: u32,
    pub status: RunStatus,
    pub confusion: Option<ConfusionMatrix>,
    pub bacc: Option<f64>,
    pub loss_trace: Vec<f64>,
    pub train_clips: usize,
    pub test_clips: u64,
    pub train_seconds: f64,
    pub eval_seconds: f64,
    pub error: Option<String>,
}

impl RunResult {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok && self.bacc.is_some()
    }
}

/// All runs of one (approach, filter pair) cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentResult {
    pub approach: Approach,
    pub pair: FilterPair,
    pub runs: Vec<RunResult>,
    /// Mean bACC over successful runs.
    pub mean: Option<f64>,
    /// Sample standard deviation over successful runs.
    pub std: Option<f64>,
    pub failed: usize,
}

impl ExperimentResult {
    pub fn from_runs(approach: Approach, pair: FilterPair, mut runs: Vec<RunResult>) -> Self {
        runs.sort_by_key(|r| r.run_index);
        let b: Vec<f64> = runs.iter().filter_map(|r| r.bacc.filter(|_| r.is_ok())).collect();
        let failed = runs.len() - b.len();
        let mean = (!b.is_empty()).then(|| b.iter().sum::<f64>() / b.len() as f64);
        let std = mean.filter(|_| b.len() > 1).map(|m| {
            (b.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b.len() - 1) as f64).sqrt()
        });
        ExperimentResult { approach, pair, runs, mean, std, failed }
    }

    /// bACC of every successful run, in run order.
    pub fn baccs(&self) -> Vec<f64> {
        self.runs.iter().filter(|r| r.is_ok()).filter_map(|r| r.bacc).collect()
    }

    pub fn best(&self) -> Option<f64> {
        self.baccs().into_iter().reduce(f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Fraction of each class's videos used for training.
    pub split_ratio: f64,
    pub train: TrainConfig,
    /// A cell with more failed runs than this is an error.
    pub max_failures: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { split_ratio: 0.8, train: TrainConfig::default(), max_failures: 3 }
    }
}

/// Records produced by one training job, plus the trained network.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub records: Vec<RunResult>,
    pub network: Option<Network>,
}

fn approaches_of(scheme: LabelScheme) -> &'static [Approach] {
    match scheme {
        LabelScheme::Binary => &[Approach::BinaryTrainBinaryClassify],
        LabelScheme::Multi => &[Approach::MultiTrainMultiClassify, Approach::MultiTrainBinaryClassify],
    }
}

fn score(approach: Approach, cm: &ConfusionMatrix) -> Result<(ConfusionMatrix, f64)> {
    Ok(match approach {
        Approach::BinaryTrainBinaryClassify => (cm.clone(), balanced_accuracy(cm)?),
        Approach::MultiTrainMultiClassify => (cm.clone(), multiclass_balanced_accuracy(cm)?),
        Approach::MultiTrainBinaryClassify => {
            let b = collapse_to_binary(cm)?;
            let bacc = balanced_accuracy(&b)?;
            (b, bacc)
        }
    })
}

/// Trains one network under `scheme` for run `run_index` and scores it under
/// every approach that uses that scheme.
///
/// The run seed is `base_seed + run_index`; it fixes the video split, the
/// initial weights and the batch order. A diverging run is retried once with a
/// derived seed. Runs whose metric is undefined are returned as failed records.
pub fn run_job(
    data: &PreparedDataset,
    scheme: LabelScheme,
    pair: FilterPair,
    run_index: usize,
    base_seed: u64,
    settings: &RunSettings,
) -> Result<JobOutput> {
    let mut seed = base_seed.wrapping_add(run_index as u64);
    let labels = data.labels();
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        let record = |approach: Approach| RunResult {
            approach,
            pair,
            run_index,
            seed,
            attempts,
            status: RunStatus::Failed,
            confusion: None,
            bacc: None,
            loss_trace: Vec::new(),
            train_clips: 0,
            test_clips: 0,
            train_seconds: 0.0,
            eval_seconds: 0.0,
            error: None,
        };
        let failed = |e: &HarnessError| {
            let records = approaches_of(scheme)
                .iter()
                .map(|&a| RunResult { error: Some(e.to_string()), ..record(a) })
                .collect();
            JobOutput { records, network: None }
        };

        let split = split_dataset(&labels, settings.split_ratio, RngStream::new(seed).substream(SPLIT_STREAM).seed())?;
        let mut seconds = (0.0, 0.0);
        let trained = (|| -> Result<_> {
            let t0 = Instant::now();
            let out = train_model(data, &split.train, scheme, pair, seed, &settings.train)?;
            let t1 = Instant::now();
            let cm = evaluate(&out.network, data, &split.test, scheme)?;
            seconds = ((t1 - t0).as_secs_f64(), t1.elapsed().as_secs_f64());
            Ok((cm, out))
        })();
        let (cm, out) = match trained {
            Ok(v) => v,
            Err(e) if e.is_divergence() && attempts < 2 => {
                log::warn!("{scheme} {pair} run {run_index}: {e}; retrying with a new seed");
                seed = RngStream::new(seed).substream(RETRY_STREAM).seed();
                continue;
            }
            Err(e) if e.is_divergence() => return Ok(failed(&e)),
            Err(e) => return Err(e),
        };
        let records = approaches_of(scheme)
            .iter()
            .map(|&a| {
                let base = RunResult {
                    loss_trace: out.loss_trace.clone(),
                    train_clips: out.train_clips,
                    test_clips: cm.total(),
                    train_seconds: seconds.0,
                    eval_seconds: seconds.1,
                    ..record(a)
                };
                match score(a, &cm) {
                    Ok((c, bacc)) => {
                        RunResult { status: RunStatus::Ok, confusion: Some(c), bacc: Some(bacc), ..base }
                    }
                    Err(e) => RunResult { confusion: Some(cm.clone()), error: Some(e.to_string()), ..base },
                }
            })
            .collect();
        return Ok(JobOutput { records, network: Some(out.network) });
    }
}

/// Runs `runs` repetitions of one cell in memory.
pub fn run_experiment(
    data: &PreparedDataset,
    approach: Approach,
    pair: FilterPair,
    runs: usize,
    base_seed: u64,
    settings: &RunSettings,
) -> Result<ExperimentResult> {
    let mut records = Vec::with_capacity(runs);
    for i in 0..runs {
        let job = run_job(data, approach.training_scheme(), pair, i, base_seed, settings)?;
        records.extend(job.records.into_iter().filter(|r| r.approach == approach));
    }
    let result = ExperimentResult::from_runs(approach, pair, records);
    check_failures(&result, settings.max_failures)?;
    Ok(result)
}

fn check_failures(result: &ExperimentResult, limit: usize) -> Result<()> {
    if result.failed > limit {
        return Err(HarnessError::TooManyFailures {
            approach: result.approach,
            pair: result.pair,
            failed: result.failed,
            limit,
        });
    }
    Ok(())
}

/// The full approach × filter-pair × run grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub approaches: Vec<Approach>,
    pub pairs: Vec<FilterPair>,
    pub runs: usize,
    pub base_seed: u64,
    pub workers: usize,
    pub save_checkpoints: bool,
    pub settings: RunSettings,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            approaches: Approach::ALL.to_vec(),
            pairs: STANDARD_FILTER_PAIRS.to_vec(),
            runs: 30,
            base_seed: 0,
            workers: 1,
            save_checkpoints: false,
            settings: RunSettings::default(),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.approaches.is_empty() {
            return bad("no approaches selected");
        }
        if self.pairs.is_empty() {
            return bad("no filter pairs selected");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        let ratio = self.settings.split_ratio;
        if !(ratio > 0.0 && ratio < 1.0) {
            return bad("split_ratio must lie strictly between 0 and 1");
        }
        Ok(())
    }

    /// Training schemes the selected approaches need.
    pub fn schemes(&self) -> Vec<LabelScheme> {
        let mut s: Vec<LabelScheme> = self.approaches.iter().map(|a| a.training_scheme()).collect();
        s.sort();
        s.dedup();
        s
    }

    fn normalized(&self) -> GridSpec {
        let mut g = self.clone();
        g.approaches.sort();
        g.approaches.dedup();
        let mut seen = Vec::new();
        g.pairs.retain(|p| {
            let new = !seen.contains(p);
            seen.push(*p);
            new
        });
        g
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CellSummary {
    pub approach: Approach,
    pub pair: FilterPair,
    pub runs: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub best: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSummary {
    pub grid: GridSpec,
    pub trained_networks: usize,
    pub records: usize,
    pub cells: Vec<CellSummary>,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub results: Vec<ExperimentResult>,
    pub summary: GridSummary,
    /// Jobs trained by this call (the rest were loaded from disk).
    pub executed_jobs: usize,
    pub resumed_jobs: usize,
    /// Cells over the failure limit.
    pub failed_cells: Vec<(Approach, FilterPair, usize)>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    scheme: LabelScheme,
    pair: FilterPair,
    run: usize,
}

impl Job {
    fn stem(&self) -> PathBuf {
        Path::new(self.scheme.as_str()).join(self.pair.to_string()).join(format!("run_{:03}", self.run))
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| HarnessError::Json { path: path.to_path_buf(), message: e.to_string() })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

fn read_job_file(path: &Path) -> Option<Vec<RunResult>> {
    let text = fs::read_to_string(path).ok()?;
    match serde_json::from_str(&text) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("{}: unreadable run record ({e}); rerunning", path.display());
            None
        }
    }
}

/// Runs (or resumes) the grid, persisting every job under `out/runs/`.
///
/// Each job writes `runs/<scheme>/<pair>/run_NNN.json` when it finishes, so an
/// interrupted grid picks up where it stopped. The merged records land in
/// `runs.jsonl` and per-cell statistics in `summary.json`.
pub fn run_grid(data: &PreparedDataset, spec: &GridSpec, out: &Path) -> Result<GridOutcome> {
    spec.validate()?;
    let spec = spec.normalized();
    fs::create_dir_all(out).map_err(io_err(out))?;

    let grid_path = out.join("grid.json");
    if let Ok(text) = fs::read_to_string(&grid_path) {
        let prev: GridSpec = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Json { path: grid_path.clone(), message: e.to_string() })?;
        if prev != spec {
            return Err(HarnessError::Config(format!(
                "{} holds results of a different grid; use a fresh output directory",
                out.display()
            )));
        }
    } else {
        write_json(&grid_path, &spec)?;
    }

    let runs_dir = out.join("runs");
    let mut jobs = Vec::new();
    for &pair in &spec.pairs {
        for scheme in spec.schemes() {
            for run in 0..spec.runs {
                jobs.push(Job { scheme, pair, run });
            }
        }
    }
    let mut done: BTreeMap<usize, Vec<RunResult>> = BTreeMap::new();
    let mut pending = Vec::new();
    for (i, job) in jobs.iter().enumerate() {
        match read_job_file(&runs_dir.join(job.stem()).with_extension("json")) {
            Some(r) => {
                done.insert(i, r);
            }
            None => pending.push(i),
        }
    }
    let resumed_jobs = done.len();
    if resumed_jobs > 0 {
        log::info!("resuming: {resumed_jobs} of {} jobs already complete", jobs.len());
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let first_error: Mutex<Option<HarnessError>> = Mutex::new(None);
    let finished: Mutex<BTreeMap<usize, Vec<RunResult>>> = Mutex::new(BTreeMap::new());
    let total = jobs.len();
    std::thread::scope(|s| {
        for _ in 0..spec.workers.min(pending.len().max(1)) {
            s.spawn(|| {
                while !stop.load(Ordering::Relaxed) {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&i) = pending.get(k) else { break };
                    let job = jobs[i];
                    let result = run_job(data, job.scheme, job.pair, job.run, spec.base_seed, &spec.settings)
                        .and_then(|o| {
                            let stem = runs_dir.join(job.stem());
                            if let Some(dir) = stem.parent() {
                                fs::create_dir_all(dir).map_err(io_err(dir))?;
                            }
                            if let (true, Some(net)) = (spec.save_checkpoints, &o.network) {
                                let ckpt = out.join("checkpoints").join(job.stem()).with_extension("ckpt");
                                if let Some(dir) = ckpt.parent() {
                                    fs::create_dir_all(dir).map_err(io_err(dir))?;
                                }
                                write_atomic(&ckpt, &net.to_checkpoint_bytes())?;
                            }
                            write_json(&stem.with_extension("json"), &o.records)?;
                            Ok(o.records)
                        });
                    match result {
                        Ok(records) => {
                            for r in &records {
                                match r.bacc {
                                    Some(b) => log::info!(
                                        "[{}/{total}] {} {} run {}: bACC {b:.4}",
                                        i + 1,
                                        r.approach,
                                        r.pair,
                                        r.run_index
                                    ),
                                    None => log::warn!(
                                        "[{}/{total}] {} {} run {} failed: {}",
                                        i + 1,
                                        r.approach,
                                        r.pair,
                                        r.run_index,
                                        r.error.as_deref().unwrap_or("unknown error")
                                    ),
                                }
                            }
                            finished.lock().unwrap().insert(i, records);
                        }
                        Err(e) => {
                            stop.store(true, Ordering::Relaxed);
                            first_error.lock().unwrap().get_or_insert(e);
                        }
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let executed = finished.into_inner().unwrap();
    let executed_jobs = executed.len();
    done.extend(executed);

    let records: Vec<RunResult> = done
        .into_values()
        .flatten()
        .filter(|r| spec.approaches.contains(&r.approach))
        .collect();
    write_records(&out.join("runs.jsonl"), &records)?;
    let results = group(records, &spec.approaches, &spec.pairs);

    let summary = GridSummary {
        grid: spec.clone(),
        trained_networks: jobs.len(),
        records: results.iter().map(|r| r.runs.len()).sum(),
        cells: results.iter().map(cell_summary).collect(),
    };
    write_json(&out.join("summary.json"), &summary)?;

    let failed_cells = results
        .iter()
        .filter(|r| r.failed > spec.settings.max_failures)
        .map(|r| (r.approach, r.pair, r.failed))
        .collect();
    Ok(GridOutcome { results, summary, executed_jobs, resumed_jobs, failed_cells })
}

fn cell_summary(r: &ExperimentResult) -> CellSummary {
    CellSummary {
        approach: r.approach,
        pair: r.pair,
        runs: r.runs.len(),
        failed: r.failed,
        mean: r.mean,
        std: r.std,
        best: r.best(),
    }
}

fn write_records(path: &Path, records: &[RunResult]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)
            .map_err(|e| HarnessError::Json { path: path.to_path_buf(), message: e.to_string() })?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)?;
    Ok(())
}

fn group(records: Vec<RunResult>, approaches: &[Approach], pairs: &[FilterPair]) -> Vec<ExperimentResult> {
    let mut cells: BTreeMap<(Approach, FilterPair), Vec<RunResult>> = BTreeMap::new();
    for r in records {
        cells.entry((r.approach, r.pair)).or_default().push(r);
    }
    let mut out = Vec::new();
    for &a in approaches {
        for &p in pairs {
            if let Some(runs) = cells.remove(&(a, p)) {
                out.push(ExperimentResult::from_runs(a, p, runs));
            }
        }
    }
    out
}

/// Reads the run records of a results directory (its `runs.jsonl`, or the
/// per-job files of an unfinished grid).
pub fn load_results(dir: &Path) -> Result<Vec<ExperimentResult>> {
    let jsonl = dir.join("runs.jsonl");
    let mut records: Vec<RunResult> = Vec::new();
    if jsonl.is_file() {
        let text = fs::read_to_string(&jsonl).map_err(io_err(&jsonl))?;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            records.push(serde_json::from_str(line).map_err(|e| HarnessError::Json {
                path: jsonl.clone(),
                message: format!("line {}: {e}", n + 1),
            })?);
        }
    } else {
        let mut stack = vec![dir.join("runs")];
        while let Some(d) = stack.pop() {
            let Ok(entries) = fs::read_dir(&d) else { continue };
            for entry in entries.flatten() {
                let p = entry.path();
                if p.is_dir() {
                    stack.push(p);
                } else if p.extension().is_some_and(|e| e == "json") {
                    records.extend(read_job_file(&p).unwrap_or_default());
                }
            }
        }
    }
    if records.is_empty() {
        return Err(HarnessError::NoResults(dir.to_path_buf()));
    }
    let mut pairs: Vec<FilterPair> = records.iter().map(|r| r.pair).collect();
    pairs.sort_by_key(|p| (p.standard_rank().unwrap_or(usize::MAX), *p));
    pairs.dedup();
    Ok(group(records, &Approach::ALL, &pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcb::{synth_video, ClassLabel, ClipConfig, SynthSpec};

    fn tiny(classes: Vec<ClassLabel>) -> PreparedDataset {
        let spec = SynthSpec { per_class: 2, clip_length: 10, classes, ..SynthSpec::default() };
        let mut samples = Vec::new();
        for &l in &spec.classes {
            for k in 0..2 {
                samples.push(synth_video(&spec, l, k).unwrap());
            }
        }
        let clip = ClipConfig { length: 10, train_stride: 10, eval_stride: 10, ..ClipConfig::default() };
        PreparedDataset::from_samples(samples, clip).unwrap()
    }

    fn quick() -> RunSettings {
        RunSettings { split_ratio: 0.5, train: TrainConfig { epochs: 1, ..TrainConfig::default() }, max_failures: 3 }
    }

    #[test]
    fn summary_statistics() {
        let mk = |i: usize, b: Option<f64>| RunResult {
            approach: Approach::BinaryTrainBinaryClassify,
            pair: FilterPair::new(1, 1),
            run_index: i,
            seed: 0,
            attempts: 1,
            status: if b.is_some() { RunStatus::Ok } else { RunStatus::Failed },
            confusion: None,
            bacc: b,
            loss_trace: vec![],
            train_clips: 0,
            test_clips: 0,
            train_seconds: 0.0,
            eval_seconds: 0.0,
            error: None,
        };
        let r = ExperimentResult::from_runs(
            Approach::BinaryTrainBinaryClassify,
            FilterPair::new(1, 1),
            vec![mk(2, Some(0.5)), mk(0, Some(0.7)), mk(1, None), mk(3, Some(0.6))],
        );
        assert_eq!(r.failed, 1);
        assert!((r.mean.unwrap() - 0.6).abs() < 1e-15);
        assert!((r.std.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(r.best(), Some(0.7));
        assert_eq!(r.baccs(), vec![0.7, 0.5, 0.6]);
    }

    #[test]
    fn multi_job_yields_two_records_from_one_network() {
        let data = tiny(ClassLabel::ALL.to_vec());
        let job = run_job(&data, LabelScheme::Multi, FilterPair::new(2, 2), 0, 4, &quick()).unwrap();
        assert_eq!(job.records.len(), 2);
        let (m, b) = (&job.records[0], &job.records[1]);
        assert_eq!(m.approach, Approach::MultiTrainMultiClassify);
        assert_eq!(b.approach, Approach::MultiTrainBinaryClassify);
        assert_eq!(b.confusion.as_ref().unwrap(), &collapse_to_binary(m.confusion.as_ref().unwrap()).unwrap());
        assert_eq!(m.seed, 4);
    }

    #[test]
    fn undefined_metric_fails_the_run() {
        // no crime classes beyond one: the five-class metric has empty rows
        let data = tiny(vec![ClassLabel::Normal, ClassLabel::Arson]);
        let job = run_job(&data, LabelScheme::Multi, FilterPair::new(2, 2), 0, 0, &quick()).unwrap();
        assert_eq!(job.records[0].status, RunStatus::Failed);
        assert!(job.records[0].error.is_some());
        assert_eq!(job.records[1].status, RunStatus::Ok);
        let err = run_experiment(
            &data,
            Approach::MultiTrainMultiClassify,
            FilterPair::new(2, 2),
            2,
            0,
            &RunSettings { max_failures: 1, ..quick() },
        );
        assert!(matches!(err, Err(HarnessError::TooManyFailures { failed: 2, .. })));
    }

    #[test]
    fn grid_persists_and_resumes() {
        let data = tiny(ClassLabel::ALL.to_vec());
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec {
            pairs: vec![FilterPair::new(2, 2)],
            runs: 2,
            workers: 2,
            save_checkpoints: true,
            settings: quick(),
            ..GridSpec::default()
        };
        let first = run_grid(&data, &spec, dir.path()).unwrap();
        assert_eq!(first.executed_jobs, 4);
        assert_eq!(first.summary.trained_networks, 4);
        assert_eq!(first.summary.records, 6);
        assert!(dir.path().join("checkpoints/multi/2-2/run_001.ckpt").is_file());

        fs::remove_file(dir.path().join("runs/binary/2-2/run_001.json")).unwrap();
        let second = run_grid(&data, &spec, dir.path()).unwrap();
        assert_eq!((second.executed_jobs, second.resumed_jobs), (1, 3));
        let bacc = |o: &GridOutcome| o.results.iter().map(|r| r.baccs()).collect::<Vec<_>>();
        assert_eq!(bacc(&first), bacc(&second));

        let loaded = load_results(dir.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded.iter().map(|r| r.approach).collect::<Vec<_>>(), Approach::ALL.to_vec());

        let other = GridSpec { runs: 3, ..spec };
        assert!(matches!(run_grid(&data, &other, dir.path()), Err(HarnessError::Config(_))));
        assert!(matches!(load_results(&dir.path().join("nope")), Err(HarnessError::NoResults(_))));
    }
}
