//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! Run with `cargo test -p pcb-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use pcb_core::harness::{
    balanced_accuracy, collapse_to_binary, run_grid, run_job, ConfusionMatrix, GridSpec, LabelScheme,
    PreparedDataset, RunSettings, TrainConfig,
};
use pcb_core::nn::{
    conv3d_backward, conv3d_forward_with, dense_backward, dense_forward, maxpool3d_backward, maxpool3d_forward,
    relu_backward, relu_forward, softmax_cross_entropy, Conv3dLayer, ConvAlgo, DenseLayer, MaxPool3dLayer,
    STANDARD_FILTER_PAIRS,
};
use pcb_core::pcb::{segment_video, synth_video, ClipConfig, Fps, RawVideo, SynthSpec};
use pcb_core::stats::{welch_t_test, write_reports, SampleSet, TestKind};
use pcb_core::{Approach, ClassLabel, FilterPair, PcbAnnotation, RngStream, VideoSample};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() <= limit, || format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

const FD_STEP: f64 = 1e-3;
const FD_TOL: f64 = 1e-4;

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(0xfd);
    let mut worst = [0.0f64; 5];
    let cases = 20;
    for _ in 0..cases {
        // conv3d: input, weight and bias gradients
        let c = 1 + rng.below(3) as usize;
        let o = 1 + rng.below(3) as usize;
        let k = [1 + rng.below(3) as usize, 1 + rng.below(3) as usize, 1 + rng.below(3) as usize];
        let xd = [c, k[0] + rng.below(4) as usize, k[1] + rng.below(4) as usize, k[2] + rng.below(4) as usize];
        let wd = [o, c, k[0], k[1], k[2]];
        let x = random_vec(xd.iter().product(), -1.0, 1.0, &mut rng);
        let w = random_vec(wd.iter().product(), -0.5, 0.5, &mut rng);
        let b = random_vec(o, -0.5, 0.5, &mut rng);
        let (y, yd) = conv3d_naive(&x, xd, &w, wd, &b);
        let r = random_vec(y.len(), -1.0, 1.0, &mut rng);
        let layer = Conv3dLayer::new(tensor(&wd, &w), tensor(&[o], &b)).unwrap();
        let g = conv3d_backward(&tensor(&xd, &x), &layer, &tensor(&yd, &r)).unwrap();
        let fx = central_diff(|v| dot(&conv3d_naive(v, xd, &w, wd, &b).0, &r), &x, FD_STEP);
        let fw = central_diff(|v| dot(&conv3d_naive(&x, xd, v, wd, &b).0, &r), &w, FD_STEP);
        let fb = central_diff(|v| dot(&conv3d_naive(&x, xd, &w, wd, v).0, &r), &b, FD_STEP);
        worst[0] = worst[0].max(rel_err(&g.input, &fx)).max(rel_err(&g.weights, &fw)).max(rel_err(&g.bias, &fb));

        // maxpool3d: distinct values spaced well beyond the step keep clear of ties
        let win = [1 + rng.below(2) as usize, 1 + rng.below(2) as usize, 1 + rng.below(2) as usize];
        let pd = [1 + rng.below(2) as usize, 2 + rng.below(5) as usize, 2 + rng.below(5) as usize, 2 + rng.below(5) as usize];
        let n: usize = pd.iter().product();
        let mut px: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 - 0.5).collect();
        rng.shuffle(&mut px);
        let (py, pyd) = maxpool_naive(&px, pd, win);
        let (out, idx) = maxpool3d_forward(&tensor(&pd, &px), &MaxPool3dLayer::new(win)).unwrap();
        ensure(out.dims() == pyd && to_f64(&out).iter().zip(&py).all(|(a, b)| (a - b).abs() < 1e-6), || {
            "maxpool forward differs from the oracle".into()
        })?;
        let pr = random_vec(py.len(), -1.0, 1.0, &mut rng);
        let pg = maxpool3d_backward(&idx, &tensor(&pyd, &pr)).unwrap();
        let fp = central_diff(|v| dot(&maxpool_naive(v, pd, win).0, &pr), &px, FD_STEP);
        worst[1] = worst[1].max(rel_err(&pg, &fp));

        // dense
        let (ni, no) = (1 + rng.below(6) as usize, 1 + rng.below(6) as usize);
        let dx = random_vec(ni, -1.0, 1.0, &mut rng);
        let dw = random_vec(ni * no, -1.0, 1.0, &mut rng);
        let db = random_vec(no, -1.0, 1.0, &mut rng);
        let dr = random_vec(no, -1.0, 1.0, &mut rng);
        let dl = DenseLayer::new(tensor(&[ni, no], &dw), tensor(&[no], &db)).unwrap();
        let y = dense_forward(&tensor(&[ni], &dx), &dl).unwrap();
        ensure(to_f64(&y).iter().zip(dense_naive(&dx, &dw, &db)).all(|(a, b)| (a - b).abs() < 1e-5), || {
            "dense forward differs from the oracle".into()
        })?;
        let dg = dense_backward(&tensor(&[ni], &dx), &dl, &tensor(&[no], &dr)).unwrap();
        let fx = central_diff(|v| dot(&dense_naive(v, &dw, &db), &dr), &dx, FD_STEP);
        let fw = central_diff(|v| dot(&dense_naive(&dx, v, &db), &dr), &dw, FD_STEP);
        let fb = central_diff(|v| dot(&dense_naive(&dx, &dw, v), &dr), &db, FD_STEP);
        worst[2] = worst[2].max(rel_err(&dg.input, &fx)).max(rel_err(&dg.weights, &fw)).max(rel_err(&dg.bias, &fb));

        // relu, away from the kink
        let rn = 1 + rng.below(6) as usize;
        let rx: Vec<f64> = (0..rn)
            .map(|_| {
                let m = rng.uniform_f64(0.01, 1.0);
                if rng.below(2) == 0 { -m } else { m }
            })
            .collect();
        let rr = random_vec(rn, -1.0, 1.0, &mut rng);
        ensure(to_f64(&relu_forward(&tensor(&[rn], &rx))) == relu_naive(&rx).iter().map(|&v| v as f32 as f64).collect::<Vec<_>>(), || {
            "relu forward differs from the oracle".into()
        })?;
        let rg = relu_backward(&tensor(&[rn], &rx), &tensor(&[rn], &rr)).unwrap();
        let fr = central_diff(|v| dot(&relu_naive(v), &rr), &rx, FD_STEP);
        worst[3] = worst[3].max(rel_err(&rg, &fr));

        // softmax cross-entropy
        let k = 2 + rng.below(5) as usize;
        let z = random_vec(k, -3.0, 3.0, &mut rng);
        let label = rng.below(k as u64) as usize;
        let (loss, sg) = softmax_cross_entropy(&tensor(&[k], &z), label).unwrap();
        ensure((loss as f64 - softmax_ce_naive(&z, label)).abs() < 1e-5, || "cross-entropy differs from the oracle".into())?;
        let fz = central_diff(|v| softmax_ce_naive(v, label), &z, FD_STEP);
        worst[4] = worst[4].max(rel_err(&sg, &fz));
    }
    let names = ["conv3d", "maxpool3d", "dense", "relu", "softmax-ce"];
    for (name, w) in names.iter().zip(worst) {
        ensure(w < FD_TOL, || format!("{name}: relative error {w:.2e} >= {FD_TOL:e}"))?;
    }
    within(Duration::from_secs(60), start)?;
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    Ok(format!("{cases} cases per op, worst relative error: {}", detail.join(", ")))
}

fn convolution_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(0xc0);
    let mut worst = 0.0f64;
    let cases = 100;
    for case in 0..cases {
        let pair = STANDARD_FILTER_PAIRS[case % 6];
        // alternate the first layer (1 → conv1) and second layer (conv1 → conv2)
        let (c, o) = if case % 12 < 6 { (1, pair.conv1) } else { (pair.conv1, pair.conv2) };
        let xd = [c, 3 + rng.below(4) as usize, 3 + rng.below(6) as usize, 3 + rng.below(6) as usize];
        let wd = [o, c, 3, 3, 3];
        let bound = (6.0 / (c * 27) as f64).sqrt();
        let x = random_vec(xd.iter().product(), -1.0, 1.0, &mut rng);
        let w = random_vec(wd.iter().product(), -bound, bound, &mut rng);
        let b = random_vec(o, -0.1, 0.1, &mut rng);
        let (y, yd) = conv3d_naive(&x, xd, &w, wd, &b);
        let layer = Conv3dLayer::new(tensor(&wd, &w), tensor(&[o], &b)).unwrap();
        for algo in ConvAlgo::ALL {
            let out = conv3d_forward_with(&tensor(&xd, &x), &layer, algo).unwrap();
            ensure(out.dims() == yd, || format!("{algo:?}: output dims {:?}, expected {yd:?}", out.dims()))?;
            let err = to_f64(&out).iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ensure(err <= 1e-5, || format!("{algo:?} {pair} case {case}: max abs error {err:.2e}"))?;
            worst = worst.max(err);
        }
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{cases} cases x {} kernels, max abs error {worst:.1e}", ConvAlgo::ALL.len()))
}

fn metric_oracle() -> Outcome {
    let cm = ConfusionMatrix::from_rows(vec![vec![45, 5], vec![10, 30]]).unwrap();
    let v = balanced_accuracy(&cm).unwrap();
    ensure(v == 0.825, || format!("TP=30,FN=10,TN=45,FP=5 gave {v}"))?;
    let mut rng = RngStream::new(0xbacc);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (tp, fn_, tn, fp) = (rng.below(200), rng.below(200), rng.below(200), rng.below(200));
        let (tp, tn) = (tp + u64::from(tp + fn_ == 0), tn + u64::from(tn + fp == 0));
        let cm = ConfusionMatrix::from_rows(vec![vec![tn, fp], vec![fn_, tp]]).unwrap();
        let err = (balanced_accuracy(&cm).unwrap() - bacc_formula(tp, fn_, tn, fp)).abs();
        ensure(err <= 1e-12, || format!("TP={tp} FN={fn_} TN={tn} FP={fp}: error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("0.825 example exact; 50 random cases, max error {worst:e}"))
}

fn collapse_oracle() -> Outcome {
    let mut rng = RngStream::new(0xc011);
    for case in 0..200 {
        let rows: Vec<Vec<u64>> = (0..5).map(|_| (0..5).map(|_| rng.below(12)).collect()).collect();
        let cm = ConfusionMatrix::from_rows(rows.clone()).unwrap();
        let got = collapse_to_binary(&cm).unwrap().rows();
        let want = collapse_brute(&rows);
        ensure(got == want, || format!("case {case}: {got:?} != {want:?}"))?;
    }
    let mut one = ConfusionMatrix::new(5);
    one.add(ClassLabel::Shoplifting.index(), ClassLabel::Arson.index()).unwrap();
    ensure(collapse_to_binary(&one).unwrap().get(1, 1) == 1, || "shoplifting predicted as arson is not a TP".into())?;
    Ok("200 random 5x5 matrices equal the per-sample remapping".into())
}

fn statistics_oracle() -> Outcome {
    let mut rng = RngStream::new(0x57a7);
    let mut worst = [0.0f64; 3];
    for case in 0..50 {
        let na = 2 + rng.below(30) as usize;
        let nb = 2 + rng.below(30) as usize;
        let shift = rng.uniform_f64(-0.2, 0.2);
        let (sa, sb) = (rng.uniform_f64(0.01, 0.2), rng.uniform_f64(0.01, 0.2));
        let a: Vec<f64> = (0..na).map(|_| 0.7 + sa * rng.uniform_f64(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| 0.7 + shift + sb * rng.uniform_f64(-1.0, 1.0)).collect();
        let r = welch_t_test(&SampleSet::new("a", a.clone()).unwrap(), &SampleSet::new("b", b.clone()).unwrap(), 0.05)
            .map_err(|e| e.to_string())?;
        let (t, df, p) = welch_oracle(&a, &b);
        let errs = [(r.t_statistic - t).abs(), (r.degrees_of_freedom - df).abs(), (r.p_value - p).abs()];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
        ensure(errs.iter().all(|&e| e <= 1e-9), || format!("case {case}: errors t/df/p {errs:?}"))?;
    }
    let same = SampleSet::new("s", vec![0.81, 0.9, 0.77, 0.85]).unwrap();
    let r = welch_t_test(&same, &same, 0.05).map_err(|e| e.to_string())?;
    ensure(r.p_value == 1.0 && r.t_statistic == 0.0, || format!("identical samples gave t={} p={}", r.t_statistic, r.p_value))?;
    Ok(format!("50 pairs, max error t {:.1e}, df {:.1e}, p {:.1e}; identical samples t=0 p=1", worst[0], worst[1], worst[2]))
}

fn pcb_partition() -> Outcome {
    let mut rng = RngStream::new(0x9cb);
    for case in 0..100 {
        let t = 3 + rng.below(60) as usize;
        let first = rng.below((t - 2) as u64) as usize;
        let ccm = first + 1 + rng.below((t - first - 2) as u64 + 1) as usize;
        let scm = ccm + rng.below((t - ccm) as u64) as usize;
        let (w, h) = (1 + rng.below(5) as u16, 1 + rng.below(5) as u16);
        let bytes: Vec<u8> = (0..t * w as usize * h as usize).map(|_| rng.below(256) as u8).collect();
        let video = RawVideo::new(w, h, 1, Fps::new(25, 1).unwrap(), bytes).unwrap();
        let sample = VideoSample { id: format!("v{case}"), label: ClassLabel::Abuse, video };
        let seg = segment_video(&sample, &PcbAnnotation::new(first, ccm, scm)).map_err(|e| e.to_string())?;
        let ranges = seg.ranges();
        ensure(ranges[0].start == first && ranges[2].end == t, || format!("case {case}: union is not [{first}, {t})"))?;
        ensure(ranges[0].end == ranges[1].start && ranges[1].end == ranges[2].start, || format!("case {case}: gap or overlap"))?;
        let mut joined = Vec::new();
        for r in &ranges {
            joined.extend_from_slice(sample.video.slice_frames(r.clone()).unwrap().bytes());
        }
        let frame = sample.video.frame_len();
        ensure(joined == sample.video.bytes()[first * frame..], || format!("case {case}: bytes differ"))?;
    }
    Ok("100 random (T, first, ccm, scm) tuples partition [first, T) byte-exactly".into())
}

fn two_class_dataset(per_class: usize, similarity: f64) -> PreparedDataset {
    let spec = SynthSpec {
        per_class,
        similarity,
        classes: vec![ClassLabel::Normal, ClassLabel::Shoplifting],
        ..SynthSpec::default()
    };
    let mut samples = Vec::new();
    for &l in &spec.classes {
        for k in 0..per_class {
            samples.push(synth_video(&spec, l, k).unwrap());
        }
    }
    PreparedDataset::from_samples(samples, ClipConfig::default()).unwrap()
}

fn separable() -> Outcome {
    let start = Instant::now();
    let data = two_class_dataset(40, 0.0);
    let settings = RunSettings { split_ratio: 0.8, train: TrainConfig { epochs: 20, ..TrainConfig::default() }, max_failures: 3 };
    let job = run_job(&data, LabelScheme::Binary, FilterPair::new(16, 16), 0, 0, &settings).map_err(|e| e.to_string())?;
    let r = &job.records[0];
    let bacc = r.bacc.ok_or_else(|| format!("run failed: {:?}", r.error))?;
    let loss = *r.loss_trace.last().unwrap();
    ensure(bacc >= 0.95, || format!("test bACC {bacc:.4} < 0.95"))?;
    within(Duration::from_secs(600), start)?;
    Ok(format!(
        "test bACC {bacc:.4} on {} clips, final training loss {loss:.2e}, {:.0?}",
        r.test_clips,
        start.elapsed()
    ))
}

fn chance_level() -> Outcome {
    let data = two_class_dataset(150, 1.0);
    let settings = RunSettings { split_ratio: 0.3, train: TrainConfig { epochs: 5, ..TrainConfig::default() }, max_failures: 3 };
    let job = run_job(&data, LabelScheme::Binary, FilterPair::new(16, 16), 0, 0, &settings).map_err(|e| e.to_string())?;
    let r = &job.records[0];
    let bacc = r.bacc.ok_or_else(|| format!("run failed: {:?}", r.error))?;
    ensure((0.40..=0.60).contains(&bacc), || format!("test bACC {bacc:.4} outside [0.40, 0.60]"))?;
    Ok(format!("test bACC {bacc:.4} on {} clips", r.test_clips))
}

fn tiny_dataset(clip_length: usize) -> PreparedDataset {
    let spec = SynthSpec { per_class: 2, clip_length, ..SynthSpec::default() };
    let mut samples = Vec::new();
    for &l in &spec.classes {
        for k in 0..2 {
            samples.push(synth_video(&spec, l, k).unwrap());
        }
    }
    let clip = ClipConfig { length: clip_length, train_stride: clip_length, eval_stride: clip_length, ..ClipConfig::default() };
    PreparedDataset::from_samples(samples, clip).unwrap()
}

fn protocol_shape() -> Outcome {
    let start = Instant::now();
    let data = tiny_dataset(10);
    let spec = GridSpec {
        settings: RunSettings { split_ratio: 0.5, train: TrainConfig { epochs: 1, ..TrainConfig::default() }, max_failures: 3 },
        ..GridSpec::default()
    };
    ensure(spec.runs == 30 && spec.pairs == STANDARD_FILTER_PAIRS && spec.approaches == Approach::ALL, || {
        "default grid is not 3 approaches x 6 pairs x 30 runs".into()
    })?;
    let dir = tempfile::tempdir().unwrap();
    let out = run_grid(&data, &spec, dir.path()).map_err(|e| e.to_string())?;
    ensure(out.summary.trained_networks == 360, || format!("{} trained networks", out.summary.trained_networks))?;
    let lines = std::fs::read_to_string(dir.path().join("runs.jsonl")).unwrap().lines().count();
    ensure(lines == 540 && out.summary.records == 540, || format!("{lines} run records"))?;
    ensure(out.results.len() == 18 && out.results.iter().all(|r| r.runs.len() == 30), || "cells are not 18 x 30 runs".into())?;

    let reports = dir.path().join("reports");
    write_reports(&out.results, &reports, 0.05, TestKind::Welch).map_err(|e| e.to_string())?;
    let read = |name: &str| std::fs::read_to_string(reports.join(name)).map_err(|e| format!("{name}: {e}"));
    let t1 = read("table1.txt")?;
    let t2 = read("table2.txt")?;
    let t3 = read("table3.txt")?;
    ensure(t1.starts_with("P-values from t-test. Comparison between 2-classes against 5-classes classification."), || "table 1 title".into())?;
    ensure(t2.starts_with("P-values from t-test. Comparison between binary classification."), || "table 2 title".into())?;
    ensure(t3.starts_with("Best balanced accuracy (bACC) by each training approach and number-of-filter values."), || "table 3 title".into())?;
    let labels = ["16 - 16", "32 - 32", "32 - 64", "64 - 64", "64 - 128", "128 - 32"];
    for (name, text) in [("table 1", &t1), ("table 2", &t2), ("table 3", &t3)] {
        let rows: Vec<&str> = text.lines().filter(|l| labels.iter().any(|p| l.starts_with(p))).collect();
        ensure(rows.len() == 6, || format!("{name} has {} pair rows", rows.len()))?;
        for (row, label) in rows.iter().zip(labels) {
            ensure(row.starts_with(label), || format!("{name}: row order, got {row:?}"))?;
        }
    }
    let t3csv = read("table3.csv")?;
    let cells: usize = t3csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).filter(|c| c.parse::<f64>().is_ok()).count())
        .sum();
    ensure(cells == 18, || format!("table 3 has {cells} populated cells"))?;
    Ok(format!("360 networks, 540 records, 18 cells, tables 1-3 written, {:.0?}", start.elapsed()))
}

fn determinism() -> Outcome {
    let data = tiny_dataset(16);
    let settings = RunSettings { split_ratio: 0.5, train: TrainConfig { epochs: 2, ..TrainConfig::default() }, max_failures: 3 };
    for scheme in [LabelScheme::Binary, LabelScheme::Multi] {
        let a = run_job(&data, scheme, FilterPair::new(16, 16), 3, 11, &settings).map_err(|e| e.to_string())?;
        let b = run_job(&data, scheme, FilterPair::new(16, 16), 3, 11, &settings).map_err(|e| e.to_string())?;
        let bytes = |j: &pcb_core::harness::JobOutput| j.network.as_ref().map(|n| n.to_checkpoint_bytes());
        ensure(bytes(&a).is_some() && bytes(&a) == bytes(&b), || format!("{scheme}: checkpoints differ"))?;
        for (x, y) in a.records.iter().zip(&b.records) {
            ensure(x.confusion == y.confusion && x.bacc == y.bacc, || format!("{scheme}: confusion matrices differ"))?;
        }
    }
    Ok("binary and multi runs repeat bit-identically".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient correctness", gradient_correctness),
        ("convolution oracle", convolution_oracle),
        ("metric oracle", metric_oracle),
        ("collapse oracle", collapse_oracle),
        ("statistics oracle", statistics_oracle),
        ("PCB partition", pcb_partition),
        ("end-to-end separable", separable),
        ("end-to-end chance-level", chance_level),
        ("protocol shape", protocol_shape),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<26} {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<26} {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
