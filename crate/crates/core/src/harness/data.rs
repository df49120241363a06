use std::collections::BTreeMap;
use std::ops::Range;

use super::{HarnessError, Result};
use crate::nn::Geometry;
use crate::pcb::{
    clip_starts, frames_to_stack, slice_frames, training_range, ClassLabel, ClipConfig, DatasetManifest, PcbAnnotation,
    ShortRangeWarning, VideoSample, CLIP_HEIGHT, CLIP_WIDTH,
};
use crate::tensor::{RngStream, Tensor};

/// One video reduced to its usable frames, resized once.
#[derive(Debug, Clone)]
pub struct PreparedVideo {
    pub id: String,
    pub label: ClassLabel,
    /// Frame range of the source video used for clips.
    pub range: Range<usize>,
    stack: Tensor,
    train_starts: Vec<usize>,
    eval_starts: Vec<usize>,
}

impl PreparedVideo {
    pub fn train_clip_count(&self) -> usize {
        self.train_starts.len()
    }

    pub fn eval_clip_count(&self) -> usize {
        self.eval_starts.len()
    }

    pub fn train_clip(&self, i: usize, length: usize) -> Result<Tensor> {
        Ok(slice_frames(&self.stack, self.train_starts[i], length)?)
    }

    pub fn eval_clip(&self, i: usize, length: usize) -> Result<Tensor> {
        Ok(slice_frames(&self.stack, self.eval_starts[i], length)?)
    }
}

/// Every video with at least one clip, in manifest order.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub clip: ClipConfig,
    pub videos: Vec<PreparedVideo>,
    /// Videos dropped because their usable range is shorter than one clip.
    pub warnings: Vec<ShortRangeWarning>,
}

impl PreparedDataset {
    pub fn from_manifest(manifest: &DatasetManifest, clip: ClipConfig) -> Result<Self> {
        let mut samples = Vec::with_capacity(manifest.videos.len());
        for v in &manifest.videos {
            samples.push((v.load()?, v.annotation.as_ref().map(|a| a.marks())));
        }
        Self::from_samples(samples, clip)
    }

    pub fn from_samples(samples: Vec<(VideoSample, Option<PcbAnnotation>)>, clip: ClipConfig) -> Result<Self> {
        clip.validate()?;
        let mut videos = Vec::new();
        let mut warnings = Vec::new();
        for (sample, ann) in samples {
            let range = training_range(sample.label, sample.frame_count(), ann.as_ref(), &sample.id)?;
            let eval_starts = clip_starts(range.len(), clip.length, clip.eval_stride);
            if eval_starts.is_empty() {
                let w = ShortRangeWarning { video_id: sample.id.clone(), range, clip_length: clip.length };
                log::warn!("{w}");
                warnings.push(w);
                continue;
            }
            let train_starts = clip_starts(range.len(), clip.length, clip.train_stride);
            let stack = frames_to_stack(&sample.video, range.clone(), clip.channels)?;
            videos.push(PreparedVideo { id: sample.id, label: sample.label, range, stack, train_starts, eval_starts });
        }
        Ok(PreparedDataset { clip, videos, warnings })
    }

    /// Input geometry of networks trained on this dataset.
    pub fn geometry(&self) -> Geometry {
        Geometry { channels: self.clip.channels, frames: self.clip.length, height: CLIP_HEIGHT, width: CLIP_WIDTH }
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.videos.iter().map(|v| v.label).collect()
    }

    pub fn counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut out = BTreeMap::new();
        for v in &self.videos {
            *out.entry(v.label).or_insert(0) += 1;
        }
        out
    }
}

/// Video indices on each side of a split, ascending.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified video-level split: each class keeps `round(ratio · n)` videos
/// for training (at least one on each side).
pub fn split_dataset(labels: &[ClassLabel], ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(HarnessError::Config(format!("split ratio {ratio} must lie strictly between 0 and 1")));
    }
    let mut by_class: BTreeMap<ClassLabel, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let rng = RngStream::new(seed);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for (label, mut idx) in by_class {
        let n = idx.len();
        if n < 2 {
            return Err(HarnessError::Split(format!("class {label} has {n} video(s); at least 2 are required")));
        }
        rng.substream(label.index() as u64).shuffle(&mut idx);
        let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
        split.train.extend_from_slice(&idx[..n_train]);
        split.test.extend_from_slice(&idx[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
