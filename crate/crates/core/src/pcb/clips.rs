use std::fmt;
use std::ops::Range;

use super::resize::resize_frame;
use super::{ClassLabel, PcbError, RawVideo, Result, VideoSample};
use crate::tensor::Tensor;

pub const CLIP_HEIGHT: usize = 60;
pub const CLIP_WIDTH: usize = 80;

/// Temporal windowing and color handling for clip extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClipConfig {
    /// 1 for BT.601 luma, 3 for RGB.
    pub channels: usize,
    pub length: usize,
    pub train_stride: usize,
    pub eval_stride: usize,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig { channels: 1, length: 16, train_stride: 16, eval_stride: 8 }
    }
}

impl ClipConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels != 1 && self.channels != 3 {
            return Err(PcbError::Config(format!("channels must be 1 or 3, got {}", self.channels)));
        }
        if self.length == 0 || self.train_stride == 0 || self.eval_stride == 0 {
            return Err(PcbError::Config("clip length and strides must be at least 1".into()));
        }
        Ok(())
    }

    /// `[channels, length, 60, 80]`.
    pub fn clip_dims(&self) -> [usize; 4] {
        [self.channels, self.length, CLIP_HEIGHT, CLIP_WIDTH]
    }
}

/// A fixed-geometry `[ch, L, 60, 80]` training or evaluation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub tensor: Tensor,
    pub source_id: String,
    pub label: ClassLabel,
}

/// A frame range too short to hold a single clip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortRangeWarning {
    pub video_id: String,
    pub range: Range<usize>,
    pub clip_length: usize,
}

impl fmt::Display for ShortRangeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: frame range {:?} has {} frames, fewer than the clip length {}; no clips extracted",
            self.video_id,
            self.range,
            self.range.len(),
            self.clip_length
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct ClipExtraction {
    pub clips: Vec<Clip>,
    pub warnings: Vec<ShortRangeWarning>,
}

/// Window start offsets (relative to the range start) for `range_len` frames.
pub fn clip_starts(range_len: usize, length: usize, stride: usize) -> Vec<usize> {
    assert!(length >= 1 && stride >= 1, "clip length and stride must be positive");
    if range_len < length {
        return Vec::new();
    }
    (0..=range_len - length).step_by(stride).collect()
}

/// Converts frames `range` to a `[channels, n, 60, 80]` stack with pixel
/// intensities mapped to `[-1, 1]`.
pub fn frames_to_stack(video: &RawVideo, range: Range<usize>, channels: usize) -> Result<Tensor> {
    if range.start >= range.end || range.end > video.frame_count() {
        return Err(PcbError::Format(format!(
            "frame range {range:?} is empty or outside 0..{}",
            video.frame_count()
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(PcbError::Config(format!("channels must be 1 or 3, got {channels}")));
    }
    let n = range.len();
    let (h, w) = (video.height(), video.width());
    let plane = CLIP_HEIGHT * CLIP_WIDTH;
    let mut out = vec![0.0f32; channels * n * plane];
    let mut raw = vec![0.0f32; channels * h * w];
    for (i, f) in range.enumerate() {
        video.frame_planes(f, channels, &mut raw);
        let resized;
        let src: &[f32] = if (h, w) == (CLIP_HEIGHT, CLIP_WIDTH) {
            &raw
        } else {
            resized = resize_frame(&Tensor::from_vec(&[channels, h, w], raw.clone())?)?;
            resized.data()
        };
        for c in 0..channels {
            let dst = (c * n + i) * plane;
            for (o, &v) in out[dst..dst + plane].iter_mut().zip(&src[c * plane..(c + 1) * plane]) {
                *o = 2.0 * v - 1.0;
            }
        }
    }
    Ok(Tensor::from_vec(&[channels, n, CLIP_HEIGHT, CLIP_WIDTH], out)?)
}

/// Copies `length` consecutive frames starting at `start` out of a
/// `[ch, n, H, W]` stack.
pub fn slice_frames(stack: &Tensor, start: usize, length: usize) -> Result<Tensor> {
    let &[c, n, h, w] = stack.dims() else {
        return Err(PcbError::Format(format!("expected a rank-4 frame stack, got {}", stack.shape())));
    };
    if length == 0 || start + length > n {
        return Err(PcbError::Format(format!("frames {start}..{} outside stack of {n}", start + length)));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity(c * length * plane);
    for ch in stack.data().chunks_exact(n * plane).take(c) {
        out.extend_from_slice(&ch[start * plane..(start + length) * plane]);
    }
    Ok(Tensor::from_vec(&[c, length, h, w], out)?)
}

/// Sliding windows of `length` frames at `stride` over `range` of `video`.
///
/// A range shorter than `length` yields no clips and one warning.
pub fn extract_clips(
    video: &VideoSample,
    range: Range<usize>,
    channels: usize,
    length: usize,
    stride: usize,
) -> Result<ClipExtraction> {
    if length == 0 || stride == 0 {
        return Err(PcbError::Config("clip length and stride must be at least 1".into()));
    }
    if range.start > range.end || range.end > video.frame_count() {
        return Err(PcbError::Format(format!(
            "{}: frame range {range:?} outside 0..{}",
            video.id,
            video.frame_count()
        )));
    }
    let starts = clip_starts(range.len(), length, stride);
    if starts.is_empty() {
        let warning = ShortRangeWarning { video_id: video.id.clone(), range, clip_length: length };
        log::warn!("{warning}");
        return Ok(ClipExtraction { clips: Vec::new(), warnings: vec![warning] });
    }
    let last = starts[starts.len() - 1] + length;
    let stack = frames_to_stack(&video.video, range.start..range.start + last, channels)?;
    let clips = starts
        .into_iter()
        .map(|s| {
            Ok(Clip {
                tensor: slice_frames(&stack, s, length)?,
                source_id: video.id.clone(),
                label: video.label,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ClipExtraction { clips, warnings: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcb::Fps;

    fn sample(t: usize, w: u16, h: u16) -> VideoSample {
        let len = w as usize * h as usize;
        let data = (0..t * len).map(|i| ((i / len) * 10 % 256) as u8).collect();
        VideoSample {
            id: "vid".into(),
            label: ClassLabel::Stealing,
            video: RawVideo::new(w, h, 1, Fps::new(30, 1).unwrap(), data).unwrap(),
        }
    }

    #[test]
    fn start_counts() {
        assert_eq!(clip_starts(100, 16, 16).len(), 6);
        assert_eq!(clip_starts(16, 16, 1), vec![0]);
        assert!(clip_starts(10, 16, 1).is_empty());
        assert_eq!(clip_starts(40, 16, 8), vec![0, 8, 16, 24]);
    }

    #[test]
    fn clips_have_fixed_geometry_and_follow_frames() {
        let v = sample(40, 40, 30);
        let ex = extract_clips(&v, 5..40, 1, 16, 8).unwrap();
        assert_eq!(ex.clips.len(), 3);
        for (k, c) in ex.clips.iter().enumerate() {
            assert_eq!(c.tensor.dims(), &[1, 16, 60, 80]);
            // every pixel of frame f is 2*(f*10)/255 - 1 after resizing a constant frame
            let first = c.tensor.data()[0];
            let expected = 2.0 * ((5 + 8 * k) * 10 % 256) as f32 / 255.0 - 1.0;
            assert!((first - expected).abs() < 1e-6);
            assert_eq!(c.label, ClassLabel::Stealing);
        }
        let rgb = extract_clips(&v, 0..16, 3, 16, 16).unwrap();
        assert_eq!(rgb.clips[0].tensor.dims(), &[3, 16, 60, 80]);
    }

    #[test]
    fn short_range_warns() {
        let v = sample(40, 80, 60);
        let ex = extract_clips(&v, 0..10, 1, 16, 1).unwrap();
        assert!(ex.clips.is_empty());
        assert_eq!(ex.warnings.len(), 1);
        assert!(ex.warnings[0].to_string().contains("fewer than the clip length 16"));
        assert!(extract_clips(&v, 0..41, 1, 16, 1).is_err());
    }

    #[test]
    fn slicing_stack() {
        let stack = Tensor::from_vec(&[2, 3, 1, 1], vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]).unwrap();
        assert_eq!(slice_frames(&stack, 1, 2).unwrap().data(), &[1.0, 2.0, 11.0, 12.0]);
        assert!(slice_frames(&stack, 2, 2).is_err());
    }
}
