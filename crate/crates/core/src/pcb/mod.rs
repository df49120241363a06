//! Video ingestion and the pre-crime behavior (PCB) split.
//!
//! A crime video carries three human-marked frames: the suspect's first
//! appearance, the comprehensive crime moment (CCM, where an observer starts
//! to doubt the person) and the strict crime moment (SCM, where the offense
//! is unquestionable). They cut the video into pre-crime, suspicious and
//! evidence segments; only the pre-crime segment is used for training.

mod annotation;
mod clips;
mod manifest;
mod resize;
mod synth;
mod video;

pub(crate) use annotation::write_atomic;
pub use annotation::{read_annotation, write_annotation_atomic, AnnotationRecord};
pub use clips::{clip_starts, extract_clips, frames_to_stack, slice_frames, Clip, ClipConfig, ClipExtraction, ShortRangeWarning, CLIP_HEIGHT, CLIP_WIDTH};
pub use manifest::{load_manifest, load_manifest_lenient, DatasetManifest, DatasetVideo, ManifestEntry, ManifestFile, MANIFEST_VERSION};
pub use resize::{resize_bilinear, resize_frame};
pub use synth::{synth_dataset, synth_video, MotionPattern, SynthOutput, SynthSpec};
pub use video::{load_video, read_pcv_header, Fps, PcvHeader, RawVideo, PCV_HEADER_LEN, PCV_MAGIC, PCV_VERSION};

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;

use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum PcbError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON at line {line}, column {column}: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid video container: {0}")]
    Format(String),
    #[error("image: {0}")]
    Image(String),
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("invalid annotation: {}", join(.0))]
    InvalidAnnotation(Vec<AnnotationViolation>),
    #[error("crime-class video {0} has no annotation")]
    MissingAnnotation(String),
    #[error("invalid manifest:\n  {}", .0.join("\n  "))]
    InvalidManifest(Vec<String>),
    #[error("empty frame")]
    EmptyFrame,
    #[error("invalid synthesis parameters: {0}")]
    Synth(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn join(v: &[AnnotationViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, PcbError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PcbError {
    let path = path.into();
    move |source| PcbError::Io { path, source }
}

/// The five source classes, in the fixed order used for class indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Normal,
    Shoplifting,
    Stealing,
    Arson,
    Abuse,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Normal,
        ClassLabel::Shoplifting,
        ClassLabel::Stealing,
        ClassLabel::Arson,
        ClassLabel::Abuse,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn is_crime(self) -> bool {
        self != ClassLabel::Normal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Shoplifting => "shoplifting",
            ClassLabel::Stealing => "stealing",
            ClassLabel::Arson => "arson",
            ClassLabel::Abuse => "abuse",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = PcbError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| PcbError::UnknownLabel(s.to_string()))
    }
}

/// A labeled video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSample {
    pub id: String,
    pub label: ClassLabel,
    pub video: RawVideo,
}

impl VideoSample {
    pub fn frame_count(&self) -> usize {
        self.video.frame_count()
    }
}

/// The three PCB frame marks of one crime video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PcbAnnotation {
    pub first_appearance: usize,
    pub ccm: usize,
    pub scm: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationViolation {
    FirstNotBeforeCcm { first_appearance: usize, ccm: usize },
    ScmBeforeCcm { ccm: usize, scm: usize },
    ScmOutOfRange { scm: usize, frame_count: usize },
}

impl fmt::Display for AnnotationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnnotationViolation::FirstNotBeforeCcm { first_appearance, ccm } => {
                write!(f, "first_appearance ({first_appearance}) must be before ccm ({ccm})")
            }
            AnnotationViolation::ScmBeforeCcm { ccm, scm } => {
                write!(f, "scm ({scm}) must not precede ccm ({ccm})")
            }
            AnnotationViolation::ScmOutOfRange { scm, frame_count } => {
                write!(f, "scm out of range: {scm} >= frame count {frame_count}")
            }
        }
    }
}

impl PcbAnnotation {
    pub fn new(first_appearance: usize, ccm: usize, scm: usize) -> Self {
        PcbAnnotation { first_appearance, ccm, scm }
    }

    /// Every ordering rule the marks break; `frame_count` adds the range check.
    pub fn violations(&self, frame_count: Option<usize>) -> Vec<AnnotationViolation> {
        let mut out = Vec::new();
        if self.first_appearance >= self.ccm {
            out.push(AnnotationViolation::FirstNotBeforeCcm {
                first_appearance: self.first_appearance,
                ccm: self.ccm,
            });
        }
        if self.scm < self.ccm {
            out.push(AnnotationViolation::ScmBeforeCcm { ccm: self.ccm, scm: self.scm });
        }
        if let Some(t) = frame_count {
            if self.scm >= t {
                out.push(AnnotationViolation::ScmOutOfRange { scm: self.scm, frame_count: t });
            }
        }
        out
    }

    pub fn validate(&self, frame_count: usize) -> Result<()> {
        let v = self.violations(Some(frame_count));
        if v.is_empty() {
            Ok(())
        } else {
            Err(PcbError::InvalidAnnotation(v))
        }
    }
}

/// Contiguous frame ranges covering `[first_appearance, T)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcbSegments {
    pub pre_crime: Range<usize>,
    pub suspicious: Range<usize>,
    pub evidence: Range<usize>,
}

impl PcbSegments {
    pub fn new(ann: &PcbAnnotation, frame_count: usize) -> Result<Self> {
        ann.validate(frame_count)?;
        Ok(PcbSegments {
            pre_crime: ann.first_appearance..ann.ccm,
            suspicious: ann.ccm..ann.scm,
            evidence: ann.scm..frame_count,
        })
    }

    pub fn ranges(&self) -> [Range<usize>; 3] {
        [self.pre_crime.clone(), self.suspicious.clone(), self.evidence.clone()]
    }
}

pub fn segment_video(video: &VideoSample, ann: &PcbAnnotation) -> Result<PcbSegments> {
    PcbSegments::new(ann, video.frame_count())
}

/// Frames used for training: the pre-crime segment for crime videos, the
/// whole video for normal ones.
pub fn pcb_training_frames(video: &VideoSample, ann: Option<&PcbAnnotation>) -> Result<Range<usize>> {
    training_range(video.label, video.frame_count(), ann, &video.id)
}

pub(crate) fn training_range(
    label: ClassLabel,
    frame_count: usize,
    ann: Option<&PcbAnnotation>,
    id: &str,
) -> Result<Range<usize>> {
    if !label.is_crime() {
        return Ok(0..frame_count);
    }
    let ann = ann.ok_or_else(|| PcbError::MissingAnnotation(id.to_string()))?;
    Ok(PcbSegments::new(ann, frame_count)?.pre_crime)
}
