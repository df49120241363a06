//! Deterministic synthetic surveillance-like videos.
//!
//! Each video shows a lattice of Gaussian blobs (about one per 20×20 pixel
//! cell) drifting together over a noisy gray background with toroidal
//! wrap-around, so the motion is visible in every part of the frame. The
//! lattice displacement blends a class-specific motion pattern with a pattern
//! shared by every class:
//!
//! `position(t) = start + (1 - s) * class_motion(t) + s * shared_motion(t)`
//!
//! so `similarity = 0` gives fully distinct classes and `similarity = 1`
//! makes content independent of the label. Start position, direction and
//! phase are random per video, which keeps every window statistically alike
//! regardless of where it starts.
//!
//! Crime videos show an empty scene until the suspect's first appearance;
//! the suspicious segment adds a pulsing blob and the evidence segment a
//! bright flash. Neither is ever part of a training range.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use chrono::DateTime;

use super::annotation::write_atomic;
use super::manifest::{ManifestEntry, ManifestFile};
use super::{io_err, AnnotationRecord, ClassLabel, Fps, PcbAnnotation, PcbError, RawVideo, Result, VideoSample};
use crate::tensor::RngStream;

const BACKGROUND: f64 = 70.0;
const BLOB_AMPLITUDE: f64 = 140.0;
const BLOB_SIGMA: f64 = 4.0;
const DRIFT_SPEED: f64 = 1.5;
/// Approximate blob spacing of the lattice, in pixels.
const LATTICE_CELL: f64 = 20.0;

/// Lattice period along an axis of `extent` pixels; divides the extent so the
/// pattern wraps seamlessly.
fn lattice_period(extent: usize) -> f64 {
    let n = (extent as f64 / LATTICE_CELL).round().max(1.0);
    extent as f64 / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionPattern {
    HorizontalDrift,
    VerticalDrift,
    DiagonalDrift,
    Circle,
    Oscillation,
    /// Figure-eight path shared by all classes.
    Wander,
}

impl MotionPattern {
    pub fn for_class(label: ClassLabel) -> MotionPattern {
        match label {
            ClassLabel::Normal => MotionPattern::HorizontalDrift,
            ClassLabel::Shoplifting => MotionPattern::VerticalDrift,
            ClassLabel::Stealing => MotionPattern::DiagonalDrift,
            ClassLabel::Arson => MotionPattern::Circle,
            ClassLabel::Abuse => MotionPattern::Oscillation,
        }
    }

    /// Displacement in pixels at time `t` (frames) for per-video direction
    /// signs and phase.
    pub fn displacement(self, t: f64, signs: (f64, f64), phase: f64) -> (f64, f64) {
        match self {
            MotionPattern::HorizontalDrift => (signs.0 * DRIFT_SPEED * t, 0.0),
            MotionPattern::VerticalDrift => (0.0, signs.1 * DRIFT_SPEED * t),
            MotionPattern::DiagonalDrift => {
                let v = DRIFT_SPEED * std::f64::consts::FRAC_1_SQRT_2;
                (signs.0 * v * t, signs.1 * v * t)
            }
            MotionPattern::Circle => {
                let a = signs.0 * TAU * t / 12.0 + phase;
                (10.0 * a.cos(), 10.0 * a.sin())
            }
            MotionPattern::Oscillation => (12.0 * (TAU * t / 8.0 + phase).sin(), 0.0),
            MotionPattern::Wander => {
                let a = TAU * t / 20.0 + phase;
                (signs.0 * 8.0 * a.sin(), signs.1 * 6.0 * (2.0 * a).sin())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub classes: Vec<ClassLabel>,
    pub per_class: usize,
    /// Blend weight of the shared motion pattern, in `[0, 1]`.
    pub similarity: f64,
    pub seed: u64,
    /// Pre-crime segments and normal videos hold at least this many frames.
    pub clip_length: usize,
    pub width: u16,
    pub height: u16,
    /// Peak amplitude of uniform per-pixel noise, in gray levels.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: ClassLabel::ALL.to_vec(),
            per_class: 10,
            similarity: 0.0,
            seed: 0,
            clip_length: 16,
            width: 80,
            height: 60,
            noise: 8.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PcbError::Synth(m));
        if self.per_class == 0 {
            return bad("per-class count must be at least 1".into());
        }
        if self.classes.is_empty() {
            return bad("at least one class is required".into());
        }
        let mut sorted = self.classes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.classes.len() {
            return bad("classes must not repeat".into());
        }
        if !(0.0..=1.0).contains(&self.similarity) {
            return bad(format!("similarity {} outside [0, 1]", self.similarity));
        }
        if self.clip_length == 0 || self.width == 0 || self.height == 0 {
            return bad("clip length and frame size must be positive".into());
        }
        if !(0.0..=BACKGROUND).contains(&self.noise) {
            return bad(format!("noise {} outside [0, {BACKGROUND}]", self.noise));
        }
        Ok(())
    }

    pub fn video_id(label: ClassLabel, k: usize) -> String {
        format!("{label}_{k:03}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest_path: PathBuf,
    pub manifest: ManifestFile,
}

fn wrap(d: f64, extent: f64) -> f64 {
    let d = d.rem_euclid(extent);
    if d > extent / 2.0 {
        d - extent
    } else {
        d
    }
}

/// Generates video `k` of class `label` in memory, with its PCB marks for
/// crime classes.
pub fn synth_video(spec: &SynthSpec, label: ClassLabel, k: usize) -> Result<(VideoSample, Option<PcbAnnotation>)> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed).substream(((label.index() as u64) << 32) | k as u64);
    let l = spec.clip_length;
    let (frames, marks) = if label.is_crime() {
        let first = rng.below(5) as usize;
        let ccm = first + l + rng.below(2 * l as u64 + 1) as usize;
        let scm = ccm + rng.below(9) as usize;
        let t = scm + 1 + rng.below(8) as usize;
        (t, Some(PcbAnnotation::new(first, ccm, scm)))
    } else {
        (l + rng.below(2 * l as u64 + 1) as usize, None)
    };
    let (w, h) = (spec.width as usize, spec.height as usize);
    let start = (rng.uniform_f64(0.0, w as f64), rng.uniform_f64(0.0, h as f64));
    let mut sign = || if rng.below(2) == 0 { -1.0 } else { 1.0 };
    let class_signs = (sign(), sign());
    let shared_signs = (sign(), sign());
    let class_phase = rng.uniform_f64(0.0, TAU);
    let shared_phase = rng.uniform_f64(0.0, TAU);
    let pattern = MotionPattern::for_class(label);
    let s = spec.similarity;
    let inv_two_sigma2 = 1.0 / (2.0 * BLOB_SIGMA * BLOB_SIGMA);
    let (px, py) = (lattice_period(w), lattice_period(h));

    let mut data = Vec::with_capacity(frames * w * h);
    for t in 0..frames {
        let appear = marks.map_or(0, |m| m.first_appearance);
        let visible = t >= appear;
        let tau = (t - appear.min(t)) as f64;
        let dc = pattern.displacement(tau, class_signs, class_phase);
        let ds = MotionPattern::Wander.displacement(tau, shared_signs, shared_phase);
        let cx = start.0 + (1.0 - s) * dc.0 + s * ds.0;
        let cy = start.1 + (1.0 - s) * dc.1 + s * ds.1;
        let (mut amplitude, mut flash) = (BLOB_AMPLITUDE, 0.0);
        if let Some(m) = marks {
            if (m.ccm..m.scm).contains(&t) {
                amplitude *= 0.6 + 0.4 * (PI * t as f64 / 2.0).cos().abs();
            }
            if t >= m.scm {
                flash = 60.0;
            }
        }
        let gx: Vec<f64> = (0..w).map(|x| wrap(x as f64 - cx, px).powi(2)).collect();
        for y in 0..h {
            let dy2 = wrap(y as f64 - cy, py).powi(2);
            for &dx2 in &gx {
                let mut v = BACKGROUND + flash + rng.uniform_f64(-spec.noise, spec.noise);
                if visible {
                    v += amplitude * (-(dx2 + dy2) * inv_two_sigma2).exp();
                }
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    let video = RawVideo::new(spec.width, spec.height, 1, Fps::new(30, 1)?, data)?;
    Ok((VideoSample { id: SynthSpec::video_id(label, k), label, video }, marks))
}

/// Writes `videos/<id>.pcv`, `videos/<id>.annotation.json` for crime
/// classes, and `manifest.json` under `out`. Output bytes depend only on the
/// spec.
pub fn synth_dataset(spec: &SynthSpec, out: &Path) -> Result<SynthOutput> {
    spec.validate()?;
    let vdir = out.join("videos");
    std::fs::create_dir_all(&vdir).map_err(io_err(&vdir))?;
    let mut manifest = ManifestFile::default();
    for &label in &spec.classes {
        for k in 0..spec.per_class {
            let (sample, marks) = synth_video(spec, label, k)?;
            let id = &sample.id;
            sample.video.save_pcv(&vdir.join(format!("{id}.pcv")))?;
            let annotation = match marks {
                Some(m) => {
                    let name = format!("{id}.annotation.json");
                    let rec = AnnotationRecord::new(id.clone(), m, "synthetic", DateTime::UNIX_EPOCH);
                    write_atomic(&vdir.join(&name), rec.to_json().as_bytes())?;
                    Some(format!("videos/{name}"))
                }
                None => None,
            };
            manifest.entries.push(ManifestEntry {
                path: format!("videos/{id}.pcv"),
                label: label.to_string(),
                annotation,
            });
        }
    }
    let manifest_path = out.join("manifest.json");
    manifest.write(&manifest_path)?;
    Ok(SynthOutput { manifest_path, manifest })
}
