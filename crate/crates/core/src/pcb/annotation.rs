use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};

use super::{io_err, PcbAnnotation, PcbError, Result};

/// On-disk annotation document for one video.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub video_id: String,
    pub first_appearance: usize,
    pub ccm: usize,
    pub scm: usize,
    pub annotator: String,
    pub created_at: DateTime<Utc>,
}

impl AnnotationRecord {
    pub fn new(video_id: impl Into<String>, marks: PcbAnnotation, annotator: impl Into<String>, created_at: DateTime<Utc>) -> Self {
        AnnotationRecord {
            video_id: video_id.into(),
            first_appearance: marks.first_appearance,
            ccm: marks.ccm,
            scm: marks.scm,
            annotator: annotator.into(),
            created_at,
        }
    }

    pub fn marks(&self) -> PcbAnnotation {
        PcbAnnotation::new(self.first_appearance, self.ccm, self.scm)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("annotation serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn json_err(path: &Path, e: serde_json::Error) -> PcbError {
    PcbError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn read_annotation(path: &Path) -> Result<AnnotationRecord> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(tmp.path()))?;
    tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
    tmp.persist(path).map_err(|e| PcbError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn write_annotation_atomic(path: &Path, record: &AnnotationRecord) -> Result<()> {
    write_atomic(path, record.to_json().as_bytes())
}
