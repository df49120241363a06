//! Dataset manifest: `{"version": 1, "entries": [{"path", "label", "annotation"}]}`.
//!
//! Paths are resolved relative to the manifest's directory. A video's id is
//! its file stem (or directory name for PNG frame directories).

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use super::annotation::{json_err, read_annotation, write_atomic};
use super::video::probe_frame_count;
use super::{io_err, load_video, AnnotationRecord, ClassLabel, PcbError, Result, VideoSample};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    #[serde(default)]
    pub annotation: Option<String>,
}

/// The manifest document exactly as stored.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Default for ManifestFile {
    fn default() -> Self {
        ManifestFile { version: MANIFEST_VERSION, entries: Vec::new() }
    }
}

impl ManifestFile {
    pub fn read(path: &Path) -> Result<ManifestFile> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let file: ManifestFile = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
        if file.version != MANIFEST_VERSION {
            return Err(PcbError::InvalidManifest(vec![format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                file.version
            )]));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Atomic write.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

/// A manifest entry whose video resolved and whose label parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetVideo {
    /// Position in the manifest's entry list.
    pub entry: usize,
    pub id: String,
    pub label: ClassLabel,
    pub path: PathBuf,
    pub frame_count: usize,
    pub annotation_path: Option<PathBuf>,
    /// Present only when the file parsed and its marks are valid for this video.
    pub annotation: Option<AnnotationRecord>,
}

impl DatasetVideo {
    pub fn load(&self) -> Result<VideoSample> {
        Ok(VideoSample { id: self.id.clone(), label: self.label, video: load_video(&self.path)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub path: PathBuf,
    pub file: ManifestFile,
    pub videos: Vec<DatasetVideo>,
}

impl DatasetManifest {
    /// Directory that relative entry paths resolve against.
    pub fn root(&self) -> &Path {
        manifest_root(&self.path)
    }

    /// Video count per class, including classes with no videos.
    pub fn counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut out: BTreeMap<_, _> = ClassLabel::ALL.into_iter().map(|l| (l, 0)).collect();
        for v in &self.videos {
            *out.get_mut(&v.label).expect("all labels present") += 1;
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<&DatasetVideo> {
        self.videos.iter().find(|v| v.id == id)
    }
}

fn manifest_root(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

fn video_id(path: &Path) -> Option<String> {
    let name = if path.is_dir() { path.file_name() } else { path.file_stem() };
    name.and_then(|s| s.to_str()).map(str::to_string)
}

/// Loads and fully validates a manifest; every problem is reported at once.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let (manifest, problems) = load_manifest_lenient(path)?;
    if problems.is_empty() {
        Ok(manifest)
    } else {
        Err(PcbError::InvalidManifest(problems))
    }
}

/// Loads a manifest, keeping every entry whose video resolves. Problems that
/// strict loading would reject are returned alongside.
pub fn load_manifest_lenient(path: &Path) -> Result<(DatasetManifest, Vec<String>)> {
    let file = ManifestFile::read(path)?;
    let root = manifest_root(path);
    let mut problems = Vec::new();
    let mut videos = Vec::new();
    let mut seen = HashSet::new();
    for (i, e) in file.entries.iter().enumerate() {
        let mut report = |id: &str, msg: String| problems.push(format!("entry {i} ({id}): {msg}"));
        let vpath = root.join(&e.path);
        let id = video_id(&vpath).unwrap_or_else(|| e.path.clone());
        let label = match e.label.parse::<ClassLabel>() {
            Ok(l) => l,
            Err(err) => {
                report(&id, err.to_string());
                continue;
            }
        };
        let frame_count = match probe_frame_count(&vpath) {
            Ok(n) => n,
            Err(err) => {
                report(&id, format!("video not loadable: {err}"));
                continue;
            }
        };
        if !seen.insert(id.clone()) {
            report(&id, "duplicate video id".into());
            continue;
        }
        let annotation_path = e.annotation.as_ref().map(|a| root.join(a));
        let mut annotation = None;
        match (&annotation_path, label.is_crime()) {
            (None, true) => report(&id, "crime-class video has no annotation".into()),
            (Some(_), false) => report(&id, "normal video must not carry an annotation".into()),
            (Some(ap), true) => match read_annotation(ap) {
                Err(err) => report(&id, format!("annotation not readable: {err}")),
                Ok(rec) if rec.video_id != id => {
                    report(&id, format!("annotation is for video {:?}", rec.video_id))
                }
                Ok(rec) => {
                    let v = rec.marks().violations(Some(frame_count));
                    if v.is_empty() {
                        annotation = Some(rec);
                    } else {
                        for x in v {
                            report(&id, x.to_string());
                        }
                    }
                }
            },
            (None, false) => {}
        }
        videos.push(DatasetVideo { entry: i, id, label, path: vpath, frame_count, annotation_path, annotation });
    }
    Ok((DatasetManifest { path: path.to_path_buf(), file, videos }, problems))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcb::{write_annotation_atomic, Fps, PcbAnnotation, RawVideo};
    use chrono::DateTime;

    fn write_video(dir: &Path, name: &str, frames: usize) {
        RawVideo::new(4, 3, 1, Fps::new(30, 1).unwrap(), vec![0; 12 * frames])
            .unwrap()
            .save_pcv(&dir.join(name))
            .unwrap();
    }

    fn write_ann(dir: &Path, name: &str, id: &str, marks: PcbAnnotation) {
        let rec = AnnotationRecord::new(id, marks, "t", DateTime::UNIX_EPOCH);
        write_annotation_atomic(&dir.join(name), &rec).unwrap();
    }

    fn entry(path: &str, label: &str, ann: Option<&str>) -> ManifestEntry {
        ManifestEntry { path: path.into(), label: label.into(), annotation: ann.map(Into::into) }
    }

    #[test]
    fn empty_manifest_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, r#"{"version": 1, "entries": []}"#).unwrap();
        let m = load_manifest(&p).unwrap();
        assert!(m.videos.is_empty());
        assert!(m.counts().values().all(|&c| c == 0));
        assert_eq!(m.counts().len(), 5);
    }

    #[test]
    fn violations_name_the_entry() {
        let dir = tempfile::tempdir().unwrap();
        write_video(dir.path(), "arson_1.pcv", 300);
        write_video(dir.path(), "normal_1.pcv", 50);
        write_ann(dir.path(), "arson_1.json", "arson_1", PcbAnnotation::new(20, 150, 140));
        let file = ManifestFile {
            version: 1,
            entries: vec![entry("arson_1.pcv", "arson", Some("arson_1.json")), entry("normal_1.pcv", "normal", None)],
        };
        let p = dir.path().join("m.json");
        file.write(&p).unwrap();
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("arson_1"), "{err}");
        assert!(err.contains("scm (140) must not precede ccm (150)"), "{err}");

        let (m, problems) = load_manifest_lenient(&p).unwrap();
        assert_eq!(problems.len(), 1);
        assert_eq!(m.videos.len(), 2);
        assert!(m.get("arson_1").unwrap().annotation.is_none());
        assert_eq!(m.get("normal_1").unwrap().frame_count, 50);
    }

    #[test]
    fn structural_problems() {
        let dir = tempfile::tempdir().unwrap();
        write_video(dir.path(), "a.pcv", 10);
        let file = ManifestFile {
            version: 1,
            entries: vec![
                entry("a.pcv", "burglary", None),
                entry("missing.pcv", "normal", None),
                entry("a.pcv", "normal", None),
                entry("a.pcv", "normal", None),
                entry("a.pcv", "abuse", None),
            ],
        };
        let p = dir.path().join("m.json");
        file.write(&p).unwrap();
        let (m, problems) = load_manifest_lenient(&p).unwrap();
        assert_eq!(m.videos.len(), 1);
        assert_eq!(problems.len(), 4, "{problems:?}");
        assert!(problems[0].contains("burglary"));
        assert!(problems[1].contains("missing"));
        assert!(problems[2].contains("duplicate"));
    }

    #[test]
    fn parse_errors_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "{\"version\": 1,\n\"entries\": [}").unwrap();
        assert!(matches!(load_manifest(&p), Err(PcbError::Json { line: 2, .. })));
        std::fs::write(&p, r#"{"version": 2, "entries": []}"#).unwrap();
        assert!(load_manifest(&p).is_err());
    }

    #[test]
    fn write_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_video(dir.path(), "s.pcv", 30);
        write_ann(dir.path(), "s.json", "s", PcbAnnotation::new(0, 10, 20));
        let file = ManifestFile { version: 1, entries: vec![entry("s.pcv", "stealing", Some("s.json"))] };
        let p = dir.path().join("m.json");
        file.write(&p).unwrap();
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.file, file);
        let p2 = dir.path().join("m2.json");
        m.file.write(&p2).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(m.counts()[&ClassLabel::Stealing], 1);
        assert_eq!(m.videos[0].annotation.as_ref().unwrap().marks(), PcbAnnotation::new(0, 10, 20));
    }
}
