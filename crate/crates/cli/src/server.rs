//! REST API for the annotation UI.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/videos` | `[{id, label, frame_count, annotated}]` |
//! | GET | `/api/videos/{id}` | one video with geometry and its annotation |
//! | GET | `/api/videos/{id}/frames/{n}` | frame `n` as PNG |
//! | GET | `/api/videos/{id}/annotation` | the annotation document, 404 if none |
//! | PUT | `/api/videos/{id}/annotation` | validate and save, 422 on ordering violations |
//!
//! Everything else is served from the static directory when one is given.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use pcb_core::pcb::{
    load_manifest_lenient, load_video, read_pcv_header, write_annotation_atomic, AnnotationRecord, DatasetManifest,
    RawVideo,
};
use pcb_core::{ClassLabel, PcbAnnotation};
use serde::{Deserialize, Serialize};

use crate::{io_err, CliError, Result};

pub struct AppState {
    manifest: RwLock<DatasetManifest>,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    manifest_write: tokio::sync::Mutex<()>,
}

impl AppState {
    /// Loads the manifest leniently: crime videos without annotations are
    /// expected here. Returned strings describe entries that need attention.
    pub fn load(manifest: &FsPath) -> Result<(AppState, Vec<String>)> {
        let (m, problems) = load_manifest_lenient(manifest)?;
        let state = AppState {
            manifest: RwLock::new(m),
            locks: Mutex::new(HashMap::new()),
            manifest_write: tokio::sync::Mutex::new(()),
        };
        Ok((state, problems))
    }

    fn video(&self, id: &str) -> std::result::Result<VideoInfo, ApiError> {
        let m = self.manifest.read().unwrap();
        let v = m.get(id).ok_or_else(|| ApiError::not_found(format!("no video {id:?}")))?;
        Ok(VideoInfo {
            id: v.id.clone(),
            label: v.label,
            frame_count: v.frame_count,
            path: v.path.clone(),
            entry: v.entry,
            annotation: v.annotation.clone(),
            annotation_path: v.annotation_path.clone(),
        })
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(id.to_string()).or_default().clone()
    }
}

struct VideoInfo {
    id: String,
    label: ClassLabel,
    frame_count: usize,
    path: PathBuf,
    entry: usize,
    annotation: Option<AnnotationRecord>,
    annotation_path: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VideoSummary {
    pub id: String,
    pub label: ClassLabel,
    pub frame_count: usize,
    pub annotated: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VideoDetail {
    pub id: String,
    pub label: ClassLabel,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub fps: f64,
    pub annotated: bool,
    pub annotation: Option<AnnotationRecord>,
}

/// PUT body: the annotation document, where `video_id`, `annotator` and
/// `created_at` may be left out.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationInput {
    video_id: Option<String>,
    first_appearance: usize,
    ccm: usize,
    scm: usize,
    annotator: Option<String>,
    created_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    violations: Vec<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into(), violations: Vec::new() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        log::error!("{e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message, violations: self.violations })).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn list_videos(State(s): State<Arc<AppState>>) -> Json<Vec<VideoSummary>> {
    let m = s.manifest.read().unwrap();
    Json(
        m.videos
            .iter()
            .map(|v| VideoSummary {
                id: v.id.clone(),
                label: v.label,
                frame_count: v.frame_count,
                annotated: v.annotation.is_some(),
            })
            .collect(),
    )
}

async fn get_video(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<VideoDetail>> {
    let v = s.video(&id)?;
    let path = v.path.clone();
    let (width, height, channels, fps) = blocking(move || {
        if path.is_dir() {
            let video = load_video(&path).map_err(ApiError::internal)?;
            Ok((video.width(), video.height(), video.channels(), video.fps().as_f64()))
        } else {
            let h = read_pcv_header(&path).map_err(ApiError::internal)?;
            Ok((h.width as usize, h.height as usize, h.channels as usize, h.fps.as_f64()))
        }
    })
    .await?;
    Ok(Json(VideoDetail {
        id: v.id,
        label: v.label,
        frame_count: v.frame_count,
        width,
        height,
        channels,
        fps,
        annotated: v.annotation.is_some(),
        annotation: v.annotation,
    }))
}

async fn get_frame(State(s): State<Arc<AppState>>, Path((id, n)): Path<(String, usize)>) -> ApiResult<Response> {
    let v = s.video(&id)?;
    if n >= v.frame_count {
        return Err(ApiError::not_found(format!("frame {n} is past the end ({} frames)", v.frame_count)));
    }
    let png = blocking(move || {
        let png = if v.path.is_dir() {
            load_video(&v.path).and_then(|video| video.frame_png(n))
        } else {
            RawVideo::read_pcv_frame(&v.path, n).and_then(|f| f.map_or(Ok(None), |f| f.frame_png(0)))
        };
        png.map_err(ApiError::internal)?.ok_or_else(|| ApiError::not_found(format!("frame {n} is past the end")))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "max-age=3600")], png).into_response())
}

async fn get_annotation(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<AnnotationRecord>> {
    let v = s.video(&id)?;
    v.annotation.map(Json).ok_or_else(|| ApiError::not_found(format!("video {id:?} has no annotation")))
}

fn annotation_path_for(video: &FsPath, id: &str) -> PathBuf {
    video.with_file_name(format!("{id}.annotation.json"))
}

fn manifest_relative(root: &FsPath, path: &FsPath) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

async fn put_annotation(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<AnnotationRecord>> {
    let input: AnnotationInput = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid annotation JSON: {e}")))?;
    let lock = s.lock_for(&id);
    let _guard = lock.lock().await;
    let v = s.video(&id)?;
    let unprocessable = |msg: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, msg);
    if !v.label.is_crime() {
        return Err(unprocessable(format!("{id:?} is a normal video; only crime videos are annotated")));
    }
    if let Some(other) = input.video_id.as_ref().filter(|o| **o != id) {
        return Err(unprocessable(format!("body names video {other:?}, not {id:?}")));
    }
    let marks = PcbAnnotation::new(input.first_appearance, input.ccm, input.scm);
    let violations: Vec<String> = marks.violations(Some(v.frame_count)).iter().map(|x| x.to_string()).collect();
    if !violations.is_empty() {
        let mut e = unprocessable(format!("invalid annotation: {}", violations.join("; ")));
        e.violations = violations;
        return Err(e);
    }
    let record = AnnotationRecord::new(
        id.clone(),
        marks,
        input.annotator.unwrap_or_else(|| "anonymous".into()),
        input.created_at.unwrap_or_else(Utc::now),
    );
    let path = v.annotation_path.clone().unwrap_or_else(|| annotation_path_for(&v.path, &id));
    let to_write = record.clone();
    let target = path.clone();
    blocking(move || write_annotation_atomic(&target, &to_write).map_err(ApiError::internal)).await?;

    if v.annotation_path.is_none() {
        let _m = s.manifest_write.lock().await;
        let (file, manifest_path) = {
            let mut m = s.manifest.write().unwrap();
            let rel = manifest_relative(m.root(), &path);
            m.file.entries[v.entry].annotation = Some(rel);
            (m.file.clone(), m.path.clone())
        };
        blocking(move || file.write(&manifest_path).map_err(ApiError::internal)).await?;
    }
    {
        let mut m = s.manifest.write().unwrap();
        if let Some(entry) = m.videos.iter_mut().find(|x| x.id == id) {
            entry.annotation = Some(record.clone());
            entry.annotation_path = Some(path);
        }
    }
    log::info!("saved annotation for {id}: {}/{}/{}", record.first_appearance, record.ccm, record.scm);
    Ok(Json(record))
}

const INDEX: &str = "<!doctype html>\n<title>PCB annotator</title>\n<p>The annotation API is under <a href=\"/api/videos\">/api/videos</a>. \
Start the server with <code>--static-dir</code> to serve the UI.</p>\n";

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/videos", get(list_videos))
        .route("/api/videos/{id}", get(get_video))
        .route("/api/videos/{id}/frames/{n}", get(get_frame))
        .route("/api/videos/{id}/annotation", get(get_annotation).put(put_annotation))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX) })),
    }
}

pub async fn serve(manifest: &FsPath, addr: SocketAddr, static_dir: Option<PathBuf>) -> Result<()> {
    let (state, problems) = AppState::load(manifest)?;
    for p in &problems {
        log::warn!("{p}");
    }
    if let Some(d) = &static_dir {
        if !d.is_dir() {
            return Err(CliError::Usage(format!("static directory {} does not exist", d.display())));
        }
    }
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(io_err(addr.to_string()))?;
    let local = listener.local_addr().map_err(io_err(addr.to_string()))?;
    println!("serving {} on http://{local}", manifest.display());
    axum::serve(listener, router(Arc::new(state), static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(io_err(local.to_string()))
}
