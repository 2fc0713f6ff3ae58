//! HTTP front end over a built cube.
//!
//! | route | answer |
//! |-------|--------|
//! | `GET /health` | `{"status":"ok","version":…}`, 503 while loading |
//! | `GET /mesh` | mesh file bytes |
//! | `GET /texture/{vis_calib,uvf_calib,overlay}` | 8-bit PNG preview |
//! | `POST /classify` | mask (RLE rows), stats and faces |
//! | `GET /ui/*` | static files from the configured directory |

use std::future::Future;
use std::net::SocketAddr;
use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cube_store;
use crate::error::{Error, Result};
use crate::manifest::Project;
use crate::pfm;
use crate::pipeline::{ClassifyParams, ClassifyStats, Reference, Session, OVERLAY, UVF_CALIB, VIS_CALIB};
use crate::rle::{self, RleMask};
use crate::run_dir::latest_dir;
use crate::texture_io::encode_png;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub project: Project,
    pub addr: SocketAddr,
    pub ui_dir: Option<PathBuf>,
    pub workers: usize,
}

/// A tone-mapped texture ready to send.
struct Preview {
    png: Vec<u8>,
    min: Vec<f32>,
    max: Vec<f32>,
}

struct Loaded {
    session: Session,
    mesh_bytes: Vec<u8>,
    vis: Option<Preview>,
    uvf: Option<Preview>,
}

struct AppState {
    project: Project,
    ui_dir: Option<PathBuf>,
    workers: usize,
    loaded: OnceLock<std::result::Result<Arc<Loaded>, String>>,
}

impl AppState {
    fn ready(&self) -> std::result::Result<Arc<Loaded>, Response> {
        match self.loaded.get() {
            Some(Ok(l)) => Ok(l.clone()),
            Some(Err(e)) => Err(error_response(StatusCode::SERVICE_UNAVAILABLE, e)),
            None => Err(error_response(StatusCode::SERVICE_UNAVAILABLE, "cube is loading")),
        }
    }
}

fn error_response(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

/// Min–max tone map per channel over the valid texels; masked texels are 0.
fn tone_map(p: &pfm::Pfm, valid: &uvsam_core::Mask) -> Preview {
    let c = p.channels;
    let mut min = vec![f32::INFINITY; c];
    let mut max = vec![f32::NEG_INFINITY; c];
    for (px, _) in p.data.chunks_exact(c).zip(valid.bits()).filter(|(_, &ok)| ok) {
        for k in 0..c {
            min[k] = min[k].min(px[k]);
            max[k] = max[k].max(px[k]);
        }
    }
    for k in 0..c {
        if min[k] > max[k] {
            (min[k], max[k]) = (0.0, 0.0);
        }
    }
    let mut out = vec![0u8; p.data.len()];
    for ((dst, px), &ok) in out.chunks_exact_mut(c).zip(p.data.chunks_exact(c)).zip(valid.bits()) {
        if !ok {
            continue;
        }
        for k in 0..c {
            let span = max[k] - min[k];
            if span > 0.0 {
                dst[k] = (255.0 * (px[k] - min[k]) / span).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Preview {
        png: encode_png(p.width, p.height, c, &out),
        min,
        max,
    }
}

fn load_preview(path: &FsPath, valid: &uvsam_core::Mask) -> Option<Preview> {
    let bytes = std::fs::read(path).ok()?;
    let p = pfm::decode(&bytes).ok()?;
    ((p.width, p.height) == (valid.width(), valid.height())).then(|| tone_map(&p, valid))
}

fn load(project: &Project, workers: usize) -> Result<Loaded> {
    let session = Session::open(project, workers)?;
    let mesh_bytes = std::fs::read(&project.mesh_path).map_err(Error::io(&project.mesh_path))?;
    let latest = latest_dir(&project.output_dir);
    let valid = session.cube.valid().clone();
    Ok(Loaded {
        vis: load_preview(&latest.join(VIS_CALIB), &valid),
        uvf: load_preview(&latest.join(UVF_CALIB), &valid),
        session,
        mesh_bytes,
    })
}

async fn log_requests(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let uri = req.uri().clone();
    let start = Instant::now();
    let response = next.run(req).await;
    log::info!(
        "{method} {uri} {} {:.1}ms",
        response.status().as_u16(),
        start.elapsed().as_secs_f64() * 1e3
    );
    response
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let version = env!("CARGO_PKG_VERSION");
    match state.loaded.get() {
        Some(Ok(_)) => Json(json!({ "status": "ok", "version": version })).into_response(),
        Some(Err(e)) => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "error", "version": version, "error": e })),
        )
            .into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "loading", "version": version })),
        )
            .into_response(),
    }
}

async fn mesh(State(state): State<Arc<AppState>>) -> Response {
    match state.ready() {
        Ok(l) => ([(header::CONTENT_TYPE, "model/obj")], l.mesh_bytes.clone()).into_response(),
        Err(r) => r,
    }
}

fn join_values(values: &[f32]) -> HeaderValue {
    let text = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    HeaderValue::from_str(&text).expect("numbers are valid header text")
}

async fn texture(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> Response {
    let loaded = match state.ready() {
        Ok(l) => l,
        Err(r) => return r,
    };
    let preview = match name.as_str() {
        "vis_calib" => loaded.vis.as_ref(),
        "uvf_calib" => loaded.uvf.as_ref(),
        "overlay" => {
            let path = latest_dir(&state.project.output_dir).join(OVERLAY);
            return match tokio::fs::read(&path).await {
                Ok(bytes) => (
                    [(header::CONTENT_TYPE, "image/png"), (header::HeaderName::from_static("x-tonemap"), "none")],
                    bytes,
                )
                    .into_response(),
                Err(_) => error_response(StatusCode::NOT_FOUND, "no overlay yet; run `classify`"),
            };
        }
        _ => return error_response(StatusCode::NOT_FOUND, format!("unknown texture {name:?}")),
    };
    let Some(p) = preview else {
        return error_response(StatusCode::NOT_FOUND, format!("texture {name:?} not available"));
    };
    let mut response = (
        [(header::CONTENT_TYPE, "image/png")],
        p.png.clone(),
    )
        .into_response();
    let headers = response.headers_mut();
    headers.insert("x-tonemap", HeaderValue::from_static("minmax-per-channel"));
    headers.insert("x-tonemap-min", join_values(&p.min));
    headers.insert("x-tonemap-max", join_values(&p.max));
    response
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RayJson {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uv: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub texel: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ray: Option<RayJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub connected: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
pub struct ClassifyResponse {
    pub mask: RleMask,
    pub stats: ClassifyStats,
    pub faces: Vec<u32>,
}

impl ClassifyRequest {
    pub fn reference(&self) -> std::result::Result<Reference, String> {
        match (self.uv, self.texel, &self.ray) {
            (Some(uv), None, None) => Ok(Reference::Uv(uv)),
            (None, Some([c, r]), None) => Ok(Reference::Texel(c, r)),
            (None, None, Some(ray)) => Ok(Reference::Ray {
                origin: ray.origin,
                direction: ray.direction,
            }),
            _ => Err("exactly one of uv, texel or ray is required".into()),
        }
    }
}

async fn classify(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let loaded = match state.ready() {
        Ok(l) => l,
        Err(r) => return r,
    };
    let request: ClassifyRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let reference = match request.reference() {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let params = ClassifyParams {
        theta_max: request.theta_max.unwrap_or(state.project.theta_max),
        radius: request.radius.unwrap_or(state.project.radius),
        connected: request.connected,
        min_face_fraction: state.project.min_face_fraction,
    };
    let workers = state.workers;
    let job = tokio::task::spawn_blocking(move || {
        loaded
            .session
            .classify(&reference, &params, workers)
            .map(|c| ClassifyResponse {
                mask: rle::encode(&c.region),
                stats: c.stats_block(&params),
                faces: c.faces.iter().copied().collect(),
            })
    });
    match job.await {
        Ok(Ok(response)) => Json(response).into_response(),
        Ok(Err(e)) => {
            let status = match e {
                Error::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
                Error::NotOnSurface { .. } | Error::NoSurfaceHit => StatusCode::CONFLICT,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            };
            error_response(status, e)
        }
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

async fn ui_file(state: &AppState, rel: &str) -> Response {
    let Some(root) = &state.ui_dir else {
        return error_response(StatusCode::NOT_FOUND, "no viewer bundle configured");
    };
    let rel = if rel.is_empty() || rel.ends_with('/') {
        format!("{rel}index.html")
    } else {
        rel.to_string()
    };
    let rel = PathBuf::from(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return error_response(StatusCode::NOT_FOUND, "not found");
    }
    let path = root.join(&rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], Body::from(bytes)).into_response(),
        Err(_) => error_response(StatusCode::NOT_FOUND, "not found"),
    }
}

async fn ui(State(state): State<Arc<AppState>>, Path(rel): Path<String>) -> Response {
    ui_file(&state, &rel).await
}

async fn ui_index(State(state): State<Arc<AppState>>) -> Response {
    ui_file(&state, "").await
}

async fn not_found() -> Response {
    error_response(StatusCode::NOT_FOUND, "not found")
}

fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/mesh", get(mesh))
        .route("/texture/{name}", get(texture))
        .route("/classify", post(classify))
        .route("/ui", get(ui_index))
        .route("/ui/", get(ui_index))
        .route("/ui/{*path}", get(ui))
        .fallback(not_found)
        .layer(middleware::from_fn(log_requests))
        .with_state(state)
}

/// Refuses to start without a built cube, then binds the listener.
pub fn bind(config: &ServiceConfig) -> Result<std::net::TcpListener> {
    let descriptor = latest_dir(&config.project.output_dir).join(cube_store::DESCRIPTOR);
    if !descriptor.is_file() {
        return Err(Error::Validation(format!(
            "no cube at {}; run `build-cube` first",
            descriptor.display()
        )));
    }
    let listener = std::net::TcpListener::bind(config.addr).map_err(|e| Error::Io {
        path: PathBuf::from(config.addr.to_string()),
        source: e,
    })?;
    listener
        .set_nonblocking(true)
        .map_err(Error::io(config.addr.to_string()))?;
    Ok(listener)
}

/// Serves on `listener` until `shutdown` resolves. The cube loads in the
/// background; requests needing it get 503 until then.
pub async fn run(
    listener: std::net::TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let addr = listener.local_addr().map_err(Error::io("listener"))?;
    let listener = tokio::net::TcpListener::from_std(listener).map_err(Error::io(addr.to_string()))?;
    let state = Arc::new(AppState {
        project: config.project,
        ui_dir: config.ui_dir,
        workers: config.workers,
        loaded: OnceLock::new(),
    });
    let loader = state.clone();
    tokio::task::spawn_blocking(move || {
        let started = Instant::now();
        let result = load(&loader.project, loader.workers).map(Arc::new).map_err(|e| {
            log::error!("loading failed: {e}");
            e.to_string()
        });
        if result.is_ok() {
            log::info!("cube loaded in {:.2}s", started.elapsed().as_secs_f64());
        }
        let _ = loader.loaded.set(result);
    });
    log::info!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(Error::io(addr.to_string()))
}

/// Blocks serving until Ctrl-C.
pub fn serve_forever(config: ServiceConfig) -> Result<()> {
    let listener = bind(&config)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Error::io("tokio runtime"))?;
    runtime.block_on(run(listener, config, async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    }))
}

/// A service running on a background thread, stopped on drop.
pub struct Server {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<Result<()>>>,
}

impl Server {
    pub fn start(config: ServiceConfig) -> Result<Server> {
        let listener = bind(&config)?;
        let addr = listener.local_addr().map_err(Error::io("listener"))?;
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(Error::io("tokio runtime"))?;
            runtime.block_on(run(listener, config, async {
                let _ = stopped.await;
            }))
        });
        Ok(Server {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn stop(mut self) -> Result<()> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take().map(|t| t.join()) {
            Some(Ok(result)) => result,
            Some(Err(_)) => Err(Error::Stage {
                stage: "service",
                message: "server thread panicked".into(),
            }),
            None => Ok(()),
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_needs_one_reference() {
        let none = ClassifyRequest::default();
        assert!(none.reference().is_err());
        let two = ClassifyRequest {
            uv: Some([0.5, 0.5]),
            texel: Some([1, 1]),
            ..Default::default()
        };
        assert!(two.reference().is_err());
        let one: ClassifyRequest = serde_json::from_str(r#"{"texel":[3,4],"theta_max":0}"#).unwrap();
        assert_eq!(one.reference().unwrap(), Reference::Texel(3, 4));
        assert!(serde_json::from_str::<ClassifyRequest>(r#"{"texel":[3,4],"bogus":1}"#).is_err());
    }

    #[test]
    fn tone_map_spans_valid_range() {
        let p = pfm::Pfm::gray(3, 1, vec![2.0, 4.0, 100.0]);
        let valid = uvsam_core::Mask::from_bits(3, 1, vec![true, true, false]).unwrap();
        let preview = tone_map(&p, &valid);
        assert_eq!((preview.min[0], preview.max[0]), (2.0, 4.0));
        let raw = crate::texture_io::decode_image(&preview.png).unwrap();
        assert_eq!(raw.data, vec![0.0, 1.0, 0.0]);
    }
}
