//! HTTP/JSON service.
//!
//! Reads run concurrently under a shared lock; inserts take the write lock,
//! so every request sees the store either before or after a given insert.
//! Matching work runs on the blocking pool.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use shapedl::index::{Classification, Hierarchy, NodeInfo};
use shapedl::interchange::{
    description_from_doc, description_to_doc, image_from_doc, image_to_doc, shape_from_doc, shape_to_doc,
    DescriptionDoc, ImageDoc, ShapeDoc,
};
use shapedl::model::description_from_image;
use shapedl::Error;

use crate::output::{query_response, QueryResponse};
use crate::store;

/// When the store is written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FlushPolicy {
    /// After every mutating request.
    Always,
    /// Only at graceful shutdown.
    Shutdown,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub config_path: Option<PathBuf>,
    pub flush: FlushPolicy,
}

pub struct AppState {
    index: RwLock<Hierarchy>,
    data_dir: Option<PathBuf>,
    flush: FlushPolicy,
}

impl AppState {
    /// In-memory state; `data_dir` enables persistence.
    pub fn new(index: Hierarchy, data_dir: Option<PathBuf>, flush: FlushPolicy) -> Arc<Self> {
        Arc::new(AppState {
            index: RwLock::new(index),
            data_dir,
            flush,
        })
    }

    pub fn persist(&self) -> shapedl::Result<()> {
        match &self.data_dir {
            Some(dir) => store::save(&self.index.read().expect("lock"), dir),
            None => Ok(()),
        }
    }

    fn read<T>(&self, f: impl FnOnce(&Hierarchy) -> Result<T, ApiError>) -> Result<T, ApiError> {
        f(&self.index.read().expect("lock"))
    }

    fn write<T>(&self, f: impl FnOnce(&mut Hierarchy) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut guard = self.index.write().expect("lock");
        let out = f(&mut guard)?;
        if self.flush == FlushPolicy::Always {
            if let Some(dir) = &self.data_dir {
                store::save(&guard, dir)?;
            }
        }
        Ok(out)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "bad_request",
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::UnknownShape(_) | Error::UnknownDescription(_) | Error::UnknownImage(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            Error::DuplicateId(_) => (StatusCode::CONFLICT, "duplicate_id"),
            Error::Unsatisfiable { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "unsatisfiable"),
            Error::OverlappingRegions { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "overlapping_regions"),
            Error::Io(_) | Error::Integrity(_) | Error::Json(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            _ => (StatusCode::BAD_REQUEST, "invalid_input"),
        };
        ApiError {
            status,
            kind,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        kind: "internal",
        message: e.to_string(),
    })?
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub images: usize,
    pub descriptions: usize,
}

async fn health(State(s): State<Arc<AppState>>) -> Result<Json<Health>, ApiError> {
    blocking(move || {
        s.read(|h| {
            Ok(Json(Health {
                status: "ok".into(),
                images: h.image_count(),
                descriptions: h.description_count(),
            }))
        })
    })
    .await
}

async fn list_shapes(State(s): State<Arc<AppState>>) -> Result<Json<Vec<ShapeDoc>>, ApiError> {
    blocking(move || s.read(|h| Ok(Json(h.shapes().values().map(|sh| shape_to_doc(sh)).collect())))).await
}

async fn add_shape(State(s): State<Arc<AppState>>, Json(doc): Json<ShapeDoc>) -> Result<Response, ApiError> {
    blocking(move || {
        let shape = shape_from_doc(&doc)?;
        let id = s.write(|h| Ok(h.add_shape(shape)?))?;
        Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DescriptionCreated {
    /// Id of the hierarchy node now holding the description; differs from
    /// the description's own id when it is equivalent to an existing node.
    pub node: String,
    pub description: DescriptionDoc,
}

async fn add_description(
    State(s): State<Arc<AppState>>,
    Json(doc): Json<DescriptionDoc>,
) -> Result<Response, ApiError> {
    blocking(move || {
        let created = s.write(|h| {
            let d = description_from_doc(&doc, h.shapes())?;
            let echo = description_to_doc(&d);
            let node = h.insert_description(d)?;
            Ok(DescriptionCreated {
                node,
                description: echo,
            })
        })?;
        Ok((StatusCode::CREATED, Json(created)).into_response())
    })
    .await
}

async fn get_description(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<DescriptionDoc>, ApiError> {
    blocking(move || {
        s.read(|h| {
            let d = h.description(&id).ok_or_else(|| Error::UnknownDescription(id.clone()))?;
            let mut doc = description_to_doc(d);
            doc.id = id.clone();
            Ok(Json(doc))
        })
    })
    .await
}

async fn classify(
    State(s): State<Arc<AppState>>,
    Json(doc): Json<DescriptionDoc>,
) -> Result<Json<Classification>, ApiError> {
    blocking(move || {
        s.read(|h| {
            let d = description_from_doc(&doc, h.shapes())?;
            Ok(Json(h.classify_description(&d)?))
        })
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HierarchyDoc {
    pub roots: Vec<String>,
    pub nodes: Vec<NodeInfo>,
}

async fn hierarchy(State(s): State<Arc<AppState>>) -> Result<Json<HierarchyDoc>, ApiError> {
    blocking(move || {
        s.read(|h| {
            Ok(Json(HierarchyDoc {
                roots: h.roots(),
                nodes: h.nodes(),
            }))
        })
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImageCreated {
    pub id: String,
    pub regions: usize,
    /// Most specific hierarchy nodes the image satisfies.
    pub linked: Vec<String>,
}

async fn add_image(State(s): State<Arc<AppState>>, Json(doc): Json<ImageDoc>) -> Result<Response, ApiError> {
    blocking(move || {
        let img = image_from_doc(&doc)?;
        let regions = img.len();
        let id = img.id.clone();
        let linked = s.write(|h| Ok(h.insert_image(img)?))?;
        Ok((StatusCode::CREATED, Json(ImageCreated { id, regions, linked })).into_response())
    })
    .await
}

#[derive(Debug, Deserialize)]
struct RasterParams {
    id: Option<String>,
}

async fn add_raster(
    State(s): State<Arc<AppState>>,
    Query(p): Query<RasterParams>,
    body: Bytes,
) -> Result<Response, ApiError> {
    blocking(move || {
        let created = s.write(|h| {
            let id = match p.id {
                Some(id) => id,
                None => store::fresh_image_id(h, "raster"),
            };
            let img = store::segment_raster(&body, &id)?;
            let regions = img.len();
            let linked = h.insert_image(img)?;
            Ok(ImageCreated { id, regions, linked })
        })?;
        Ok((StatusCode::CREATED, Json(created)).into_response())
    })
    .await
}

async fn get_image(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<ImageDoc>, ApiError> {
    blocking(move || {
        s.read(|h| {
            let img = h.image(&id).ok_or_else(|| Error::UnknownImage(id.clone()))?;
            Ok(Json(image_to_doc(img)))
        })
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryRequest {
    pub description: DescriptionDoc,
    #[serde(default)]
    pub persist: bool,
}

async fn query(State(s): State<Arc<AppState>>, Json(req): Json<QueryRequest>) -> Result<Json<QueryResponse>, ApiError> {
    blocking(move || {
        let results = if req.persist {
            s.write(|h| {
                let d = description_from_doc(&req.description, h.shapes())?;
                Ok(h.answer_query(&d, true)?)
            })?
        } else {
            s.read(|h| {
                let d = description_from_doc(&req.description, h.shapes())?;
                Ok(h.answer_query_readonly(&d)?)
            })?
        };
        Ok(Json(query_response(&results)))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExampleRequest {
    #[serde(default)]
    pub image_id: Option<String>,
    /// Base64-encoded PNG or PPM bytes.
    #[serde(default)]
    pub raster: Option<String>,
}

async fn query_by_example(
    State(s): State<Arc<AppState>>,
    Json(req): Json<ExampleRequest>,
) -> Result<Json<QueryResponse>, ApiError> {
    blocking(move || {
        s.read(|h| {
            let img = match (&req.image_id, &req.raster) {
                (Some(id), None) => h.image(id).cloned().ok_or_else(|| Error::UnknownImage(id.clone()))?,
                (None, Some(b64)) => {
                    let bytes = base64::engine::general_purpose::STANDARD
                        .decode(b64)
                        .map_err(|e| ApiError::bad_request(format!("raster is not valid base64: {e}")))?;
                    store::segment_raster(&bytes, "example")?
                }
                _ => return Err(ApiError::bad_request("exactly one of `image_id` and `raster` is required")),
            };
            let q = description_from_image(&img, "example")?;
            Ok(Json(query_response(&h.answer_query_readonly(&q)?)))
        })
    })
    .await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/shapes", get(list_shapes).post(add_shape))
        .route("/descriptions", post(add_description))
        .route("/descriptions/{id}", get(get_description))
        .route("/classify", post(classify))
        .route("/hierarchy", get(hierarchy))
        .route("/images", post(add_image))
        .route("/images/raster", post(add_raster))
        .route("/images/{id}", get(get_image))
        .route("/query", post(query))
        .route("/query/by-example", post(query_by_example))
        .with_state(state)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

/// Runs until interrupted, then writes the store.
pub async fn serve(cfg: ServiceConfig) -> anyhow::Result<()> {
    let index = store::open(&cfg.data_dir, cfg.config_path.as_deref())?;
    std::fs::create_dir_all(&cfg.data_dir)?;
    let state = AppState::new(index, Some(cfg.data_dir.clone()), cfg.flush);
    state.persist()?;
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    // printed for scripts that bind port 0
    println!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    state.persist()?;
    log::info!("store written to {}", store::store_path(&cfg.data_dir).display());
    Ok(())
}
