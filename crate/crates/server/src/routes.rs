use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use napkit_core::export::{safe_relative_path, ManifestLayer, RunManifest, ASSETS_DIR};
use napkit_core::{trace_sample, Nap, NapFilter, NapSet, SampleTrace};
use serde::Deserialize;
use tower_http::services::ServeDir;

use crate::error::ApiError;
use crate::store::Store;

type Shared = State<Arc<Store>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/models", get(models))
        .route("/api/models/{model}/layers", get(layers))
        .route("/api/models/{model}/layers/{layer}/naps", get(naps))
        .route("/api/naps/{*nap_id}", get(nap))
        .route("/api/samples/{id}/trace", get(trace))
        .route("/assets/{*path}", get(asset))
        .with_state(store);
    match ui_dir {
        Some(dir) => api
            .nest_service("/api", Router::new().fallback(not_found))
            .fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

async fn not_found(uri: Uri) -> ApiError {
    ApiError::not_found(format!("no route for {}", uri.path()))
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> Result<T, ApiError> {
    p.map(|Path(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn models(State(store): Shared) -> Json<Vec<RunManifest>> {
    Json(store.runs().map(|r| r.manifest.clone()).collect())
}

async fn layers(
    State(store): Shared,
    model: Result<Path<String>, PathRejection>,
) -> ApiResult<Vec<ManifestLayer>> {
    let model = path(model)?;
    Ok(Json(store.run(&model)?.manifest.layers.clone()))
}

async fn naps(
    State(store): Shared,
    p: Result<Path<(String, String)>, PathRejection>,
    q: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<NapSet> {
    let (model, layer) = path(p)?;
    let pairs = query(q)?;
    let filter = NapFilter::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    let run = store.run(&model)?;
    let set = run
        .napset(&layer)
        .ok_or_else(|| ApiError::not_found(format!("model '{model}' has no layer '{layer}'")))?;
    Ok(Json(set.filter(&filter, &run.metadata)))
}

async fn nap(State(store): Shared, id: Result<Path<String>, PathRejection>) -> ApiResult<Nap> {
    let id = path(id)?;
    Ok(Json(store.nap(&id)?.clone()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelQuery {
    model: Option<String>,
}

/// The named model, or the only one when the store holds a single model.
fn pick_model<'a>(store: &'a Store, model: Option<&str>) -> Result<&'a str, ApiError> {
    match model {
        Some(m) => Ok(store.run(m)?.manifest.model_id.as_str()),
        None if store.len() == 1 => Ok(store.runs().next().unwrap().manifest.model_id.as_str()),
        None => Err(ApiError::bad_request(
            "several models are served; pass ?model=",
        )),
    }
}

async fn trace(
    State(store): Shared,
    id: Result<Path<usize>, PathRejection>,
    q: Result<Query<ModelQuery>, QueryRejection>,
) -> ApiResult<SampleTrace> {
    let sample_id = path(id)?;
    let q = query(q)?;
    let model_id = pick_model(&store, q.model.as_deref())?;
    let run = store.run(model_id)?;
    Ok(Json(SampleTrace {
        model_id: model_id.to_string(),
        sample_id,
        steps: trace_sample(sample_id, &run.napsets)?,
        metadata: run.metadata.get(sample_id).cloned(),
    }))
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        Some("bmp") => "image/bmp",
        _ => "application/octet-stream",
    }
}

async fn asset(
    State(store): Shared,
    rel: Result<Path<String>, PathRejection>,
    q: Result<Query<ModelQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let rel = path(rel)?;
    let q = query(q)?;
    let rel = safe_relative_path(&rel)
        .ok_or_else(|| ApiError::bad_request(format!("bad asset path '{rel}'")))?;
    let candidates: Vec<_> = match q.model.as_deref() {
        Some(m) => vec![store.run(m)?],
        None => store.runs().collect(),
    };
    for run in candidates {
        let file = run.root.join(ASSETS_DIR).join(&rel);
        match tokio::fs::read(&file).await {
            Ok(bytes) => {
                return Ok((
                    StatusCode::OK,
                    [(header::CONTENT_TYPE, content_type(&rel))],
                    bytes,
                )
                    .into_response())
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(e) => return Err(napkit_core::NapError::io(file.display().to_string(), e).into()),
        }
    }
    Err(ApiError::not_found(format!("no asset '{}'", rel.display())))
}
