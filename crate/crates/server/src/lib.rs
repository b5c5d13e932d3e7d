//! Read-only HTTP/JSON service over NAP export directories.
//!
//! | route | response |
//! |---|---|
//! | `GET /api/models` | list of run manifests |
//! | `GET /api/models/{m}/layers` | manifest entries of one model |
//! | `GET /api/models/{m}/layers/{l}/naps?label=&prediction=&mispredicted=` | the layer's NAP set, filtered |
//! | `GET /api/naps/{nap_id}` | one NAP with members and per-feature stats |
//! | `GET /api/samples/{id}/trace?model=` | sample metadata and its NAP per layer |
//! | `GET /assets/{image_ref}?model=` | raw image bytes |
//!
//! Bodies use the same JSON shapes as the export files.

mod error;
mod routes;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use napkit_core::NapError;
use tokio::net::TcpListener;

pub use error::{ApiError, ErrorBody};
pub use store::Store;

/// Build the router. With `ui_dir`, unmatched non-API paths are served from
/// that directory.
pub fn app(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    routes::router(store, ui_dir)
}

pub async fn bind(addr: SocketAddr) -> Result<TcpListener, NapError> {
    TcpListener::bind(addr)
        .await
        .map_err(|e| NapError::io(format!("cannot listen on {addr}"), e))
}

/// Serve until Ctrl-C.
pub async fn serve(listener: TcpListener, app: Router) -> Result<(), NapError> {
    let addr = listener
        .local_addr()
        .map_err(|e| NapError::io("listener", e))?;
    tracing::info!(%addr, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| NapError::io(format!("serving on {addr}"), e))
}
