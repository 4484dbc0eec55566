//! Read-only HTTP API over a computed face graph.
//!
//! Routes, all `GET`:
//!
//! | path | body |
//! |---|---|
//! | `/api/graph` | `graph.json`, verbatim |
//! | `/api/subjects/{id}` | [`api::SubjectDetail`] |
//! | `/api/subjects/{id}/images?sort_by=&order=&limit=` | list of [`api::SubjectImage`] |
//! | `/api/edges/{i}/{j}` | [`api::EdgeDetail`] |
//! | `/api/edges/{i}/{j}/images` | list of [`api::EdgeImage`] |
//! | `/api/images/{id}` | image bytes |
//!
//! Anything else is looked up in the optional static UI directory.

pub mod api;
mod state;

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::services::{ServeDir, ServeFile};

pub use state::{LoadError, ServiceState, StatePaths};

pub const DEFAULT_PORT: u16 = 8080;

pub fn router(state: ServiceState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/graph", get(api::graph))
        .route("/subjects/{id}", get(api::subject))
        .route("/subjects/{id}/images", get(api::subject_images))
        .route("/edges/{i}/{j}", get(api::edge))
        .route("/edges/{i}/{j}/images", get(api::edge_images))
        .route("/images/{id}", get(api::image))
        .layer(CorsLayer::permissive())
        .with_state(Arc::new(state));
    let app = Router::new().nest("/api", api);
    match ui_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => app,
    }
}

/// Serve `app` on an already bound listener until `shutdown` resolves.
pub async fn serve<F>(listener: TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    if let Ok(addr) = listener.local_addr() {
        log::info!("listening on http://{addr}");
    }
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
