//! HTTP front for the coarse calls.
//!
//! `POST /coarse_get` with `{"call": "movie_info", "key": "rain man"}` answers
//! `{"found": bool, "payload": {...}}`. Malformed bodies get a 400 with
//! `{"error": {"code": "bad_request", "message": ...}}`.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::oneshot;

use super::api::{coarse_get, CoarseCall, CoarseKey};
use super::KgDatabase;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start runtime: {0}")]
    Runtime(#[source] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoarseRequest {
    pub call: String,
    pub key: CoarseKey,
}

/// Handle to a running service. Dropping it stops the server.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/coarse_get", self.addr)
    }

    /// Block until the server exits (it only exits after [`Self::shutdown`]).
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn serve_kg(db: Arc<KgDatabase>, listen: &str) -> Result<ServiceHandle, ServiceError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(ServiceError::Runtime)?;
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind(listen))
        .map_err(|source| ServiceError::Bind {
            addr: listen.to_string(),
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| ServiceError::Bind {
        addr: listen.to_string(),
        source,
    })?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = Router::new()
        .route("/coarse_get", post(handle))
        .route("/", post(handle))
        .with_state(db);
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let server = axum::serve(listener, app).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(err) = server.await {
                log::error!("kg service stopped: {err}");
            }
        });
    });
    log::info!("kg service listening on {addr}");
    Ok(ServiceHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

fn bad_request(message: impl Into<String>) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(json!({"error": {"code": "bad_request", "message": message.into()}})),
    )
        .into_response()
}

async fn handle(State(db): State<Arc<KgDatabase>>, body: Bytes) -> Response {
    let req: CoarseRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(err) => return bad_request(err.to_string()),
    };
    let call: CoarseCall = match req.call.parse() {
        Ok(c) => c,
        Err(msg) => return bad_request(msg),
    };
    Json(coarse_get(&db, call, &req.key)).into_response()
}
