//! The slaforge gateway: an axum service exposing event ingestion, metric
//! readout and the negotiate/simulate/replay operations over HTTP/JSON.
//!
//! Endpoints:
//!
//! | method | path                       | purpose                              |
//! |--------|----------------------------|--------------------------------------|
//! | GET    | `/health`                  | liveness                             |
//! | POST   | `/events/{event_name}`     | ingest one event (202/200/422/409)   |
//! | GET    | `/metrics/{key}`           | latest value as `"num/den"`          |
//! | GET    | `/metrics/{key}/history`   | time-stamped history                 |
//! | POST   | `/negotiate`               | feasibility report                   |
//! | POST   | `/simulate`                | synthetic-workload run artifacts     |
//! | POST   | `/replay`                  | log-replay run artifacts             |
//!
//! Ingestion routes need a metric definition loaded at startup; the compute
//! routes are stateless. Evaluator steps are serialized through a single
//! writer task; metric reads are lock-free snapshots (see [`ingest`]).
//!
//! Everything binds to loopback by default and is unauthenticated.

pub mod ingest;
pub mod ops;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::oneshot;

use slaforge_client::types::{
    ErrorBody, EventBody, HistoryPoint, NegotiateRequest, ReplayRequest, SimulateRequest,
};
use slaforge_core::dsl::MetricDefinition;
use slaforge_core::trace::raw_event_from_parts;

use ingest::{IngestHandle, IngestMsg, IngestReply};

#[derive(Clone)]
pub struct AppState {
    ingest: Option<IngestHandle>,
}

fn err(status: StatusCode, message: impl Into<String>) -> Response {
    (
        status,
        Json(ErrorBody {
            error: message.into(),
        }),
    )
        .into_response()
}

/// Builds the service router. `definition` enables the ingestion routes.
pub fn build_router(definition: Option<Arc<MetricDefinition>>) -> Router {
    let state = AppState {
        ingest: definition.map(ingest::spawn),
    };
    Router::new()
        .route("/health", get(health))
        .route("/events/{event_name}", post(post_event))
        .route("/metrics/{key}", get(get_metric))
        .route("/metrics/{key}/history", get(get_metric_history))
        .route("/negotiate", post(post_negotiate))
        .route("/simulate", post(post_simulate))
        .route("/replay", post(post_replay))
        .with_state(state)
}

/// Binds `addr` and serves until the returned sender is dropped or fired.
/// Returns the actual bound address (useful with port 0).
pub async fn serve(
    addr: &str,
    definition: Option<Arc<MetricDefinition>>,
) -> std::io::Result<(SocketAddr, oneshot::Sender<()>, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let router = build_router(definition);
    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
    let handle = tokio::spawn(async move {
        let server = axum::serve(listener, router).with_graceful_shutdown(async {
            let _ = shutdown_rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!("server error: {e}");
        }
    });
    Ok((local, shutdown_tx, handle))
}

async fn health() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn post_event(
    State(state): State<AppState>,
    Path(event_name): Path<String>,
    payload: Result<Json<EventBody>, JsonRejection>,
) -> Response {
    let Some(handle) = &state.ingest else {
        return err(StatusCode::NOT_FOUND, "no metric definition loaded");
    };
    // 422 is reserved for grammar-level rejections; any body problem is 400.
    let Json(body) = match payload {
        Ok(json) => json,
        Err(rejection) => {
            return err(StatusCode::BAD_REQUEST, format!("malformed body: {rejection}"))
        }
    };
    let event = match raw_event_from_parts(&event_name, body.time_ms, &body.args) {
        Ok(ev) => ev,
        Err(message) => return err(StatusCode::BAD_REQUEST, message),
    };
    let (reply_tx, reply_rx) = oneshot::channel();
    let msg = IngestMsg {
        event,
        reply: reply_tx,
    };
    if handle.tx.send(msg).await.is_err() {
        return err(StatusCode::SERVICE_UNAVAILABLE, "ingestion task stopped");
    }
    match reply_rx.await {
        Ok(IngestReply::Accepted) => (
            StatusCode::ACCEPTED,
            Json(serde_json::json!({ "status": "accepted" })),
        )
            .into_response(),
        Ok(IngestReply::Ignored) => (
            StatusCode::OK,
            Json(serde_json::json!({ "status": "ignored" })),
        )
            .into_response(),
        Ok(IngestReply::Rejected(reason)) => err(StatusCode::UNPROCESSABLE_ENTITY, reason),
        Ok(IngestReply::OutOfOrder { last_ms }) => err(
            StatusCode::CONFLICT,
            format!("event time precedes last accepted event at {last_ms} ms"),
        ),
        Ok(IngestReply::BadArgs(message)) => err(StatusCode::BAD_REQUEST, message),
        Err(_) => err(StatusCode::SERVICE_UNAVAILABLE, "ingestion task dropped the request"),
    }
}

async fn get_metric(State(state): State<AppState>, Path(key): Path<String>) -> Response {
    let Some(handle) = &state.ingest else {
        return err(StatusCode::NOT_FOUND, "no metric definition loaded");
    };
    match handle.metric(&key) {
        Some(value) => Json(value.to_string()).into_response(),
        None => err(StatusCode::NOT_FOUND, format!("unknown metric key `{key}`")),
    }
}

async fn get_metric_history(State(state): State<AppState>, Path(key): Path<String>) -> Response {
    let Some(handle) = &state.ingest else {
        return err(StatusCode::NOT_FOUND, "no metric definition loaded");
    };
    if !handle.known_key(&key) {
        return err(StatusCode::NOT_FOUND, format!("unknown metric key `{key}`"));
    }
    let points: Vec<HistoryPoint> = handle
        .history
        .read()
        .expect("history lock")
        .for_key(&key)
        .map(|e| HistoryPoint {
            time_ms: e.time_ms,
            value: e.value.to_string(),
        })
        .collect();
    Json(points).into_response()
}

async fn post_negotiate(Json(request): Json<NegotiateRequest>) -> Response {
    run_blocking(move || ops::negotiate(&request)).await
}

async fn post_simulate(Json(request): Json<SimulateRequest>) -> Response {
    run_blocking(move || ops::simulate(&request)).await
}

async fn post_replay(Json(request): Json<ReplayRequest>) -> Response {
    run_blocking(move || ops::replay(&request)).await
}

async fn run_blocking<T, F>(f: F) -> Response
where
    T: serde::Serialize + Send + 'static,
    F: FnOnce() -> Result<T, ops::OpError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(value)) => Json(value).into_response(),
        Ok(Err(e)) => err(StatusCode::BAD_REQUEST, e.to_string()),
        Err(join_err) => err(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("operation panicked: {join_err}"),
        ),
    }
}
