//! HTTP endpoints for the rating UI.
//!
//! - `GET  /assignments/{evaluator}`: pending assignments
//! - `GET  /package/{evaluator}/{doc_id}`: one-time caption package
//! - `POST /logs`: completed click log

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crmeta::ratings::{cr, cri};
use crmeta::session::{Assignment, SessionPackage};
use crmeta::{Error, RatingLog, SessionService};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Stored {
    pub evaluator: String,
    pub doc_id: String,
    pub clicks: usize,
    pub cr: Option<f64>,
    pub cri: Option<f64>,
}

pub struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::OnePassViolation { .. } => StatusCode::CONFLICT,
            Error::NotAssigned { .. } => StatusCode::NOT_FOUND,
            Error::Invalid(_) | Error::Parse { .. } | Error::UnratedSession => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, Error> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn assignments(
    State(svc): State<Arc<SessionService>>,
    Path(evaluator): Path<String>,
) -> Json<Vec<Assignment>> {
    Json(svc.pending(&evaluator))
}

async fn package(
    State(svc): State<Arc<SessionService>>,
    Path((evaluator, doc_id)): Path<(String, String)>,
) -> Result<Json<SessionPackage>, ApiError> {
    blocking(move || svc.fetch(&evaluator, &doc_id)).await.map(Json)
}

async fn logs(
    State(svc): State<Arc<SessionService>>,
    body: Result<Json<RatingLog>, JsonRejection>,
) -> Result<(StatusCode, Json<Stored>), ApiError> {
    let Json(log) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    let session = blocking(move || svc.submit(log)).await?;
    Ok((
        StatusCode::CREATED,
        Json(Stored {
            evaluator: session.evaluator_id.clone(),
            doc_id: session.doc_id.clone(),
            clicks: session.clicks.len(),
            cr: cr(&session).ok(),
            cri: cri(&session).ok(),
        }),
    ))
}

pub fn router(svc: Arc<SessionService>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/assignments/{evaluator}", get(assignments))
        .route("/package/{evaluator}/{doc_id}", get(package))
        .route("/logs", post(logs))
        .with_state(svc)
}

pub async fn serve(svc: Arc<SessionService>, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    eprintln!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
