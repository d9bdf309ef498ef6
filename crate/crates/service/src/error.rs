use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use handover_core::orchestrator::MachineState;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{path}: {message}")]
    BadRequest { path: String, message: String },
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("{message}")]
    Conflict { state: MachineState, message: String },
    #[error("session is finished")]
    Gone,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn bad(path: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Gone => StatusCode::GONE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match &self {
            ApiError::BadRequest { path, message } => json!({"error": message, "path": path}),
            ApiError::Conflict { state, message } => json!({"error": message, "state": state}),
            other => json!({"error": other.to_string()}),
        };
        (self.status(), Json(body)).into_response()
    }
}
