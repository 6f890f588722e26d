use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("histogram {got} is not the current item (expected {expected:?})")]
    OutOfOrder { expected: Option<u32>, got: u32 },

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Domain(#[from] rankbins::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::OutOfOrder { .. } => StatusCode::CONFLICT,
            ServiceError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Domain(rankbins::Error::Io(_)) | ServiceError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            ServiceError::Domain(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::OutOfOrder { .. } => "out_of_order",
            ServiceError::Validation(_) => "validation",
            ServiceError::Domain(rankbins::Error::Io(_)) | ServiceError::Internal(_) => "internal",
            ServiceError::Domain(e) => e.code(),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        if let ServiceError::OutOfOrder { expected, .. } = &self {
            body["expected_histogram_id"] = json!(expected);
        }
        (status, Json(body)).into_response()
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
