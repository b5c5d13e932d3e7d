use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use napkit_core::NapError;
use serde::{Deserialize, Serialize};

/// Body of every non-2xx API response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// Error class, e.g. `LookupError`.
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError(pub NapError);

impl From<NapError> for ApiError {
    fn from(e: NapError) -> Self {
        ApiError(e)
    }
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError(NapError::Param(message.into()))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError(NapError::Lookup(message.into()))
    }

    fn status(&self) -> StatusCode {
        match self.0 {
            NapError::Lookup(_) => StatusCode::NOT_FOUND,
            NapError::Param(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = ErrorBody {
            error: self.0.class().to_string(),
            message: self.0.detail(),
        };
        (status, Json(body)).into_response()
    }
}
