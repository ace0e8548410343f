use axum::extract::multipart::MultipartError;
use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use snapscript::script::{LexError, SyntaxError};
use snapscript::store::StoreError;
use snapscript::{EngineError, SessionError};

/// JSON error body. The status follows the code: `invalid_request` 400,
/// `not_found` 404, `syntax_error` 422, `storage_error` 500.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            error,
            message: message.into(),
            line: None,
            col: None,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn storage(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", message)
    }

    pub fn syntax(message: impl Into<String>, line: usize, col: usize) -> Self {
        Self {
            line: Some(line),
            col: Some(col),
            ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "syntax_error", message)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<SyntaxError> for ApiError {
    fn from(e: SyntaxError) -> Self {
        let (line, col) = e.position();
        ApiError::syntax(e.message(), line, col)
    }
}

impl From<LexError> for ApiError {
    fn from(e: LexError) -> Self {
        ApiError::syntax(e.message, e.line, e.col)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownState(_) | StoreError::UnknownProgram(_) | StoreError::UnknownAttachment(_) => {
                ApiError::not_found(e.to_string())
            }
            StoreError::Parse(s) => s.into(),
            StoreError::Invalid(m) => ApiError::invalid(m),
            StoreError::Io(_) | StoreError::Corrupt { .. } => ApiError::storage(e.to_string()),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownProgram(_) | EngineError::UnknownState(_) | EngineError::UnknownAttachment(_) => {
                ApiError::not_found(e.to_string())
            }
            EngineError::InvalidParams(_) | EngineError::DuplicateAttachment(_) => ApiError::invalid(e.to_string()),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Store(e) => e.into(),
            SessionError::Engine(e) => e.into(),
            SessionError::Syntax(e) => e.into(),
            SessionError::Frame(m) => ApiError::invalid(format!("invalid frame: {m}")),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::invalid(e.body_text())
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        ApiError::invalid(e.body_text())
    }
}
