//! JSON-over-HTTP front end for the session orchestrator.
//!
//! | method | path                          | body / result                |
//! |--------|-------------------------------|------------------------------|
//! | POST   | `/v1/sessions`                | → `{session_id}`             |
//! | POST   | `/v1/sessions/{id}/audio`     | multipart `file` → record    |
//! | POST   | `/v1/sessions/{id}/run`       | → record                     |
//! | GET    | `/v1/sessions/{id}`           | → record                     |
//! | GET    | `/v1/sessions/{id}/fill-plan` | → fill plan                  |
//! | GET    | `/v1/sessions?state=…`        | → list of records            |
//! | GET    | `/healthz`                    | → `{status}`                 |
//!
//! Errors are `{error, message}` with `reasons` added for quality rejections.

use std::sync::Arc;

use anamnesa_core::audio::{Container, RawAudioFile};
use anamnesa_core::orchestrator::{Orchestrator, OrchestratorError, SessionId, SessionState};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

/// Large enough for an hour of 48 kHz mono PCM.
pub const MAX_UPLOAD_BYTES: usize = 384 * 1024 * 1024;

type AppState = Arc<Orchestrator>;

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    reasons: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.into(),
                message: message.into(),
                reasons: None,
            },
        }
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        use anamnesa_core::audio::AudioError;
        let status = match &e {
            OrchestratorError::NotFound(_) => StatusCode::NOT_FOUND,
            OrchestratorError::WrongState { .. } => StatusCode::CONFLICT,
            OrchestratorError::Audio(AudioError::UnsupportedEncoding(_)) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            OrchestratorError::Audio(_) => StatusCode::BAD_REQUEST,
            OrchestratorError::QualityRejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            OrchestratorError::Storage(_) | OrchestratorError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let OrchestratorError::QualityRejected(reasons) = e {
            err.body.reasons = Some(reasons);
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_id(raw: &str) -> ApiResult<SessionId> {
    raw.parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session '{raw}'")))
}

pub fn router(orchestrator: Arc<Orchestrator>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/sessions", post(create_session).get(list_sessions))
        .route("/v1/sessions/{id}", get(get_session))
        .route(
            "/v1/sessions/{id}/audio",
            post(attach_audio).layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)),
        )
        .route("/v1/sessions/{id}/run", post(run_pipeline))
        .route("/v1/sessions/{id}/fill-plan", get(fill_plan))
        .with_state(orchestrator)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, orchestrator: Arc<Orchestrator>) -> std::io::Result<()> {
    axum::serve(listener, router(orchestrator)).await
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: SessionId,
    state: SessionState,
}

async fn create_session(State(orch): State<AppState>) -> ApiResult<(StatusCode, Json<Created>)> {
    let record = orch.create_session().await?;
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id: record.session_id,
            state: record.state,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    state: Option<String>,
}

async fn list_sessions(State(orch): State<AppState>, Query(q): Query<ListQuery>) -> ApiResult<Response> {
    let state = match q.state.as_deref() {
        None | Some("") => None,
        Some(s) => Some(
            s.parse::<SessionState>()
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e))?,
        ),
    };
    Ok(Json(orch.list_sessions(state)).into_response())
}

async fn get_session(State(orch): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(orch.get_session(parse_id(&id)?)?).into_response())
}

fn is_wav_mime(mime: &str) -> bool {
    matches!(
        mime.split(';')
            .next()
            .unwrap_or("")
            .trim()
            .to_ascii_lowercase()
            .as_str(),
        "audio/wav" | "audio/wave" | "audio/x-wav" | "audio/vnd.wave"
    )
}

async fn attach_audio(
    State(orch): State<AppState>,
    Path(id): Path<String>,
    mut multipart: Multipart,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let bad = |msg: String| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", msg);
    loop {
        let field = multipart
            .next_field()
            .await
            .map_err(|e| bad(format!("unreadable multipart body: {e}")))?
            .ok_or_else(|| bad("multipart body has no 'file' part".into()))?;
        if field.name() != Some("file") {
            continue;
        }
        let name = field.file_name().unwrap_or("upload").to_string();
        let wav_declared = field.content_type().is_some_and(is_wav_mime) || name.to_ascii_lowercase().ends_with(".wav");
        let bytes = field
            .bytes()
            .await
            .map_err(|e| bad(format!("upload interrupted: {e}")))?;
        let container = if wav_declared {
            Container::Wav
        } else {
            Container::Unknown
        };
        let file = RawAudioFile::new(bytes.to_vec(), container, name).map_err(OrchestratorError::from)?;
        let record = orch.attach_audio(id, file).await?;
        return Ok(Json(record).into_response());
    }
}

async fn run_pipeline(State(orch): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(orch.run_pipeline(parse_id(&id)?).await?).into_response())
}

async fn fill_plan(State(orch): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let record = orch.get_session(parse_id(&id)?)?;
    match record.fill_plan {
        Some(plan) if record.state == SessionState::PlanReady => Ok(Json(plan).into_response()),
        _ => Err(ApiError::new(
            StatusCode::CONFLICT,
            "wrong_state",
            format!("session is {}, fill plan needs plan_ready", record.state),
        )),
    }
}
