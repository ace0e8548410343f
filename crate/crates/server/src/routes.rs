use std::collections::{HashSet, VecDeque};
use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{FromRequest, Multipart, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use serde::{Deserialize, Serialize};
use snapscript::script::{segment_source, EvalOutcome, Segment};
use snapscript::store::ImageUpload;
use snapscript::{ActiveAttachment, AttachSpec, Attachment, CaptureSource, ExecutionRecord, Frame, ObjectState, Program};
use tokio::sync::broadcast::error::RecvError;

use crate::error::ApiError;
use crate::hub::Sequenced;
use crate::{AppState, Mode};

/// `Json` with rejections reported as [`ApiError`].
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

type ApiResult<T> = Result<T, ApiError>;

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/states", post(create_state).get(list_states))
        .route("/api/states/{id}", get(get_state).delete(delete_state))
        .route("/api/blobs/{id}", get(get_blob))
        .route("/api/programs", post(create_program).get(list_programs))
        .route("/api/programs/{id}", get(get_program).put(update_program).delete(delete_program))
        .route("/api/programs/{id}/segments", post(segments))
        .route("/api/attachments", post(attach).get(list_attachments))
        .route("/api/attachments/{id}", axum::routing::delete(detach))
        .route("/api/frames", post(ingest_frame))
        .route("/api/eval", post(eval))
        .route("/api/logs/{id}", get(logs))
        .route("/events", get(events))
        .layer(axum::extract::DefaultBodyLimit::max(16 * 1024 * 1024))
        .with_state(app)
}

#[derive(Serialize)]
struct Status {
    mode: Mode,
    now: u64,
    last_seq: u64,
    frames_ingested: u64,
    trace_done: bool,
}

async fn status(State(app): State<AppState>) -> Json<Status> {
    let now = app.session().now();
    Json(Status {
        mode: app.mode(),
        now,
        last_seq: app.hub().last_seq(),
        frames_ingested: app.frames_ingested(),
        trace_done: app.trace_done(),
    })
}

async fn create_state(State(app): State<AppState>, mut form: Multipart) -> ApiResult<(StatusCode, Json<ObjectState>)> {
    let (mut category, mut instance, mut image, mut source) = (None, None, None, CaptureSource::Webcam);
    while let Some(field) = form.next_field().await? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "category" => category = Some(field.text().await?),
            "instance" => instance = Some(field.text().await?).filter(|s| !s.is_empty()),
            "source" => source = field.text().await?.parse().map_err(ApiError::invalid)?,
            "image" => {
                let media_type = field.content_type().unwrap_or("application/octet-stream").to_string();
                let bytes = field.bytes().await?.to_vec();
                if !bytes.is_empty() {
                    image = Some(ImageUpload { bytes, media_type });
                }
            }
            other => return Err(ApiError::invalid(format!("unexpected form field {other:?}"))),
        }
    }
    let category = category
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .ok_or_else(|| ApiError::invalid("category is required"))?;
    let state = app.mutate(|s| s.create_state(&category, instance.as_deref(), image, source))?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn list_states(State(app): State<AppState>) -> Json<Vec<ObjectState>> {
    Json(app.session().store().list_states())
}

async fn get_state(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ObjectState>> {
    let session = app.session();
    let state = session.store().get_state(&id).cloned();
    state.map(Json).ok_or_else(|| ApiError::not_found(format!("unknown object state {id}")))
}

async fn delete_state(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.mutate(|s| s.delete_state(&id).map(|ev| ((), ev)))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_blob(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = app.session();
    let store = session.store();
    let bytes = store.get_blob(&id)?.ok_or_else(|| ApiError::not_found(format!("unknown blob {id}")))?;
    let media_type = store
        .list_states()
        .into_iter()
        .filter_map(|s| s.image_ref)
        .find(|b| b.id == id)
        .map_or_else(|| "application/octet-stream".to_string(), |b| b.media_type);
    Ok(([(header::CONTENT_TYPE, media_type)], bytes).into_response())
}

#[derive(Deserialize)]
struct NewProgram {
    name: String,
    source: String,
}

#[derive(Deserialize)]
struct ProgramUpdate {
    #[serde(default)]
    name: Option<String>,
    source: String,
}

async fn create_program(
    State(app): State<AppState>,
    ApiJson(body): ApiJson<NewProgram>,
) -> ApiResult<(StatusCode, Json<Program>)> {
    let program = app.mutate(|s| s.create_program(&body.name, &body.source).map(|p| (p, vec![])))?;
    Ok((StatusCode::CREATED, Json(program)))
}

async fn list_programs(State(app): State<AppState>) -> Json<Vec<Program>> {
    Json(app.session().store().list_programs())
}

async fn get_program(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Program>> {
    let session = app.session();
    let program = session.store().get_program(&id).cloned();
    program.map(Json).ok_or_else(|| ApiError::not_found(format!("unknown program {id}")))
}

async fn update_program(
    State(app): State<AppState>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<ProgramUpdate>,
) -> ApiResult<Json<Program>> {
    let program = app.mutate(|s| s.update_program(&id, body.name.as_deref(), &body.source).map(|p| (p, vec![])))?;
    Ok(Json(program))
}

async fn delete_program(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.mutate(|s| s.delete_program(&id).map(|ev| ((), ev)))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn segments(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<Segment>>> {
    let source = {
        let session = app.session();
        let program = session.store().get_program(&id);
        program.map(|p| p.source.clone()).ok_or_else(|| ApiError::not_found(format!("unknown program {id}")))?
    };
    Ok(Json(segment_source(&source)?))
}

async fn attach(
    State(app): State<AppState>,
    ApiJson(spec): ApiJson<AttachSpec>,
) -> ApiResult<(StatusCode, Json<Attachment>)> {
    let attachment = app.mutate(|s| s.attach(&spec))?;
    Ok((StatusCode::CREATED, Json(attachment)))
}

async fn list_attachments(State(app): State<AppState>) -> Json<Vec<ActiveAttachment>> {
    Json(app.session().list_active())
}

async fn detach(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.mutate(|s| s.detach(&id).map(|ev| ((), ev)))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Serialize)]
struct FrameAccepted {
    frame_id: u64,
    t_ms: u64,
    events: usize,
}

async fn ingest_frame(
    State(app): State<AppState>,
    ApiJson(frame): ApiJson<Frame>,
) -> ApiResult<(StatusCode, Json<FrameAccepted>)> {
    if app.mode() != Mode::Live {
        return Err(ApiError::invalid("frames are supplied by the trace in replay mode"));
    }
    let events = app.ingest(&frame)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(FrameAccepted {
            frame_id: frame.frame_id,
            t_ms: frame.t_ms,
            events,
        }),
    ))
}

#[derive(Deserialize)]
struct EvalRequest {
    source: String,
    frame: Frame,
}

async fn eval(State(app): State<AppState>, ApiJson(req): ApiJson<EvalRequest>) -> ApiResult<Json<EvalOutcome>> {
    req.frame.validate().map_err(|m| ApiError::invalid(format!("invalid frame: {m}")))?;
    Ok(Json(app.session().eval_dry(&req.source, &req.frame)?))
}

async fn logs(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ExecutionRecord>>> {
    Ok(Json(app.session().read_logs(&id)?))
}

#[derive(Deserialize)]
struct EventsQuery {
    /// Resume after this sequence number (0 for the whole buffer).
    since: Option<u64>,
    /// Comma-separated event types to keep.
    types: Option<String>,
}

struct Cursor {
    app: AppState,
    backlog: VecDeque<Arc<Sequenced>>,
    rx: tokio::sync::broadcast::Receiver<Arc<Sequenced>>,
    last: u64,
    shutdown: tokio::sync::watch::Receiver<bool>,
}

impl Cursor {
    async fn next(mut self) -> Option<(Arc<Sequenced>, Self)> {
        loop {
            if let Some(e) = self.backlog.pop_front() {
                self.last = e.seq;
                return Some((e, self));
            }
            tokio::select! {
                r = self.rx.recv() => match r {
                    Ok(e) if e.seq > self.last => {
                        self.last = e.seq;
                        return Some((e, self));
                    }
                    Ok(_) => {}
                    Err(RecvError::Lagged(_)) => self.backlog = self.app.hub().since(self.last).into(),
                    Err(RecvError::Closed) => return None,
                },
                _ = self.shutdown.changed() => return None,
            }
        }
    }
}

async fn events(
    State(app): State<AppState>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok());
    let (backlog, rx, last) = app.hub().subscribe(q.since.or(resume));
    let types: Option<HashSet<String>> = q
        .types
        .map(|t| t.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect());
    let cursor = Cursor {
        shutdown: app.shutdown_signal(),
        app,
        backlog: backlog.into(),
        rx,
        last,
    };
    let stream = futures::stream::unfold(cursor, Cursor::next)
        .filter(move |e| std::future::ready(types.as_ref().is_none_or(|t| t.contains(e.kind))))
        .map(|e| Ok(Event::default().id(e.seq.to_string()).data(e.json.as_str())));
    Sse::new(stream).keep_alive(KeepAlive::default())
}
