//! HTTP session API over `tahp-core`.
//!
//! Each session owns one model. Writes on a session are serialized behind its
//! own lock; the session table is only locked for lookup, insertion and
//! removal. Results are cached per revision as the exact response bytes, so
//! repeated reads without a mutation return identical bodies.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | body: model document, returns `201 {id, revision}` |
//! | GET | `/sessions/{id}` | document, revision and completeness |
//! | PUT | `/sessions/{id}/judgments` | `{context, i, j, value}` |
//! | GET | `/sessions/{id}/results` | `409` with a missing-judgments manifest when incomplete |
//! | GET | `/sessions/{id}/sensitivity/{criterion}` | |
//! | POST | `/sessions/{id}/save` | snapshot to the configured directory |
//!
//! Errors always carry `{code, message, locus}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tahp_core::document::ModelDocument;
use tahp_core::sensitivity::sensitivity_report;
use tahp_core::synthesis::MissingJudgments;
use tahp_core::{
    serialize, synthesize, ConsistencyGate, DecisionModel, DocumentError, ModelError, PriorityVector, SensitivityError,
    SolveOptions, SynthesisError, SynthesisResult, TernaryValue,
};
use tower_http::services::ServeDir;

/// Version of every response body; moves together with the model document format.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Default)]
pub struct Config {
    /// Built UI bundle served under `/`.
    pub static_dir: Option<PathBuf>,
    /// Where `save` and shutdown snapshots are written.
    pub snapshot_dir: Option<PathBuf>,
    pub solve: SolveOptions,
    pub gate: ConsistencyGate,
}

#[derive(Debug)]
struct Cached {
    revision: u64,
    result: Arc<SynthesisResult>,
    body: Bytes,
}

#[derive(Debug)]
struct Session {
    model: DecisionModel,
    revision: u64,
    cached: Option<Cached>,
}

impl Session {
    fn cached(&self) -> Option<&Cached> {
        self.cached.as_ref().filter(|c| c.revision == self.revision)
    }
}

type SessionRef = Arc<RwLock<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, SessionRef>>>,
    config: Arc<Config>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState {
            sessions: Arc::default(),
            config: Arc::new(config),
        }
    }

    fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`")).at(id))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table poisoned").len()
    }

    /// Writes every session to the snapshot directory. Returns the paths written.
    pub fn snapshot_all(&self) -> std::io::Result<Vec<PathBuf>> {
        let Some(dir) = &self.config.snapshot_dir else {
            return Ok(Vec::new());
        };
        let sessions: Vec<(String, SessionRef)> = self
            .sessions
            .read()
            .expect("session table poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        sessions
            .into_iter()
            .map(|(id, s)| {
                let text = serialize(&s.read().expect("session poisoned").model);
                write_snapshot(dir, &id, &text)
            })
            .collect()
    }
}

fn write_snapshot(dir: &FsPath, id: &str, text: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{id}.json"));
    std::fs::write(&path, text)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub locus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing: Option<Vec<MissingJudgments>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                locus: None,
                missing: None,
            },
        }
    }

    fn at(mut self, locus: impl Into<String>) -> Self {
        self.body.locus = Some(locus.into());
        self
    }

    fn incomplete(missing: Vec<MissingJudgments>) -> Self {
        let count: usize = missing.iter().map(|m| m.pairs.len()).sum();
        let mut e = ApiError::new(
            StatusCode::CONFLICT,
            "incomplete_model",
            format!("{count} judgment(s) missing in {} context(s)", missing.len()),
        );
        e.body.locus = missing.first().map(|m| m.context.to_string());
        e.body.missing = Some(missing);
        e
    }

    fn bad_body(message: impl Into<String>, locus: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", message).at(locus)
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        let status = match e {
            DocumentError::Model { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string()).at(e.locus())
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let locus = e.locus().map(|l| l.to_string());
        let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string());
        err.body.locus = locus;
        err
    }
}

impl From<SynthesisError> for ApiError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Incomplete(missing) => ApiError::incomplete(missing),
            other => {
                let status = if other.is_computational() {
                    StatusCode::INTERNAL_SERVER_ERROR
                } else {
                    StatusCode::UNPROCESSABLE_ENTITY
                };
                let locus = other.locus().map(|l| l.to_string());
                let mut err = ApiError::new(status, other.code(), other.to_string());
                err.body.locus = locus;
                err
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, to_bytes(&self.body))
    }
}

fn to_bytes<T: Serialize>(value: &T) -> Bytes {
    Bytes::from(serde_json::to_vec(value).expect("response serializes"))
}

fn json_response(status: StatusCode, body: Bytes) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/judgments", put(submit_judgment))
        .route("/sessions/{id}/results", get(get_results))
        .route("/sessions/{id}/sensitivity/{criterion}", get(get_sensitivity))
        .route("/sessions/{id}/save", post(save_session));
    let app = match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.with_state(state)
}

/// Serves until Ctrl-C, then snapshots every session if a snapshot directory is set.
pub async fn serve(addr: SocketAddr, config: Config) -> std::io::Result<()> {
    let state = AppState::new(config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    let written = state.snapshot_all()?;
    tracing::info!(count = written.len(), "snapshots written");
    Ok(())
}

#[derive(Serialize)]
struct Created<'a> {
    schema_version: &'a str,
    id: String,
    revision: u64,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::bad_body(e.to_string(), "body"))?;
    let model = ModelDocument::from_text(text)?.to_model(false)?;
    let report = model.validate();
    if let Some(issue) = report.structural().next() {
        let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, &issue.code, issue.message.clone());
        err.body.locus = issue.locus.as_ref().map(|l| l.to_string());
        return Err(err);
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session {
        model,
        revision: 0,
        cached: None,
    };
    state
        .sessions
        .write()
        .expect("session table poisoned")
        .insert(id.clone(), Arc::new(RwLock::new(session)));
    tracing::debug!(%id, "session created");
    let body = to_bytes(&Created {
        schema_version: SCHEMA_VERSION,
        id,
        revision: 0,
    });
    Ok(json_response(StatusCode::CREATED, body))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let s = session.read().expect("session poisoned");
    let document = ModelDocument::from_model(&s.model);
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "id": id,
        "revision": s.revision,
        "complete": s.model.is_complete(),
        "missing_judgments": s.model.validate().missing_judgments(),
        "document": document,
    });
    Ok(json_response(StatusCode::OK, to_bytes(&body)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgmentRequest {
    context: String,
    i: String,
    j: String,
    value: String,
    /// When present, the write is rejected unless it matches the current revision.
    #[serde(default)]
    expected_revision: Option<u64>,
}

#[derive(Debug, Serialize)]
struct GateStatus {
    threshold: f64,
    passes: bool,
}

#[derive(Debug, Serialize)]
struct JudgmentResponse<'a> {
    schema_version: &'a str,
    revision: u64,
    context: String,
    context_complete: bool,
    missing_in_context: usize,
    model_complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    priority: Option<PriorityVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<GateStatus>,
}

async fn submit_judgment(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let req: JudgmentRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_body(e.to_string(), format!("line {}, column {}", e.line(), e.column())))?;
    let value = TernaryValue::from_code(&req.value).ok_or_else(|| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_value",
            format!("judgment value `{}` is not one of eq, gt, lt", req.value),
        )
        .at("value")
    })?;

    let mut s = session.write().expect("session poisoned");
    if let Some(expected) = req.expected_revision {
        if expected != s.revision {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "revision_conflict",
                format!("session is at revision {}, request expected {expected}", s.revision),
            )
            .at("expected_revision"));
        }
    }
    s.model.set_judgment(&req.context, &req.i, &req.j, value)?;
    s.revision += 1;

    let missing = s.model.missing_pairs(&req.context)?.len();
    let (priority, gate) = if missing == 0 {
        let m = s.model.matrix_for(&req.context)?;
        let opts = &state.config.solve;
        let pv = tahp_core::priority::prioritize(&m, opts.method, &opts.iteration, &opts.random_index)
            .map_err(|source| SynthesisError::Priority {
                context: req.context.as_str().into(),
                source,
            })?
            .with_context(req.context.as_str().into());
        let gate = GateStatus {
            threshold: state.config.gate.threshold,
            passes: state.config.gate.passes(&pv),
        };
        (Some(pv), Some(gate))
    } else {
        (None, None)
    };
    let body = to_bytes(&JudgmentResponse {
        schema_version: SCHEMA_VERSION,
        revision: s.revision,
        context: req.context,
        context_complete: missing == 0,
        missing_in_context: missing,
        model_complete: s.model.is_complete(),
        priority,
        gate,
    });
    Ok(json_response(StatusCode::OK, body))
}

/// Result for the session's current revision, computing and caching it if needed.
fn current_result(state: &AppState, session: &SessionRef) -> Result<(Arc<SynthesisResult>, Bytes, u64), ApiError> {
    {
        let s = session.read().expect("session poisoned");
        if let Some(c) = s.cached() {
            return Ok((c.result.clone(), c.body.clone(), c.revision));
        }
    }
    let mut s = session.write().expect("session poisoned");
    if let Some(c) = s.cached() {
        return Ok((c.result.clone(), c.body.clone(), c.revision));
    }
    let result = Arc::new(synthesize(&s.model, &state.config.solve)?);
    let body = to_bytes(&json!({
        "schema_version": SCHEMA_VERSION,
        "revision": s.revision,
        "result": &*result,
    }));
    let revision = s.revision;
    s.cached = Some(Cached {
        revision,
        result: result.clone(),
        body: body.clone(),
    });
    Ok((result, body, revision))
}

async fn get_results(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let (_, body, _) = current_result(&state, &session)?;
    Ok(json_response(StatusCode::OK, body))
}

async fn get_sensitivity(
    State(state): State<AppState>,
    Path((id, criterion)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    {
        let s = session.read().expect("session poisoned");
        if !s.model.criteria().iter().any(|c| c.as_str() == criterion) {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_criterion",
                format!("`{criterion}` is not a top-level criterion"),
            )
            .at(criterion));
        }
    }
    let (result, _, revision) = current_result(&state, &session)?;
    // The model is read at the same revision the cached result belongs to.
    let s = session.read().expect("session poisoned");
    if s.revision != revision {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "revision_conflict",
            "session changed while the report was being prepared; retry",
        ));
    }
    let report = sensitivity_report(&s.model, &result, &criterion).map_err(|e| match e {
        SensitivityError::Synthesis(s) => ApiError::from(s),
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()).at(criterion.clone()),
    })?;
    let body = to_bytes(&json!({
        "schema_version": SCHEMA_VERSION,
        "revision": revision,
        "report": report,
    }));
    Ok(json_response(StatusCode::OK, body))
}

async fn save_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let Some(dir) = state.config.snapshot_dir.clone() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "snapshots_disabled",
            "the service was started without a snapshot directory",
        ));
    };
    let (text, revision) = {
        let s = session.read().expect("session poisoned");
        (serialize(&s.model), s.revision)
    };
    let path = tokio::task::spawn_blocking(move || write_snapshot(&dir, &id, &text))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?;
    let body: Value = json!({
        "schema_version": SCHEMA_VERSION,
        "revision": revision,
        "path": path.display().to_string(),
    });
    Ok(json_response(StatusCode::OK, to_bytes(&body)))
}
