//! Session wire API.
//!
//! Mutations run one at a time on a blocking thread that owns the session
//! lock; reads are answered from the snapshot taken after the last mutation.

use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use fraglearn_chem::parse_pattern;
use fraglearn_core::session::{FeedbackResponse, RankedMolecule, SessionSummary};
use fraglearn_core::tuning::HistoryEntry;
use fraglearn_core::{CoreError, EpochMetrics, FeedbackRecord, ObjectiveSpec, Round, RoundStatus, Session};

/// Headers carrying the client request id of a mutating call.
pub const REQUEST_ID_HEADERS: [&str; 2] = ["x-request-id", "idempotency-key"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundBrief {
    pub number: u32,
    pub status: RoundStatus,
    pub generated: usize,
    pub distinct: usize,
    pub feedback_ids: Vec<String>,
    pub spec_version_before: u32,
    pub spec_version_after: Option<u32>,
    pub open_questions: Vec<String>,
    pub pending_rules: usize,
}

impl From<&Round> for RoundBrief {
    fn from(r: &Round) -> Self {
        RoundBrief {
            number: r.number,
            status: r.status,
            generated: r.generated,
            distinct: r.distinct,
            feedback_ids: r.feedback_ids.clone(),
            spec_version_before: r.spec_version_before,
            spec_version_after: r.spec_version_after,
            open_questions: r.clarifications.iter().filter(|c| !c.resolved).flat_map(|c| c.questions.clone()).collect(),
            pending_rules: r.pending.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub summary: SessionSummary,
    pub round_list: Vec<RoundBrief>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoleculesView {
    pub round: u32,
    pub status: RoundStatus,
    pub objective_version: u32,
    pub molecules: Vec<RankedMolecule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveView {
    pub spec: ObjectiveSpec,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternCheck {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Snapshot {
    session: SessionView,
    rounds: Vec<Round>,
    objective: ObjectiveView,
    metrics: Vec<EpochMetrics>,
}

impl Snapshot {
    fn of(s: &Session) -> Self {
        Snapshot {
            session: SessionView { summary: s.summary(), round_list: s.rounds.iter().map(RoundBrief::from).collect() },
            rounds: s.rounds.clone(),
            objective: ObjectiveView { spec: s.spec().clone(), history: s.kb.history.clone() },
            metrics: s.state.history.clone(),
        }
    }

    fn round(&self, n: u32) -> Result<&Round, ApiError> {
        self.rounds.iter().find(|r| r.number == n).ok_or_else(|| CoreError::UnknownRound(n).into())
    }
}

#[derive(Clone)]
pub struct AppState {
    session: Arc<Mutex<Session>>,
    snapshot: Arc<RwLock<Arc<Snapshot>>>,
}

impl AppState {
    pub fn new(session: Session) -> Self {
        let snapshot = Arc::new(RwLock::new(Arc::new(Snapshot::of(&session))));
        AppState { session: Arc::new(Mutex::new(session)), snapshot }
    }

    fn view(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    async fn mutate<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session) -> fraglearn_core::Result<T> + Send + 'static,
    {
        let state = self.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            let mut session = state.session.lock().unwrap_or_else(|p| p.into_inner());
            let out = f(&mut session);
            *state.snapshot.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(Snapshot::of(&session));
            out
        })
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
        outcome.map_err(ApiError::from)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: String) -> Self {
        ApiError { status, kind, message }
    }

    fn schema(message: impl ToString) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "schema_violation", message.to_string())
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let (status, kind) = match &e {
            CoreError::UnknownRound(_) => (StatusCode::NOT_FOUND, "unknown_round"),
            CoreError::RoundClosed(_) => (StatusCode::CONFLICT, "round_closed"),
            CoreError::RoundAlreadyOpen(_) => (StatusCode::CONFLICT, "round_already_open"),
            CoreError::NoOpenRound => (StatusCode::CONFLICT, "no_open_round"),
            CoreError::InvalidFeedback(_) | CoreError::SchemaViolation(_) | CoreError::UnknownTerm(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "schema_violation")
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

fn request_id(headers: &HeaderMap) -> Option<String> {
    REQUEST_ID_HEADERS
        .iter()
        .find_map(|h| headers.get(*h))
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

pub fn router(session: Session) -> Router {
    Router::new()
        .route("/session", get(get_session))
        .route("/rounds", post(open_round))
        .route("/rounds/{n}", get(get_round))
        .route("/rounds/{n}/molecules", get(get_molecules))
        .route("/rounds/{n}/feedback", post(post_feedback))
        .route("/rounds/{n}/approve", post(approve))
        .route("/rounds/{n}/skip", post(skip))
        .route("/objective", get(get_objective))
        .route("/metrics", get(get_metrics))
        .route("/validate-pattern", post(validate_pattern))
        .with_state(AppState::new(session))
}

async fn get_session(State(st): State<AppState>) -> Json<SessionView> {
    Json(st.view().session.clone())
}

async fn get_round(State(st): State<AppState>, Path(n): Path<u32>) -> Result<Json<Round>, ApiError> {
    Ok(Json(st.view().round(n)?.clone()))
}

async fn get_molecules(State(st): State<AppState>, Path(n): Path<u32>) -> Result<Json<MoleculesView>, ApiError> {
    let view = st.view();
    let r = view.round(n)?;
    Ok(Json(MoleculesView {
        round: n,
        status: r.status,
        objective_version: view.objective.spec.version,
        molecules: r.top.clone(),
    }))
}

async fn get_objective(State(st): State<AppState>) -> Json<ObjectiveView> {
    Json(st.view().objective.clone())
}

async fn get_metrics(State(st): State<AppState>) -> Json<Vec<EpochMetrics>> {
    Json(st.view().metrics.clone())
}

async fn open_round(State(st): State<AppState>, headers: HeaderMap) -> Result<Json<Round>, ApiError> {
    let id = request_id(&headers);
    st.mutate(move |s| s.start_round(id.as_deref())).await.map(Json)
}

async fn post_feedback(
    State(st): State<AppState>,
    Path(n): Path<u32>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<FeedbackResponse>, ApiError> {
    let record: FeedbackRecord = serde_json::from_slice(&body).map_err(ApiError::schema)?;
    record.validate()?;
    let id = request_id(&headers);
    st.mutate(move |s| s.submit_feedback(n, record, id.as_deref())).await.map(Json)
}

async fn approve(State(st): State<AppState>, Path(n): Path<u32>) -> Result<Json<ObjectiveSpec>, ApiError> {
    st.mutate(move |s| s.approve_pending(n)).await.map(Json)
}

async fn skip(State(st): State<AppState>, Path(n): Path<u32>) -> Result<Json<Round>, ApiError> {
    st.mutate(move |s| {
        s.skip_round(n)?;
        s.round(n).cloned()
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternRequest {
    pattern: String,
}

async fn validate_pattern(body: Bytes) -> Result<Json<PatternCheck>, ApiError> {
    let req: PatternRequest = serde_json::from_slice(&body).map_err(ApiError::schema)?;
    Ok(Json(match parse_pattern(&req.pattern) {
        Ok(_) => PatternCheck { valid: true, error: None },
        Err(e) => PatternCheck { valid: false, error: Some(e.to_string()) },
    }))
}

/// Serves `session` on `bind` until interrupted.
pub async fn serve(session: Session, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(session))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

