//! HTTP/JSON routes. Errors are `{"code": ..., "message": ...}` with a 4xx
//! status for client mistakes and 500 for storage failures.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use concord_core::matching::{InstanceEdit, MatchingInstance};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::model::{MatchingDefinition, Payload, PollDefinition};
use crate::service::Service;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody { code: "bad_request".into(), message },
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NotFound { .. } => StatusCode::NOT_FOUND,
            ServiceError::InvalidDefinition(_)
            | ServiceError::InvalidPayload(_)
            | ServiceError::InvalidInstance(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::PollClosed(_)
            | ServiceError::WrongKind { .. }
            | ServiceError::NoBallots(_)
            | ServiceError::MissingVotes { .. }
            | ServiceError::NoInstance(_)
            | ServiceError::NoRuns(_)
            | ServiceError::Compute(_) => StatusCode::CONFLICT,
            ServiceError::Storage(_) | ServiceError::CorruptLog { .. } => {
                tracing::error!("{e}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError { status, body: ErrorBody { code: e.code().into(), message: e.to_string() } }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs blocking service work (fsync, results computation) off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json).map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody { code: "internal".into(), message: e.to_string() },
        }),
    }
}

type Svc = State<Arc<Service>>;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/polls", post(create_poll).get(list_polls))
        .route("/polls/{id}", get(get_poll))
        .route("/polls/{id}/join", post(join))
        .route("/polls/{id}/ballots", post(submit_ballot).get(list_ballots))
        .route("/polls/{id}/close", post(close_poll))
        .route("/polls/{id}/results", get(results))
        .route("/polls/{id}/snapshots/{sid}", get(snapshot))
        .route("/polls/{id}/advance", post(advance))
        .route("/polls/{id}/issues/{iid}", get(issue))
        .route("/matchings", post(create_matching))
        .route("/matchings/{id}", get(get_matching))
        .route("/matchings/{id}/instance", axum::routing::put(put_instance))
        .route("/matchings/{id}/edits", post(edit_instance))
        .route("/matchings/{id}/run", post(run_matching))
        .route("/matchings/{id}/outcome", get(outcome))
        .route("/matchings/{id}/explanations/{student}", get(explanation))
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn create_poll(
    State(s): Svc,
    body: Result<Json<PollDefinition>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::model::Poll>), ApiError> {
    let Json(def) = body?;
    let poll = blocking(move || s.create_poll(def)).await?;
    Ok((StatusCode::CREATED, poll))
}

async fn list_polls(State(s): Svc) -> Json<Vec<crate::model::Poll>> {
    Json(s.list_polls())
}

async fn get_poll(State(s): Svc, Path(id): Path<String>) -> ApiResult<crate::service::PollView> {
    Ok(Json(s.poll(&id)?))
}

#[derive(Serialize, Deserialize)]
pub struct JoinResponse {
    pub voter: String,
}

async fn join(State(s): Svc, Path(id): Path<String>) -> ApiResult<JoinResponse> {
    Ok(Json(JoinResponse { voter: s.join(&id)? }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BallotSubmission {
    /// Voter token; may instead be sent as `Authorization: Bearer <token>`.
    #[serde(default)]
    pub voter: Option<String>,
    pub payload: Payload,
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(axum::http::header::AUTHORIZATION)?.to_str().ok()?;
    value.strip_prefix("Bearer ").map(|t| t.trim().to_string())
}

async fn submit_ballot(
    State(s): Svc,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<BallotSubmission>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::model::BallotRecord>), ApiError> {
    let Json(sub) = body?;
    let voter = sub
        .voter
        .or_else(|| bearer(&headers))
        .ok_or_else(|| ApiError::bad_request("a voter token is required".into()))?;
    let record = blocking(move || s.submit_ballot(&id, &voter, sub.payload)).await?;
    Ok((StatusCode::CREATED, record))
}

async fn list_ballots(State(s): Svc, Path(id): Path<String>) -> ApiResult<Vec<crate::model::BallotRecord>> {
    Ok(Json(s.effective_ballots(&id)?))
}

async fn close_poll(State(s): Svc, Path(id): Path<String>) -> ApiResult<crate::model::Poll> {
    blocking(move || s.close_poll(&id)).await
}

#[derive(Deserialize)]
struct SeedQuery {
    #[serde(default)]
    seed: u64,
}

async fn results(
    State(s): Svc,
    Path(id): Path<String>,
    query: Result<Query<SeedQuery>, QueryRejection>,
) -> ApiResult<crate::model::ResultsSnapshot> {
    let Query(q) = query?;
    blocking(move || s.compute_results(&id, q.seed)).await
}

async fn snapshot(
    State(s): Svc,
    Path((id, sid)): Path<(String, String)>,
) -> ApiResult<crate::model::ResultsSnapshot> {
    Ok(Json(s.snapshot(&id, &sid)?))
}

#[derive(Default, Deserialize)]
struct AdvanceRequest {
    #[serde(default)]
    force: bool,
}

async fn advance(
    State(s): Svc,
    Path(id): Path<String>,
    body: Option<Json<AdvanceRequest>>,
) -> ApiResult<crate::model::IssueDecision> {
    let force = body.map(|Json(b)| b.force).unwrap_or_default();
    blocking(move || s.advance_multipoll(&id, force)).await
}

async fn issue(
    State(s): Svc,
    Path((id, iid)): Path<(String, String)>,
) -> ApiResult<crate::service::IssueView> {
    Ok(Json(s.issue(&id, &iid)?))
}

async fn create_matching(
    State(s): Svc,
    body: Result<Json<MatchingDefinition>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::service::MatchingView>), ApiError> {
    let Json(def) = body?;
    let view = blocking(move || s.create_matching(def)).await?;
    Ok((StatusCode::CREATED, view))
}

async fn get_matching(State(s): Svc, Path(id): Path<String>) -> ApiResult<crate::service::MatchingView> {
    Ok(Json(s.matching(&id)?))
}

async fn put_instance(
    State(s): Svc,
    Path(id): Path<String>,
    body: Result<Json<MatchingInstance>, JsonRejection>,
) -> ApiResult<crate::service::MatchingView> {
    let Json(instance) = body?;
    blocking(move || s.put_instance(&id, instance)).await
}

async fn edit_instance(
    State(s): Svc,
    Path(id): Path<String>,
    body: Result<Json<Vec<InstanceEdit>>, JsonRejection>,
) -> ApiResult<crate::service::MatchingView> {
    let Json(edits) = body?;
    blocking(move || s.edit_instance(&id, edits)).await
}

async fn run_matching(State(s): Svc, Path(id): Path<String>) -> ApiResult<crate::model::MatchingRun> {
    blocking(move || s.run_matching(&id)).await
}

#[derive(Deserialize)]
struct RunQuery {
    run: Option<u64>,
}

async fn outcome(
    State(s): Svc,
    Path(id): Path<String>,
    query: Result<Query<RunQuery>, QueryRejection>,
) -> ApiResult<crate::model::MatchingRun> {
    let Query(q) = query?;
    Ok(Json(s.outcome(&id, q.run)?))
}

#[derive(Deserialize)]
struct CourseQuery {
    course: Option<String>,
}

async fn explanation(
    State(s): Svc,
    Path((id, student)): Path<(String, String)>,
    query: Result<Query<CourseQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query?;
    Ok(match q.course {
        Some(course) => Json(s.explain_course(&id, &student, &course)?).into_response(),
        None => Json(s.explanation(&id, &student)?).into_response(),
    })
}
