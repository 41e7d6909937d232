use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use govroom_core::{PlayerAction, ScenarioId, SessionId};
use serde::Deserialize;
use tokio::sync::broadcast::error::RecvError;

use super::{ApiError, Frame, Gateway, SurveyAnswer};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(serde_json::json!({ "error": self }))).into_response()
    }
}

type Shared = State<Arc<Gateway>>;

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// Bearer header first, then `?token=` (browsers cannot set headers on
/// an EventSource).
fn session_token<'a>(headers: &'a HeaderMap, query: &'a TokenQuery) -> Option<&'a str> {
    bearer(headers).or(query.token.as_deref())
}

#[derive(Deserialize)]
struct CreateRequest {
    scenario_id: ScenarioId,
}

#[derive(Deserialize)]
struct SurveyRequest {
    responses: Vec<SurveyAnswer>,
}

fn bad_request(err: impl std::fmt::Display) -> ApiError {
    ApiError::new("bad-request", err.to_string())
}

async fn list_scenarios(State(gw): Shared) -> impl IntoResponse {
    Json(gw.scenarios())
}

async fn create_session(
    State(gw): Shared,
    body: Result<Json<CreateRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body.map_err(bad_request)?;
    let created = gw.create_session(&req.scenario_id)?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn post_action(
    State(gw): Shared,
    Path(id): Path<SessionId>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
    body: Result<Json<PlayerAction>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let token = session_token(&headers, &query);
    let Json(action) = body.map_err(bad_request)?;
    Ok(Json(gw.act(&id, token, action).await?))
}

async fn get_view(
    State(gw): Shared,
    Path(id): Path<SessionId>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(gw.view(&id, session_token(&headers, &query)).await?))
}

async fn post_survey(
    State(gw): Shared,
    Path(id): Path<SessionId>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
    body: Result<Json<SurveyRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let token = session_token(&headers, &query);
    let Json(req) = body.map_err(bad_request)?;
    Ok(Json(gw.submit_survey(&id, token, req.responses).await?))
}

async fn get_analytics(
    State(gw): Shared,
    headers: HeaderMap,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(gw.analytics(bearer(&headers))?))
}

/// Frames until and including the first terminal one.
pub fn frame_stream(
    snapshot: Frame,
    rx: tokio::sync::broadcast::Receiver<Frame>,
) -> impl Stream<Item = Frame> {
    stream::unfold(
        (Some(snapshot), rx, false),
        |(first, mut rx, done)| async move {
            if let Some(frame) = first {
                let done = frame.is_terminal();
                return Some((frame, (None, rx, done)));
            }
            if done {
                return None;
            }
            loop {
                match rx.recv().await {
                    Ok(frame) => {
                        let done = frame.is_terminal();
                        return Some((frame, (None, rx, done)));
                    }
                    // Every frame carries the full view, so skipping is safe.
                    Err(RecvError::Lagged(_)) => continue,
                    Err(RecvError::Closed) => return None,
                }
            }
        },
    )
}

async fn stream_session(
    State(gw): Shared,
    Path(id): Path<SessionId>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let (snapshot, rx) = gw.subscribe(&id, session_token(&headers, &query)).await?;
    let events = frame_stream(snapshot, rx).map(|frame| {
        let name = match frame.kind {
            super::FrameKind::Snapshot => "snapshot",
            super::FrameKind::Event => "event",
        };
        Ok(Event::default()
            .event(name)
            .id(frame.seq.to_string())
            .json_data(&frame)
            .expect("frames always serialize"))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/api/scenarios", get(list_scenarios))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_view))
        .route("/api/sessions/{id}/actions", post(post_action))
        .route("/api/sessions/{id}/survey", post(post_survey))
        .route("/api/sessions/{id}/stream", get(stream_session))
        .route("/api/analytics", get(get_analytics))
        .with_state(gateway)
}

/// Serves the API on `addr` and expires overdue sessions once a second.
pub async fn serve(gateway: Arc<Gateway>, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");

    let sweeper = Arc::clone(&gateway);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(1));
        loop {
            tick.tick().await;
            match sweeper.sweep_expired().await {
                Ok(0) => {}
                Ok(n) => tracing::info!(expired = n, "expired overdue sessions"),
                Err(e) => tracing::error!(code = %e.code, "expiry sweep failed: {}", e.message),
            }
        }
    });

    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
