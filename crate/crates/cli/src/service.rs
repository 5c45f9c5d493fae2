//! HTTP front end of the live adaptation loop.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use agentfilter_core::analysis::analyze;
use agentfilter_core::corpus::Intensity;
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::session::{Duplicate, LiveContext, Session};

const INDEX_HTML: &str = include_str!("static/index.html");
const APP_JS: &str = include_str!("static/app.js");
const STYLE_CSS: &str = include_str!("static/style.css");

pub struct AppState {
    ctx: LiveContext,
    summary: Value,
    sessions: std::sync::Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    log: Option<Mutex<File>>,
}

impl AppState {
    pub fn new(ctx: LiveContext) -> agentfilter_core::Result<Self> {
        let summary = serde_json::to_value(analyze(&ctx.survey, &ctx.config)?)?;
        let log = match &ctx.config.serve.log {
            Some(path) => Some(Mutex::new(open_log(Path::new(path))?)),
            None => None,
        };
        Ok(AppState {
            ctx,
            summary,
            sessions: std::sync::Mutex::new(HashMap::new()),
            log,
        })
    }

    /// The user's session, opened on first contact.
    fn session(&self, user: &str) -> Arc<Mutex<Session>> {
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        sessions
            .entry(user.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(Session::new(user, &self.ctx))))
            .clone()
    }

    fn existing(&self, user: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(user)
            .cloned()
    }
}

fn open_log(path: &Path) -> agentfilter_core::Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| agentfilter_core::Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route(
            "/",
            get(|| async {
                (
                    [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
                    INDEX_HTML,
                )
            }),
        )
        .route(
            "/app.js",
            get(|| async { ([(header::CONTENT_TYPE, "text/javascript")], APP_JS) }),
        )
        .route(
            "/style.css",
            get(|| async { ([(header::CONTENT_TYPE, "text/css")], STYLE_CSS) }),
        )
        .route("/api/session/{user}/next", get(next))
        .route("/api/session/{user}/response", post(respond))
        .route("/api/session/{user}/agent", get(agent))
        .route("/api/reports/summary", get(summary))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>, field: Option<&str>) -> Response {
    (
        status,
        Json(json!({ "error": message.into(), "field": field })),
    )
        .into_response()
}

fn bad_field(field: &str, message: impl Into<String>) -> Response {
    error(StatusCode::BAD_REQUEST, message, Some(field))
}

async fn next(State(st): State<Arc<AppState>>, UrlPath(user): UrlPath<String>) -> Response {
    let session = st.session(&user);
    let s = session.lock().await;
    let body = match s.next() {
        Some(m) => {
            let msg = &st.ctx.survey.messages()[m];
            json!({
                "message_id": msg.id,
                "text": msg.text,
                "prediction": s.predict(&st.ctx, m),
                "warmed_up": s.warmed_up(&st.ctx),
                "remaining": s.remaining(),
            })
        }
        None => json!({
            "message_id": null,
            "text": null,
            "prediction": null,
            "warmed_up": s.warmed_up(&st.ctx),
            "remaining": 0,
        }),
    };
    Json(body).into_response()
}

struct ResponseBody {
    message: usize,
    intensity: Intensity,
    filter: bool,
}

fn parse_body(st: &AppState, raw: &[u8]) -> Result<ResponseBody, Response> {
    let v: Value =
        serde_json::from_slice(raw).map_err(|e| bad_field("body", format!("invalid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| bad_field("body", "expected a JSON object"))?;
    let id = obj
        .get("message_id")
        .and_then(Value::as_str)
        .ok_or_else(|| bad_field("message_id", "message_id must be a string"))?;
    let message = st
        .ctx
        .survey
        .message_position(id)
        .ok_or_else(|| bad_field("message_id", format!("unknown message `{id}`")))?;
    if !st.ctx.is_codable(message) {
        return Err(bad_field(
            "message_id",
            format!("message `{id}` has no resolved category"),
        ));
    }
    let intensity = obj
        .get("intensity")
        .and_then(Value::as_i64)
        .and_then(Intensity::new)
        .ok_or_else(|| bad_field("intensity", "intensity must be an integer from 1 to 5"))?;
    let filter = obj
        .get("filter")
        .and_then(Value::as_bool)
        .ok_or_else(|| bad_field("filter", "filter must be true or false"))?;
    Ok(ResponseBody {
        message,
        intensity,
        filter,
    })
}

async fn respond(
    State(st): State<Arc<AppState>>,
    UrlPath(user): UrlPath<String>,
    raw: Bytes,
) -> Response {
    let body = match parse_body(&st, &raw) {
        Ok(b) => b,
        Err(resp) => return resp,
    };
    let session = st.session(&user);
    let mut s = session.lock().await;
    match s.submit(&st.ctx, body.message, body.intensity, body.filter) {
        Ok(out) => {
            if let Some(log) = &st.log {
                let line = json!({
                    "user_id": user,
                    "message_id": st.ctx.survey.messages()[body.message].id,
                    "intensity": body.intensity,
                    "filter": body.filter,
                    "agent_prediction_was": out.agent_prediction_was,
                });
                let mut f = log.lock().await;
                if let Err(e) = writeln!(f, "{line}") {
                    return error(
                        StatusCode::INTERNAL_SERVER_ERROR,
                        format!("response log: {e}"),
                        None,
                    );
                }
            }
            Json(out).into_response()
        }
        Err(Duplicate) => error(
            StatusCode::CONFLICT,
            format!("user `{user}` already answered this message"),
            Some("message_id"),
        ),
    }
}

async fn agent(State(st): State<Arc<AppState>>, UrlPath(user): UrlPath<String>) -> Response {
    match st.existing(&user) {
        Some(session) => Json(session.lock().await.view(&st.ctx)).into_response(),
        None => error(
            StatusCode::NOT_FOUND,
            format!("no session for user `{user}`"),
            None,
        ),
    }
}

async fn summary(State(st): State<Arc<AppState>>) -> Response {
    let sessions: Vec<Arc<Mutex<Session>>> = st
        .sessions
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .values()
        .cloned()
        .collect();
    let mut responses = 0;
    for s in &sessions {
        responses += s.lock().await.n_responses();
    }
    let mut body = st.summary.clone();
    body["live"] = json!({ "sessions": sessions.len(), "responses": responses });
    Json(body).into_response()
}
