//! HTTP front end for the session protocol.
//!
//! `POST /v1/rpc` takes one request. Drags answer with newline-delimited
//! JSON (one frame per line, then the quiescence message); every other
//! command answers with a single JSON object. `GET /v1/sessions/{id}/stream`
//! upgrades to a WebSocket that mirrors the session's responses, coalesced
//! to at most 60 frames per second.

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::Router;
use chainform_core::protocol::{Request, Response};
use chainform_core::{FrameThrottle, SessionManager};
use tokio::sync::{broadcast, mpsc};
use tokio::time::Instant;

pub const STREAM_RATE: u32 = 60;

#[derive(Clone)]
pub struct AppState {
    pub manager: Arc<SessionManager>,
    streams: Arc<Mutex<HashMap<String, broadcast::Sender<Arc<Response>>>>>,
}

impl AppState {
    pub fn new(scenario_dir: Option<PathBuf>) -> Self {
        Self {
            manager: Arc::new(SessionManager::new(scenario_dir)),
            streams: Arc::default(),
        }
    }

    fn sender(&self, id: &str) -> broadcast::Sender<Arc<Response>> {
        self.streams
            .lock()
            .expect("stream map")
            .entry(id.to_string())
            .or_insert_with(|| broadcast::channel(1024).0)
            .clone()
    }

    fn publish(&self, r: &Response) {
        let id = match r {
            Response::Error(e) => e.session_id.as_deref(),
            Response::Created { session_id, .. }
            | Response::Frame { session_id, .. }
            | Response::Quiescent { session_id, .. }
            | Response::Score { session_id, .. }
            | Response::Export { session_id, .. }
            | Response::Closed { session_id, .. } => Some(session_id.as_str()),
        };
        if let Some(id) = id {
            let _ = self.sender(id).send(Arc::new(r.clone()));
            if matches!(r, Response::Closed { .. }) {
                self.streams.lock().expect("stream map").remove(id);
            }
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/v1/rpc", post(rpc))
        .route("/v1/sessions/{id}/stream", get(stream))
        .with_state(state)
}

fn status_for(r: &Response) -> StatusCode {
    match r {
        Response::Error(e) => match e.error.as_str() {
            "unknown_session" | "not_found" => StatusCode::NOT_FOUND,
            "non_convergence" => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        },
        _ => StatusCode::OK,
    }
}

fn json_response(r: &Response) -> HttpResponse {
    let body = serde_json::to_string(r).expect("response serializes");
    (status_for(r), [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn rpc(State(state): State<AppState>, body: String) -> HttpResponse {
    let req: Request = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return json_response(&Response::Error(Response::error("bad_request", e.to_string()))),
    };
    let streaming = matches!(req, Request::Drag { .. });
    let (tx, mut rx) = mpsc::unbounded_channel::<Response>();
    let worker_state = state.clone();
    tokio::task::spawn_blocking(move || {
        worker_state.manager.handle(req, &mut |r| {
            worker_state.publish(&r);
            let _ = tx.send(r);
        });
    });
    if streaming {
        let lines = futures::stream::unfold(rx, |mut rx| async move {
            let r = rx.recv().await?;
            let mut line = serde_json::to_string(&r).expect("response serializes");
            line.push('\n');
            Some((Ok::<_, Infallible>(line), rx))
        });
        (
            [(header::CONTENT_TYPE, "application/x-ndjson")],
            Body::from_stream(lines),
        )
            .into_response()
    } else {
        match rx.recv().await {
            Some(r) => json_response(&r),
            None => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
        }
    }
}

async fn stream(State(state): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> HttpResponse {
    if state.manager.session(&id).is_none() {
        let mut e = Response::error("unknown_session", format!("no session `{id}`"));
        e.field = Some("session_id".into());
        return json_response(&Response::Error(e));
    }
    let rx = state.sender(&id).subscribe();
    ws.on_upgrade(move |socket| forward(socket, rx))
}

async fn send(socket: &mut WebSocket, r: &Response) -> bool {
    let text = serde_json::to_string(r).expect("response serializes");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn forward(mut socket: WebSocket, mut rx: broadcast::Receiver<Arc<Response>>) {
    let mut throttle = FrameThrottle::new(STREAM_RATE);
    let start = Instant::now();
    let mut tick = tokio::time::interval(throttle.interval());
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(r) => {
                    let closed = matches!(*r, Response::Closed { .. });
                    if let Some(out) = throttle.offer(start.elapsed(), r.clone(), r.is_terminal()) {
                        if !send(&mut socket, &out).await {
                            break;
                        }
                    }
                    if closed {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "stream subscriber lagged");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            _ = tick.tick() => {
                if let Some(out) = throttle.poll(start.elapsed()) {
                    if !send(&mut socket, &out).await {
                        break;
                    }
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

/// Binds and serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, scenario_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(AppState::new(scenario_dir))).await?;
    Ok(())
}
