//! WebSocket front end.
//!
//! `GET /ws?preset=<name>` opens a session and upgrades. Each connection has
//! a reader that hands frames to the [`SessionManager`] on a blocking task
//! (planning may call out to a model) and a writer that drains an
//! [`OutboundQueue`], so slow clients never stall inbound processing.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::{IntoResponse, Json};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use std::net::SocketAddr;
use std::sync::Arc;
use tokio::net::TcpListener;

use intentcell_core::presets::PRESET_NAMES;

use crate::manager::SessionManager;
use crate::protocol::{Outbound, OutboundMessage, PROTOCOL_VERSION};
use crate::queue::OutboundQueue;

pub const DEFAULT_PRESET: &str = "two-cups-bowl-plate";
pub const OUTBOUND_CAPACITY: usize = 256;

#[derive(Debug, Deserialize)]
struct OpenParams {
    preset: Option<String>,
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/ws", get(ws_handler))
        .route("/health", get(|| async { "ok" }))
        .route("/presets", get(|| async { Json(PRESET_NAMES.to_vec()) }))
        .with_state(manager)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, manager: Arc<SessionManager>) -> std::io::Result<()> {
    axum::serve(listener, router(manager)).await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

async fn ws_handler(
    ws: WebSocketUpgrade,
    Query(params): Query<OpenParams>,
    State(manager): State<Arc<SessionManager>>,
) -> impl IntoResponse {
    let preset = params.preset.unwrap_or_else(|| DEFAULT_PRESET.to_string());
    ws.on_upgrade(move |socket| connection(socket, manager, preset))
}

async fn connection(socket: WebSocket, manager: Arc<SessionManager>, preset: String) {
    let (mut sink, mut stream) = socket.split();
    let (id, opening) = match manager.open_session(&preset) {
        Ok(x) => x,
        Err(e) => {
            let msg = OutboundMessage {
                v: PROTOCOL_VERSION,
                session_id: String::new(),
                timestamp: 0.0,
                seq: 1,
                reflects: 0,
                body: Outbound::error(e.code(), e.to_string()),
            };
            let _ = sink.send(Message::Text(msg.to_json().into())).await;
            let _ = sink.close().await;
            return;
        }
    };
    let queue = Arc::new(OutboundQueue::new(OUTBOUND_CAPACITY));
    for m in opening {
        queue.push(m);
    }
    let writer = {
        let queue = queue.clone();
        tokio::spawn(async move {
            while let Some(m) = queue.pop().await {
                if sink.send(Message::Text(m.to_json().into())).await.is_err() {
                    break;
                }
            }
            let _ = sink.close().await;
        })
    };
    while let Some(frame) = stream.next().await {
        let text = match frame {
            Ok(Message::Text(t)) => t.to_string(),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        let mgr = manager.clone();
        let sid = id.clone();
        let result = tokio::task::spawn_blocking(move || mgr.handle_text(&sid, &text)).await;
        match result {
            Ok(Ok(out)) => out.into_iter().for_each(|m| queue.push(m)),
            Ok(Err(e)) => {
                tracing::warn!(session = %id, error = %e, "session gone");
                break;
            }
            Err(e) => {
                tracing::error!(session = %id, error = %e, "session handler panicked");
                break;
            }
        }
    }
    manager.close_session(&id);
    queue.close();
    let _ = writer.await;
    tracing::info!(session = %id, "session closed");
}
