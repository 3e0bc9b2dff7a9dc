//! HTTP side: the `/session` socket, recorded-trial replays under
//! `/replay/{stem}`, and optional static assets for the browser client.

use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tower_http::services::ServeDir;

use bimanual_core::harness::Replayer;
use bimanual_core::world::Vec3;
use bimanual_core::TrialLog;

use crate::protocol::{parse_command, Role, ServerMessage, PROTOCOL_VERSION};
use crate::session::{frame_from_row, Session, SessionOptions};

#[derive(Clone)]
struct App {
    session: Arc<Session>,
    record: Option<PathBuf>,
}

/// Routes for one session. Static files under `assets` are served for any
/// path that is not a socket.
pub fn router(session: Arc<Session>, record: Option<PathBuf>, assets: Option<&Path>) -> Router {
    let app = App { session, record };
    let router = Router::new()
        .route("/session", get(session_socket))
        .route("/replay/{stem}", get(replay_socket))
        .with_state(app);
    match assets {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// Run a session on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    opts: SessionOptions,
    assets: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let record = opts.record.clone();
    let session = Arc::new(Session::start(opts));
    let app = router(session, record, assets.as_deref());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

async fn session_socket(ws: WebSocketUpgrade, State(app): State<App>) -> Response {
    ws.on_upgrade(move |socket| client(socket, app.session))
}

async fn send(socket: &mut futures_util::stream::SplitSink<WebSocket, Message>, msg: &ServerMessage) -> bool {
    socket.send(Message::Text(msg.to_json().into())).await.is_ok()
}

async fn client(socket: WebSocket, session: Arc<Session>) {
    let id = session.connect();
    let role = if session.try_drive(id) { Role::Driver } else { Role::Spectator };
    tracing::info!("client {id} connected as {role:?}");
    let (mut tx, mut rx) = socket.split();
    let mut frames = session.subscribe();
    let hello = ServerMessage::Hello {
        v: PROTOCOL_VERSION,
        role,
        frame_rate_hz: session.frame_rate_hz(),
        room: session.room().clone(),
        materials: session.materials().to_vec(),
    };
    if send(&mut tx, &hello).await {
        loop {
            tokio::select! {
                msg = rx.next() => {
                    let text = match msg {
                        Some(Ok(Message::Text(t))) => t,
                        Some(Ok(Message::Binary(_))) => {
                            if !send(&mut tx, &ServerMessage::error("binary frames are not supported")).await {
                                break;
                            }
                            continue;
                        }
                        Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                        Some(Ok(_)) => continue,
                    };
                    let replies = handle_text(&session, id, role, text.as_str());
                    let mut ok = true;
                    for r in replies {
                        ok &= send(&mut tx, &r).await;
                    }
                    if !ok {
                        break;
                    }
                }
                frame = frames.recv() => match frame {
                    Ok(f) => {
                        if !send(&mut tx, &ServerMessage::state((*f).clone())).await {
                            break;
                        }
                    }
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::warn!("client {id} skipped {n} frames");
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            }
        }
    }
    session.disconnect(id);
    tracing::info!("client {id} disconnected");
}

fn handle_text(session: &Session, id: u64, role: Role, text: &str) -> Vec<ServerMessage> {
    let cmd = match parse_command(text) {
        Ok(c) => c,
        Err(e) => return vec![ServerMessage::error(e)],
    };
    if role != Role::Driver || !session.is_driver(id) {
        return vec![ServerMessage::error("spectators cannot send commands")];
    }
    let room = session.room();
    let mut replies = Vec::new();
    let mut hands = [Vec3::from(cmd.left_target), Vec3::from(cmd.right_target)];
    for (name, p) in ["left_target", "right_target"].iter().zip(hands.iter_mut()) {
        let c = room.clamp(p);
        if c != *p {
            replies.push(ServerMessage::warning(format!(
                "{name} outside the room, clamped to [{:.3}, {:.3}, {:.3}]",
                c.x, c.y, c.z
            )));
            *p = c;
        }
    }
    session.submit(hands, cmd.t_client);
    session.act(cmd.action);
    replies
}

#[derive(Debug, Deserialize)]
struct ReplayQuery {
    speed: Option<f64>,
}

async fn replay_socket(
    ws: WebSocketUpgrade,
    UrlPath(stem): UrlPath<String>,
    Query(q): Query<ReplayQuery>,
    State(app): State<App>,
) -> Response {
    let Some(dir) = app.record else {
        return (StatusCode::NOT_FOUND, "no record directory configured").into_response();
    };
    if stem.is_empty() || !stem.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return (StatusCode::BAD_REQUEST, "invalid trial name").into_response();
    }
    let log = match TrialLog::read(&dir.join(format!("{stem}.csv"))) {
        Ok(l) => l,
        Err(e) => return (StatusCode::NOT_FOUND, e.to_string()).into_response(),
    };
    let speed = q.speed.unwrap_or(1.0);
    if Replayer::new(&log, speed).is_err() {
        return (StatusCode::BAD_REQUEST, "unplayable log or speed").into_response();
    }
    let frame_dt = 1.0 / app.session.frame_rate_hz();
    ws.on_upgrade(move |socket| replay_client(socket, log, speed, frame_dt))
}

async fn replay_client(socket: WebSocket, log: TrialLog, speed: f64, frame_dt: f64) {
    let (mut tx, _rx) = socket.split();
    let (frames, mut out) = mpsc::channel(64);
    let player = tokio::task::spawn_blocking(move || {
        let replayer = Replayer::new(&log, speed).expect("checked before upgrade");
        let mut next = f64::NEG_INFINITY;
        replayer.play(|row| {
            if row.t + 1e-9 < next && row.event == bimanual_core::log::Cue::None {
                return true;
            }
            next = row.t + frame_dt;
            frames.blocking_send(ServerMessage::state(frame_from_row(&log, row))).is_ok()
        });
    });
    while let Some(msg) = out.recv().await {
        if !send(&mut tx, &msg).await {
            break;
        }
    }
    drop(out);
    let _ = player.await;
    let _ = tx.close().await;
}
