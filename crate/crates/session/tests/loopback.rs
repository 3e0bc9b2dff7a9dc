use std::net::SocketAddr;
use std::path::Path;
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use bimanual_core::agents::{run_trial_policy, AgentProfile, CommandSource, Observation};
use bimanual_core::harness::{run_scripted_trial, TrialSetup};
use bimanual_core::log::{list_trials, Cue};
use bimanual_core::metrics::execution_time;
use bimanual_core::world::{Material, MaterialId, SceneConfig, TargetLabel, Vec3};
use bimanual_core::{TrialLog, TrialPhase};
use bimanual_session::protocol::{Action, ClientCommand, Role, ServerMessage, StateFrame, PROTOCOL_VERSION};
use bimanual_session::server::serve;
use bimanual_session::SessionOptions;

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

struct Server {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Server {
    async fn start(opts: SessionOptions) -> Server {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (stop, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(serve(listener, opts, None, async {
            let _ = rx.await;
        }));
        Server {
            addr,
            stop: Some(stop),
            task,
        }
    }

    async fn connect(&self) -> (Ws, Role) {
        let (mut ws, _) = connect_async(format!("ws://{}/session", self.addr)).await.unwrap();
        match next_message(&mut ws).await {
            ServerMessage::Hello { role, v, materials, .. } => {
                assert_eq!(v, PROTOCOL_VERSION);
                assert_eq!(materials.len(), 4);
                (ws, role)
            }
            other => panic!("expected hello, got {other:?}"),
        }
    }

    async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        let _ = tokio::time::timeout(Duration::from_secs(5), self.task).await;
    }
}

async fn next_message(ws: &mut Ws) -> ServerMessage {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("server went quiet")
            .expect("socket closed")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn next_frame(ws: &mut Ws) -> StateFrame {
    loop {
        if let ServerMessage::State { frame, .. } = next_message(ws).await {
            return frame;
        }
    }
}

fn command(hands: [Vec3; 2], t_client: f64, action: Action) -> Message {
    let cmd = ClientCommand {
        v: PROTOCOL_VERSION,
        t_client,
        left_target: hands[0].into(),
        right_target: hands[1].into(),
        action,
    };
    Message::Text(serde_json::to_string(&cmd).unwrap().into())
}

fn start_hands() -> [Vec3; 2] {
    let setup = TrialSetup::new(SceneConfig::default(), Material::lookup(MaterialId::HSHB), TargetLabel::C);
    let c = setup.initial_cube().position;
    [c - Vec3::new(0.2, 0.0, 0.0), c + Vec3::new(0.2, 0.0, 0.0)]
}

/// Drive the live session with the scripted agent, closing the loop over
/// the streamed frames. Returns every frame seen until the trial ends.
async fn drive_agent(ws: &mut Ws, profile: &AgentProfile, id: MaterialId, target: TargetLabel) -> Vec<StateFrame> {
    let setup = TrialSetup::new(SceneConfig::default(), Material::lookup(id), target);
    let cube = setup.initial_cube();
    let mut agent = run_trial_policy(profile, &setup.scene, &setup.material, target, &cube).unwrap();
    let mut frames = Vec::new();
    let deadline = Instant::now() + Duration::from_secs(20);
    loop {
        let f = next_frame(ws).await;
        let obs = Observation {
            t: f.trial_t,
            lateral_force: [f.left.lateral_force, f.right.lateral_force],
            cube_position: Vec3::from(f.cube.position),
        };
        let done = f.phase.is_terminal() && f.trial_t > 0.0;
        frames.push(f);
        if done || Instant::now() > deadline {
            return frames;
        }
        let cmd = agent.next_command(&obs).unwrap();
        ws.send(command(cmd.positions(), obs.t * 1e3, Action::None)).await.unwrap();
    }
}

fn recorded(dir: &Path) -> Vec<TrialLog> {
    list_trials(dir)
        .unwrap()
        .iter()
        .map(|p| TrialLog::read(p).unwrap())
        .collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn idle_session_keeps_streaming() {
    let server = Server::start(SessionOptions::default()).await;
    let (mut ws, role) = server.connect().await;
    assert_eq!(role, Role::Driver);
    let start = Instant::now();
    let mut frames = Vec::new();
    while start.elapsed() < Duration::from_millis(500) {
        frames.push(next_frame(&mut ws).await);
    }
    assert!(frames.len() >= 20, "only {} frames in 0.5 s", frames.len());
    assert!(frames.windows(2).all(|w| w[1].t >= w[0].t));
    let rest = frames[0].cube.position;
    for f in &frames {
        assert_eq!(f.phase, TrialPhase::Idle);
        assert_eq!(f.cube.position, rest);
    }
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slow_client_does_not_slow_physics() {
    let server = Server::start(SessionOptions::default()).await;
    let (mut ws, _) = server.connect().await;
    let hands = start_hands();
    ws.send(command(hands, 0.0, Action::None)).await.unwrap();
    // Wait for the trial to start, then send at 5 Hz while counting frames.
    let first = loop {
        let f = next_frame(&mut ws).await;
        if f.tick > 0 {
            break f;
        }
    };
    let start = Instant::now();
    let mut last = first.clone();
    let mut count = 0;
    let mut next_send = Instant::now();
    while start.elapsed() < Duration::from_secs(2) {
        if Instant::now() >= next_send {
            ws.send(command(hands, start.elapsed().as_secs_f64() * 1e3, Action::None)).await.unwrap();
            next_send += Duration::from_millis(200);
        }
        last = next_frame(&mut ws).await;
        count += 1;
    }
    let wall = start.elapsed().as_secs_f64();
    let frame_rate = count as f64 / wall;
    let tick_rate = (last.tick - first.tick) as f64 / (last.t - first.t);
    assert!((frame_rate - 60.0).abs() < 6.0, "frames at {frame_rate:.1} Hz");
    assert!((tick_rate - 1000.0).abs() < 1.0, "physics at {tick_rate:.1} Hz");
    let sim_per_wall = (last.t - first.t) / wall;
    assert!((sim_per_wall - 1.0).abs() < 0.1, "sim runs at {sim_per_wall:.2}x");
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn out_of_room_targets_are_clamped_with_a_warning() {
    let server = Server::start(SessionOptions::default()).await;
    let (mut ws, _) = server.connect().await;
    let hands = [Vec3::new(-5.0, 0.3, 0.0), Vec3::new(0.2, 0.3, -0.3)];
    ws.send(command(hands, 0.0, Action::None)).await.unwrap();
    let warning = loop {
        match next_message(&mut ws).await {
            ServerMessage::Warning { message, .. } => break message,
            ServerMessage::State { .. } => continue,
            other => panic!("unexpected {other:?}"),
        }
    };
    assert!(warning.contains("left_target"), "{warning}");
    // The hand settles on the wall, not beyond it.
    tokio::time::sleep(Duration::from_millis(300)).await;
    let f = next_frame(&mut ws).await;
    assert!(f.left.ee[0] >= -0.6 - 1e-9 && f.left.ee[0] < -0.55, "{:?}", f.left.ee);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_frames_are_rejected_and_the_session_continues() {
    let server = Server::start(SessionOptions::default()).await;
    let (mut ws, _) = server.connect().await;
    for bad in ["not json", r#"{"v":7,"t_client":0,"left_target":[0,0,0],"right_target":[0,0,0]}"#, r#"{"v":1}"#] {
        ws.send(Message::Text(bad.into())).await.unwrap();
        loop {
            match next_message(&mut ws).await {
                ServerMessage::Error { message, .. } => {
                    assert!(!message.is_empty());
                    break;
                }
                ServerMessage::State { .. } => continue,
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    ws.send(command(start_hands(), 0.0, Action::None)).await.unwrap();
    let started = loop {
        let f = next_frame(&mut ws).await;
        if f.tick > 0 {
            break f;
        }
    };
    assert_eq!(started.phase, TrialPhase::Approach);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn spectators_watch_but_cannot_drive() {
    let server = Server::start(SessionOptions::default()).await;
    let (_driver, role) = server.connect().await;
    assert_eq!(role, Role::Driver);
    let (mut spectator, role) = server.connect().await;
    assert_eq!(role, Role::Spectator);
    spectator.send(command(start_hands(), 0.0, Action::ResetTrial)).await.unwrap();
    let mut frames = 0;
    let refused = loop {
        match next_message(&mut spectator).await {
            ServerMessage::Error { message, .. } => break message,
            ServerMessage::State { frame, .. } => {
                assert_eq!(frame.tick, 0, "spectator command moved the hands");
                frames += 1;
            }
            other => panic!("unexpected {other:?}"),
        }
    };
    assert!(refused.contains("spectator"));
    for _ in 0..10 {
        assert_eq!(next_frame(&mut spectator).await.tick, 0);
        frames += 1;
    }
    assert!(frames >= 10);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn driver_disconnect_records_an_incomplete_trial() {
    let dir = tempfile::tempdir().unwrap();
    let opts = SessionOptions {
        record: Some(dir.path().to_path_buf()),
        ..SessionOptions::default()
    };
    let server = Server::start(opts).await;
    let (mut ws, _) = server.connect().await;
    ws.send(command(start_hands(), 0.0, Action::None)).await.unwrap();
    while next_frame(&mut ws).await.tick < 200 {}
    ws.close(None).await.unwrap();
    drop(ws);

    let deadline = Instant::now() + Duration::from_secs(5);
    let logs = loop {
        let logs = recorded(dir.path());
        if !logs.is_empty() || Instant::now() > deadline {
            break logs;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    };
    assert_eq!(logs.len(), 1);
    assert!(logs[0].meta.incomplete);
    assert!(!logs[0].meta.success);
    assert!(logs[0].len() > 40);

    // The next client takes over the wheel.
    let (_ws, role) = server.connect().await;
    assert_eq!(role, Role::Driver);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn live_agent_matches_headless_run() {
    let dir = tempfile::tempdir().unwrap();
    let opts = SessionOptions {
        record: Some(dir.path().to_path_buf()),
        ..SessionOptions::default()
    };
    let server = Server::start(opts).await;
    let (mut ws, _) = server.connect().await;
    let profile = AgentProfile::default();
    let frames = drive_agent(&mut ws, &profile, MaterialId::HSHB, TargetLabel::C).await;
    let last = frames.last().unwrap();
    assert_eq!(last.phase, TrialPhase::Done);
    assert_eq!(frames.iter().filter(|f| f.cue == Cue::Placed).count(), 1);

    let headless = run_scripted_trial(
        TrialSetup::new(SceneConfig::default(), Material::lookup(MaterialId::HSHB), TargetLabel::C),
        &profile,
    )
    .unwrap();
    tokio::time::sleep(Duration::from_millis(200)).await;
    let live = recorded(dir.path()).pop().expect("trial recorded");
    assert!(live.meta.success);
    let (t_live, t_head) = (execution_time(&live).unwrap(), execution_time(&headless).unwrap());
    // Tracking lag plus one frame of input latency.
    assert!((t_live - t_head).abs() < 0.15, "live {t_live} s vs headless {t_head} s");
    let (a, b) = (live.rows.last().unwrap().cube, headless.rows.last().unwrap().cube);
    assert!((a - b).norm() < 0.01, "cube ends {:.1} mm from the headless run", 1e3 * (a - b).norm());
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn break_cue_is_sent_exactly_once() {
    let opts = SessionOptions {
        material: MaterialId::HSLB,
        ..SessionOptions::default()
    };
    let server = Server::start(opts).await;
    let (mut ws, _) = server.connect().await;
    let profile = AgentProfile {
        grip_setpoint: 6.0,
        ..Default::default()
    };
    let mut frames = drive_agent(&mut ws, &profile, MaterialId::HSLB, TargetLabel::C).await;
    // Keep listening a little past the end of the trial.
    for _ in 0..30 {
        frames.push(next_frame(&mut ws).await);
    }
    assert_eq!(frames.iter().filter(|f| f.cue == Cue::Broke).count(), 1);
    assert!(frames.iter().all(|f| matches!(f.cue, Cue::None | Cue::Broke)));
    assert_eq!(frames.last().unwrap().phase, TrialPhase::FailedBreak);

    // Selecting another material starts a fresh trial.
    ws.send(command(start_hands(), 0.0, Action::SelectMaterial(MaterialId::MSHB))).await.unwrap();
    let f = loop {
        let f = next_frame(&mut ws).await;
        if f.material == MaterialId::MSHB {
            break f;
        }
    };
    assert_eq!(f.trial, 1);
    server.stop().await;
}
