//! The live simulation loop behind a socket session.
//!
//! One thread owns the physics. Hand targets from the driver arrive through
//! a last-write-wins slot, actions through a queue, and every frame period
//! the loop broadcasts an immutable [`StateFrame`].

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tokio::sync::broadcast;

use bimanual_core::harness::{TrialRunner, TrialSetup};
use bimanual_core::haptics::{visual_deformation, EeForce, PhysicsParams};
use bimanual_core::log::{Cue, LogRow, TrialLog};
use bimanual_core::world::{Material, MaterialId, RoomBounds, SceneConfig, TargetLabel, Vec3};
use bimanual_core::TrialPhase;

use crate::protocol::{Action, CubeFrame, HandFrame, StateFrame};

/// Frames buffered per subscriber before a slow one starts skipping.
const FRAME_BUFFER: usize = 256;
/// Physics ticks the loop may fall behind the wall clock before it gives
/// up on catching up.
const MAX_BACKLOG: u64 = 50;

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub scene: SceneConfig,
    pub params: PhysicsParams,
    pub materials: Vec<Material>,
    pub material: MaterialId,
    pub target: TargetLabel,
    /// Directory that receives every finished or aborted trial.
    pub record: Option<PathBuf>,
    pub frame_rate_hz: f64,
    /// Time constant of the filter between client targets and the hands, s.
    pub tracking_tau: f64,
    pub max_duration: f64,
    /// Simulated seconds per wall-clock second.
    pub speed: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            params: PhysicsParams::default(),
            materials: bimanual_core::world::material_catalog(),
            material: MaterialId::HSHB,
            target: TargetLabel::C,
            record: None,
            frame_rate_hz: 60.0,
            tracking_tau: 0.030,
            max_duration: 120.0,
            speed: 1.0,
        }
    }
}

impl SessionOptions {
    fn material(&self, id: MaterialId) -> Material {
        self.materials
            .iter()
            .find(|m| m.id == id)
            .cloned()
            .unwrap_or_else(|| Material::lookup(id))
    }
}

#[derive(Debug)]
enum Control {
    Action(Action),
    DriverLeft,
}

#[derive(Debug, Clone, Copy)]
struct Targets {
    hands: [Vec3; 2],
    t_client: f64,
}

#[derive(Debug, Default)]
struct Shared {
    latest: Mutex<Option<Targets>>,
    driver: Mutex<Option<u64>>,
    next_client: AtomicU64,
    stop: AtomicBool,
}

/// Handle to a running session. Dropping it stops the physics thread and
/// records the trial in progress as incomplete.
pub struct Session {
    shared: Arc<Shared>,
    frames: broadcast::Sender<Arc<StateFrame>>,
    control: Mutex<mpsc::Sender<Control>>,
    room: RoomBounds,
    frame_rate_hz: f64,
    materials: Vec<Material>,
    thread: Option<JoinHandle<()>>,
}

impl Session {
    pub fn start(opts: SessionOptions) -> Session {
        let shared = Arc::new(Shared::default());
        let (frames, _) = broadcast::channel(FRAME_BUFFER);
        let (control, rx) = mpsc::channel();
        let room = opts.scene.room_bounds.clone();
        let frame_rate_hz = opts.frame_rate_hz;
        let materials = MaterialId::ALL.map(|id| opts.material(id)).to_vec();
        let thread = {
            let shared = shared.clone();
            let frames = frames.clone();
            thread::Builder::new()
                .name("physics".into())
                .spawn(move || Loop::new(opts, shared, frames, rx).run())
                .expect("spawn physics thread")
        };
        Session {
            shared,
            frames,
            control: Mutex::new(control),
            room,
            frame_rate_hz,
            materials,
            thread: Some(thread),
        }
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<StateFrame>> {
        self.frames.subscribe()
    }

    pub fn room(&self) -> &RoomBounds {
        &self.room
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    /// A fresh client id.
    pub fn connect(&self) -> u64 {
        self.shared.next_client.fetch_add(1, Ordering::Relaxed)
    }

    /// Make `client` the driver if nobody drives yet.
    pub fn try_drive(&self, client: u64) -> bool {
        let mut driver = self.shared.driver.lock().unwrap();
        match *driver {
            Some(d) => d == client,
            None => {
                *driver = Some(client);
                true
            }
        }
    }

    pub fn is_driver(&self, client: u64) -> bool {
        *self.shared.driver.lock().unwrap() == Some(client)
    }

    /// The client went away. A departing driver aborts the running trial.
    pub fn disconnect(&self, client: u64) {
        let mut driver = self.shared.driver.lock().unwrap();
        if *driver == Some(client) {
            *driver = None;
            *self.shared.latest.lock().unwrap() = None;
            self.send(Control::DriverLeft);
        }
    }

    /// Replace the pending hand targets. Older targets that the physics
    /// loop has not consumed yet are dropped.
    pub fn submit(&self, hands: [Vec3; 2], t_client: f64) {
        *self.shared.latest.lock().unwrap() = Some(Targets { hands, t_client });
    }

    pub fn act(&self, action: Action) {
        if action != Action::None {
            self.send(Control::Action(action));
        }
    }

    fn send(&self, c: Control) {
        // The loop only hangs up when the session is being dropped.
        let _ = self.control.lock().unwrap().send(c);
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

struct Running {
    runner: TrialRunner,
    hands: [Vec3; 2],
    pending_cue: Cue,
}

enum TrialState {
    /// Waiting for the driver's first command to place the hands.
    Waiting,
    Running(Box<Running>),
    /// Finished; the last frame is held until a reset.
    Ended(Box<StateFrame>),
}

struct Loop {
    opts: SessionOptions,
    shared: Arc<Shared>,
    frames: broadcast::Sender<Arc<StateFrame>>,
    control: mpsc::Receiver<Control>,
    material: MaterialId,
    target: TargetLabel,
    trial: usize,
    state: TrialState,
    last_t_client: Option<f64>,
    session_t: f64,
}

impl Loop {
    fn new(
        opts: SessionOptions,
        shared: Arc<Shared>,
        frames: broadcast::Sender<Arc<StateFrame>>,
        control: mpsc::Receiver<Control>,
    ) -> Self {
        Self {
            material: opts.material,
            target: opts.target,
            opts,
            shared,
            frames,
            control,
            trial: 0,
            state: TrialState::Waiting,
            last_t_client: None,
            session_t: 0.0,
        }
    }

    fn run(mut self) {
        let dt = self.opts.params.dt;
        let frame_dt = 1.0 / self.opts.frame_rate_hz;
        let speed = self.opts.speed;
        let clock = Instant::now();
        let mut ticks: u64 = 0;
        let mut next_frame = 0.0;
        while !self.shared.stop.load(Ordering::Relaxed) {
            while let Ok(c) = self.control.try_recv() {
                self.control_message(c);
            }
            let sim_now = clock.elapsed().as_secs_f64() * speed;
            let due = (sim_now / dt) as u64;
            if due > ticks + MAX_BACKLOG {
                ticks = due - MAX_BACKLOG;
            }
            while ticks < due {
                ticks += 1;
                self.session_t = ticks as f64 * dt;
                self.tick();
            }
            if self.session_t >= next_frame {
                self.publish();
                next_frame += frame_dt;
                if next_frame < self.session_t {
                    next_frame = self.session_t + frame_dt;
                }
            }
            let wake = ((ticks + 1) as f64 * dt).min(next_frame);
            let wait = (wake - clock.elapsed().as_secs_f64() * speed) / speed;
            if wait > 0.0 {
                thread::sleep(Duration::from_secs_f64(wait));
            }
        }
        self.end_trial(true);
    }

    fn control_message(&mut self, c: Control) {
        match c {
            Control::Action(Action::None) => {}
            Control::Action(Action::ResetTrial) => self.reset(),
            Control::Action(Action::SelectMaterial(m)) => {
                self.material = m;
                self.reset();
            }
            Control::Action(Action::SelectTarget(t)) => {
                self.target = t;
                self.reset();
            }
            Control::DriverLeft => self.reset(),
        }
    }

    fn reset(&mut self) {
        self.end_trial(true);
        self.state = TrialState::Waiting;
        *self.shared.latest.lock().unwrap() = None;
    }

    fn setup(&self) -> TrialSetup {
        let mut setup = TrialSetup::new(self.opts.scene.clone(), self.opts.material(self.material), self.target);
        setup.params = self.opts.params.clone();
        setup.trial_index = self.trial;
        setup.max_duration = self.opts.max_duration;
        setup
    }

    fn tick(&mut self) {
        let latest = *self.shared.latest.lock().unwrap();
        if let TrialState::Waiting = self.state {
            let Some(cmd) = latest else { return };
            let setup = self.setup();
            let cube = setup.initial_cube();
            match TrialRunner::new(setup, cube, cmd.hands) {
                Ok(runner) => {
                    let hands = [runner.state().ee[0].position, runner.state().ee[1].position];
                    self.state = TrialState::Running(Box::new(Running {
                        runner,
                        hands,
                        pending_cue: Cue::None,
                    }));
                }
                Err(e) => {
                    tracing::error!("cannot start trial: {e}");
                    // Wait for fresh input instead of retrying every tick.
                    *self.shared.latest.lock().unwrap() = None;
                    return;
                }
            }
        }
        let TrialState::Running(run) = &mut self.state else { return };
        if let Some(cmd) = latest {
            let alpha = 1.0 - (-self.opts.params.dt / self.opts.tracking_tau).exp();
            for (h, target) in run.hands.iter_mut().zip(cmd.hands) {
                *h += (target - *h) * alpha;
            }
            self.last_t_client = Some(cmd.t_client);
        }
        match run.runner.tick(run.hands) {
            Ok(rep) => {
                if let Some(c) = rep.cue {
                    run.pending_cue = c;
                }
            }
            Err(e) => {
                tracing::error!("trial {} stopped: {e}", self.trial);
                run.runner.abort();
            }
        }
        if run.runner.is_finished() {
            self.end_trial(false);
        }
    }

    /// Close the running trial, if any, and record its log. `abort` marks a
    /// trial that had not reached its end as incomplete.
    fn end_trial(&mut self, abort: bool) {
        let TrialState::Running(mut run) = std::mem::replace(&mut self.state, TrialState::Waiting) else {
            return;
        };
        if abort && !run.runner.is_finished() {
            run.runner.abort();
        }
        let mut last = frame_from_runner(&run.runner, self.trial, self.session_t, self.last_t_client);
        last.cue = run.pending_cue;
        let log = run.runner.finish();
        self.record(&log);
        self.trial += 1;
        self.state = TrialState::Ended(Box::new(last));
    }

    fn record(&self, log: &TrialLog) {
        let Some(dir) = &self.opts.record else { return };
        match log.write_to_dir(dir) {
            Ok(path) => tracing::info!("recorded {}", path.display()),
            Err(e) => tracing::error!("cannot record trial {}: {e}", log.meta.trial_index),
        }
    }

    fn publish(&mut self) {
        let frame = match &mut self.state {
            TrialState::Running(run) => {
                let mut f = frame_from_runner(&run.runner, self.trial, self.session_t, self.last_t_client);
                f.cue = std::mem::replace(&mut run.pending_cue, Cue::None);
                f
            }
            TrialState::Ended(last) => {
                let mut f = (**last).clone();
                f.t = self.session_t;
                // The cue of the final tick goes out once.
                last.cue = Cue::None;
                f
            }
            TrialState::Waiting => self.idle_frame(),
        };
        // Nobody listening is fine.
        let _ = self.frames.send(Arc::new(frame));
    }

    fn idle_frame(&self) -> StateFrame {
        let setup = self.setup();
        let cube = setup.initial_cube();
        let h = cube.half_width() + 0.1;
        let hands = self
            .shared
            .latest
            .lock()
            .unwrap()
            .map(|t| t.hands.map(|p| self.opts.scene.room_bounds.clamp(&p)))
            .unwrap_or([cube.position - Vec3::new(h, 0.0, 0.0), cube.position + Vec3::new(h, 0.0, 0.0)]);
        let idle = EeForce::zero();
        StateFrame {
            t: self.session_t,
            trial_t: 0.0,
            tick: 0,
            trial: self.trial,
            material: self.material,
            target: self.target,
            phase: TrialPhase::Idle,
            cube: CubeFrame {
                position: arr(&cube.position),
                width: cube.width0,
                held: false,
            },
            left: hand_frame(&hands[0], &hands[0], &idle, &setup.material),
            right: hand_frame(&hands[1], &hands[1], &idle, &setup.material),
            cue: Cue::None,
            last_t_client: self.last_t_client,
        }
    }
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn hand_frame(ee: &Vec3, go: &Vec3, force: &EeForce, mat: &Material) -> HandFrame {
    let (flatten, widen) = visual_deformation(force.penetration, mat);
    HandFrame {
        ee: arr(ee),
        god_object: arr(go),
        lateral_force: force.lateral(),
        force: arr(&force.f),
        flatten,
        widen,
    }
}

fn frame_from_runner(runner: &TrialRunner, trial: usize, t: f64, last_t_client: Option<f64>) -> StateFrame {
    let s = runner.state();
    let setup = runner.setup();
    let f = runner.forces();
    StateFrame {
        t,
        trial_t: runner.time(),
        tick: s.tick,
        trial,
        material: setup.material.id,
        target: setup.target,
        phase: runner.phase(),
        cube: CubeFrame {
            position: arr(&s.cube.position),
            width: s.cube.width0,
            held: s.cube.held,
        },
        left: hand_frame(&s.ee[0].position, &s.god_objects[0].position, &f[0], &setup.material),
        right: hand_frame(&s.ee[1].position, &s.god_objects[1].position, &f[1], &setup.material),
        cue: Cue::None,
        last_t_client,
    }
}

/// Frame for one recorded log row. Penetration is not logged, so the
/// deformation is recovered from the lateral force.
pub fn frame_from_row(log: &TrialLog, row: &LogRow) -> StateFrame {
    let mat = &log.meta.material;
    let hand = |i: usize| {
        let pen = row.force[i].x.abs() / mat.stiffness;
        let force = EeForce {
            f: row.force[i],
            penetration: pen,
        };
        hand_frame(&row.ee[i], &row.go[i], &force, mat)
    };
    StateFrame {
        t: row.t,
        trial_t: row.t,
        tick: (row.t / log.meta.dt_physics).round() as u64,
        trial: log.meta.trial_index,
        material: mat.id,
        target: log.meta.target,
        phase: row.phase,
        cube: CubeFrame {
            position: arr(&row.cube),
            width: log.meta.width0,
            held: row.phase.is_in_grip() && row.phase != TrialPhase::Grab,
        },
        left: hand(0),
        right: hand(1),
        cue: row.event,
        last_t_client: None,
    }
}
