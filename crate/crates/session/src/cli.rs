//! Subcommands of the `bimanual` binary.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use bimanual_core::agents::LeadHand;
use bimanual_core::config::ConfigError;
use bimanual_core::harness::{run_experiment, ExperimentContext, HarnessError, Replayer};
use bimanual_core::log::{list_trials, LogError};
use bimanual_core::metrics::{analyze, summarize, write_summary_csv, MetricsError};
use bimanual_core::world::{MaterialId, TargetLabel};
use bimanual_core::{Config, TrialLog};

use crate::protocol::ServerMessage;
use crate::session::{frame_from_row, SessionOptions};

#[derive(Debug, Parser)]
#[command(name = "bimanual", version, about = "Bimanual haptic manipulation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch experiment with the scripted agent.
    Run(RunArgs),
    /// Compute metrics and the condition summary for recorded trials.
    Analyze(AnalyzeArgs),
    /// Print a recorded trial as paced state frames, one JSON object per line.
    Replay(ReplayArgs),
    /// Serve a live session over a websocket.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Lead {
    Symmetric,
    Left,
    Right,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config with scene, physics, agent, plan and material overrides.
    #[arg(long = "config", visible_alias = "scene", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory for trials/, metrics.json and summary.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Materials to include, e.g. HSHB,LSHB.
    #[arg(long, value_delimiter = ',')]
    pub materials: Vec<MaterialId>,
    /// Targets to include, e.g. L,C,R.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<TargetLabel>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Warm-up trials before the first block.
    #[arg(long)]
    pub familiarization: Option<usize>,
    /// Keep the blocks and targets in catalog order.
    #[arg(long)]
    pub fixed_order: bool,
    /// Grip force each hand regulates to, N.
    #[arg(long)]
    pub setpoint: Option<f64>,
    /// Standard deviation of the per-tick grip jitter, N.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_enum)]
    pub lead: Option<Lead>,
    #[arg(long)]
    pub lead_gain: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory of trial CSV files with their JSON sidecars.
    #[arg(long, value_name = "DIR")]
    pub logs: PathBuf,
    /// Where to write the summary CSV; per-trial metrics go next to it as
    /// JSON. Printed to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long, value_name = "FILE")]
    pub log: PathBuf,
    /// Playback speed relative to real time.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// JSON config with scene, physics and material overrides.
    #[arg(long = "scene", visible_alias = "config", value_name = "FILE")]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value = "HSHB")]
    pub material: MaterialId,
    #[arg(long, default_value = "C")]
    pub target: TargetLabel,
    /// Record every trial of the session into this directory.
    #[arg(long, value_name = "DIR")]
    pub record: Option<PathBuf>,
    /// Serve the browser client's static files from this directory.
    #[arg(long, value_name = "DIR")]
    pub assets: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 usage or configuration, 2 data, 3 physics divergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Harness(e) => e.exit_code() as u8,
            CliError::Log(_) | CliError::Metrics(_) | CliError::Io(_) => 2,
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze_logs(a),
        Command::Replay(a) => replay(a),
        Command::Serve(a) => serve(a),
    }
}

fn context(cfg: &Config) -> Result<ExperimentContext, CliError> {
    Ok(ExperimentContext {
        scene: cfg.scene.build().map_err(ConfigError::from)?,
        params: cfg.physics.clone(),
        profile: cfg.agent.clone(),
        materials: cfg.materials.clone(),
    })
}

pub fn run(a: RunArgs) -> Result<(), CliError> {
    let cfg = Config::resolve(a.config.as_deref())?;
    let mut plan = cfg.plan.clone();
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if !a.materials.is_empty() {
        plan.materials = a.materials;
    }
    if !a.targets.is_empty() {
        plan.targets = a.targets;
    }
    if let Some(r) = a.reps {
        plan.reps_per_target = r;
    }
    if let Some(f) = a.familiarization {
        plan.familiarization = f;
    }
    if a.fixed_order {
        plan.randomize = false;
    }
    let mut ctx = context(&cfg)?;
    let p = &mut ctx.profile;
    if let Some(sp) = a.setpoint {
        p.grip_setpoint = sp;
    }
    if let Some(n) = a.noise {
        p.noise_std = n;
    }
    if let Some(lead) = a.lead {
        p.lead_hand = match lead {
            Lead::Symmetric => LeadHand::Symmetric,
            Lead::Left => LeadHand::Left,
            Lead::Right => LeadHand::Right,
        };
    }
    if let Some(g) = a.lead_gain {
        p.lead_gain = g;
    }

    let out = run_experiment(&plan, &ctx, Some(&a.out))?;
    let ok = out.reports.iter().filter(|r| r.success).count();
    println!(
        "{} trials, {} successful; wrote {}",
        out.logs.len(),
        ok,
        a.out.display()
    );
    Ok(())
}

pub fn analyze_logs(a: AnalyzeArgs) -> Result<(), CliError> {
    let paths = list_trials(&a.logs)?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no trial logs in {}", a.logs.display())));
    }
    let logs = paths.iter().map(|p| TrialLog::read(p)).collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<_> = logs.iter().map(analyze).collect();
    let summary = summarize(&reports)?;
    match a.report {
        Some(path) => {
            let json = serde_json::to_string_pretty(&reports).map_err(std::io::Error::other)?;
            std::fs::write(path.with_extension("json"), json + "\n")?;
            let file = std::fs::File::create(&path)?;
            write_summary_csv(&summary, std::io::BufWriter::new(file)).map_err(std::io::Error::other)?;
            println!("{} trials analyzed; wrote {}", reports.len(), path.display());
        }
        None => {
            write_summary_csv(&summary, std::io::stdout().lock()).map_err(std::io::Error::other)?;
        }
    }
    Ok(())
}

pub fn replay(a: ReplayArgs) -> Result<(), CliError> {
    let log = TrialLog::read(&a.log)?;
    let player = Replayer::new(&log, a.speed).map_err(HarnessError::from)?;
    let mut out = std::io::stdout().lock();
    player.play(|row| writeln!(out, "{}", ServerMessage::state(frame_from_row(&log, row)).to_json()).is_ok());
    Ok(())
}

pub fn serve(a: ServeArgs) -> Result<(), CliError> {
    let cfg = Config::resolve(a.scene.as_deref())?;
    let scene = cfg.scene.build().map_err(ConfigError::from)?;
    cfg.physics.validate().map_err(CliError::Usage)?;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad listen address: {e}")))?;
    if let Some(dir) = &a.assets {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("assets directory {} does not exist", dir.display())));
        }
    }
    let opts = SessionOptions {
        scene,
        params: cfg.physics.clone(),
        materials: cfg.materials.clone(),
        material: a.material,
        target: a.target,
        record: a.record,
        ..SessionOptions::default()
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        println!("session at ws://{}/session", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        crate::server::serve(listener, opts, a.assets, shutdown).await
    })?;
    Ok(())
}
