//! JSON configuration shared by the CLI, batch runs and live sessions.
//!
//! Every key is optional. A minimal file overriding only the agent:
//!
//! ```json
//! { "agent": { "grip_setpoint": 3.5, "lead_hand": "Right", "lead_gain": 0.3 } }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentProfile;
use crate::harness::ExperimentPlan;
use crate::haptics::PhysicsParams;
use crate::world::{
    build_scene_in, material_catalog, Material, RoomBounds, SceneConfig, WorldError, DEFAULT_CUBE_WIDTH,
    DEFAULT_START_DEPTH, DEFAULT_TARGET_RADIUS, DEFAULT_VR_SCALE,
};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "BIMANUAL_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSettings {
    pub target_radius: f64,
    /// Distance of the start point from the near wall, m.
    pub start_depth: f64,
    pub cube_width: f64,
    pub vr_scale: f64,
    pub room: RoomBounds,
}

impl Default for SceneSettings {
    fn default() -> Self {
        Self {
            target_radius: DEFAULT_TARGET_RADIUS,
            start_depth: DEFAULT_START_DEPTH,
            cube_width: DEFAULT_CUBE_WIDTH,
            vr_scale: DEFAULT_VR_SCALE,
            room: RoomBounds::default(),
        }
    }
}

impl SceneSettings {
    pub fn build(&self) -> Result<SceneConfig, WorldError> {
        build_scene_in(
            self.target_radius,
            self.start_depth,
            self.cube_width,
            self.room.clone(),
            self.vr_scale,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub scene: SceneSettings,
    pub physics: PhysicsParams,
    pub agent: AgentProfile,
    pub plan: ExperimentPlan,
    /// Replacement material table. Entries are validated on load.
    pub materials: Vec<Material>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scene: SceneSettings::default(),
            physics: PhysicsParams::default(),
            agent: AgentProfile::default(),
            plan: ExperimentPlan::default(),
            materials: material_catalog(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        // Re-derive stiffness so the table cannot disagree with itself.
        let materials = cfg
            .materials
            .iter()
            .map(|m| Material::new(m.id, m.epsilon, m.k0, m.damping, m.f_break, m.f_contact_min, m.texture_tag.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        cfg.scene.build()?;
        Ok(Config { materials, ..cfg })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    /// Load `explicit` if given, else the file named by `BIMANUAL_CONFIG`,
    /// else the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn material(&self, id: crate::world::MaterialId) -> Material {
        self.materials
            .iter()
            .find(|m| m.id == id)
            .cloned()
            .unwrap_or_else(|| Material::lookup(id))
    }
}
