//! Batch experiments: a plan of (material, target) trials run on a worker
//! pool, persisted per trial, then analysed.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trial::{run_scripted_trial, TrialSetup};
use super::HarnessError;
use crate::agents::AgentProfile;
use crate::haptics::PhysicsParams;
use crate::log::TrialLog;
use crate::metrics::{analyze, summarize, write_summary_csv, MetricsReport, SummaryRow};
use crate::world::{Material, MaterialId, SceneConfig, TargetLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentPlan {
    /// Material blocks, in presentation order unless `randomize`.
    pub materials: Vec<MaterialId>,
    pub targets: Vec<TargetLabel>,
    pub reps_per_target: usize,
    /// Shuffle block order and the target sequence inside each block.
    pub randomize: bool,
    pub seed: u64,
    /// Warm-up trials run before the first block, flagged and left out of
    /// the summary.
    pub familiarization: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            materials: MaterialId::ALL.to_vec(),
            targets: TargetLabel::ALL.to_vec(),
            reps_per_target: 6,
            randomize: true,
            seed: 0,
            familiarization: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub index: usize,
    pub material: MaterialId,
    pub target: TargetLabel,
    pub seed: u64,
    pub familiarization: bool,
}

/// SplitMix64 finaliser; gives every trial an independent agent seed.
fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.materials.is_empty() || self.targets.is_empty() {
            return Err(HarnessError::Usage("plan needs at least one material and one target".into()));
        }
        if self.reps_per_target == 0 {
            return Err(HarnessError::Usage("reps per target must be at least 1".into()));
        }
        Ok(())
    }

    /// Trials per material block.
    pub fn block_len(&self) -> usize {
        self.targets.len() * self.reps_per_target
    }

    pub fn len(&self) -> usize {
        self.familiarization + self.materials.len() * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The full trial sequence in presentation order.
    pub fn trials(&self) -> Vec<PlannedTrial> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut blocks = self.materials.clone();
        if self.randomize {
            blocks.shuffle(&mut rng);
        }
        let mut seq: Vec<(MaterialId, TargetLabel, bool)> = Vec::with_capacity(self.len());
        let warmup = blocks[0];
        seq.extend((0..self.familiarization).map(|k| (warmup, self.targets[k % self.targets.len()], true)));
        for &m in &blocks {
            let mut targets: Vec<TargetLabel> = (0..self.reps_per_target)
                .flat_map(|_| self.targets.iter().copied())
                .collect();
            if self.randomize {
                targets.shuffle(&mut rng);
            }
            seq.extend(targets.into_iter().map(|t| (m, t, false)));
        }
        seq.into_iter()
            .enumerate()
            .map(|(index, (material, target, familiarization))| PlannedTrial {
                index,
                material,
                target,
                seed: mix(self.seed, index as u64),
                familiarization,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub logs: Vec<TrialLog>,
    pub reports: Vec<MetricsReport>,
    pub summary: Vec<SummaryRow>,
}

/// Everything a batch needs besides the plan.
#[derive(Debug, Clone, Default)]
pub struct ExperimentContext {
    pub scene: SceneConfig,
    pub params: PhysicsParams,
    pub profile: AgentProfile,
    /// Material table to draw from; the standard catalog when empty.
    pub materials: Vec<Material>,
}

impl ExperimentContext {
    fn material(&self, id: MaterialId) -> Material {
        self.materials
            .iter()
            .find(|m| m.id == id)
            .cloned()
            .unwrap_or_else(|| Material::lookup(id))
    }
}

/// Run every planned trial, write `trials/`, `metrics.json` and
/// `summary.csv` under `out` when given, and return all results. Failed
/// trials are kept as data.
pub fn run_experiment(
    plan: &ExperimentPlan,
    ctx: &ExperimentContext,
    out: Option<&Path>,
) -> Result<ExperimentOutput, HarnessError> {
    plan.validate()?;
    ctx.profile.validate()?;
    let logs: Vec<TrialLog> = plan
        .trials()
        .into_par_iter()
        .map(|p| {
            let mut setup = TrialSetup::new(ctx.scene.clone(), ctx.material(p.material), p.target);
            setup.params = ctx.params.clone();
            setup.trial_index = p.index;
            setup.seed = p.seed;
            setup.familiarization = p.familiarization;
            let profile = AgentProfile {
                seed: p.seed,
                ..ctx.profile.clone()
            };
            run_scripted_trial(setup, &profile)
        })
        .collect::<Result<_, _>>()?;
    let reports: Vec<MetricsReport> = logs.par_iter().map(analyze).collect();
    let summary = if reports.iter().all(|r| r.familiarization) {
        Vec::new()
    } else {
        summarize(&reports)?
    };
    if let Some(dir) = out {
        let trials = dir.join("trials");
        logs.par_iter()
            .try_for_each(|log| log.write_to_dir(&trials).map(|_| ()))?;
        write_reports(dir, &reports, &summary)?;
    }
    Ok(ExperimentOutput { logs, reports, summary })
}

/// Write `metrics.json` and `summary.csv` into `dir`.
pub fn write_reports(dir: &Path, reports: &[MetricsReport], summary: &[SummaryRow]) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(reports).map_err(std::io::Error::other)?;
    fs::write(dir.join("metrics.json"), json + "\n")?;
    let file = fs::File::create(dir.join("summary.csv"))?;
    write_summary_csv(summary, std::io::BufWriter::new(file)).map_err(std::io::Error::other)?;
    Ok(())
}
