//! Top-level configuration file.
//!
//! Every section is optional; anything left out takes its default. The
//! shipped `config/default.toml` spells out the defaults in full.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::fusion::FusionConfig;
use crate::geometry::{CameraModel, Extrinsic, Vec3};
use crate::grammar::Lexicon;
use crate::planner::{ActionCatalog, ApiSpec, PlanContext, PlannerConfig};
use crate::workcell::WorkcellConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot write config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("inconsistent config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    /// Skeleton frames below this confidence produce no ray.
    pub min_skeleton_confidence: f64,
    /// Detections below this confidence are ignored.
    pub min_detection_confidence: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            min_skeleton_confidence: 0.3,
            min_detection_confidence: 0.3,
        }
    }
}

/// Default RGB-D camera: across the table from the robot, looking down at
/// the workspace.
pub fn default_camera() -> CameraModel {
    let ext = Extrinsic::look_at(Vec3::new(1.2, 0.0, 0.9), Vec3::new(0.3, 0.0, 0.0))
        .expect("default camera pose is valid");
    CameraModel::new(600.0, 600.0, 320.0, 240.0, 640, 480, ext).expect("default intrinsics are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub camera: CameraModel,
    pub perception: PerceptionConfig,
    pub fusion: FusionConfig,
    pub lexicon: Lexicon,
    pub api: ApiSpec,
    pub actions: ActionCatalog,
    pub planner: PlannerConfig,
    pub workcell: WorkcellConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            camera: default_camera(),
            perception: PerceptionConfig::default(),
            fusion: FusionConfig::default(),
            lexicon: Lexicon::default(),
            api: ApiSpec::default(),
            actions: ActionCatalog::default(),
            planner: PlannerConfig::default(),
            workcell: WorkcellConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Cross-section checks that single sections cannot make on their own.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for action in self.lexicon.action_names() {
            if self.actions.get(action).is_none() {
                return Err(ConfigError::Invalid(format!(
                    "lexicon action `{action}` has no catalog entry"
                )));
            }
        }
        self.actions
            .check_against(&self.api)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let f = &self.fusion;
        if !(f.alignment_window_s > 0.0 && f.reorder_tolerance_s >= 0.0 && f.selection_radius_m > 0.0) {
            return Err(ConfigError::Invalid(
                "fusion window and radius must be positive, tolerance non-negative".into(),
            ));
        }
        if f.ray_history_s < f.alignment_window_s + f.reorder_tolerance_s {
            return Err(ConfigError::Invalid(
                "ray history must cover the alignment window plus the reorder tolerance".into(),
            ));
        }
        let w = &self.workcell;
        if !(w.b_max > 0.0 && w.theta_min <= w.theta_max) {
            return Err(ConfigError::Invalid("gripper limits are inconsistent".into()));
        }
        if !(w.workspace.contains(&w.home.position())) {
            return Err(ConfigError::Invalid("home pose is outside the workspace".into()));
        }
        if !(w.workspace.contains(&w.bin.position())) {
            return Err(ConfigError::Invalid("bin pose is outside the workspace".into()));
        }
        Ok(())
    }

    pub fn plan_context(&self) -> PlanContext<'_> {
        PlanContext {
            catalog: &self.actions,
            api: &self.api,
            workcell: &self.workcell,
            planner: &self.planner,
        }
    }
}
