//! Recorded multimodal episodes.
//!
//! An episode file is JSON lines. Each record carries a `stream` tag; the
//! first record is the `header`. Lines that are blank or start with `#` are
//! skipped so fixtures can carry notes.
//!
//! ```text
//! {"stream":"header","name":"pick-cup","preset":"two-cups-bowl-plate"}
//! {"stream":"skeleton","timestamp":0.9,"right_elbow":[..],"right_wrist":[..],"confidence":0.9}
//! {"stream":"word","text":"pick","t_start":0.5,"t_end":0.75}
//! ```
//!
//! Skeleton joints are in the camera frame; rays and touches are resolved
//! through the configured camera. Explicit `ray` records are already in the
//! robot base frame.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

use crate::fusion::IntentionSummary;
use crate::geometry::{DeicticRay, Detection, ObjectId, Scene, SkeletonFrame, Vec3};
use crate::grammar::WordToken;
use crate::presets::preset;
use crate::workcell::{RobotState, WorkcellConfig, WorkcellEvent, WorkcellState};

pub const EPISODE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("episode has no header record")]
    MissingHeader,
    #[error("line {line}: second header record")]
    DuplicateHeader { line: usize },
    #[error("line {line}: unsupported episode version {v}")]
    UnsupportedVersion { line: usize, v: u32 },
    #[error("line {line}: {stream} timestamp {t} goes backwards")]
    NonMonotonic {
        line: usize,
        stream: &'static str,
        t: f64,
    },
    #[error("unknown scene preset `{0}`")]
    UnknownScenePreset(String),
    #[error("header must give exactly one of `preset` or `scene`")]
    SceneSource,
    #[error("initially held object {0} is not in the scene")]
    UnknownHeldObject(ObjectId),
    #[error("expectation references object {0}, which is neither in the scene nor detected")]
    UnknownExpectedObject(ObjectId),
}

/// Condition on the final workcell state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    RobotAtHome,
    Holding { object: ObjectId },
    GripperEmpty,
    /// Object center within `tol` of `(x, y)` in the horizontal plane.
    ObjectAt {
        object: ObjectId,
        x: f64,
        y: f64,
        tol: f64,
    },
    /// Object center inside the support's footprint.
    ObjectOver { object: ObjectId, support: ObjectId },
    /// Object released at the bin.
    InBin { object: ObjectId },
    Poured { from: ObjectId, into: ObjectId },
}

impl Predicate {
    pub fn holds(&self, st: &WorkcellState, cfg: &WorkcellConfig) -> bool {
        match self {
            Predicate::RobotAtHome => (st.robot.pose.position() - cfg.home.position()).norm() < 1e-9,
            Predicate::Holding { object } => st.robot.holding == Some(*object),
            Predicate::GripperEmpty => st.robot.holding.is_none(),
            Predicate::ObjectAt { object, x, y, tol } => st
                .scene
                .get(*object)
                .is_some_and(|o| (o.position.xy() - Vec3::new(*x, *y, 0.0).xy()).norm() <= *tol),
            Predicate::ObjectOver { object, support } => match (st.scene.get(*object), st.scene.get(*support)) {
                (Some(o), Some(s)) => s.footprint().contains(o.position.x, o.position.y),
                _ => false,
            },
            Predicate::InBin { object } => {
                st.robot.holding != Some(*object)
                    && st.scene.get(*object).is_some_and(|o| {
                        (o.position.xy() - cfg.bin.position().xy()).norm() < 1e-6
                    })
            }
            Predicate::Poured { from, into } => st
                .events()
                .any(|e| matches!(e, WorkcellEvent::Poured { from: f, into: i } if f == from && i == into)),
        }
    }

    fn objects(&self) -> Vec<ObjectId> {
        match self {
            Predicate::RobotAtHome | Predicate::GripperEmpty => vec![],
            Predicate::Holding { object } | Predicate::ObjectAt { object, .. } | Predicate::InBin { object } => {
                vec![*object]
            }
            Predicate::ObjectOver { object, support } => vec![*object, *support],
            Predicate::Poured { from, into } => vec![*from, *into],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intention: Option<IntentionSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeHeader {
    #[serde(default = "version")]
    pub v: u32,
    pub name: String,
    /// Task label used for per-task breakdowns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotState>,
    /// Object already in the gripper at the start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

fn version() -> u32 {
    EPISODE_VERSION
}

impl EpisodeHeader {
    pub fn new(name: impl Into<String>, preset: impl Into<String>) -> Self {
        Self {
            v: EPISODE_VERSION,
            name: name.into(),
            task: None,
            preset: Some(preset.into()),
            scene: None,
            robot: None,
            holding: None,
            expect: None,
        }
    }

    pub fn initial_scene(&self) -> Result<Scene, EpisodeError> {
        match (&self.preset, &self.scene) {
            (Some(name), None) => preset(name).ok_or_else(|| EpisodeError::UnknownScenePreset(name.clone())),
            (None, Some(scene)) => Ok(scene.clone()),
            _ => Err(EpisodeError::SceneSource),
        }
    }

    pub fn initial_state(&self, cfg: &WorkcellConfig) -> Result<WorkcellState, EpisodeError> {
        let scene = self.initial_scene()?;
        let robot = self.robot.clone().unwrap_or_else(|| RobotState::at_home(cfg));
        match self.holding {
            Some(id) => WorkcellState::holding(robot, scene, id, cfg).ok_or(EpisodeError::UnknownHeldObject(id)),
            None => Ok(WorkcellState::new(robot, scene)),
        }
    }

    pub fn task_label(&self) -> String {
        self.task.clone().unwrap_or_else(|| self.name.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedDetection {
    pub track_id: ObjectId,
    #[serde(flatten)]
    pub detection: Detection,
}

/// A tap on the camera image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Touch {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// One timestamped input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stream", rename_all = "snake_case")]
pub enum InputEvent {
    Word(WordToken),
    Skeleton(SkeletonFrame),
    Detection(TrackedDetection),
    Touch(Touch),
    Ray(DeicticRay),
}

impl InputEvent {
    /// Time at which the event is complete: word end, frame or ray stamp.
    pub fn timestamp(&self) -> f64 {
        match self {
            InputEvent::Word(w) => w.t_end,
            InputEvent::Skeleton(s) => s.timestamp,
            InputEvent::Detection(d) => d.detection.timestamp,
            InputEvent::Touch(t) => t.t,
            InputEvent::Ray(r) => r.timestamp,
        }
    }

    pub fn stream(&self) -> &'static str {
        match self {
            InputEvent::Word(_) => "word",
            InputEvent::Skeleton(_) => "skeleton",
            InputEvent::Detection(_) => "detection",
            InputEvent::Touch(_) => "touch",
            InputEvent::Ray(_) => "ray",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stream", rename_all = "snake_case")]
pub enum EpisodeRecord {
    Header(EpisodeHeader),
    Word(WordToken),
    Skeleton(SkeletonFrame),
    Detection(TrackedDetection),
    Touch(Touch),
    Ray(DeicticRay),
}

impl From<InputEvent> for EpisodeRecord {
    fn from(ev: InputEvent) -> Self {
        match ev {
            InputEvent::Word(w) => EpisodeRecord::Word(w),
            InputEvent::Skeleton(s) => EpisodeRecord::Skeleton(s),
            InputEvent::Detection(d) => EpisodeRecord::Detection(d),
            InputEvent::Touch(t) => EpisodeRecord::Touch(t),
            InputEvent::Ray(r) => EpisodeRecord::Ray(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub header: EpisodeHeader,
    /// In file order.
    pub events: Vec<InputEvent>,
}

impl Episode {
    pub fn parse(text: &str) -> Result<Self, EpisodeError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut last: BTreeMap<&'static str, f64> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let rec: EpisodeRecord =
                serde_json::from_str(trimmed).map_err(|source| EpisodeError::Json { line, source })?;
            let ev = match rec {
                EpisodeRecord::Header(h) => {
                    if header.is_some() {
                        return Err(EpisodeError::DuplicateHeader { line });
                    }
                    if h.v != EPISODE_VERSION {
                        return Err(EpisodeError::UnsupportedVersion { line, v: h.v });
                    }
                    header = Some(h);
                    continue;
                }
                EpisodeRecord::Word(w) => InputEvent::Word(w),
                EpisodeRecord::Skeleton(s) => InputEvent::Skeleton(s),
                EpisodeRecord::Detection(d) => InputEvent::Detection(d),
                EpisodeRecord::Touch(t) => InputEvent::Touch(t),
                EpisodeRecord::Ray(r) => InputEvent::Ray(r),
            };
            if header.is_none() {
                return Err(EpisodeError::MissingHeader);
            }
            let (stream, t) = (ev.stream(), ev.timestamp());
            if last.get(stream).is_some_and(|prev| t < *prev) {
                return Err(EpisodeError::NonMonotonic { line, stream, t });
            }
            last.insert(stream, t);
            events.push(ev);
        }
        let episode = Episode {
            header: header.ok_or(EpisodeError::MissingHeader)?,
            events,
        };
        episode.check_references()?;
        Ok(episode)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EpisodeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| EpisodeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn check_references(&self) -> Result<(), EpisodeError> {
        let scene = self.header.initial_scene()?;
        if let Some(id) = self.header.holding {
            if scene.get(id).is_none() {
                return Err(EpisodeError::UnknownHeldObject(id));
            }
        }
        let mut known: BTreeSet<ObjectId> = scene.objects().iter().map(|o| o.id).collect();
        known.extend(self.events.iter().filter_map(|e| match e {
            InputEvent::Detection(d) => Some(d.track_id),
            _ => None,
        }));
        if let Some(exp) = &self.header.expect {
            let from_intent = exp
                .intention
                .iter()
                .flat_map(|i| i.subcommands.iter().filter_map(|s| s.object));
            let from_preds = exp.predicates.iter().flat_map(|p| p.objects());
            for id in from_intent.chain(from_preds) {
                if !known.contains(&id) {
                    return Err(EpisodeError::UnknownExpectedObject(id));
                }
            }
        }
        Ok(())
    }

    /// Events in global timestamp order; ties keep file order.
    pub fn ordered_events(&self) -> Vec<&InputEvent> {
        let mut evs: Vec<&InputEvent> = self.events.iter().collect();
        evs.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));
        evs
    }

    /// One record per line, header first.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&EpisodeRecord::Header(self.header.clone())).expect("header serializes");
        out.push('\n');
        for ev in &self.events {
            out.push_str(&serde_json::to_string(&EpisodeRecord::from(ev.clone())).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}
