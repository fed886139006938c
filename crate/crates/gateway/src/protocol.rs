//! Wire messages. Every frame is one JSON object:
//!
//! ```json
//! {"v":1,"kind":"word","session_id":"s1","timestamp":1.25,"payload":{"text":"pick"}}
//! ```
//!
//! Inbound frames carry the client timestamp of the event. Outbound frames
//! carry `seq` (per-session, increasing) and `reflects`, the sequence number
//! the server assigned to the inbound frame that caused them (0 for frames
//! produced at session open).

use serde::{Deserialize, Serialize};

use intentcell_core::episode::EpisodeHeader;
use intentcell_core::fusion::{Intention, IntentionSummary, PendingSubCommand, Phase};
use intentcell_core::geometry::{ObjectId, Scene, Vec3};
use intentcell_core::planner::{ActionStep, Provenance};
use intentcell_core::session::Verdict;
use intentcell_core::workcell::{RobotState, TrajectoryEntry};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPayload {
    pub text: String,
    /// Defaults to the frame timestamp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Pointing line in the robot base frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPayload {
    pub r1: Vec3,
    pub r2: Vec3,
}

/// Pixel on the configured camera image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchPayload {
    pub u: f64,
    pub v: f64,
}

/// Empty asks for the current state; `preset` or `header` reseeds the
/// session from a named preset or an episode header record.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<EpisodeHeader>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Inbound {
    Word(WordPayload),
    Ray(RayPayload),
    Touch(TouchPayload),
    SceneRequest(SceneRequest),
}

impl Inbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Inbound::Word(_) => "word",
            Inbound::Ray(_) => "ray",
            Inbound::Touch(_) => "touch",
            Inbound::SceneRequest(_) => "scene_request",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InboundMessage {
    #[serde(default = "version")]
    pub v: u32,
    pub session_id: String,
    pub timestamp: f64,
    #[serde(flatten)]
    pub body: Inbound,
}

fn version() -> u32 {
    PROTOCOL_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateUpdate {
    pub phase: Phase,
    pub pending: Vec<PendingSubCommand>,
    pub robot: RobotState,
    /// Sent on open, on request and after execution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFeedback {
    pub object: ObjectId,
    pub class: String,
    pub distance: f64,
    /// True for hover; false for the binding made at a pronoun.
    pub provisional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentionEmitted {
    pub summary: IntentionSummary,
    pub text: String,
    pub intention: Intention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPayload {
    pub provenance: Provenance,
    pub text: String,
    pub steps: Vec<ActionStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Outbound {
    StateUpdate(StateUpdate),
    SelectionFeedback(SelectionFeedback),
    IntentionEmitted(IntentionEmitted),
    Plan(PlanPayload),
    Verdict(Verdict),
    TrajectoryFrame(TrajectoryEntry),
    Error(ErrorPayload),
}

impl Outbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Outbound::StateUpdate(_) => "state_update",
            Outbound::SelectionFeedback(_) => "selection_feedback",
            Outbound::IntentionEmitted(_) => "intention_emitted",
            Outbound::Plan(_) => "plan",
            Outbound::Verdict(_) => "verdict",
            Outbound::TrajectoryFrame(_) => "trajectory_frame",
            Outbound::Error(_) => "error",
        }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Outbound::Error(ErrorPayload {
            code: code.into(),
            message: message.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutboundMessage {
    pub v: u32,
    pub session_id: String,
    /// Client time of the event this frame reflects.
    pub timestamp: f64,
    pub seq: u64,
    pub reflects: u64,
    #[serde(flatten)]
    pub body: Outbound,
}

impl OutboundMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialize")
    }
}
