//! Prompt assembly for model-backed planning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::api::ApiSpec;
use super::catalog::ActionCatalog;
use super::ExampleTask;
use crate::fusion::Intention;
use crate::geometry::Scene;
use crate::workcell::RobotState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("action `{0}` is not in the action catalog")]
    UnknownAction(String),
    #[error("prompt section `{0}` is empty")]
    EmptySection(&'static str),
    #[error("payload serialization failed: {0}")]
    Payload(String),
}

/// What the model is asked to plan for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentionPayload {
    pub intention: Intention,
    pub scene: Scene,
    pub robot: RobotState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub api_constraints: String,
    pub action_definitions: String,
    pub example_tasks: String,
    /// JSON of an [`IntentionPayload`].
    pub intention_payload: String,
}

const OUTPUT_RULES: &str = "\
Answer with the plan only: one call per line, written as name(key=value, ...)
with every argument named and every value a plain decimal number (no exponents).
Lines starting with # are comments. Do not add prose, code fences or any other text.
Use only the calls listed above. Keep every transit high enough to clear the objects
it passes over, and never close the gripper while it is already holding something.
";

impl PromptBundle {
    pub fn payload(&self) -> Result<IntentionPayload, serde_json::Error> {
        serde_json::from_str(&self.intention_payload)
    }

    /// Fixed instructions: the first three sections.
    pub fn system_text(&self) -> String {
        format!(
            "## API constraints\n{}\n{}\n## Action definitions\n{}\n## Example tasks\n{}",
            self.api_constraints, OUTPUT_RULES, self.action_definitions, self.example_tasks
        )
    }

    /// The per-request part.
    pub fn user_text(&self) -> String {
        format!(
            "## Task\nProduce the plan for this intention, scene and robot state:\n{}\n",
            self.intention_payload
        )
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.system_text(), self.user_text())
    }
}

pub fn render_examples(examples: &[ExampleTask]) -> String {
    let mut out = String::new();
    for (i, ex) in examples.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Request: {}\nPlan:\n{}", ex.request, ex.plan));
        if !ex.plan.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

/// Assembles the three fixed sections and the JSON payload. Byte-identical
/// for identical inputs.
pub fn build_prompt(
    intent: &Intention,
    scene: &Scene,
    robot: &RobotState,
    catalog: &ActionCatalog,
    api: &ApiSpec,
    examples: &[ExampleTask],
) -> Result<PromptBundle, PromptError> {
    for sub in &intent.subcommands {
        if catalog.get(&sub.action).is_none() {
            return Err(PromptError::UnknownAction(sub.action.clone()));
        }
    }
    let payload = IntentionPayload {
        intention: intent.clone(),
        scene: scene.clone(),
        robot: robot.clone(),
    };
    let bundle = PromptBundle {
        api_constraints: api.describe(),
        action_definitions: catalog.describe(),
        example_tasks: render_examples(examples),
        intention_payload: serde_json::to_string_pretty(&payload).map_err(|e| PromptError::Payload(e.to_string()))?,
    };
    for (name, text) in [
        ("api_constraints", &bundle.api_constraints),
        ("action_definitions", &bundle.action_definitions),
        ("example_tasks", &bundle.example_tasks),
    ] {
        if text.trim().is_empty() {
            return Err(PromptError::EmptySection(name));
        }
    }
    Ok(bundle)
}

pub fn default_examples() -> Vec<ExampleTask> {
    vec![
        ExampleTask {
            request: "(pick, cup#1) with cup#1 at (0.3, 0.1, 0.05), height 0.1, width 0.07; robot at home (0.25, 0, 0.4), gripper open, holding nothing".into(),
            plan: "\
move_linear(x=0.3, y=0.1, z=0.151, roll=0, pitch=0, yaw=0)
move_vertical(dz=-0.101)
close_gripper(angle=0.333333333)
move_vertical(dz=0.101)
"
            .into(),
        },
        ExampleTask {
            request: "(pour, bowl#3, 90 degrees) holding cup#1 at the gripper; bowl#3 at (0.45, 0.2, 0.035), height 0.07, width 0.15; robot at (0.3, 0.1, 0.151)".into(),
            plan: "\
move_linear(x=0.45, y=0.2, z=0.15, roll=0, pitch=0, yaw=0)
rotate_ee(angle=90)
rotate_ee(angle=-90)
"
            .into(),
        },
        ExampleTask {
            request: "(home) with the robot at (0.45, 0.2, 0.15), nothing in the way".into(),
            plan: "go_home()\n".into(),
        },
    ]
}
