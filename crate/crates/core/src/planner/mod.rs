//! Intention → validated [`ActionSequence`].
//!
//! Plans come from either the deterministic rule planner or a remote
//! language model. Model output goes through [`parse::parse_plan`]; every
//! sequence, whatever its source, must pass [`validate::validate_sequence`]
//! before it reaches the workcell.

pub mod api;
pub mod catalog;
pub mod llm;
pub mod parse;
pub mod prompt;
pub mod rule;
pub mod validate;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::fusion::Intention;
use crate::geometry::Scene;
use crate::workcell::{RobotState, WorkcellConfig};

pub use api::{ActionStep, ApiSpec, Command, Primitive};
pub use catalog::{ActionCatalog, ActionDef, MacroStep};
pub use llm::{LlmClient, LlmConfig, LlmError};
pub use parse::{parse_plan, ParseError};
pub use prompt::{build_prompt, PromptBundle, PromptError};
pub use rule::{plan_rule, RuleError};
pub use validate::{validate_sequence, ValidationError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Rule,
    Llm { model: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Rule => f.write_str("rule"),
            Provenance::Llm { model } => write!(f, "llm({model})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("an action sequence needs at least one step")]
pub struct EmptySequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr")]
pub struct ActionSequence {
    steps: Vec<ActionStep>,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct SequenceRepr {
    steps: Vec<ActionStep>,
    provenance: Provenance,
}

impl TryFrom<SequenceRepr> for ActionSequence {
    type Error = EmptySequence;

    fn try_from(r: SequenceRepr) -> Result<Self, EmptySequence> {
        ActionSequence::new(r.steps, r.provenance)
    }
}

impl ActionSequence {
    pub fn new(steps: Vec<ActionStep>, provenance: Provenance) -> Result<Self, EmptySequence> {
        if steps.is_empty() {
            return Err(EmptySequence);
        }
        Ok(Self { steps, provenance })
    }

    pub fn steps(&self) -> &[ActionStep] {
        &self.steps
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Plan text in the strict call grammar, one call per line.
    pub fn to_plan_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_plan_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    #[default]
    Rule,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleTask {
    pub request: String,
    pub plan: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub source: PlanSource,
    /// Use the rule planner when the model path fails. Off unless asked for.
    pub fallback_to_rule: bool,
    pub pour_default_deg: f64,
    /// Lowest transit altitude, even over an empty corridor.
    pub min_transit_z: f64,
    /// Added on top of the clearance requirement so transits never sit on
    /// the boundary.
    pub clearance_slack: f64,
    /// Gap left between a placed object and the top of its target.
    pub place_gap: f64,
    pub push_distance: f64,
    /// Point a `near` push moves toward; `far` moves away from it.
    pub near_anchor: [f64; 2],
    pub flush_pose: [f64; 3],
    pub flush_dip: f64,
    pub flush_wait_s: f64,
    pub llm: LlmConfig,
    pub example_tasks: Vec<ExampleTask>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            source: PlanSource::Rule,
            fallback_to_rule: false,
            pour_default_deg: 90.0,
            min_transit_z: 0.15,
            clearance_slack: 0.001,
            place_gap: 0.01,
            push_distance: 0.15,
            near_anchor: [0.0, 0.0],
            flush_pose: [0.55, -0.35, 0.30],
            flush_dip: 0.05,
            flush_wait_s: 2.0,
            llm: LlmConfig::default(),
            example_tasks: prompt::default_examples(),
        }
    }
}

/// Everything planning reads besides the intention itself.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub catalog: &'a ActionCatalog,
    pub api: &'a ApiSpec,
    pub workcell: &'a WorkcellConfig,
    pub planner: &'a PlannerConfig,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("plan source is llm but no client is configured")]
    NoClient,
}

impl PlanError {
    /// Stable machine-readable name of the underlying failure.
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::Rule(e) => e.code(),
            PlanError::Prompt(_) => "UnknownAction",
            PlanError::Llm(e) => e.code(),
            PlanError::Parse(e) => e.code(),
            PlanError::Validation(e) => e.code(),
            PlanError::NoClient => "NoClient",
        }
    }
}

/// Produces a validated plan from the configured source.
pub fn plan(
    intent: &Intention,
    scene: &Scene,
    robot: &RobotState,
    ctx: PlanContext<'_>,
    client: Option<&dyn LlmClient>,
) -> Result<ActionSequence, PlanError> {
    let seq = match ctx.planner.source {
        PlanSource::Rule => plan_rule(intent, scene, robot, ctx)?,
        PlanSource::Llm => match plan_via_llm(intent, scene, robot, ctx, client) {
            Ok(seq) => seq,
            Err(e) if ctx.planner.fallback_to_rule => {
                tracing::warn!(error = %e, "model plan failed, falling back to rule planner");
                plan_rule(intent, scene, robot, ctx)?
            }
            Err(e) => return Err(e),
        },
    };
    validate_sequence(&seq, scene, robot, ctx.api, ctx.workcell)?;
    Ok(seq)
}

fn plan_via_llm(
    intent: &Intention,
    scene: &Scene,
    robot: &RobotState,
    ctx: PlanContext<'_>,
    client: Option<&dyn LlmClient>,
) -> Result<ActionSequence, PlanError> {
    let client = client.ok_or(PlanError::NoClient)?;
    let bundle = build_prompt(intent, scene, robot, ctx.catalog, ctx.api, &ctx.planner.example_tasks)?;
    let text = llm::plan_llm(&bundle, client)?;
    let seq = parse_plan(
        &text,
        ctx.api,
        Provenance::Llm {
            model: client.model_id().to_string(),
        },
    )?;
    validate_sequence(&seq, scene, robot, ctx.api, ctx.workcell)?;
    Ok(seq)
}
