//! One operator session: perception, fusion, planning and execution behind a
//! single event entry point. Episode replay and the live gateway both drive
//! this type, so they share one pipeline.

use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

use crate::config::Config;
use crate::episode::InputEvent;
use crate::fusion::{Encoder, FusionError, FusionNote, Intention};
use crate::geometry::{back_project, forearm_ray, DeicticRay, ObjectId};
use crate::grammar::{CommandAssembler, CommandToken};
use crate::planner::{plan, ActionSequence, LlmClient, PlanError};
use crate::workcell::{execute_step, TrajectoryEntry, WorkcellState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Perception,
    Fusion,
    Planning,
    Execution,
}

/// Outcome of one pipeline stage. Hard verdicts abort the current command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub stage: Stage,
    pub code: String,
    pub message: String,
    pub hard: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

impl Verdict {
    fn ok(stage: Stage, code: &str, message: impl Into<String>) -> Self {
        Self {
            stage,
            code: code.into(),
            message: message.into(),
            hard: false,
            step: None,
        }
    }

    fn fail(stage: Stage, code: &str, message: impl Into<String>, step: Option<usize>) -> Self {
        Self {
            stage,
            code: code.into(),
            message: message.into(),
            hard: true,
            step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case")]
pub enum SessionOutput {
    /// Advisory nearest match for the class being spoken.
    Hover {
        class: String,
        object: ObjectId,
        distance: f64,
        ray_t: f64,
    },
    Note(FusionNote),
    IntentionEmitted(Intention),
    Plan(ActionSequence),
    Verdict(Verdict),
    TrajectoryFrame(TrajectoryEntry),
}

/// Wall-clock seconds spent per stage. Not deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimes {
    pub perception_s: f64,
    pub fusion_s: f64,
    pub planning_s: f64,
    pub execution_s: f64,
}

impl StageTimes {
    pub fn add(&mut self, other: &StageTimes) {
        self.perception_s += other.perception_s;
        self.fusion_s += other.fusion_s;
        self.planning_s += other.planning_s;
        self.execution_s += other.execution_s;
    }
}

pub struct Session {
    config: Arc<Config>,
    times: StageTimes,
    encoder: Encoder,
    assembler: CommandAssembler,
    workcell: WorkcellState,
    client: Option<Arc<dyn LlmClient>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("encoder", &self.encoder)
            .field("workcell", &self.workcell)
            .field("client", &self.client.as_ref().map(|c| c.model_id().to_string()))
            .finish()
    }
}

impl Session {
    pub fn new(config: Arc<Config>, workcell: WorkcellState) -> Self {
        let encoder = Encoder::new(config.fusion.clone(), config.actions.dependency_map());
        Self {
            config,
            encoder,
            assembler: CommandAssembler::new(),
            workcell,
            client: None,
            times: StageTimes::default(),
        }
    }

    pub fn with_client(mut self, client: Arc<dyn LlmClient>) -> Self {
        self.client = Some(client);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn workcell(&self) -> &WorkcellState {
        &self.workcell
    }

    pub fn stage_times(&self) -> StageTimes {
        self.times
    }

    pub fn handle(&mut self, ev: &InputEvent) -> Vec<SessionOutput> {
        let start = Instant::now();
        let before = self.times;
        let mut out = Vec::new();
        match ev {
            InputEvent::Word(w) => {
                let tokens = self.assembler.push(w, &self.config.lexicon);
                for tok in tokens {
                    self.feed_token(&tok, &mut out);
                }
            }
            InputEvent::Skeleton(frame) => {
                match forearm_ray(frame, self.config.perception.min_skeleton_confidence) {
                    Ok(ray) => {
                        let ray = self.config.camera.ray_to_base(&ray);
                        self.feed_ray(ray, &mut out);
                    }
                    Err(e) => out.push(SessionOutput::Verdict(Verdict::ok(
                        Stage::Perception,
                        "FrameDropped",
                        e.to_string(),
                    ))),
                }
            }
            InputEvent::Touch(t) => match self.config.camera.pixel_ray(t.u, t.v, t.t) {
                Ok(ray) => self.feed_ray(ray, &mut out),
                Err(e) => out.push(SessionOutput::Verdict(Verdict::fail(
                    Stage::Perception,
                    "InvalidTouch",
                    e.to_string(),
                    None,
                ))),
            },
            InputEvent::Ray(ray) => self.feed_ray(ray.clone(), &mut out),
            InputEvent::Detection(d) => self.feed_detection(d.track_id, &d.detection, &mut out),
        }
        // Planning and execution time is booked inside `run`; the rest goes
        // to the stage the event belongs to.
        let inner = (self.times.planning_s - before.planning_s) + (self.times.execution_s - before.execution_s);
        let rest = (start.elapsed().as_secs_f64() - inner).max(0.0);
        match ev {
            InputEvent::Word(_) | InputEvent::Ray(_) => self.times.fusion_s += rest,
            _ => self.times.perception_s += rest,
        }
        out
    }

    /// Flushes a number still waiting for its unit. Call at end of stream.
    pub fn finish_stream(&mut self) -> Vec<SessionOutput> {
        let mut out = Vec::new();
        if let Some(tok) = self.assembler.flush(&self.config.lexicon) {
            self.feed_token(&tok, &mut out);
        }
        out
    }

    /// Drops any partial command. Rays and the workcell are kept.
    pub fn reset_command(&mut self) {
        self.encoder.reset();
        self.assembler = CommandAssembler::new();
    }

    /// Replaces the workcell and clears all fusion state.
    pub fn reseed(&mut self, workcell: WorkcellState) {
        self.encoder = Encoder::new(self.config.fusion.clone(), self.config.actions.dependency_map());
        self.assembler = CommandAssembler::new();
        self.workcell = workcell;
    }

    fn feed_detection(&mut self, id: ObjectId, det: &crate::geometry::Detection, out: &mut Vec<SessionOutput>) {
        if det.confidence < self.config.perception.min_detection_confidence {
            out.push(SessionOutput::Verdict(Verdict::ok(
                Stage::Perception,
                "DetectionDropped",
                format!("detection {id} below confidence threshold"),
            )));
            return;
        }
        if self.workcell.robot.holding == Some(id) {
            return;
        }
        match back_project(det, &self.config.camera, id) {
            Ok(obj) => {
                if let Err(e) = self.workcell.scene.upsert(obj) {
                    out.push(SessionOutput::Verdict(Verdict::fail(
                        Stage::Perception,
                        "InvalidDetection",
                        e.to_string(),
                        None,
                    )));
                }
            }
            Err(e) => out.push(SessionOutput::Verdict(Verdict::fail(
                Stage::Perception,
                "InvalidDetection",
                e.to_string(),
                None,
            ))),
        }
    }

    fn feed_ray(&mut self, ray: DeicticRay, out: &mut Vec<SessionOutput>) {
        let t = ray.timestamp;
        if let Err(e) = self.encoder.feed_ray(ray) {
            out.push(SessionOutput::Verdict(fusion_verdict(&e)));
            return;
        }
        if let (Some(class), Some(sel)) = (self.encoder.current_class(), self.encoder.hover(&self.workcell.scene)) {
            out.push(SessionOutput::Hover {
                class: class.to_string(),
                object: sel.object.id,
                distance: sel.distance,
                ray_t: t,
            });
        }
    }

    fn feed_token(&mut self, tok: &CommandToken, out: &mut Vec<SessionOutput>) {
        let result = self.encoder.feed_command(tok, &self.workcell.scene);
        out.extend(self.encoder.take_notes().into_iter().map(SessionOutput::Note));
        match result {
            Ok(None) => {}
            Ok(Some(intent)) => {
                out.push(SessionOutput::IntentionEmitted(intent.clone()));
                self.run(&intent, out);
            }
            Err(e) => {
                out.push(SessionOutput::Verdict(fusion_verdict(&e)));
                if !matches!(e, FusionError::OutOfOrderEvent { .. }) {
                    self.reset_command();
                }
            }
        }
    }

    fn run(&mut self, intent: &Intention, out: &mut Vec<SessionOutput>) {
        let planning = Instant::now();
        let ctx = self.config.plan_context();
        let seq = match plan(
            intent,
            &self.workcell.scene,
            &self.workcell.robot,
            ctx,
            self.client.as_deref(),
        ) {
            Ok(seq) => seq,
            Err(e) => {
                self.times.planning_s += planning.elapsed().as_secs_f64();
                out.push(SessionOutput::Verdict(plan_verdict(&e)));
                return;
            }
        };
        self.times.planning_s += planning.elapsed().as_secs_f64();
        let execution = Instant::now();
        out.push(SessionOutput::Plan(seq.clone()));
        out.push(SessionOutput::Verdict(Verdict::ok(
            Stage::Planning,
            "Accepted",
            format!("{} steps", seq.steps().len()),
        )));
        for (index, step) in seq.steps().iter().enumerate() {
            if let Err(e) = execute_step(&mut self.workcell, step, index, &self.config.workcell) {
                out.push(SessionOutput::Verdict(Verdict::fail(
                    Stage::Execution,
                    e.code(),
                    e.to_string(),
                    Some(index),
                )));
                self.times.execution_s += execution.elapsed().as_secs_f64();
                return;
            }
            let frame = self.workcell.trajectory_log.last().expect("step just logged").clone();
            out.push(SessionOutput::TrajectoryFrame(frame));
        }
        self.times.execution_s += execution.elapsed().as_secs_f64();
        out.push(SessionOutput::Verdict(Verdict::ok(Stage::Execution, "Executed", "all steps executed")));
    }
}

fn fusion_verdict(e: &FusionError) -> Verdict {
    Verdict::fail(Stage::Fusion, e.code(), e.to_string(), None)
}

fn plan_verdict(e: &PlanError) -> Verdict {
    let step = match e {
        PlanError::Validation(v) => Some(v.index()),
        _ => None,
    };
    Verdict::fail(Stage::Planning, e.code(), e.to_string(), step)
}
