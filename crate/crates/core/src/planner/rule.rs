//! Deterministic template planner.
//!
//! Each subcommand's catalog expansion is walked macro by macro. Emitted
//! steps are applied to a scratch copy of the workcell as they are produced,
//! so every parameter is computed from the pose, grasp and object positions
//! the real executor will see at that point.

use thiserror::Error;

use super::api::{ActionStep, Command, Primitive};
use super::catalog::MacroStep;
use super::{ActionSequence, PlanContext, Provenance};
use crate::fusion::{Intention, SubCommand};
use crate::geometry::{ObjectRecord, Scene, Vec3};
use crate::grammar::UnitKind;
use crate::workcell::{
    execute_step, gripper_angle_from_width, tallest_in_corridor, Pose6, RobotState, WorkcellError,
    WorkcellState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("action `{0}` is not in the action catalog")]
    UnknownAction(String),
    #[error("{action}: precondition violated: {reason}")]
    PreconditionViolated { action: String, reason: String },
    #[error("{action}: unreachable: {reason}")]
    Unreachable { action: String, reason: String },
    #[error("{action}: metric rejected: {reason}")]
    InvalidMetric { action: String, reason: String },
}

impl RuleError {
    pub fn code(&self) -> &'static str {
        match self {
            RuleError::UnknownAction(_) => "UnknownAction",
            RuleError::PreconditionViolated { .. } => "PreconditionViolated",
            RuleError::Unreachable { .. } => "Unreachable",
            RuleError::InvalidMetric { .. } => "InvalidMetric",
        }
    }
}

/// Expands every subcommand of `intent` against the current scene and robot.
pub fn plan_rule(
    intent: &Intention,
    scene: &Scene,
    robot: &RobotState,
    ctx: PlanContext<'_>,
) -> Result<ActionSequence, RuleError> {
    let state = WorkcellState::observed(robot.clone(), scene.clone()).ok_or_else(|| {
        RuleError::PreconditionViolated {
            action: "-".into(),
            reason: "held object is not in the scene".into(),
        }
    })?;
    let mut x = Expander {
        ctx,
        state,
        steps: Vec::new(),
        transit_z: None,
        tilt: 0.0,
        action: String::new(),
    };
    for sub in &intent.subcommands {
        x.expand(sub)?;
    }
    ActionSequence::new(x.steps, Provenance::Rule).map_err(|_| RuleError::PreconditionViolated {
        action: x.action,
        reason: "nothing to do".into(),
    })
}

struct Expander<'a> {
    ctx: PlanContext<'a>,
    state: WorkcellState,
    steps: Vec<ActionStep>,
    transit_z: Option<f64>,
    tilt: f64,
    action: String,
}

impl Expander<'_> {
    fn precondition(&self, reason: impl Into<String>) -> RuleError {
        RuleError::PreconditionViolated {
            action: self.action.clone(),
            reason: reason.into(),
        }
    }

    fn unreachable(&self, reason: impl Into<String>) -> RuleError {
        RuleError::Unreachable {
            action: self.action.clone(),
            reason: reason.into(),
        }
    }

    fn here(&self) -> Pose6 {
        self.state.robot.pose
    }

    fn held(&self) -> Option<&ObjectRecord> {
        self.state.robot.holding.and_then(|id| self.state.scene.get(id))
    }

    fn emit(&mut self, cmd: Command) -> Result<(), RuleError> {
        let mut step = cmd.to_step();
        // Nanometer rounding keeps plan text free of float noise; the
        // clearance slack absorbs it.
        for v in step.args.values_mut() {
            *v = (*v * 1e9).round() / 1e9;
        }
        let index = self.steps.len();
        execute_step(&mut self.state, &step, index, self.ctx.workcell).map_err(|e| match e {
            WorkcellError::GraspMissed | WorkcellError::ReleaseOverVoid { .. } => self.precondition(e.to_string()),
            _ => self.unreachable(e.to_string()),
        })?;
        self.steps.push(step);
        Ok(())
    }

    fn vertical_to(&mut self, z: f64) -> Result<(), RuleError> {
        let dz = z - self.here().z;
        if dz.abs() > 1e-12 {
            self.emit(Command::MoveVertical { dz })?;
        }
        Ok(())
    }

    /// Height a straight move from here to `(x, y)` must keep.
    fn required_z(&self, x: f64, y: f64) -> f64 {
        let here = self.here().position();
        let to = Vec3::new(x, y, here.z);
        let wc = self.ctx.workcell;
        tallest_in_corridor(&here, &to, &self.state.scene, self.state.robot.holding, wc)
            .map_or(0.0, |(_, h)| h + wc.clearance_margin + self.ctx.planner.clearance_slack)
    }

    fn transit(&mut self, x: f64, y: f64, floor: f64) -> Result<(), RuleError> {
        let ws = &self.ctx.workcell.workspace;
        if !ws.contains_xy(x, y) {
            return Err(self.unreachable(format!("({x:.3}, {y:.3}) is outside the workspace")));
        }
        let z = self.ctx.planner.min_transit_z.max(self.required_z(x, y)).max(floor);
        if z > ws.max[2] {
            return Err(self.unreachable(format!("clearance height {z:.3} exceeds the workspace")));
        }
        if self.here().z < z {
            self.vertical_to(z)?;
        }
        let pose = Pose6 { x, y, z, ..self.here() };
        self.emit(Command::MoveLinear(pose))?;
        self.transit_z = Some(z);
        Ok(())
    }

    fn target(&self, sub: &SubCommand) -> Result<ObjectRecord, RuleError> {
        let id = sub
            .object
            .as_ref()
            .map(|o| o.id)
            .ok_or_else(|| self.precondition("no object bound"))?;
        self.state
            .scene
            .get(id)
            .cloned()
            .ok_or_else(|| self.unreachable(format!("object {id} is not in the scene")))
    }

    fn require_holding(&self) -> Result<ObjectRecord, RuleError> {
        self.held().cloned().ok_or_else(|| self.precondition("nothing is held"))
    }

    fn require_free(&self) -> Result<(), RuleError> {
        match self.state.robot.holding {
            Some(id) => Err(self.precondition(format!("already holding {id}"))),
            None => Ok(()),
        }
    }

    fn expand(&mut self, sub: &SubCommand) -> Result<(), RuleError> {
        self.action = sub.action.clone();
        let def = self
            .ctx
            .catalog
            .get(&sub.action)
            .ok_or_else(|| RuleError::UnknownAction(sub.action.clone()))?;
        for m in def.expansion.clone() {
            self.apply(m, sub)?;
        }
        Ok(())
    }

    fn apply(&mut self, m: MacroStep, sub: &SubCommand) -> Result<(), RuleError> {
        let wc = self.ctx.workcell;
        let pc = self.ctx.planner;
        match m {
            MacroStep::EnsureOpen => {
                self.require_free()?;
                if self.state.robot.gripper_closed {
                    self.emit(Command::OpenGripper { angle: wc.theta_min })?;
                }
            }
            MacroStep::TransitAboveTarget => {
                let t = self.target(sub)?;
                if self.state.robot.holding == Some(t.id) {
                    return Err(self.precondition(format!("target {} is the held object", t.id)));
                }
                self.transit(t.position.x, t.position.y, 0.0)?;
            }
            MacroStep::DescendToGrasp => {
                self.require_free()?;
                let t = self.target(sub)?;
                self.vertical_to(t.position.z)?;
            }
            MacroStep::CloseOnTarget => {
                self.require_free()?;
                let t = self.target(sub)?;
                self.emit(Command::CloseGripper {
                    angle: gripper_angle_from_width(t.width_m, wc),
                })?;
            }
            MacroStep::Lift => {
                let z = self.transit_z.unwrap_or(pc.min_transit_z);
                if self.here().z < z {
                    self.vertical_to(z)?;
                }
            }
            MacroStep::DescendToPlace => {
                let held = self.require_holding()?;
                let t = self.target(sub)?;
                let offset_z = self.state.grasp.as_ref().map_or(0.0, |g| g.offset.z);
                let top = t.position.z + t.height_m / 2.0;
                let z = top + pc.place_gap + held.height_m / 2.0 - offset_z;
                if z < self.here().z {
                    self.vertical_to(z)?;
                }
            }
            MacroStep::Release => {
                self.require_holding()?;
                self.emit(Command::OpenGripper { angle: wc.theta_min })?;
            }
            MacroStep::Tilt => {
                self.require_holding()?;
                let deg = match sub.metric.as_ref() {
                    Some(metric) => metric.as_degrees().unwrap_or(pc.pour_default_deg),
                    None => pc.pour_default_deg,
                };
                if let Some(r) = self.ctx.api.range(Primitive::RotateEe, "angle") {
                    if !r.contains(deg) {
                        return Err(RuleError::InvalidMetric {
                            action: self.action.clone(),
                            reason: format!("{deg} degrees outside [{}, {}]", r.min, r.max),
                        });
                    }
                }
                self.emit(Command::RotateEe { degrees: deg })?;
                self.tilt += deg;
            }
            MacroStep::Untilt => {
                if self.tilt != 0.0 {
                    let back = -self.tilt;
                    self.emit(Command::RotateEe { degrees: back })?;
                    self.tilt = 0.0;
                }
            }
            MacroStep::TransitToBin => {
                self.require_holding()?;
                let bin = wc.bin;
                self.transit(bin.x, bin.y, bin.z)?;
            }
            MacroStep::Slide => self.slide(sub)?,
            MacroStep::Wipe => self.wipe(sub)?,
            MacroStep::TransitToFlushPose => {
                let [x, y, z] = pc.flush_pose;
                self.transit(x, y, z)?;
            }
            MacroStep::Dip => {
                let z = (self.here().z - pc.flush_dip).max(wc.workspace.min[2]);
                self.vertical_to(z)?;
            }
            MacroStep::Dwell => self.emit(Command::Wait { seconds: pc.flush_wait_s })?,
            MacroStep::GoHome => {
                let home = wc.home;
                let req = self.required_z(home.x, home.y);
                if home.z < req {
                    return Err(self.unreachable(format!(
                        "home at z={:.3} is below the clearance {req:.3}",
                        home.z
                    )));
                }
                if self.here().z < req {
                    self.vertical_to(req)?;
                }
                self.emit(Command::GoHome)?;
            }
        }
        Ok(())
    }

    fn slide(&mut self, sub: &SubCommand) -> Result<(), RuleError> {
        let held = self.require_holding()?;
        let pc = self.ctx.planner;
        let far = sub
            .metric
            .as_ref()
            .and_then(|m| m.as_qualifier(UnitKind::Spatial))
            .is_some_and(|q| q == "far");
        let p = [held.position.x, held.position.y];
        let d = [pc.near_anchor[0] - p[0], pc.near_anchor[1] - p[1]];
        let dist = d[0].hypot(d[1]);
        if dist < 1e-9 {
            return Err(self.unreachable("object already sits on the near anchor"));
        }
        let (sign, s) = if far { (-1.0, pc.push_distance) } else { (1.0, pc.push_distance.min(dist)) };
        let here = self.here();
        let x = here.x + sign * s * d[0] / dist;
        let y = here.y + sign * s * d[1] / dist;
        if !self.ctx.workcell.workspace.contains_xy(x, y) {
            return Err(self.unreachable(format!("push end ({x:.3}, {y:.3}) is outside the workspace")));
        }
        let z = here.z.max(self.required_z(x, y));
        if z > here.z {
            self.vertical_to(z)?;
        }
        self.emit(Command::MoveLinear(Pose6 { x, y, z, ..here }))
    }

    fn wipe(&mut self, sub: &SubCommand) -> Result<(), RuleError> {
        let t = self.target(sub)?;
        let half = t.width_m / 2.0;
        let (cx, cy) = (t.position.x, t.position.y);
        let pts = [
            (cx - half, cy - half),
            (cx + half, cy - half),
            (cx + half, cy),
            (cx - half, cy),
            (cx - half, cy + half),
            (cx + half, cy + half),
        ];
        if let Some((x, y)) = pts.iter().find(|(x, y)| !self.ctx.workcell.workspace.contains_xy(*x, *y)) {
            return Err(self.unreachable(format!("wipe point ({x:.3}, {y:.3}) is outside the workspace")));
        }
        // Highest requirement along the whole pattern, so it runs at one height.
        let mut z = self.here().z;
        let mut from = self.here().position();
        let wc = self.ctx.workcell;
        for (x, y) in pts {
            let to = Vec3::new(x, y, from.z);
            if let Some((_, h)) = tallest_in_corridor(&from, &to, &self.state.scene, self.state.robot.holding, wc) {
                z = z.max(h + wc.clearance_margin + self.ctx.planner.clearance_slack);
            }
            from = to;
        }
        if z > wc.workspace.max[2] {
            return Err(self.unreachable("wipe height exceeds the workspace"));
        }
        self.vertical_to(z)?;
        for (x, y) in pts {
            let pose = Pose6 { x, y, z, ..self.here() };
            self.emit(Command::MoveLinear(pose))?;
        }
        Ok(())
    }
}
