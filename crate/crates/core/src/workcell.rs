//! Quasi-static manipulator workcell.
//!
//! Every primitive takes effect instantaneously and advances the clock by
//! one tick. The table is a single plane at z = 0; objects are boxes of
//! `width × width × height` standing on it.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

use crate::geometry::{ObjectId, Scene, Vec3};
use crate::planner::api::{ActionStep, Command};
use crate::planner::ActionSequence;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose6 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose6 {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            ..Self::default()
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn with_position(self, p: Vec3) -> Self {
        Self {
            x: p.x,
            y: p.y,
            z: p.z,
            ..self
        }
    }
}

/// End-effector state plus grasp feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose6,
    /// Finger closure angle, radians; 0 is fully open.
    pub gripper_angle: f64,
    #[serde(default)]
    pub gripper_closed: bool,
    #[serde(default)]
    pub holding: Option<ObjectId>,
}

impl RobotState {
    pub fn at_home(cfg: &WorkcellConfig) -> Self {
        Self {
            pose: cfg.home,
            gripper_angle: 0.0,
            gripper_closed: false,
            holding: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorkspaceBox {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkcellConfig {
    pub workspace: WorkspaceBox,
    pub home: Pose6,
    /// Drop pose above the bin; objects thrown land at its x, y.
    pub bin: Pose6,
    pub clearance_margin: f64,
    /// Corridor width swept by the empty gripper, meters.
    pub gripper_width: f64,
    /// Extra horizontal grasp tolerance beyond half the object width.
    pub grasp_slack: f64,
    /// Maximum vertical offset between end-effector and object at grasp.
    pub grasp_window: f64,
    /// Wrist roll at which a held object counts as poured.
    pub pour_event_deg: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Widest object the gripper can close on, meters.
    pub b_max: f64,
}

impl Default for WorkcellConfig {
    fn default() -> Self {
        Self {
            workspace: WorkspaceBox {
                min: [-0.2, -0.5, 0.0],
                max: [0.7, 0.5, 0.8],
            },
            home: Pose6::at(0.25, 0.0, 0.40),
            bin: Pose6::at(-0.1, -0.4, 0.30),
            clearance_margin: 0.05,
            gripper_width: 0.06,
            grasp_slack: 0.01,
            grasp_window: 0.03,
            pour_event_deg: 45.0,
            theta_min: 0.0,
            theta_max: 0.8,
            b_max: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkcellError {
    #[error("close_gripper found no object within grasp tolerance")]
    GraspMissed,
    #[error("release at ({x:.3}, {y:.3}) is outside the workspace surface")]
    ReleaseOverVoid { x: f64, y: f64 },
    #[error("transit at z={z:.3} passes over object {object} requiring z >= {required:.3}")]
    CollisionPredicted {
        object: ObjectId,
        z: f64,
        required: f64,
    },
    #[error("step is not an executable call: {0}")]
    InvalidStep(String),
    #[error("target pose is outside the workspace box")]
    OutsideWorkspace,
}

impl WorkcellError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkcellError::GraspMissed => "GraspMissed",
            WorkcellError::ReleaseOverVoid { .. } => "ReleaseOverVoid",
            WorkcellError::CollisionPredicted { .. } => "CollisionPredicted",
            WorkcellError::InvalidStep(_) => "InvalidStep",
            WorkcellError::OutsideWorkspace => "OutsideWorkspace",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {index}: {error}")]
pub struct ExecutionError {
    pub index: usize,
    pub error: WorkcellError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorkcellEvent {
    Grasped { object: ObjectId },
    Released { object: ObjectId, at: Vec3 },
    Poured { from: ObjectId, into: ObjectId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub t: f64,
    pub step_index: usize,
    pub step: ActionStep,
    pub robot: RobotState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub held_position: Option<Vec3>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub events: Vec<WorkcellEvent>,
}

/// Held object relative to the end-effector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub object: ObjectId,
    pub offset: Vec3,
    /// Height of the object's reference point above the surface it rested on.
    pub rest_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkcellState {
    pub robot: RobotState,
    pub scene: Scene,
    pub grasp: Option<Grasp>,
    pub trajectory_log: Vec<TrajectoryEntry>,
    pub clock: f64,
}

impl WorkcellState {
    pub fn new(robot: RobotState, scene: Scene) -> Self {
        Self {
            robot,
            scene,
            grasp: None,
            trajectory_log: Vec::new(),
            clock: 0.0,
        }
    }

    /// Starts with `object` already in hand, moved to the gripper.
    pub fn holding(mut robot: RobotState, mut scene: Scene, object: ObjectId, cfg: &WorkcellConfig) -> Option<Self> {
        let obj = scene.get_mut(object)?;
        let rest_z = obj.position.z;
        obj.position = robot.pose.position();
        robot.holding = Some(object);
        robot.gripper_closed = true;
        robot.gripper_angle = gripper_angle_from_width(obj.width_m, cfg);
        Some(Self {
            robot,
            scene,
            grasp: Some(Grasp {
                object,
                offset: Vec3::zeros(),
                rest_z,
            }),
            trajectory_log: Vec::new(),
            clock: 0.0,
        })
    }

    /// Rebuilds a state from an observed robot and scene. A held object keeps
    /// its current offset from the gripper and is assumed to have come off
    /// the table, so it is released at half its height.
    pub fn observed(robot: RobotState, scene: Scene) -> Option<Self> {
        let grasp = match robot.holding {
            Some(id) => {
                let obj = scene.get(id)?;
                Some(Grasp {
                    object: id,
                    offset: obj.position - robot.pose.position(),
                    rest_z: obj.height_m / 2.0,
                })
            }
            None => None,
        };
        Some(Self {
            robot,
            scene,
            grasp,
            trajectory_log: Vec::new(),
            clock: 0.0,
        })
    }

    pub fn held_position(&self) -> Option<Vec3> {
        self.grasp
            .as_ref()
            .map(|g| self.robot.pose.position() + g.offset)
    }

    pub fn events(&self) -> impl Iterator<Item = &WorkcellEvent> {
        self.trajectory_log.iter().flat_map(|e| e.events.iter())
    }

    /// Writes the trajectory log as one JSON record per line.
    pub fn write_trajectory<W: Write>(&self, mut out: W) -> io::Result<()> {
        for entry in &self.trajectory_log {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Finger closure for an object of width `b`:
/// `clamp(θ_max · (1 − b / b_max), θ_min, θ_max)`.
pub fn gripper_angle_from_width_with(b: f64, b_max: f64, theta_min: f64, theta_max: f64) -> f64 {
    (theta_max * (1.0 - b / b_max)).clamp(theta_min, theta_max)
}

pub fn gripper_angle_from_width(b: f64, cfg: &WorkcellConfig) -> f64 {
    gripper_angle_from_width_with(b, cfg.b_max, cfg.theta_min, cfg.theta_max)
}

/// Object graspable from `ee`: horizontal distance at most `b/2 + slack` and
/// vertical offset within the grasp window. Nearest wins, then smallest id.
pub fn graspable_object(scene: &Scene, ee: &Vec3, exclude: Option<ObjectId>, cfg: &WorkcellConfig) -> Option<ObjectId> {
    scene
        .objects()
        .iter()
        .filter(|o| Some(o.id) != exclude)
        .filter_map(|o| {
            let horizontal = ((o.position.x - ee.x).powi(2) + (o.position.y - ee.y).powi(2)).sqrt();
            let vertical = (o.position.z - ee.z).abs();
            (horizontal <= o.width_m / 2.0 + cfg.grasp_slack && vertical <= cfg.grasp_window)
                .then_some((horizontal, o.id))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

fn point_rect_distance(p: [f64; 2], min: [f64; 2], max: [f64; 2]) -> f64 {
    let dx = (min[0] - p[0]).max(0.0).max(p[0] - max[0]);
    let dy = (min[1] - p[1]).max(0.0).max(p[1] - max[1]);
    (dx * dx + dy * dy).sqrt()
}

/// Liang–Barsky test: does segment `a → b` touch the rectangle?
fn segment_hits_rect(a: [f64; 2], b: [f64; 2], min: [f64; 2], max: [f64; 2]) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for i in 0..2 {
        if d[i] == 0.0 {
            if a[i] < min[i] || a[i] > max[i] {
                return false;
            }
        } else {
            let mut ta = (min[i] - a[i]) / d[i];
            let mut tb = (max[i] - a[i]) / d[i];
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Distance on the table plane between segment `a → b` and a rectangle.
pub fn segment_rect_distance(a: [f64; 2], b: [f64; 2], min: [f64; 2], max: [f64; 2]) -> f64 {
    if segment_hits_rect(a, b, min, max) {
        return 0.0;
    }
    let corners = [min, [min[0], max[1]], max, [max[0], min[1]]];
    let from_corners = corners
        .iter()
        .map(|c| point_segment_distance(*c, a, b))
        .fold(f64::INFINITY, f64::min);
    from_corners
        .min(point_rect_distance(a, min, max))
        .min(point_rect_distance(b, min, max))
}

/// Width of the corridor swept by the gripper and whatever it holds.
pub fn corridor_width(scene: &Scene, holding: Option<ObjectId>, cfg: &WorkcellConfig) -> f64 {
    let held = holding
        .and_then(|id| scene.get(id))
        .map_or(0.0, |o| o.width_m);
    cfg.gripper_width + held
}

/// Tallest object whose footprint meets the corridor around the straight
/// path `from → to`, excluding the held object. Ties go to the smallest id.
pub fn tallest_in_corridor(
    from: &Vec3,
    to: &Vec3,
    scene: &Scene,
    holding: Option<ObjectId>,
    cfg: &WorkcellConfig,
) -> Option<(ObjectId, f64)> {
    let half = corridor_width(scene, holding, cfg) / 2.0;
    let (a, b) = ([from.x, from.y], [to.x, to.y]);
    let mut best: Option<(ObjectId, f64)> = None;
    for obj in scene.objects().iter().filter(|o| Some(o.id) != holding) {
        let fp = obj.footprint();
        if segment_rect_distance(a, b, fp.min, fp.max) <= half
            && best.is_none_or(|(_, h)| obj.height_m > h)
        {
            best = Some((obj.id, obj.height_m));
        }
    }
    best
}

/// Straight transit passes iff its lowest point clears every corridor box
/// by the configured margin.
pub fn clearance_check(
    from: &Vec3,
    to: &Vec3,
    scene: &Scene,
    holding: Option<ObjectId>,
    cfg: &WorkcellConfig,
) -> Result<(), WorkcellError> {
    let z = from.z.min(to.z);
    match tallest_in_corridor(from, to, scene, holding, cfg) {
        Some((object, h)) if z < h + cfg.clearance_margin => Err(WorkcellError::CollisionPredicted {
            object,
            z,
            required: h + cfg.clearance_margin,
        }),
        _ => Ok(()),
    }
}

/// First object (by id) whose footprint lies under `(x, y)`, other than `exclude`.
pub fn object_below(scene: &Scene, x: f64, y: f64, exclude: Option<ObjectId>) -> Option<ObjectId> {
    scene
        .objects()
        .iter()
        .filter(|o| Some(o.id) != exclude)
        .find(|o| o.footprint().contains(x, y))
        .map(|o| o.id)
}

/// Applies one validated step. On error the state is left untouched.
pub fn execute_step(
    state: &mut WorkcellState,
    step: &ActionStep,
    index: usize,
    cfg: &WorkcellConfig,
) -> Result<(), WorkcellError> {
    execute_step_with(state, step, index, cfg, true)
}

/// [`execute_step`] with the transit clearance check optional, so symbolic
/// precondition checks can run ahead of collision checks.
pub fn execute_step_with(
    state: &mut WorkcellState,
    step: &ActionStep,
    index: usize,
    cfg: &WorkcellConfig,
    check_clearance: bool,
) -> Result<(), WorkcellError> {
    let cmd = Command::from_step(step).map_err(|e| WorkcellError::InvalidStep(e.to_string()))?;
    let mut robot = state.robot.clone();
    let mut grasp = state.grasp.clone();
    let mut scene = state.scene.clone();
    let mut events = Vec::new();
    let here = robot.pose.position();

    match cmd {
        Command::MoveLinear(target) => {
            if !cfg.workspace.contains(&target.position()) {
                return Err(WorkcellError::OutsideWorkspace);
            }
            if check_clearance {
                clearance_check(&here, &target.position(), &scene, robot.holding, cfg)?;
            }
            robot.pose = target;
        }
        Command::GoHome => {
            if check_clearance {
                clearance_check(&here, &cfg.home.position(), &scene, robot.holding, cfg)?;
            }
            robot.pose = cfg.home;
        }
        Command::MoveVertical { dz } => {
            let z = robot.pose.z + dz;
            if z < cfg.workspace.min[2] || z > cfg.workspace.max[2] {
                return Err(WorkcellError::OutsideWorkspace);
            }
            robot.pose.z = z;
        }
        Command::CloseGripper { angle } => {
            if robot.holding.is_none() {
                let id = graspable_object(&scene, &here, None, cfg).ok_or(WorkcellError::GraspMissed)?;
                let obj = scene.get(id).expect("graspable object exists");
                grasp = Some(Grasp {
                    object: id,
                    offset: obj.position - here,
                    rest_z: obj.position.z,
                });
                robot.holding = Some(id);
                events.push(WorkcellEvent::Grasped { object: id });
            }
            robot.gripper_angle = angle;
            robot.gripper_closed = true;
        }
        Command::OpenGripper { angle } => {
            if let Some(g) = grasp.take() {
                let held = here + g.offset;
                if !cfg.workspace.contains_xy(held.x, held.y) {
                    return Err(WorkcellError::ReleaseOverVoid { x: held.x, y: held.y });
                }
                let at = Vec3::new(held.x, held.y, g.rest_z);
                scene.get_mut(g.object).expect("held object exists").position = at;
                robot.holding = None;
                events.push(WorkcellEvent::Released { object: g.object, at });
            }
            robot.gripper_angle = angle;
            robot.gripper_closed = false;
        }
        Command::RotateEe { degrees } => {
            robot.pose.roll += degrees.to_radians();
            if let Some(from) = robot.holding {
                if robot.pose.roll.abs() >= cfg.pour_event_deg.to_radians() - 1e-12 {
                    if let Some(into) = object_below(&scene, robot.pose.x, robot.pose.y, Some(from)) {
                        events.push(WorkcellEvent::Poured { from, into });
                    }
                }
            }
        }
        Command::Wait { .. } => {}
    }

    if let Some(g) = &grasp {
        let p = robot.pose.position() + g.offset;
        scene.get_mut(g.object).expect("held object exists").position = p;
    }

    state.robot = robot;
    state.grasp = grasp;
    state.scene = scene;
    state.clock += 1.0;
    let held_position = state.held_position();
    state.trajectory_log.push(TrajectoryEntry {
        t: state.clock,
        step_index: index,
        step: step.clone(),
        robot: state.robot.clone(),
        held_position,
        events,
    });
    Ok(())
}

/// Executes the whole sequence, stopping at the first failing step.
pub fn execute_sequence(
    state: &mut WorkcellState,
    seq: &ActionSequence,
    cfg: &WorkcellConfig,
) -> Result<(), ExecutionError> {
    for (index, step) in seq.steps().iter().enumerate() {
        execute_step(state, step, index, cfg).map_err(|error| ExecutionError { index, error })?;
    }
    Ok(())
}
