//! The execution gate. Runs three passes over a sequence, each over every
//! step before the next pass starts:
//!
//! 1. API membership and argument ranges.
//! 2. Symbolic execution of gripper and holding state, workspace bounds and
//!    release surfaces, with transit clearance switched off.
//! 3. Symbolic execution again with clearance checks on every
//!    `move_linear` and `go_home`.

use thiserror::Error;

use super::api::{ApiError, ApiSpec, Command};
use super::ActionSequence;
use crate::geometry::{ObjectId, Scene};
use crate::workcell::{execute_step_with, RobotState, WorkcellConfig, WorkcellError, WorkcellState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("step {index}: unknown api call `{name}`")]
    UnknownApiCall { index: usize, name: String },
    #[error("step {index}: {reason}")]
    ArgumentOutOfRange { index: usize, reason: String },
    #[error("step {index}: precondition violated: {reason}")]
    PreconditionViolated { index: usize, reason: String },
    #[error("step {index}: collision predicted with object {object}")]
    CollisionPredicted { index: usize, object: ObjectId },
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::UnknownApiCall { .. } => "UnknownApiCall",
            ValidationError::ArgumentOutOfRange { .. } => "ArgumentOutOfRange",
            ValidationError::PreconditionViolated { .. } => "PreconditionViolated",
            ValidationError::CollisionPredicted { .. } => "CollisionPredicted",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            ValidationError::UnknownApiCall { index, .. }
            | ValidationError::ArgumentOutOfRange { index, .. }
            | ValidationError::PreconditionViolated { index, .. }
            | ValidationError::CollisionPredicted { index, .. } => *index,
        }
    }
}

/// Returns `seq` unchanged when it is safe to execute from `robot` in `scene`.
pub fn validate_sequence(
    seq: &ActionSequence,
    scene: &Scene,
    robot: &RobotState,
    api: &ApiSpec,
    cfg: &WorkcellConfig,
) -> Result<ActionSequence, ValidationError> {
    let mut commands = Vec::with_capacity(seq.steps().len());
    for (index, step) in seq.steps().iter().enumerate() {
        let cmd = api.check(step).map_err(|e| match e {
            ApiError::UnknownPrimitive(name) => ValidationError::UnknownApiCall { index, name },
            other => ValidationError::ArgumentOutOfRange {
                index,
                reason: other.to_string(),
            },
        })?;
        commands.push(cmd);
    }

    let start = WorkcellState::observed(robot.clone(), scene.clone()).ok_or_else(|| {
        ValidationError::PreconditionViolated {
            index: 0,
            reason: "held object is not in the scene".into(),
        }
    })?;

    let mut st = start.clone();
    for (index, (step, cmd)) in seq.steps().iter().zip(&commands).enumerate() {
        let precondition = |reason: String| ValidationError::PreconditionViolated { index, reason };
        if matches!(cmd, Command::CloseGripper { .. }) {
            if let Some(id) = st.robot.holding {
                return Err(precondition(format!("close while already holding {id}")));
            }
            if st.robot.gripper_closed {
                return Err(precondition("close while the gripper is already closed".into()));
            }
        }
        execute_step_with(&mut st, step, index, cfg, false).map_err(|e| precondition(e.to_string()))?;
    }

    let mut st = start;
    for (index, step) in seq.steps().iter().enumerate() {
        execute_step_with(&mut st, step, index, cfg, true).map_err(|e| match e {
            WorkcellError::CollisionPredicted { object, .. } => ValidationError::CollisionPredicted { index, object },
            other => ValidationError::PreconditionViolated {
                index,
                reason: other.to_string(),
            },
        })?;
    }
    Ok(seq.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ObjectRecord, Vec3};
    use crate::planner::api::ActionStep;
    use crate::planner::Provenance;

    fn seq(lines: &[ActionStep]) -> ActionSequence {
        ActionSequence::new(lines.to_vec(), Provenance::Rule).unwrap()
    }

    fn scene() -> Scene {
        Scene::new(
            vec![
                ObjectRecord::new(ObjectId(1), "cup", Vec3::new(0.3, 0.1, 0.05), 0.1, 0.07).unwrap(),
                ObjectRecord::new(ObjectId(2), "bottle", Vec3::new(0.3, 0.0, 0.1), 0.2, 0.07).unwrap(),
            ],
            0.0,
        )
        .unwrap()
    }

    fn check(s: &ActionSequence) -> Result<ActionSequence, ValidationError> {
        let cfg = WorkcellConfig::default();
        validate_sequence(s, &scene(), &RobotState::at_home(&cfg), &ApiSpec::default(), &cfg)
    }

    fn ml(x: f64, y: f64, z: f64) -> ActionStep {
        ActionStep::new(
            "move_linear",
            &[("x", x), ("y", y), ("z", z), ("roll", 0.0), ("pitch", 0.0), ("yaw", 0.0)],
        )
    }

    #[test]
    fn clean_pick_passes_unchanged() {
        let s = seq(&[
            ml(0.3, 0.1, 0.3),
            ActionStep::new("move_vertical", &[("dz", -0.25)]),
            ActionStep::new("close_gripper", &[("angle", 0.2)]),
            ActionStep::new("move_vertical", &[("dz", 0.25)]),
        ]);
        assert_eq!(check(&s).unwrap(), s);
    }

    #[test]
    fn low_transit_over_tall_obstacle() {
        // Home (0.25, 0, 0.4) to (0.3, 0.1) passes over the 0.2 m bottle.
        let s = seq(&[ml(0.3, 0.1, 0.22)]);
        assert_eq!(
            check(&s).unwrap_err(),
            ValidationError::CollisionPredicted {
                index: 0,
                object: ObjectId(2)
            }
        );
        assert!(check(&seq(&[ml(0.3, 0.1, 0.26)])).is_ok());
    }

    #[test]
    fn double_close_is_a_precondition_error() {
        let s = seq(&[
            ml(0.3, 0.1, 0.3),
            ActionStep::new("move_vertical", &[("dz", -0.25)]),
            ActionStep::new("close_gripper", &[("angle", 0.2)]),
            ActionStep::new("close_gripper", &[("angle", 0.2)]),
        ]);
        assert_eq!(check(&s).unwrap_err().code(), "PreconditionViolated");
    }

    #[test]
    fn unknown_call_and_range() {
        let s = seq(&[ActionStep::new("teleport", &[("x", 1.0)])]);
        assert_eq!(check(&s).unwrap_err().code(), "UnknownApiCall");
        let s = seq(&[ActionStep::new("close_gripper", &[("angle", 999.0)])]);
        assert_eq!(check(&s).unwrap_err().code(), "ArgumentOutOfRange");
    }

    #[test]
    fn grammar_errors_take_priority_over_later_collisions() {
        let s = seq(&[ml(0.3, 0.1, 0.22), ActionStep::new("teleport", &[])]);
        assert_eq!(check(&s).unwrap_err().index(), 1);
    }

    #[test]
    fn close_over_nothing() {
        let s = seq(&[ActionStep::new("close_gripper", &[("angle", 0.2)])]);
        assert_eq!(check(&s).unwrap_err().code(), "PreconditionViolated");
    }

    #[test]
    fn move_vertical_is_not_collision_checked() {
        let s = seq(&[ml(0.3, 0.0, 0.5), ActionStep::new("move_vertical", &[("dz", -0.4)])]);
        assert!(check(&s).is_ok());
    }
}
