//! Corrupted plans with a known first failure, for checking the validator.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use intentcell_core::geometry::{ObjectId, Scene};
use intentcell_core::planner::{plan_rule, ActionSequence, ActionStep, Command, Primitive};
use intentcell_core::workcell::{RobotState, WorkcellState};
use intentcell_core::Config;

use crate::scenes::{intention, random_scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    UnknownPrimitive,
    ArgumentOutOfRange,
    PickWhileHolding,
    MissingGripperOpen,
    LowTransit,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::UnknownPrimitive,
        MutationKind::ArgumentOutOfRange,
        MutationKind::PickWhileHolding,
        MutationKind::MissingGripperOpen,
        MutationKind::LowTransit,
    ];

    pub fn expected_code(self) -> &'static str {
        match self {
            MutationKind::UnknownPrimitive => "UnknownApiCall",
            MutationKind::ArgumentOutOfRange => "ArgumentOutOfRange",
            MutationKind::PickWhileHolding | MutationKind::MissingGripperOpen => "PreconditionViolated",
            MutationKind::LowTransit => "CollisionPredicted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationCase {
    pub kind: MutationKind,
    pub scene: Scene,
    pub robot: RobotState,
    pub sequence: ActionSequence,
    /// Step at which validation must fail.
    pub index: usize,
}

const BOGUS: [&str; 5] = ["teleport", "grasp", "move_joint", "spin", "set_speed"];

/// `per_kind` cases of every kind, reproducible from `seed`.
pub fn corpus(seed: u64, per_kind: usize, cfg: &Config) -> Vec<MutationCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_kind * MutationKind::ALL.len());
    for kind in MutationKind::ALL {
        let mut made = 0;
        while made < per_kind {
            if let Some(case) = mutate(kind, &mut rng, cfg) {
                out.push(case);
                made += 1;
            }
        }
    }
    out
}

/// Rule plan for picking a cup or bottle from a robot at home.
fn pick_plan(rng: &mut ChaCha8Rng, cfg: &Config) -> Option<(Scene, ObjectId, ActionSequence)> {
    let scene = random_scene(rng);
    let candidates: Vec<ObjectId> = scene
        .objects()
        .iter()
        .filter(|o| o.width_m <= cfg.workcell.b_max)
        .map(|o| o.id)
        .collect();
    let target = *candidates.choose(rng)?;
    let robot = RobotState::at_home(&cfg.workcell);
    let i = intention(&scene, &[("pick", Some(target), None)]);
    let seq = plan_rule(&i, &scene, &robot, cfg.plan_context()).ok()?;
    Some((scene, target, seq))
}

fn close_index(seq: &ActionSequence) -> Option<usize> {
    seq.steps().iter().position(|s| s.primitive == "close_gripper")
}

fn mutate(kind: MutationKind, rng: &mut ChaCha8Rng, cfg: &Config) -> Option<MutationCase> {
    let (scene, target, seq) = pick_plan(rng, cfg)?;
    let home = RobotState::at_home(&cfg.workcell);
    let mut steps = seq.steps().to_vec();
    let case = |scene: Scene, robot: RobotState, steps: Vec<ActionStep>, index: usize| MutationCase {
        kind,
        scene,
        robot,
        sequence: ActionSequence::new(steps, seq.provenance().clone()).expect("mutations keep steps"),
        index,
    };
    match kind {
        MutationKind::UnknownPrimitive => {
            let i = rng.random_range(0..steps.len());
            steps[i].primitive = BOGUS.choose(rng).expect("non-empty").to_string();
            Some(case(scene, home, steps, i))
        }
        MutationKind::ArgumentOutOfRange => {
            let with_args: Vec<usize> = (0..steps.len()).filter(|&i| !steps[i].args.is_empty()).collect();
            let i = *with_args.choose(rng)?;
            let p: Primitive = steps[i].primitive.parse().ok()?;
            let names: Vec<String> = steps[i].args.keys().cloned().collect();
            let name = names.choose(rng)?.clone();
            let r = cfg.api.range(p, &name)?;
            let delta = rng.random_range(0.01..1.0) * (r.max - r.min).max(1.0);
            let v = if rng.random_bool(0.5) { r.max + delta } else { r.min - delta };
            steps[i].args.insert(name, v);
            Some(case(scene, home, steps, i))
        }
        MutationKind::PickWhileHolding => {
            let other = scene.objects().iter().map(|o| o.id).find(|&id| id != target)?;
            let st = WorkcellState::holding(home, scene, other, &cfg.workcell)?;
            let i = close_index(&seq)?;
            Some(case(st.scene, st.robot, steps, i))
        }
        MutationKind::MissingGripperOpen => {
            // Drop any open ahead of the grasp, then start with closed fingers.
            let close = close_index(&seq)?;
            if let Some(open) = steps[..close].iter().position(|s| s.primitive == "open_gripper") {
                steps.remove(open);
            }
            let robot = RobotState {
                gripper_closed: true,
                gripper_angle: cfg.workcell.theta_max,
                ..home
            };
            let i = steps.iter().position(|s| s.primitive == "close_gripper")?;
            Some(case(scene, robot, steps, i))
        }
        MutationKind::LowTransit => {
            let i = (0..steps.len().saturating_sub(1)).find(|&i| {
                steps[i].primitive == "move_linear" && steps[i + 1].primitive == "move_vertical"
            })?;
            let Ok(Command::MoveLinear(p)) = Command::from_step(&steps[i]) else {
                return None;
            };
            let h = scene.get(target)?.height_m;
            let low = h + cfg.workcell.clearance_margin - 0.03;
            let dz = steps[i + 1].arg("dz")?;
            steps[i] = Command::MoveLinear(intentcell_core::workcell::Pose6 { z: low, ..p }).to_step();
            steps[i + 1] = ActionStep::new("move_vertical", &[("dz", p.z + dz - low)]);
            Some(case(scene, home, steps, i))
        }
    }
}
