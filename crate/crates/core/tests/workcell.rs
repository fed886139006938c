use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use intentcell_core::geometry::{ObjectId, ObjectRecord, Scene, Vec3};
use intentcell_core::planner::Command;
use intentcell_core::workcell::{
    clearance_check, execute_step, gripper_angle_from_width, Pose6, RobotState, WorkcellConfig, WorkcellError,
    WorkcellState,
};

fn rect_point_distance(min: [f64; 2], max: [f64; 2], p: [f64; 2]) -> f64 {
    let dx = (min[0] - p[0]).max(0.0).max(p[0] - max[0]);
    let dy = (min[1] - p[1]).max(0.0).max(p[1] - max[1]);
    dx.hypot(dy)
}

/// Samples the path every millimeter and returns the smallest gap between
/// the sampled centerline and the footprint.
fn sampled_gap(from: &Vec3, to: &Vec3, o: &ObjectRecord) -> f64 {
    let fp = o.footprint();
    let len = (to.xy() - from.xy()).norm();
    let n = (len / 0.001).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let p = from.xy() + (to.xy() - from.xy()) * (i as f64 / n as f64);
            rect_point_distance(fp.min, fp.max, [p.x, p.y])
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn clearance_matches_millimeter_sampling() {
    let cfg = WorkcellConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for _ in 0..400 {
        let n = rng.random_range(1..8);
        let objects: Vec<_> = (0..n)
            .map(|i| {
                let h = rng.random_range(0.02..0.3);
                ObjectRecord::new(
                    ObjectId(i + 1),
                    "box",
                    Vec3::new(rng.random_range(-0.1..0.6), rng.random_range(-0.4..0.4), h / 2.0),
                    h,
                    rng.random_range(0.03..0.2),
                )
                .unwrap()
            })
            .collect();
        let scene = Scene::new(objects, 0.0).unwrap();
        let from = Vec3::new(rng.random_range(-0.1..0.6), rng.random_range(-0.4..0.4), rng.random_range(0.05..0.5));
        let to = Vec3::new(rng.random_range(-0.1..0.6), rng.random_range(-0.4..0.4), rng.random_range(0.05..0.5));
        let half = cfg.gripper_width / 2.0;
        // Skip paths that graze a footprint within the sampling resolution.
        if scene.objects().iter().any(|o| (sampled_gap(&from, &to, o) - half).abs() < 0.001) {
            continue;
        }
        let tallest = scene
            .objects()
            .iter()
            .filter(|o| sampled_gap(&from, &to, o) <= half)
            .map(|o| o.height_m)
            .fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h))));
        let z = from.z.min(to.z);
        if let Some(h) = tallest {
            if (z - (h + cfg.clearance_margin)).abs() < 1e-9 {
                continue;
            }
        }
        let expect_ok = tallest.is_none_or(|h| z >= h + cfg.clearance_margin);
        let got = clearance_check(&from, &to, &scene, None, &cfg);
        assert_eq!(got.is_ok(), expect_ok, "from {from:?} to {to:?}: {got:?}");
        compared += 1;
    }
    assert!(compared > 300, "only {compared} comparable cases");
}

#[test]
fn clearance_examples() {
    let cfg = WorkcellConfig::default();
    let scene = Scene::new(
        vec![ObjectRecord::new(ObjectId(1), "box", Vec3::new(0.3, 0.0, 0.1), 0.2, 0.1).unwrap()],
        0.0,
    )
    .unwrap();
    let a = |z| Vec3::new(0.0, 0.0, z);
    let b = |z| Vec3::new(0.6, 0.0, z);
    assert!(clearance_check(&a(0.30), &b(0.30), &scene, None, &cfg).is_ok());
    assert!(matches!(
        clearance_check(&a(0.22), &b(0.22), &scene, None, &cfg),
        Err(WorkcellError::CollisionPredicted { object: ObjectId(1), .. })
    ));
    // Held object is excluded from its own corridor.
    assert!(clearance_check(&a(0.1), &b(0.1), &scene, Some(ObjectId(1)), &cfg).is_ok());
    // Empty corridor always passes.
    let empty = Scene::new(vec![], 0.0).unwrap();
    assert!(clearance_check(&a(0.0), &b(0.0), &empty, None, &cfg).is_ok());
}

#[test]
fn gripper_angle_is_monotone_and_clamped() {
    let cfg = WorkcellConfig::default();
    assert_eq!(gripper_angle_from_width(0.0, &cfg), 0.8);
    assert_eq!(gripper_angle_from_width(0.12, &cfg), 0.0);
    assert_eq!(gripper_angle_from_width(0.5, &cfg), 0.0);
    assert!((gripper_angle_from_width(0.06, &cfg) - 0.4).abs() < 1e-12);
    let mut prev = f64::INFINITY;
    for i in 0..=200 {
        let a = gripper_angle_from_width(i as f64 * 0.001, &cfg);
        assert!(a <= prev && (cfg.theta_min..=cfg.theta_max).contains(&a));
        prev = a;
    }
}

fn arb_command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (-0.2f64..0.7, -0.5f64..0.5, 0.0f64..0.6).prop_map(|(x, y, z)| Command::MoveLinear(Pose6::at(x, y, z))),
        (-0.4f64..0.4).prop_map(|dz| Command::MoveVertical { dz }),
        (0.0f64..0.8).prop_map(|angle| Command::OpenGripper { angle }),
        (0.0f64..0.8).prop_map(|angle| Command::CloseGripper { angle }),
        (-180.0f64..180.0).prop_map(|degrees| Command::RotateEe { degrees }),
        Just(Command::GoHome),
    ]
}

fn cluttered() -> Scene {
    Scene::new(
        vec![
            ObjectRecord::new(ObjectId(1), "cup", Vec3::new(0.3, 0.1, 0.05), 0.1, 0.07).unwrap(),
            ObjectRecord::new(ObjectId(2), "cup", Vec3::new(0.3, -0.1, 0.05), 0.1, 0.07).unwrap(),
            ObjectRecord::new(ObjectId(3), "bowl", Vec3::new(0.45, 0.2, 0.035), 0.07, 0.15).unwrap(),
        ],
        0.0,
    )
    .unwrap()
}

proptest! {
    /// Arbitrary command streams (failing steps are skipped) never lose
    /// objects, never hold a missing id, and keep the held object glued to
    /// the gripper.
    #[test]
    fn execution_invariants(cmds in prop::collection::vec(arb_command(), 1..40), grasp_first in any::<bool>()) {
        let cfg = WorkcellConfig::default();
        let mut st = WorkcellState::new(RobotState::at_home(&cfg), cluttered());
        let mut cmds = cmds;
        if grasp_first {
            cmds.splice(0..0, [
                Command::MoveLinear(Pose6::at(0.3, 0.1, 0.2)),
                Command::MoveVertical { dz: -0.15 },
                Command::CloseGripper { angle: 0.3 },
            ]);
        }
        let ids: Vec<ObjectId> = st.scene.objects().iter().map(|o| o.id).collect();
        let mut last_t = 0.0;
        for (i, c) in cmds.iter().enumerate() {
            let before = st.clone();
            let r = execute_step(&mut st, &c.to_step(), i, &cfg);
            if r.is_err() {
                prop_assert_eq!(&st, &before);
                continue;
            }
            let now: Vec<ObjectId> = st.scene.objects().iter().map(|o| o.id).collect();
            prop_assert_eq!(&now, &ids);
            if let Some(h) = st.robot.holding {
                prop_assert!(st.scene.get(h).is_some());
                let g = st.grasp.as_ref().unwrap();
                let expect = st.robot.pose.position() + g.offset;
                prop_assert!((st.scene.get(h).unwrap().position - expect).norm() < 1e-12);
                let closed = matches!(c, Command::CloseGripper { .. });
                prop_assert!(closed || before.robot.holding == Some(h));
            } else if before.robot.holding.is_some() {
                let opened = matches!(c, Command::OpenGripper { .. });
                prop_assert!(opened);
            }
            let entry = st.trajectory_log.last().unwrap();
            prop_assert!(entry.t > last_t);
            last_t = entry.t;
            prop_assert_eq!(entry.held_position, st.held_position());
        }
    }
}

#[test]
fn trajectory_is_jsonl() {
    let cfg = WorkcellConfig::default();
    let mut st = WorkcellState::new(RobotState::at_home(&cfg), cluttered());
    execute_step(&mut st, &Command::GoHome.to_step(), 0, &cfg).unwrap();
    execute_step(&mut st, &Command::Wait { seconds: 1.0 }.to_step(), 1, &cfg).unwrap();
    let mut buf = Vec::new();
    st.write_trajectory(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v.get("robot").is_some() && v.get("step").is_some());
    }
}
