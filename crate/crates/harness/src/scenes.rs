//! Random tabletop scenes and intentions for property checks.

use rand::Rng;

use intentcell_core::fusion::{Intention, SubCommand};
use intentcell_core::geometry::{ObjectId, ObjectRecord, Scene, Vec3};
use intentcell_core::grammar::{Metric, UnitKind};

const CLASSES: [(&str, f64, f64); 4] = [("cup", 0.10, 0.07), ("bowl", 0.07, 0.15), ("plate", 0.02, 0.20), ("bottle", 0.22, 0.07)];

/// 2 to 6 non-overlapping objects resting on the table inside the reachable
/// area, with at least 4 cm between footprints.
pub fn random_scene<R: Rng>(rng: &mut R) -> Scene {
    let n = rng.random_range(2..=6);
    let mut objects: Vec<ObjectRecord> = Vec::new();
    while objects.len() < n {
        let (class, h, b) = CLASSES[rng.random_range(0..CLASSES.len())];
        let p = Vec3::new(rng.random_range(0.05..0.6), rng.random_range(-0.35..0.35), h / 2.0);
        if objects
            .iter()
            .all(|o| (o.position.xy() - p.xy()).norm() > (o.width_m + b) / 2.0 + 0.04)
        {
            let id = ObjectId(objects.len() as u32 + 1);
            objects.push(ObjectRecord::new(id, class, p, h, b).expect("generated objects are valid"));
        }
    }
    Scene::new(objects, 0.0).expect("generated ids are unique")
}

pub fn intention(scene: &Scene, subs: &[(&str, Option<ObjectId>, Option<Metric>)]) -> Intention {
    Intention {
        subcommands: subs
            .iter()
            .map(|(a, o, m)| SubCommand {
                action: a.to_string(),
                object: o.map(|id| scene.get(id).expect("object is in the scene").clone()),
                metric: m.clone(),
            })
            .collect(),
        omega: subs.iter().rev().find_map(|s| s.2.clone()),
        scene: scene.clone(),
        emitted_at: 0.0,
    }
}

/// One of the supported one- and two-step command shapes over random
/// objects of `scene`.
pub fn random_intention<R: Rng>(scene: &Scene, rng: &mut R) -> Intention {
    let ids: Vec<ObjectId> = scene.objects().iter().map(|o| o.id).collect();
    let a = ids[rng.random_range(0..ids.len())];
    let others: Vec<ObjectId> = ids.iter().copied().filter(|&i| i != a).collect();
    let b = others[rng.random_range(0..others.len())];
    let spatial = |q: &str| Some(Metric::qualifier(q, UnitKind::Spatial));
    let subs = match rng.random_range(0..8) {
        0 => vec![("pick", Some(a), None)],
        1 => vec![("pick", Some(a), None), ("put", Some(b), None)],
        2 => vec![
            ("pick", Some(a), None),
            ("pour", Some(b), Some(Metric::degrees(f64::from(rng.random_range(2..=36u32) * 5)))),
        ],
        3 => vec![("pick", Some(a), None), ("throw", None, None)],
        4 => vec![("push", Some(a), spatial(if rng.random_bool(0.5) { "near" } else { "far" }))],
        5 => vec![("clean", Some(a), None), ("home", None, None)],
        6 => vec![("pick", Some(a), None), ("home", None, None)],
        _ => vec![("home", None, None)],
    };
    intention(scene, &subs)
}
