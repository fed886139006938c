//! The shipped episode set: one file per supported command shape, plus
//! invalid fixtures that must fail at a known stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

use intentcell_core::episode::{Episode, Predicate};
use intentcell_core::geometry::ObjectId;
use intentcell_core::grammar::{Metric, UnitKind};
use intentcell_core::presets::preset;
use intentcell_core::Config;

use crate::synth::{clutter_scenario, Rendered, Scenario, SynthConfig};

pub fn bundle_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("episodes")
}

/// Where the plate must end up after a near push: moved toward the near
/// anchor by the push distance, or onto it if closer.
fn pushed_near(cfg: &Config, x: f64, y: f64) -> (f64, f64) {
    let [ax, ay] = cfg.planner.near_anchor;
    let (dx, dy) = (ax - x, ay - y);
    let dist = (dx * dx + dy * dy).sqrt();
    let s = cfg.planner.push_distance.min(dist);
    (x + s * dx / dist, y + s * dy / dist)
}

pub fn scenarios(cfg: &Config) -> Vec<Scenario> {
    let id = ObjectId;
    let plate = preset("two-cups-bowl-plate")
        .and_then(|s| s.get(id(4)).map(|o| o.position))
        .expect("preset has the plate");
    let (px, py) = pushed_near(cfg, plate.x, plate.y);
    let tcbp = "two-cups-bowl-plate";
    vec![
        Scenario::new("home", tcbp, "home finish")
            .start_at(0.4, -0.1, 0.3)
            .expect(&[("home", None, None)])
            .predicates(vec![Predicate::RobotAtHome]),
        Scenario::new("throw", tcbp, "throw finish")
            .holding(1)
            .expect(&[("throw", None, None)])
            .predicates(vec![Predicate::InBin { object: id(1) }, Predicate::GripperEmpty]),
        Scenario::new("pick-cup", tcbp, "pick cup this finish")
            .pointing(0, 1)
            .expect(&[("pick", Some(1), None)])
            .predicates(vec![Predicate::Holding { object: id(1) }]),
        Scenario::new("push-plate-near", tcbp, "push plate that near finish")
            .pointing(0, 4)
            .expect(&[("push", Some(4), Some(Metric::qualifier("near", UnitKind::Spatial)))])
            .predicates(vec![
                Predicate::ObjectAt {
                    object: id(4),
                    x: px,
                    y: py,
                    tol: 0.005,
                },
                Predicate::GripperEmpty,
            ]),
        Scenario::new("pick-cup-put-bowl", tcbp, "pick cup this put bowl that finish")
            .pointing(0, 1)
            .pointing(1, 3)
            .expect(&[("pick", Some(1), None), ("put", Some(3), None)])
            .predicates(vec![
                Predicate::ObjectOver {
                    object: id(1),
                    support: id(3),
                },
                Predicate::GripperEmpty,
            ]),
        Scenario::new("pick-cup-pour-cup", tcbp, "pick cup this pour cup that finish")
            .pointing(0, 1)
            .pointing(1, 2)
            .expect(&[("pick", Some(1), None), ("pour", Some(2), None)])
            .predicates(vec![
                Predicate::Poured {
                    from: id(1),
                    into: id(2),
                },
                Predicate::Holding { object: id(1) },
            ]),
        Scenario::new("pick-cup-pour-bowl-90", tcbp, "pick cup this pour bowl that 90 degrees finish")
            .pointing(0, 2)
            .pointing(1, 3)
            .expect(&[("pick", Some(2), None), ("pour", Some(3), Some(Metric::degrees(90.0)))])
            .predicates(vec![Predicate::Poured {
                from: id(2),
                into: id(3),
            }]),
        Scenario::new("pick-throw-rubbish", "rubbish", "pick rubbish this throw finish")
            .via_detections()
            .pointing(0, 1)
            .expect(&[("pick", Some(1), None), ("throw", None, None)])
            .predicates(vec![Predicate::InBin { object: id(1) }, Predicate::GripperEmpty]),
    ]
}

/// Fixtures that must be rejected, with the code of the first hard verdict.
pub fn invalid_scenarios() -> Vec<(Scenario, &'static str)> {
    vec![(
        Scenario::new("pronoun-without-class", "two-cups-bowl-plate", "pick this finish").pointing(0, 1),
        "PronounBeforeClass",
    )]
}

fn render(s: &Scenario, cfg: &Config, seed: u64) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.render(cfg, &SynthConfig::default(), &mut rng).episode
}

/// `(relative path, episode)` for every shipped file.
pub fn render_bundle(cfg: &Config) -> Vec<(PathBuf, Episode)> {
    let valid = scenarios(cfg)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (PathBuf::from(format!("{}.jsonl", s.name)), render(&s, cfg, i as u64)));
    let invalid = invalid_scenarios()
        .into_iter()
        .enumerate()
        .map(|(i, (s, _))| (Path::new("invalid").join(format!("{}.jsonl", s.name)), render(&s, cfg, 1000 + i as u64)));
    valid.chain(invalid).collect()
}

pub fn write_bundle(dir: &Path, cfg: &Config) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (rel, ep) in render_bundle(cfg) {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, ep.to_jsonl())?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// Pick one of six identical cups.
    Clutter,
    /// Any shipped command shape, with varied word timing.
    Mixed,
}

impl GenKind {
    pub fn name(self) -> &'static str {
        match self {
            GenKind::Clutter => "clutter",
            GenKind::Mixed => "mixed",
        }
    }
}

/// `n` synthetic episodes at pointing noise `noise_deg`, reproducible from
/// `seed`. Each is rendered from its own sub-seed.
pub fn generate(kind: GenKind, n: usize, noise_deg: f64, seed: u64, cfg: &Config) -> Vec<Rendered> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let shapes = scenarios(cfg);
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(master.random());
            let (scenario, synth) = match kind {
                GenKind::Clutter => (clutter_scenario(rng.random_range(1..=6)), SynthConfig::with_noise(noise_deg)),
                GenKind::Mixed => (
                    shapes[rng.random_range(0..shapes.len())].clone(),
                    SynthConfig::jittered(noise_deg),
                ),
            };
            let mut r = scenario.render(cfg, &synth, &mut rng);
            r.episode.header.name = format!("{}-{i:04}", kind.name());
            r
        })
        .collect()
}
