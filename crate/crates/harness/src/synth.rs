//! Synthetic episodes: a scripted utterance plus a simulated pointing arm.
//!
//! The arm is an elbow fixed across the table from the robot and a 25 cm
//! forearm. While a pronoun is spoken the forearm aims at its target, with
//! the aim rotated by a normal angular error; otherwise it hangs down.
//! Skeleton frames are emitted at 30 Hz in the camera frame.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use intentcell_core::episode::{Episode, EpisodeHeader, Expectation, InputEvent, Predicate, TrackedDetection};
use intentcell_core::fusion::{IntentionSummary, SubCommandSummary};
use intentcell_core::geometry::{BoundingBox, CameraModel, Detection, ObjectId, Scene, SkeletonFrame, Vec3};
use intentcell_core::grammar::{Metric, WordToken};
use intentcell_core::presets::preset;
use intentcell_core::workcell::Pose6;
use intentcell_core::Config;

pub const FRAME_RATE_HZ: f64 = 30.0;
pub const FOREARM_M: f64 = 0.25;

pub fn elbow() -> Vec3 {
    Vec3::new(0.95, 0.15, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Standard deviation of the pointing error, degrees.
    pub noise_deg: f64,
    /// Word duration range, seconds.
    pub word_s: (f64, f64),
    /// Silence between words, seconds.
    pub gap_s: (f64, f64),
    pub skeleton_confidence: f64,
    pub word_confidence: f64,
    /// Pointing starts this long before a pronoun begins.
    pub lead_s: f64,
    /// And is held this long after it ends.
    pub hold_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            noise_deg: 0.0,
            word_s: (0.3, 0.3),
            gap_s: (0.2, 0.2),
            skeleton_confidence: 0.9,
            word_confidence: 1.0,
            lead_s: 0.6,
            hold_s: 0.2,
        }
    }
}

impl SynthConfig {
    pub fn with_noise(noise_deg: f64) -> Self {
        Self {
            noise_deg,
            ..Self::default()
        }
    }

    /// Varied word and gap lengths.
    pub fn jittered(noise_deg: f64) -> Self {
        Self {
            noise_deg,
            word_s: (0.2, 0.45),
            gap_s: (0.05, 0.5),
            ..Self::default()
        }
    }
}

/// A word; pronouns carry the object they point at.
#[derive(Debug, Clone, PartialEq)]
pub struct Cue {
    pub word: String,
    pub target: Option<ObjectId>,
}

impl Cue {
    pub fn say(word: &str) -> Self {
        Self {
            word: word.into(),
            target: None,
        }
    }

    pub fn point(word: &str, target: u32) -> Self {
        Self {
            word: word.into(),
            target: Some(ObjectId(target)),
        }
    }
}

/// A named task: starting state, what is said and pointed at, and what must
/// come out.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub task: String,
    pub preset: String,
    pub holding: Option<ObjectId>,
    pub start: Option<Pose6>,
    pub cues: Vec<Cue>,
    pub intention: Option<IntentionSummary>,
    pub predicates: Vec<Predicate>,
    /// Start from an empty scene and report the preset through detections.
    pub detections: bool,
}

impl Scenario {
    pub fn new(name: &str, preset: &str, words: &str) -> Self {
        Self {
            name: name.into(),
            task: name.into(),
            preset: preset.into(),
            holding: None,
            start: None,
            cues: words.split_whitespace().map(Cue::say).collect(),
            intention: None,
            predicates: vec![],
            detections: false,
        }
    }

    /// Points the `n`th pronoun (from 0) at `target`.
    pub fn pointing(mut self, n: usize, target: u32) -> Self {
        let cue = self
            .cues
            .iter_mut()
            .filter(|c| matches!(c.word.as_str(), "this" | "that" | "there"))
            .nth(n)
            .expect("scenario has that many pronouns");
        cue.target = Some(ObjectId(target));
        self
    }

    pub fn expect(mut self, subs: &[(&str, Option<u32>, Option<Metric>)]) -> Self {
        self.intention = Some(summary(subs));
        self
    }

    pub fn predicates(mut self, p: Vec<Predicate>) -> Self {
        self.predicates = p;
        self
    }

    pub fn task(mut self, task: &str) -> Self {
        self.task = task.into();
        self
    }

    pub fn holding(mut self, id: u32) -> Self {
        self.holding = Some(ObjectId(id));
        self
    }

    pub fn start_at(mut self, x: f64, y: f64, z: f64) -> Self {
        self.start = Some(Pose6::at(x, y, z));
        self
    }

    pub fn via_detections(mut self) -> Self {
        self.detections = true;
        self
    }

    pub fn header(&self, cfg: &Config) -> EpisodeHeader {
        let mut h = EpisodeHeader::new(self.name.clone(), self.preset.clone());
        h.task = Some(self.task.clone());
        if self.detections {
            h.preset = None;
            h.scene = Some(Scene::new(vec![], 0.0).expect("empty scene is valid"));
        }
        h.holding = self.holding;
        h.robot = self.start.map(|pose| {
            let mut r = intentcell_core::workcell::RobotState::at_home(&cfg.workcell);
            r.pose = pose;
            r
        });
        if self.intention.is_some() || !self.predicates.is_empty() {
            h.expect = Some(Expectation {
                intention: self.intention.clone(),
                predicates: self.predicates.clone(),
            });
        }
        h
    }

    pub fn render<R: Rng>(&self, cfg: &Config, synth: &SynthConfig, rng: &mut R) -> Rendered {
        let scene = preset(&self.preset).expect("scenario preset exists");
        let mut words = Vec::new();
        let mut pointing = Vec::new();
        let mut pronoun_ends = Vec::new();
        let mut t = 0.5;
        for cue in &self.cues {
            let dur = rng.random_range(synth.word_s.0..=synth.word_s.1);
            let end = t + dur;
            words.push(WordToken::new(&cue.word, t, end, synth.word_confidence).expect("scenario words are valid"));
            if let Some(id) = cue.target {
                let obj = scene.get(id).expect("scenario target exists");
                pointing.push((t - synth.lead_s, end + synth.hold_s, obj.position));
                pronoun_ends.push(end);
            }
            t = end + rng.random_range(synth.gap_s.0..=synth.gap_s.1);
        }
        let last = words.last().map_or(0.5, |w| w.t_end) + synth.hold_s;

        let mut events = Vec::new();
        if self.detections {
            events.extend(detections(&scene, &cfg.camera, 0.0, 0.95));
        }
        let noise = Normal::new(0.0, synth.noise_deg.to_radians()).expect("noise is finite and non-negative");
        let e = elbow();
        let n_frames = (last * FRAME_RATE_HZ).ceil() as usize;
        let mut frames = Vec::with_capacity(n_frames);
        for k in 0..=n_frames {
            let ft = k as f64 / FRAME_RATE_HZ;
            let dir = match pointing.iter().find(|(a, b, _)| ft >= *a && ft <= *b) {
                Some((_, _, target)) => perturb((target - e).normalize(), noise.sample(rng), rng),
                None => Vec3::new(0.0, 0.0, -1.0),
            };
            frames.push((ft, dir));
        }
        // Interleave streams by time so files read naturally.
        let mut wi = words.into_iter().peekable();
        for (ft, dir) in frames {
            while wi.peek().is_some_and(|w| w.t_end <= ft) {
                events.push(InputEvent::Word(wi.next().expect("peeked")));
            }
            events.push(InputEvent::Skeleton(SkeletonFrame {
                timestamp: ft,
                right_elbow: cfg.camera.to_camera(&e),
                right_wrist: cfg.camera.to_camera(&(e + dir * FOREARM_M)),
                confidence: synth.skeleton_confidence,
            }));
        }
        events.extend(wi.map(InputEvent::Word));
        Rendered {
            episode: Episode {
                header: self.header(cfg),
                events,
            },
            pronoun_ends,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub episode: Episode,
    /// End time of each pointed pronoun, in order.
    pub pronoun_ends: Vec<f64>,
}

pub fn summary(subs: &[(&str, Option<u32>, Option<Metric>)]) -> IntentionSummary {
    IntentionSummary {
        subcommands: subs
            .iter()
            .map(|(a, o, m)| SubCommandSummary {
                action: a.to_string(),
                object: o.map(ObjectId),
                metric: m.clone(),
            })
            .collect(),
    }
}

/// Rotates unit `d` by `angle` about a uniformly random axis perpendicular
/// to it.
pub fn perturb<R: Rng>(d: Vec3, angle: f64, rng: &mut R) -> Vec3 {
    if angle == 0.0 {
        return d;
    }
    let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = d.cross(&helper).normalize();
    let e2 = d.cross(&e1);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let axis = e1 * phi.cos() + e2 * phi.sin();
    d * angle.cos() + axis.cross(&d) * angle.sin()
}

/// One detection per object as the camera would report it.
pub fn detections(scene: &Scene, camera: &CameraModel, t: f64, confidence: f64) -> Vec<InputEvent> {
    scene
        .objects()
        .iter()
        .map(|o| {
            let (u, v, depth) = camera.project(&o.position).expect("object is in front of the camera");
            let bbox = BoundingBox::from_center(u, v, o.width_m * camera.fx() / depth, o.height_m * camera.fy() / depth);
            InputEvent::Detection(TrackedDetection {
                track_id: o.id,
                detection: Detection {
                    class_name: o.class_name.clone(),
                    bbox,
                    depth_m: depth,
                    timestamp: t,
                    confidence,
                },
            })
        })
        .collect()
}

/// Six-cups trial: pick the cup at `target` (1..=6).
pub fn clutter_scenario(target: u32) -> Scenario {
    Scenario::new(&format!("clutter-cup{target}"), "six-cups", "pick cup this finish")
        .task("clutter-pick")
        .pointing(0, target)
        .expect(&[("pick", Some(target), None)])
        .predicates(vec![Predicate::Holding {
            object: ObjectId(target),
        }])
}
