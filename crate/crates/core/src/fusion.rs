//! Temporal fusion of command tokens and pointing rays into an [`Intention`].
//!
//! Protocol per subcommand: action word, then (for object-dependent actions)
//! a class word followed by a pronoun, optional metrics, and either another
//! action or `finish`. The object is bound at the pronoun using the newest
//! ray inside the alignment window that ends at the pronoun's `t_end`; rays
//! stamped later never influence the binding.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

use crate::geometry::{select_object, DeicticRay, GeometryError, ObjectId, ObjectRecord, Scene, Selection};
use crate::grammar::{CommandKind, CommandToken, Metric};

pub const MAX_SUBCOMMANDS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Look-back before a pronoun's end in which a ray may bind, seconds.
    pub alignment_window_s: f64,
    /// How far an event may lag the newest one on its stream, seconds.
    pub reorder_tolerance_s: f64,
    /// Rays older than this (relative to the newest) are dropped, seconds.
    pub ray_history_s: f64,
    pub selection_radius_m: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            alignment_window_s: 0.3,
            reorder_tolerance_s: 0.1,
            ray_history_s: 5.0,
            selection_radius_m: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("{stream} event at t={t} arrived after t={latest}, beyond reorder tolerance")]
    OutOfOrderEvent {
        stream: &'static str,
        t: f64,
        latest: f64,
    },
    #[error("pronoun spoken before any class word")]
    PronounBeforeClass,
    #[error("no pointing ray within the alignment window ending at t={t_end}")]
    NoRecentRay { t_end: f64 },
    #[error("object binding failed: {0}")]
    ObjectBindingFailed(GeometryError),
    #[error("incomplete intention: {0}")]
    IncompleteIntention(String),
    #[error("at most {MAX_SUBCOMMANDS} subcommands per intention")]
    TooManySubcommands,
    #[error("action `{0}` is not in the action catalog")]
    UnknownAction(String),
}

impl FusionError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            FusionError::OutOfOrderEvent { .. } => "OutOfOrderEvent",
            FusionError::PronounBeforeClass => "PronounBeforeClass",
            FusionError::NoRecentRay { .. } => "NoRecentRay",
            FusionError::ObjectBindingFailed(_) => "ObjectBindingFailed",
            FusionError::IncompleteIntention(_) => "IncompleteIntention",
            FusionError::TooManySubcommands => "TooManySubcommands",
            FusionError::UnknownAction(_) => "UnknownAction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitAction,
    AwaitClass,
    AwaitPronoun,
    AwaitMetricOrNext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCommand {
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
}

/// Fully bound human intent: one or two subcommands plus the scene they were
/// bound against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intention {
    pub subcommands: Vec<SubCommand>,
    /// Metrics flattened across subcommands, last one wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Metric>,
    pub scene: Scene,
    pub emitted_at: f64,
}

impl Intention {
    pub fn summary(&self) -> IntentionSummary {
        IntentionSummary {
            subcommands: self
                .subcommands
                .iter()
                .map(|s| SubCommandSummary {
                    action: s.action.clone(),
                    object: s.object.as_ref().map(|o| o.id),
                    metric: s.metric.clone(),
                })
                .collect(),
        }
    }
}

/// Actions, object ids and metrics only; what fixtures compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentionSummary {
    pub subcommands: Vec<SubCommandSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCommandSummary {
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
}

impl std::fmt::Display for IntentionSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .subcommands
            .iter()
            .map(|s| {
                let mut p = s.action.clone();
                if let Some(o) = s.object {
                    p.push_str(&format!(", {o}"));
                }
                if let Some(m) = &s.metric {
                    p.push_str(&format!(", {m}"));
                }
                format!("({p})")
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingSubCommand {
    pub action: String,
    pub object_dependent: bool,
    pub class: Option<String>,
    pub object: Option<ObjectRecord>,
    pub metric: Option<Metric>,
}

/// Things worth surfacing that are not errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "snake_case")]
pub enum FusionNote {
    Ignored { text: String, reason: String },
    Bound { subcommand: usize, object: ObjectId, distance: f64, ray_t: f64 },
    Rebound { subcommand: usize, previous: ObjectId, object: ObjectId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub phase: Phase,
    pub pending: Vec<PendingSubCommand>,
    pub latest_ray: Option<DeicticRay>,
    /// Recent rays in timestamp order.
    pub rays: VecDeque<DeicticRay>,
    pub scene_snapshot: Option<Scene>,
    pub last_command_t: Option<f64>,
}

impl Default for EncoderState {
    fn default() -> Self {
        Self {
            phase: Phase::AwaitAction,
            pending: Vec::new(),
            latest_ray: None,
            rays: VecDeque::new(),
            scene_snapshot: None,
            last_command_t: None,
        }
    }
}

/// One encoding session.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: FusionConfig,
    /// Action name → whether it needs an object.
    actions: BTreeMap<String, bool>,
    state: EncoderState,
    notes: Vec<FusionNote>,
}

impl Encoder {
    pub fn new(config: FusionConfig, actions: BTreeMap<String, bool>) -> Self {
        Self {
            config,
            actions,
            state: EncoderState::default(),
            notes: Vec::new(),
        }
    }

    pub fn state(&self) -> &EncoderState {
        &self.state
    }

    pub fn config(&self) -> &FusionConfig {
        &self.config
    }

    pub fn take_notes(&mut self) -> Vec<FusionNote> {
        std::mem::take(&mut self.notes)
    }

    /// Class filter of the open subcommand, if one was spoken.
    pub fn current_class(&self) -> Option<&str> {
        self.state.pending.last().and_then(|p| p.class.as_deref())
    }

    pub fn feed_ray(&mut self, ray: DeicticRay) -> Result<(), FusionError> {
        let tol = self.config.reorder_tolerance_s;
        if let Some(latest) = &self.state.latest_ray {
            if ray.timestamp < latest.timestamp - tol {
                return Err(FusionError::OutOfOrderEvent {
                    stream: "ray",
                    t: ray.timestamp,
                    latest: latest.timestamp,
                });
            }
        }
        let rays = &mut self.state.rays;
        let at = rays.partition_point(|r| r.timestamp <= ray.timestamp);
        rays.insert(at, ray);
        let newest = rays.back().expect("just inserted").clone();
        let horizon = newest.timestamp - self.config.ray_history_s;
        while rays.front().is_some_and(|r| r.timestamp < horizon) {
            rays.pop_front();
        }
        self.state.latest_ray = Some(newest);
        Ok(())
    }

    /// Newest ray stamped within `[t_end − W, t_end]`.
    pub fn alignment_ray(&self, t_end: f64) -> Option<&DeicticRay> {
        let lo = t_end - self.config.alignment_window_s;
        self.state
            .rays
            .iter()
            .rev()
            .find(|r| r.timestamp <= t_end && r.timestamp >= lo)
    }

    /// Nearest object of the current class to the latest ray, for live
    /// feedback. Has no effect on binding.
    pub fn hover(&self, scene: &Scene) -> Option<Selection> {
        let class = self.current_class()?;
        let ray = self.state.latest_ray.as_ref()?;
        select_object(ray, scene, class, self.config.selection_radius_m).ok()
    }

    pub fn feed_command(
        &mut self,
        cmd: &CommandToken,
        scene: &Scene,
    ) -> Result<Option<Intention>, FusionError> {
        let t_end = cmd.t_end();
        if let Some(last) = self.state.last_command_t {
            if t_end < last - self.config.reorder_tolerance_s {
                return Err(FusionError::OutOfOrderEvent {
                    stream: "command",
                    t: t_end,
                    latest: last,
                });
            }
        }
        let result = self.apply(cmd, scene);
        if result.is_ok() {
            let last = self.state.last_command_t.unwrap_or(t_end);
            self.state.last_command_t = Some(last.max(t_end));
        }
        result
    }

    fn ignore(&mut self, cmd: &CommandToken, reason: &str) {
        tracing::debug!(text = %cmd.text(), reason, "token ignored");
        self.notes.push(FusionNote::Ignored {
            text: cmd.text(),
            reason: reason.to_string(),
        });
    }

    fn apply(&mut self, cmd: &CommandToken, scene: &Scene) -> Result<Option<Intention>, FusionError> {
        match &cmd.kind {
            CommandKind::Action(name) => {
                let &object_dependent = self
                    .actions
                    .get(name)
                    .ok_or_else(|| FusionError::UnknownAction(name.clone()))?;
                if self.state.pending.len() >= MAX_SUBCOMMANDS {
                    return Err(FusionError::TooManySubcommands);
                }
                if let Some(open) = self.state.pending.last() {
                    check_complete(open)?;
                }
                self.state.pending.push(PendingSubCommand {
                    action: name.clone(),
                    object_dependent,
                    class: None,
                    object: None,
                    metric: None,
                });
                self.state.phase = if object_dependent {
                    Phase::AwaitClass
                } else {
                    Phase::AwaitMetricOrNext
                };
            }
            CommandKind::Class(label) => match self.state.pending.last_mut() {
                Some(open) => {
                    open.class = Some(label.clone());
                    self.state.phase = Phase::AwaitPronoun;
                }
                None => self.ignore(cmd, "class word before any action"),
            },
            CommandKind::Pronoun => {
                let class = self
                    .current_class()
                    .map(str::to_string)
                    .ok_or(FusionError::PronounBeforeClass)?;
                let t_end = cmd.t_end();
                let ray = self
                    .alignment_ray(t_end)
                    .ok_or(FusionError::NoRecentRay { t_end })?
                    .clone();
                let sel = select_object(&ray, scene, &class, self.config.selection_radius_m)
                    .map_err(FusionError::ObjectBindingFailed)?;
                let index = self.state.pending.len() - 1;
                let open = self.state.pending.last_mut().expect("class implies open subcommand");
                if let Some(prev) = open.object.replace(sel.object.clone()) {
                    tracing::info!(previous = %prev.id, object = %sel.object.id, "subcommand rebound");
                    self.notes.push(FusionNote::Rebound {
                        subcommand: index,
                        previous: prev.id,
                        object: sel.object.id,
                    });
                }
                self.notes.push(FusionNote::Bound {
                    subcommand: index,
                    object: sel.object.id,
                    distance: sel.distance,
                    ray_t: ray.timestamp,
                });
                self.state.scene_snapshot = Some(scene.clone());
                self.state.phase = Phase::AwaitMetricOrNext;
            }
            CommandKind::Metric(m) => match self.state.pending.last_mut() {
                Some(open) => open.metric = Some(m.clone()),
                None => self.ignore(cmd, "metric before any action"),
            },
            CommandKind::Finish => return self.finish(cmd.t_end(), scene).map(Some),
            CommandKind::Number(_) => self.ignore(cmd, "number without unit"),
            CommandKind::Unit(_) => self.ignore(cmd, "unit without number"),
            CommandKind::Unknown => self.ignore(cmd, "not in lexicon"),
        }
        Ok(None)
    }

    fn finish(&mut self, t: f64, scene: &Scene) -> Result<Intention, FusionError> {
        if self.state.pending.is_empty() {
            return Err(FusionError::IncompleteIntention("finish without any action".into()));
        }
        for p in &self.state.pending {
            check_complete(p)?;
        }
        let snapshot = self
            .state
            .scene_snapshot
            .clone()
            .unwrap_or_else(|| scene.clone());
        for p in &self.state.pending {
            if let Some(o) = &p.object {
                if snapshot.get(o.id).is_none() {
                    return Err(FusionError::IncompleteIntention(format!(
                        "object {} is not in the bound scene",
                        o.id
                    )));
                }
            }
        }
        let subcommands: Vec<SubCommand> = self
            .state
            .pending
            .iter()
            .map(|p| SubCommand {
                action: p.action.clone(),
                object: p.object.clone(),
                metric: p.metric.clone(),
            })
            .collect();
        let omega = subcommands.iter().rev().find_map(|s| s.metric.clone());
        let intention = Intention {
            subcommands,
            omega,
            scene: snapshot,
            emitted_at: t,
        };
        self.reset();
        Ok(intention)
    }

    /// Drops any partial encoding. Ray history and the scene snapshot stay.
    pub fn reset(&mut self) {
        self.state.phase = Phase::AwaitAction;
        self.state.pending.clear();
        self.state.last_command_t = None;
    }
}

fn check_complete(p: &PendingSubCommand) -> Result<(), FusionError> {
    if p.object_dependent && p.object.is_none() {
        return Err(FusionError::IncompleteIntention(format!(
            "`{}` needs an object but none was bound",
            p.action
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::grammar::{Lexicon, UnitKind, WordToken};

    fn actions() -> BTreeMap<String, bool> {
        [
            ("pick", true),
            ("put", true),
            ("pour", true),
            ("push", true),
            ("home", false),
            ("throw", false),
        ]
        .into_iter()
        .map(|(a, d)| (a.to_string(), d))
        .collect()
    }

    fn scene() -> Scene {
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

    /// Ray from a raised hand through `target`.
    fn ray_at(target: Vec3, t: f64) -> DeicticRay {
        let elbow = Vec3::new(0.9, 0.4, 0.9);
        let wrist = elbow + 0.3 * (target - elbow).normalize();
        DeicticRay::new(elbow, wrist, t).unwrap()
    }

    fn tok(kind: CommandKind, t: f64) -> CommandToken {
        CommandToken {
            kind,
            source: vec![WordToken::new("w", t, t + 0.2, 1.0).unwrap()],
        }
    }

    fn run(enc: &mut Encoder, stream: &[(CommandKind, f64)], rays: &[(Vec3, f64)]) -> Result<Option<Intention>, FusionError> {
        let s = scene();
        let mut events: Vec<(f64, Result<CommandKind, Vec3>)> = stream
            .iter()
            .map(|(k, t)| (t + 0.2, Ok(k.clone())))
            .chain(rays.iter().map(|(p, t)| (*t, Err(*p))))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = None;
        for (t, ev) in events {
            match ev {
                Ok(kind) => {
                    if let Some(i) = enc.feed_command(&tok(kind, t - 0.2), &s)? {
                        out = Some(i);
                    }
                }
                Err(p) => enc.feed_ray(ray_at(p, t))?,
            }
        }
        Ok(out)
    }

    fn cup1() -> Vec3 {
        Vec3::new(0.3, 0.1, 0.05)
    }

    #[test]
    fn fresh_ray_becomes_latest() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let r = ray_at(cup1(), 1.0);
        enc.feed_ray(r.clone()).unwrap();
        assert_eq!(enc.state().latest_ray, Some(r));
    }

    #[test]
    fn regressing_ray_rejected_without_tolerance() {
        let cfg = FusionConfig {
            reorder_tolerance_s: 0.0,
            ..FusionConfig::default()
        };
        let mut enc = Encoder::new(cfg, actions());
        enc.feed_ray(ray_at(cup1(), 1.0)).unwrap();
        assert!(matches!(
            enc.feed_ray(ray_at(cup1(), 0.5)),
            Err(FusionError::OutOfOrderEvent { .. })
        ));
    }

    #[test]
    fn small_reorder_gives_same_state_in_both_orders() {
        let a = ray_at(cup1(), 1.0);
        let b = ray_at(Vec3::new(0.3, -0.1, 0.05), 0.95);
        let mut e1 = Encoder::new(FusionConfig::default(), actions());
        e1.feed_ray(a.clone()).unwrap();
        e1.feed_ray(b.clone()).unwrap();
        let mut e2 = Encoder::new(FusionConfig::default(), actions());
        e2.feed_ray(b).unwrap();
        e2.feed_ray(a.clone()).unwrap();
        assert_eq!(e1.state(), e2.state());
        assert_eq!(e1.state().latest_ray, Some(a));
    }

    #[test]
    fn pick_cup_binds_pointed_cup() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let i = run(
            &mut enc,
            &[
                (CommandKind::Action("pick".into()), 1.0),
                (CommandKind::Class("cup".into()), 1.5),
                (CommandKind::Pronoun, 2.0),
                (CommandKind::Finish, 3.0),
            ],
            &[(cup1(), 2.1), (Vec3::new(0.3, -0.1, 0.05), 2.3)],
        )
        .unwrap()
        .unwrap();
        assert_eq!(i.summary().to_string(), "(pick, #1)");
    }

    #[test]
    fn pick_then_pour_with_angle() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let bowl = Vec3::new(0.45, 0.2, 0.035);
        let i = run(
            &mut enc,
            &[
                (CommandKind::Action("pick".into()), 1.0),
                (CommandKind::Class("cup".into()), 1.5),
                (CommandKind::Pronoun, 2.0),
                (CommandKind::Action("pour".into()), 3.0),
                (CommandKind::Class("bowl".into()), 3.5),
                (CommandKind::Pronoun, 4.0),
                (CommandKind::Metric(Metric::degrees(90.0)), 4.5),
                (CommandKind::Finish, 5.0),
            ],
            &[(cup1(), 2.15), (bowl, 4.1)],
        )
        .unwrap()
        .unwrap();
        let s = i.summary();
        assert_eq!(s.subcommands.len(), 2);
        assert_eq!(s.subcommands[0].object, Some(ObjectId(1)));
        assert_eq!(s.subcommands[1].object, Some(ObjectId(3)));
        assert_eq!(i.omega, Some(Metric::degrees(90.0)));
        assert_eq!(s.subcommands[1].metric, Some(Metric::degrees(90.0)));
    }

    #[test]
    fn home_needs_no_object() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let i = run(
            &mut enc,
            &[(CommandKind::Action("home".into()), 1.0), (CommandKind::Finish, 2.0)],
            &[],
        )
        .unwrap()
        .unwrap();
        assert_eq!(i.subcommands.len(), 1);
        assert!(i.subcommands[0].object.is_none());
    }

    #[test]
    fn pronoun_before_class() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let err = run(
            &mut enc,
            &[(CommandKind::Action("pick".into()), 1.0), (CommandKind::Pronoun, 2.0)],
            &[(cup1(), 2.1)],
        )
        .unwrap_err();
        assert_eq!(err, FusionError::PronounBeforeClass);
    }

    #[test]
    fn stale_ray_does_not_bind() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let err = run(
            &mut enc,
            &[
                (CommandKind::Action("pick".into()), 1.0),
                (CommandKind::Class("cup".into()), 1.5),
                (CommandKind::Pronoun, 2.0),
            ],
            &[(cup1(), 1.5)],
        )
        .unwrap_err();
        assert_eq!(err, FusionError::NoRecentRay { t_end: 2.2 });
    }

    #[test]
    fn finish_without_binding_is_incomplete() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let err = run(
            &mut enc,
            &[
                (CommandKind::Action("pick".into()), 1.0),
                (CommandKind::Class("cup".into()), 1.5),
                (CommandKind::Finish, 2.0),
            ],
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, FusionError::IncompleteIntention(_)));
    }

    #[test]
    fn third_action_rejected() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let err = run(
            &mut enc,
            &[
                (CommandKind::Action("home".into()), 1.0),
                (CommandKind::Action("throw".into()), 1.5),
                (CommandKind::Action("home".into()), 2.0),
            ],
            &[],
        )
        .unwrap_err();
        assert_eq!(err, FusionError::TooManySubcommands);
    }

    #[test]
    fn rebinding_is_noted() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let i = run(
            &mut enc,
            &[
                (CommandKind::Action("pick".into()), 1.0),
                (CommandKind::Class("cup".into()), 1.5),
                (CommandKind::Pronoun, 2.0),
                (CommandKind::Pronoun, 3.0),
                (CommandKind::Finish, 4.0),
            ],
            &[(cup1(), 2.1), (Vec3::new(0.3, -0.1, 0.05), 3.1)],
        )
        .unwrap()
        .unwrap();
        assert_eq!(i.summary().subcommands[0].object, Some(ObjectId(2)));
        assert!(enc.take_notes().iter().any(|n| matches!(n, FusionNote::Rebound { .. })));
    }

    #[test]
    fn reset_is_idempotent_and_restores_fresh_behaviour() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let s = scene();
        enc.feed_command(&tok(CommandKind::Action("pick".into()), 0.0), &s).unwrap();
        enc.feed_command(&tok(CommandKind::Class("bowl".into()), 0.3), &s).unwrap();
        enc.reset();
        assert_eq!(enc.state().phase, Phase::AwaitAction);
        assert!(enc.state().pending.is_empty());
        let once = enc.state().clone();
        enc.reset();
        assert_eq!(enc.state(), &once);

        let stream = [
            (CommandKind::Action("pick".into()), 1.0),
            (CommandKind::Class("cup".into()), 1.5),
            (CommandKind::Pronoun, 2.0),
            (CommandKind::Finish, 3.0),
        ];
        let rays = [(cup1(), 2.1)];
        let after_reset = run(&mut enc, &stream, &rays).unwrap();
        let fresh = run(&mut Encoder::new(FusionConfig::default(), actions()), &stream, &rays).unwrap();
        assert_eq!(after_reset, fresh);
    }

    #[test]
    fn unknown_and_partial_tokens_are_noops() {
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        let s = scene();
        for kind in [CommandKind::Unknown, CommandKind::Number(5.0), CommandKind::Unit(UnitKind::Degrees)] {
            assert_eq!(enc.feed_command(&tok(kind, 0.5), &s), Ok(None));
        }
        assert_eq!(enc.state().phase, Phase::AwaitAction);
        assert_eq!(enc.take_notes().len(), 3);
    }

    #[test]
    fn lexicon_actions_drive_encoder() {
        let lex = Lexicon::default();
        let tok = crate::grammar::classify(&WordToken::new("initial", 0.0, 0.2, 1.0).unwrap(), &lex);
        let mut enc = Encoder::new(FusionConfig::default(), actions());
        enc.feed_command(&tok, &scene()).unwrap();
        assert_eq!(enc.state().pending[0].action, "home");
    }
}
