//! Offline replay of one episode through the shared session pipeline.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use intentcell_core::episode::Episode;
use intentcell_core::fusion::{FusionNote, Intention};
use intentcell_core::geometry::ObjectId;
use intentcell_core::planner::{ActionSequence, LlmClient};
use intentcell_core::session::{Session, SessionOutput, Stage, StageTimes, Verdict};
use intentcell_core::workcell::WorkcellState;
use intentcell_core::Config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub subcommand: usize,
    pub object: ObjectId,
    pub distance: f64,
    pub ray_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub name: String,
    pub task: String,
    pub intentions: Vec<Intention>,
    pub bindings: Vec<Binding>,
    pub plans: Vec<ActionSequence>,
    pub verdicts: Vec<Verdict>,
    pub final_state: WorkcellState,
    /// `None` when the episode states no expected intention.
    pub intent_correct: Option<bool>,
    /// A plan ran to completion and every expected predicate holds.
    pub executed: bool,
    #[serde(skip)]
    pub times: StageTimes,
}

impl ReplayOutcome {
    pub fn hard_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.hard)
    }

    pub fn failed(&self) -> bool {
        self.hard_verdicts().next().is_some()
    }
}

pub fn replay(episode: &Episode, config: &Arc<Config>) -> ReplayOutcome {
    replay_with(episode, config, None)
}

pub fn replay_with(episode: &Episode, config: &Arc<Config>, client: Option<Arc<dyn LlmClient>>) -> ReplayOutcome {
    let header = &episode.header;
    let initial = header
        .initial_state(&config.workcell)
        .expect("parsed episodes have a valid starting state");
    let mut session = Session::new(config.clone(), initial);
    if let Some(c) = client {
        session = session.with_client(c);
    }
    let mut outputs = Vec::new();
    for ev in episode.ordered_events() {
        outputs.extend(session.handle(ev));
    }
    outputs.extend(session.finish_stream());

    let mut intentions = Vec::new();
    let mut bindings = Vec::new();
    let mut plans = Vec::new();
    let mut verdicts = Vec::new();
    for o in outputs {
        match o {
            SessionOutput::IntentionEmitted(i) => intentions.push(i),
            SessionOutput::Note(FusionNote::Bound {
                subcommand,
                object,
                distance,
                ray_t,
            }) => bindings.push(Binding {
                subcommand,
                object,
                distance,
                ray_t,
            }),
            SessionOutput::Plan(p) => plans.push(p),
            SessionOutput::Verdict(v) => verdicts.push(v),
            _ => {}
        }
    }
    let pipeline_ok = !verdicts.iter().any(|v| v.hard);
    let ran = verdicts.iter().any(|v| v.code == "Executed");
    let final_state = session.workcell().clone();

    let expect = header.expect.clone().unwrap_or_default();
    let intent_correct = expect.intention.as_ref().map(|want| {
        let got = intentions.last().map(Intention::summary);
        let ok = got.as_ref() == Some(want);
        if !ok {
            let got = got.map_or("nothing".to_string(), |i| i.to_string());
            verdicts.push(check_failed(
                Stage::Fusion,
                "IntentionMismatch",
                format!("expected {want}, got {got}"),
            ));
        }
        ok
    });
    let mut predicates_ok = true;
    for p in &expect.predicates {
        if !p.holds(&final_state, &config.workcell) {
            predicates_ok = false;
            verdicts.push(check_failed(
                Stage::Execution,
                "PredicateFailed",
                format!("final state does not satisfy {}", serde_json::to_string(p).unwrap_or_default()),
            ));
        }
    }
    ReplayOutcome {
        name: header.name.clone(),
        task: header.task_label(),
        intentions,
        bindings,
        plans,
        verdicts,
        final_state,
        intent_correct,
        executed: pipeline_ok && ran && predicates_ok,
        times: session.stage_times(),
    }
}

fn check_failed(stage: Stage, code: &str, message: String) -> Verdict {
    Verdict {
        stage,
        code: code.into(),
        message,
        hard: true,
        step: None,
    }
}
