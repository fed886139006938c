//! Accuracy and robustness over an episode set.
//!
//! accuracy = executed / trials; robustness = correct intentions / episodes
//! that state one. Both are percentages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

use intentcell_core::episode::{Episode, EpisodeError};
use intentcell_core::planner::LlmClient;
use intentcell_core::session::StageTimes;
use intentcell_core::Config;

use crate::replay::{replay_with, ReplayOutcome};

pub const SENSOR_NOTE: &str = "lighting conditions are represented only through degraded detection and \
skeleton confidence; no image-level illumination model is applied";

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Episode {
        path: String,
        #[source]
        source: EpisodeError,
    },
    #[error("no episodes in {0}")]
    Empty(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub n_trials: usize,
    pub n_executed: usize,
    pub n_total: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    /// `None` when no episode states an expected intention.
    pub robustness: Option<f64>,
}

impl Counts {
    fn add(&mut self, o: &ReplayOutcome) {
        self.n_trials += 1;
        self.n_executed += usize::from(o.executed);
        if let Some(ok) = o.intent_correct {
            self.n_total += 1;
            self.n_correct += usize::from(ok);
        }
    }

    fn finish(&mut self) {
        self.accuracy = percent(self.n_executed, self.n_trials).unwrap_or(0.0);
        self.robustness = percent(self.n_correct, self.n_total);
    }
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub name: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_correct: Option<bool>,
    pub executed: bool,
    /// Codes of hard verdicts, in order.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_s: f64,
    pub stages: StageTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub note: String,
    #[serde(flatten)]
    pub overall: Counts,
    pub per_task: BTreeMap<String, Counts>,
    pub episodes: Vec<EpisodeRow>,
    /// Wall-clock only; excluded from [`MetricsReport::deterministic_json`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl MetricsReport {
    pub fn from_outcomes(outcomes: &[ReplayOutcome]) -> Self {
        let mut overall = Counts::default();
        let mut per_task: BTreeMap<String, Counts> = BTreeMap::new();
        let mut stages = StageTimes::default();
        for o in outcomes {
            overall.add(o);
            per_task.entry(o.task.clone()).or_default().add(o);
            stages.add(&o.times);
        }
        overall.finish();
        per_task.values_mut().for_each(Counts::finish);
        let episodes = outcomes
            .iter()
            .map(|o| EpisodeRow {
                name: o.name.clone(),
                task: o.task.clone(),
                intention: o.intentions.last().map(|i| i.summary().to_string()),
                intent_correct: o.intent_correct,
                executed: o.executed,
                failures: o.hard_verdicts().map(|v| v.code.clone()).collect(),
            })
            .collect();
        Self {
            note: SENSOR_NOTE.to_string(),
            overall,
            per_task,
            episodes,
            timing: Some(Timing { wall_s: 0.0, stages }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without wall-clock fields; identical across runs on the same
    /// inputs.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.timing = None;
        r.to_json()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let rob = |c: &Counts| c.robustness.map_or("-".to_string(), |r| format!("{r:.1}%"));
        let _ = writeln!(s, "note: {}", self.note);
        let _ = writeln!(
            s,
            "{:<24} {:>7} {:>9} {:>10} {:>11}",
            "task", "trials", "executed", "accuracy", "robustness"
        );
        for (task, c) in &self.per_task {
            let _ = writeln!(
                s,
                "{:<24} {:>7} {:>9} {:>9.1}% {:>11}",
                task,
                c.n_trials,
                c.n_executed,
                c.accuracy,
                rob(c)
            );
        }
        let c = &self.overall;
        let _ = writeln!(
            s,
            "{:<24} {:>7} {:>9} {:>9.1}% {:>11}",
            "all",
            c.n_trials,
            c.n_executed,
            c.accuracy,
            rob(c)
        );
        for e in self.episodes.iter().filter(|e| !e.failures.is_empty()) {
            let _ = writeln!(s, "  {}: {}", e.name, e.failures.join(", "));
        }
        if let Some(t) = &self.timing {
            let st = &t.stages;
            let _ = writeln!(
                s,
                "wall {:.3}s  perception {:.3}s  fusion {:.3}s  planning {:.3}s  execution {:.3}s",
                t.wall_s, st.perception_s, st.fusion_s, st.planning_s, st.execution_s
            );
        }
        s
    }
}

/// Replays every episode in parallel; results keep input order.
pub fn evaluate(episodes: &[Episode], config: &Arc<Config>, client: Option<Arc<dyn LlmClient>>) -> MetricsReport {
    let start = Instant::now();
    let outcomes: Vec<ReplayOutcome> = episodes
        .par_iter()
        .map(|e| replay_with(e, config, client.clone()))
        .collect();
    let mut report = MetricsReport::from_outcomes(&outcomes);
    if let Some(t) = &mut report.timing {
        t.wall_s = start.elapsed().as_secs_f64();
    }
    report
}

/// `*.jsonl` files directly inside `dir`, sorted by name.
pub fn episode_files(dir: &Path) -> Result<Vec<PathBuf>, EvaluateError> {
    let io = |source| EvaluateError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_dir(dir: &Path) -> Result<Vec<Episode>, EvaluateError> {
    let files = episode_files(dir)?;
    if files.is_empty() {
        return Err(EvaluateError::Empty(dir.display().to_string()));
    }
    files
        .iter()
        .map(|p| {
            Episode::load(p).map_err(|source| EvaluateError::Episode {
                path: p.display().to_string(),
                source,
            })
        })
        .collect()
}

pub fn evaluate_dir(
    dir: &Path,
    config: &Arc<Config>,
    client: Option<Arc<dyn LlmClient>>,
) -> Result<MetricsReport, EvaluateError> {
    Ok(evaluate(&load_dir(dir)?, config, client))
}
