//! Offline side of intentcell: episode replay, accuracy and robustness
//! metrics, synthetic episode generation and plan mutation corpora.

pub mod bundle;
pub mod metrics;
pub mod mutation;
pub mod replay;
pub mod scenes;
pub mod synth;

use std::sync::Arc;

use intentcell_core::planner::llm::{ChatCompletionClient, OfflineClient};
use intentcell_core::planner::{LlmClient, LlmError, PlanSource};
use intentcell_core::Config;

pub use metrics::{evaluate, evaluate_dir, MetricsReport};
pub use replay::{replay, replay_with, ReplayOutcome};

/// Model client required by `config`, if its planner uses one.
pub fn client_for(config: &Config) -> Result<Option<Arc<dyn LlmClient>>, LlmError> {
    if config.planner.source != PlanSource::Llm {
        return Ok(None);
    }
    if config.planner.llm.offline {
        return Ok(Some(Arc::new(OfflineClient)));
    }
    Ok(Some(Arc::new(ChatCompletionClient::from_env(config.planner.llm.clone())?)))
}
