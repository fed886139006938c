//! Session table and per-message handling. Synchronous; the server calls it
//! from blocking tasks.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use thiserror::Error;

use intentcell_core::config::Config;
use intentcell_core::episode::{EpisodeHeader, InputEvent, Touch};
use intentcell_core::fusion::FusionNote;
use intentcell_core::geometry::DeicticRay;
use intentcell_core::grammar::WordToken;
use intentcell_core::planner::LlmClient;
use intentcell_core::session::{Session, SessionOutput};
use intentcell_core::workcell::WorkcellState;

use crate::protocol::{
    Inbound, InboundMessage, IntentionEmitted, Outbound, OutboundMessage, PlanPayload, SceneRequest,
    SelectionFeedback, StateUpdate, PROTOCOL_VERSION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("unknown scene preset `{0}`")]
    UnknownScenePreset(String),
    #[error("session `{0}` is not open")]
    SessionClosed(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::UnknownScenePreset(_) => "UnknownScenePreset",
            GatewayError::SessionClosed(_) => "SessionClosed",
            GatewayError::MalformedMessage(_) => "MalformedMessage",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    /// Minimum client-time spacing between hover frames.
    pub hover_interval_s: f64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self { hover_interval_s: 0.1 }
    }
}

struct Slot {
    session: Session,
    in_seq: u64,
    out_seq: u64,
    last_hover_t: Option<f64>,
}

pub struct SessionManager {
    config: Arc<Config>,
    gateway: GatewayConfig,
    client: Option<Arc<dyn LlmClient>>,
    next_id: AtomicU64,
    sessions: Mutex<HashMap<String, Arc<Mutex<Slot>>>>,
}

impl SessionManager {
    pub fn new(config: Arc<Config>, gateway: GatewayConfig) -> Self {
        Self {
            config,
            gateway,
            client: None,
            next_id: AtomicU64::new(1),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_client(mut self, client: Arc<dyn LlmClient>) -> Self {
        self.client = Some(client);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Allocates a session seeded from `preset`; returns its id and the
    /// opening `state_update`.
    pub fn open_session(&self, preset: &str) -> Result<(String, Vec<OutboundMessage>), GatewayError> {
        let workcell = seed(&EpisodeHeader::new("live", preset), &self.config)?;
        let mut session = Session::new(self.config.clone(), workcell);
        if let Some(c) = &self.client {
            session = session.with_client(c.clone());
        }
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let mut slot = Slot {
            session,
            in_seq: 0,
            out_seq: 0,
            last_hover_t: None,
        };
        let body = state_update(&slot.session, true);
        let opening = vec![stamp(&mut slot, &id, 0.0, body)];
        self.lock().insert(id.clone(), Arc::new(Mutex::new(slot)));
        tracing::info!(session = %id, preset, "session opened");
        Ok((id, opening))
    }

    pub fn close_session(&self, id: &str) -> bool {
        self.lock().remove(id).is_some()
    }

    pub fn session_count(&self) -> usize {
        self.lock().len()
    }

    /// Parses and handles one text frame. Errors come back as `error`
    /// frames; only an unknown session id is returned as `Err`.
    pub fn handle_text(&self, session_id: &str, text: &str) -> Result<Vec<OutboundMessage>, GatewayError> {
        let slot = self.slot(session_id)?;
        let mut slot = slot.lock().unwrap_or_else(|p| p.into_inner());
        slot.in_seq += 1;
        let msg: InboundMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => {
                let err = GatewayError::MalformedMessage(e.to_string());
                return Ok(vec![stamp(&mut slot, session_id, 0.0, error_body(&err))]);
            }
        };
        Ok(handle_in_slot(&mut slot, session_id, &msg, &self.config, &self.gateway))
    }

    pub fn handle(&self, msg: &InboundMessage) -> Result<Vec<OutboundMessage>, GatewayError> {
        let slot = self.slot(&msg.session_id)?;
        let mut slot = slot.lock().unwrap_or_else(|p| p.into_inner());
        slot.in_seq += 1;
        Ok(handle_in_slot(&mut slot, &msg.session_id, msg, &self.config, &self.gateway))
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, GatewayError> {
        self.lock()
            .get(id)
            .cloned()
            .ok_or_else(|| GatewayError::SessionClosed(id.to_string()))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<Mutex<Slot>>>> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }
}

fn seed(header: &EpisodeHeader, cfg: &Config) -> Result<WorkcellState, GatewayError> {
    header.initial_state(&cfg.workcell).map_err(|e| match e {
        intentcell_core::episode::EpisodeError::UnknownScenePreset(p) => GatewayError::UnknownScenePreset(p),
        other => GatewayError::MalformedMessage(other.to_string()),
    })
}

fn error_body(e: &GatewayError) -> Outbound {
    Outbound::error(e.code(), e.to_string())
}

fn stamp(slot: &mut Slot, id: &str, timestamp: f64, body: Outbound) -> OutboundMessage {
    slot.out_seq += 1;
    OutboundMessage {
        v: PROTOCOL_VERSION,
        session_id: id.to_string(),
        timestamp,
        seq: slot.out_seq,
        reflects: slot.in_seq,
        body,
    }
}

fn state_update(session: &Session, with_scene: bool) -> Outbound {
    let st = session.encoder().state();
    Outbound::StateUpdate(StateUpdate {
        phase: st.phase,
        pending: st.pending.clone(),
        robot: session.workcell().robot.clone(),
        scene: with_scene.then(|| session.workcell().scene.clone()),
    })
}

fn handle_in_slot(
    slot: &mut Slot,
    id: &str,
    msg: &InboundMessage,
    cfg: &Arc<Config>,
    gw: &GatewayConfig,
) -> Vec<OutboundMessage> {
    let t = msg.timestamp;
    let mut bodies = Vec::new();
    if msg.v != PROTOCOL_VERSION {
        let e = GatewayError::MalformedMessage(format!("unsupported protocol version {}", msg.v));
        bodies.push(error_body(&e));
    } else if !t.is_finite() {
        bodies.push(error_body(&GatewayError::MalformedMessage("timestamp is not finite".into())));
    } else {
        match to_event(&msg.body, t) {
            Err(e) => bodies.push(error_body(&e)),
            Ok(None) => {
                if let Inbound::SceneRequest(req) = &msg.body {
                    match reseed(slot, req, cfg) {
                        Ok(()) => bodies.push(state_update(&slot.session, true)),
                        Err(e) => bodies.push(error_body(&e)),
                    }
                }
            }
            Ok(Some(ev)) => {
                let is_word = matches!(ev, InputEvent::Word(_));
                let outputs = slot.session.handle(&ev);
                let executed = outputs.iter().any(|o| matches!(o, SessionOutput::TrajectoryFrame(_)));
                for o in outputs {
                    if let Some(b) = translate(o, slot, gw) {
                        bodies.push(b);
                    }
                }
                if is_word {
                    bodies.push(state_update(&slot.session, executed));
                }
            }
        }
    }
    bodies.into_iter().map(|b| stamp(slot, id, t, b)).collect()
}

fn reseed(slot: &mut Slot, req: &SceneRequest, cfg: &Config) -> Result<(), GatewayError> {
    let header = match (&req.preset, &req.header) {
        (None, None) => return Ok(()),
        (Some(p), None) => EpisodeHeader::new("live", p.clone()),
        (None, Some(h)) => h.clone(),
        (Some(_), Some(_)) => {
            return Err(GatewayError::MalformedMessage(
                "scene_request takes either `preset` or `header`".into(),
            ))
        }
    };
    let workcell = seed(&header, cfg)?;
    slot.session.reseed(workcell);
    slot.last_hover_t = None;
    Ok(())
}

fn to_event(body: &Inbound, t: f64) -> Result<Option<InputEvent>, GatewayError> {
    let malformed = |m: String| GatewayError::MalformedMessage(m);
    Ok(match body {
        Inbound::Word(w) => {
            let start = w.t_start.unwrap_or(t);
            let tok = WordToken::new(&w.text, start, t, w.confidence.unwrap_or(1.0))
                .map_err(|e| malformed(e.to_string()))?;
            Some(InputEvent::Word(tok))
        }
        Inbound::Ray(r) => Some(InputEvent::Ray(
            DeicticRay::new(r.r1, r.r2, t).map_err(|e| malformed(e.to_string()))?,
        )),
        Inbound::Touch(p) => Some(InputEvent::Touch(Touch { t, u: p.u, v: p.v })),
        Inbound::SceneRequest(_) => None,
    })
}

fn translate(o: SessionOutput, slot: &mut Slot, gw: &GatewayConfig) -> Option<Outbound> {
    match o {
        SessionOutput::Hover {
            class,
            object,
            distance,
            ray_t,
        } => {
            // 1e-9 absorbs rounding in client clocks sampled at exact multiples
            if slot.last_hover_t.is_some_and(|last| ray_t - last < gw.hover_interval_s - 1e-9) {
                return None;
            }
            slot.last_hover_t = Some(ray_t);
            Some(Outbound::SelectionFeedback(SelectionFeedback {
                object,
                class,
                distance,
                provisional: true,
            }))
        }
        SessionOutput::Note(FusionNote::Bound {
            subcommand,
            object,
            distance,
            ..
        }) => {
            let class = slot
                .session
                .encoder()
                .state()
                .pending
                .get(subcommand)
                .and_then(|p| p.class.clone())
                .unwrap_or_default();
            Some(Outbound::SelectionFeedback(SelectionFeedback {
                object,
                class,
                distance,
                provisional: false,
            }))
        }
        SessionOutput::Note(_) => None,
        SessionOutput::IntentionEmitted(i) => {
            let summary = i.summary();
            Some(Outbound::IntentionEmitted(IntentionEmitted {
                text: summary.to_string(),
                summary,
                intention: i,
            }))
        }
        SessionOutput::Plan(seq) => Some(Outbound::Plan(PlanPayload {
            provenance: seq.provenance().clone(),
            text: seq.to_plan_text(),
            steps: seq.steps().to_vec(),
        })),
        SessionOutput::Verdict(v) => Some(Outbound::Verdict(v)),
        SessionOutput::TrajectoryFrame(f) => Some(Outbound::TrajectoryFrame(f)),
    }
}
