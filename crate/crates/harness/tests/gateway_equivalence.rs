//! The gateway and offline replay share one pipeline; feeding a bundled
//! episode through the wire protocol must emit the same intention.

use std::sync::Arc;

use intentcell_core::episode::{Episode, InputEvent};
use intentcell_core::geometry::forearm_ray;
use intentcell_core::Config;
use intentcell_gateway::protocol::{Inbound, InboundMessage, RayPayload, SceneRequest, TouchPayload, WordPayload};
use intentcell_gateway::{GatewayConfig, Outbound, OutboundMessage, SessionManager};
use intentcell_harness::bundle;
use intentcell_harness::metrics::load_dir;
use intentcell_harness::replay;

fn to_wire(ev: &InputEvent, sid: &str, cfg: &Config) -> Option<InboundMessage> {
    let (timestamp, body) = match ev {
        InputEvent::Word(w) => (
            w.t_end,
            Inbound::Word(WordPayload {
                text: w.text.clone(),
                t_start: Some(w.t_start),
                confidence: Some(w.confidence),
            }),
        ),
        InputEvent::Skeleton(f) => {
            let ray = cfg
                .camera
                .ray_to_base(&forearm_ray(f, cfg.perception.min_skeleton_confidence).ok()?);
            (f.timestamp, Inbound::Ray(RayPayload { r1: ray.r1, r2: ray.r2 }))
        }
        InputEvent::Ray(r) => (r.timestamp, Inbound::Ray(RayPayload { r1: r.r1, r2: r.r2 })),
        InputEvent::Touch(t) => (t.t, Inbound::Touch(TouchPayload { u: t.u, v: t.v })),
        InputEvent::Detection(_) => return None,
    };
    Some(InboundMessage {
        v: 1,
        session_id: sid.into(),
        timestamp,
        body,
    })
}

fn live(ep: &Episode, m: &SessionManager) -> Vec<OutboundMessage> {
    let (sid, _) = m.open_session("two-cups-bowl-plate").unwrap();
    let seed = InboundMessage {
        v: 1,
        session_id: sid.clone(),
        timestamp: 0.0,
        body: Inbound::SceneRequest(SceneRequest {
            preset: None,
            header: Some(ep.header.clone()),
        }),
    };
    let mut out = m.handle(&seed).unwrap();
    for ev in ep.ordered_events() {
        if let Some(msg) = to_wire(ev, &sid, m.config()) {
            out.extend(m.handle(&msg).unwrap());
        }
    }
    out
}

#[test]
fn wire_and_replay_emit_identical_intentions() {
    let cfg = Arc::new(Config::default());
    let m = SessionManager::new(cfg.clone(), GatewayConfig::default());
    let mut compared = 0;
    for ep in load_dir(&bundle::bundle_dir()).unwrap() {
        // Detections have no wire message; those episodes start from an empty scene.
        if ep.events.iter().any(|e| matches!(e, InputEvent::Detection(_))) {
            continue;
        }
        let offline = replay(&ep, &cfg);
        let out = live(&ep, &m);
        let wire: Vec<String> = out
            .iter()
            .filter_map(|o| match &o.body {
                Outbound::IntentionEmitted(i) => Some(serde_json::to_string(&i.intention).unwrap()),
                _ => None,
            })
            .collect();
        let replayed: Vec<String> = offline.intentions.iter().map(|i| serde_json::to_string(i).unwrap()).collect();
        assert_eq!(wire, replayed, "{}", ep.header.name);

        let plans: Vec<String> = out
            .iter()
            .filter_map(|o| match &o.body {
                Outbound::Plan(p) => Some(p.text.clone()),
                _ => None,
            })
            .collect();
        let offline_plans: Vec<String> = offline.plans.iter().map(|p| p.to_plan_text()).collect();
        assert_eq!(plans, offline_plans, "{}", ep.header.name);

        // The non-provisional feedback names the objects that were bound.
        let fed_back: Vec<_> = out
            .iter()
            .filter_map(|o| match &o.body {
                Outbound::SelectionFeedback(f) if !f.provisional => Some(f.object),
                _ => None,
            })
            .collect();
        let bound: Vec<_> = offline.bindings.iter().map(|b| b.object).collect();
        assert_eq!(fed_back, bound, "{}", ep.header.name);
        compared += 1;
    }
    assert_eq!(compared, 7);
}
