//! Live session service. A client opens a WebSocket, streams words, pointing
//! rays and touches, and receives fusion state, selection feedback, the
//! emitted intention, the plan, verdicts and trajectory frames. The wire
//! format is described in `docs/protocol.md`.

pub mod manager;
pub mod protocol;
pub mod queue;
pub mod server;

pub use manager::{GatewayConfig, GatewayError, SessionManager};
pub use protocol::{Inbound, InboundMessage, Outbound, OutboundMessage};
