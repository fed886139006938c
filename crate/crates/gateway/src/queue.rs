//! Per-connection outbound buffer. Pushing never blocks: when the buffer is
//! full the oldest trajectory frame is dropped to make room. Other frames are
//! never dropped, so the buffer may exceed its capacity when it holds no
//! trajectory frames.

use std::collections::VecDeque;
use std::sync::Mutex;
use tokio::sync::Notify;

use crate::protocol::{Outbound, OutboundMessage};

#[derive(Debug)]
pub struct OutboundQueue {
    capacity: usize,
    inner: Mutex<Inner>,
    notify: Notify,
}

#[derive(Debug, Default)]
struct Inner {
    items: VecDeque<OutboundMessage>,
    dropped: u64,
    closed: bool,
}

impl OutboundQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            inner: Mutex::new(Inner::default()),
            notify: Notify::new(),
        }
    }

    pub fn push(&self, msg: OutboundMessage) {
        {
            let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
            if inner.items.len() >= self.capacity {
                let victim = inner
                    .items
                    .iter()
                    .position(|m| matches!(m.body, Outbound::TrajectoryFrame(_)))
                    .or_else(|| {
                        matches!(msg.body, Outbound::TrajectoryFrame(_)).then_some(usize::MAX)
                    });
                match victim {
                    Some(usize::MAX) => {
                        inner.dropped += 1;
                        return;
                    }
                    Some(i) => {
                        inner.items.remove(i);
                        inner.dropped += 1;
                    }
                    None => {}
                }
            }
            inner.items.push_back(msg);
        }
        self.notify.notify_one();
    }

    pub fn try_pop(&self) -> Option<OutboundMessage> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).items.pop_front()
    }

    /// Waits for the next frame; `None` once closed and drained.
    pub async fn pop(&self) -> Option<OutboundMessage> {
        loop {
            let notified = self.notify.notified();
            {
                let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
                if let Some(m) = inner.items.pop_front() {
                    return Some(m);
                }
                if inner.closed {
                    return None;
                }
            }
            notified.await;
        }
    }

    pub fn close(&self) {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).closed = true;
        self.notify.notify_waiters();
        self.notify.notify_one();
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Outbound;
    use intentcell_core::session::{Stage, Verdict};

    fn msg(seq: u64) -> OutboundMessage {
        let body = Outbound::Verdict(Verdict {
            stage: Stage::Execution,
            code: "Executed".into(),
            message: String::new(),
            hard: false,
            step: None,
        });
        OutboundMessage {
            v: 1,
            session_id: "s1".into(),
            timestamp: 0.0,
            seq,
            reflects: 0,
            body,
        }
    }

    fn frame(seq: u64) -> OutboundMessage {
        let json = format!(
            r#"{{"v":1,"session_id":"s1","timestamp":0,"seq":{seq},"reflects":0,"kind":"trajectory_frame","payload":{{"t":1,"step_index":0,"step":{{"primitive":"go_home","args":{{}}}},"robot":{{"pose":{{"x":0,"y":0,"z":0,"roll":0,"pitch":0,"yaw":0}},"gripper_angle":0}}}}}}"#
        );
        serde_json::from_str(&json).unwrap()
    }

    #[test]
    fn drops_oldest_frame_when_full() {
        let q = OutboundQueue::new(3);
        q.push(frame(1));
        q.push(msg(2));
        q.push(frame(3));
        q.push(msg(4));
        let seqs: Vec<u64> = std::iter::from_fn(|| q.try_pop()).map(|m| m.seq).collect();
        assert_eq!(seqs, [2, 3, 4]);
        assert_eq!(q.dropped(), 1);
    }

    #[test]
    fn never_drops_verdicts() {
        let q = OutboundQueue::new(2);
        for i in 0..5 {
            q.push(msg(i));
        }
        assert_eq!(q.len(), 5);
        assert_eq!(q.dropped(), 0);
        // A new frame arriving at a full buffer of verdicts is the one dropped.
        q.push(frame(9));
        assert_eq!(q.len(), 5);
        assert_eq!(q.dropped(), 1);
    }

    #[tokio::test]
    async fn pop_waits_and_close_ends() {
        let q = std::sync::Arc::new(OutboundQueue::new(4));
        let q2 = q.clone();
        let h = tokio::spawn(async move { q2.pop().await.map(|m| m.seq) });
        q.push(msg(7));
        assert_eq!(h.await.unwrap(), Some(7));
        q.close();
        assert!(q.pop().await.is_none());
    }
}
